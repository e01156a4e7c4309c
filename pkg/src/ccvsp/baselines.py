"""Deterministic baselines and out-of-sample reliability evaluation.

The baselines solve the plain flow problem with a single time table (means or
an empirical percentile of the sampled scenarios) and no reliability
constraints; the evaluator replays any schedule through the greedy operational
model over an independent scenario set.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .core import (
    Instance,
    Schedule,
    ServiceParams,
    ValidationError,
    schedule_cost,
    schedule_from_arcs,
)
from .milp import EQUAL, LESS, MilpModel, bnb_solve
from .scenarios import ScenarioSet, compat_for_times, percentile_times
from .subproblem import greedy_evaluate

MEAN = ("mean", None)


def percentile(q: float):
    return ("percentile", float(q))


def solve_deterministic(inst: Instance, times=MEAN,
                        scen: ScenarioSet | None = None,
                        time_limit: float | None = None) -> Schedule:
    """Minimum-cost flow schedule under one deterministic time table.

    ``times`` is ("mean", None) or ("percentile", q); percentiles need the
    sampled scenarios. Compatibility is recomputed from the chosen table, so
    the result may sequence pairs outside the instance's planning set when the
    table runs shorter than the means.
    """
    kind, q = times
    if kind == "mean":
        dur = np.array([t.mean_dur for t in inst.trips], dtype=np.int64)
        travel = inst.dh_time
    elif kind == "percentile":
        if scen is None:
            raise ValidationError("percentile baseline needs sampled scenarios")
        dur, travel, _, _ = percentile_times(inst, scen, q)
    else:
        raise ValidationError(f"unknown time table {times!r}")
    compat = compat_for_times(inst, dur, travel)

    model = MilpModel(f"det-{kind}")
    I, K = inst.n_trips, inst.n_depots
    x = {}
    for k in range(1, K + 1):
        for i in range(1, I + 1):
            x[(-k, i, k)] = model.add_var(0, 1, float(inst.out_cost[k - 1, i - 1]),
                                          True, f"o{k}_{i}")
            x[(i, -k, k)] = model.add_var(0, 1, float(inst.in_cost[i - 1, k - 1]),
                                          True, f"i{i}_{k}")
        for (i, j) in sorted(compat):
            x[(i, j, k)] = model.add_var(0, 1, float(inst.cost[i - 1, j - 1]),
                                         True, f"x{i}_{j}_{k}")
    pred = {j: [i for (i, jj) in compat if jj == j] for j in range(1, I + 1)}
    succ = {i: [j for (ii, j) in compat if ii == i] for i in range(1, I + 1)}
    for j in range(1, I + 1):
        coeffs = {x[(-k, j, k)]: 1.0 for k in range(1, K + 1)}
        for i in pred[j]:
            for k in range(1, K + 1):
                coeffs[x[(i, j, k)]] = 1.0
        model.add_constr(coeffs, EQUAL, 1.0, f"cover{j}")
    for k in range(1, K + 1):
        model.add_constr({x[(-k, i, k)]: 1.0 for i in range(1, I + 1)}, LESS,
                         float(inst.depot(k).capacity), f"cap{k}")
        for i in range(1, I + 1):
            coeffs = {x[(-k, i, k)]: 1.0, x[(i, -k, k)]: -1.0}
            for j in pred[i]:
                coeffs[x[(j, i, k)]] = 1.0
            for j in succ[i]:
                coeffs[x[(i, j, k)]] = -1.0
            model.add_constr(coeffs, EQUAL, 0.0, f"flow{i}_{k}")
    sol = bnb_solve(model, time_limit=time_limit)
    if sol.x is None:
        raise ValidationError(f"deterministic model is {sol.status}: "
                              "likely insufficient depot capacity")
    arcs = {arc for arc, j in x.items() if sol.x[j] > 0.5}
    return schedule_from_arcs(inst, arcs, validate=False)


@dataclass
class EvalReport:
    """Reliability of one schedule over an evaluation scenario set."""

    method: str
    objective: float
    eval_sat_pct: float
    train_sat_pct: float | None = None
    obj_diff_vs_mean_pct: float | None = None
    time_s: float = 0.0
    config: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0.0 <= self.eval_sat_pct <= 100.0:
            raise ValidationError("satisfaction percentage outside [0, 100]")


def satisfaction_pct(inst: Instance, params: ServiceParams, sched: Schedule,
                     scen: ScenarioSet) -> float:
    good = sum(1 - greedy_evaluate(inst, params, sched, scen, s).z_star
               for s in range(scen.count))
    return 100.0 * good / scen.count


def evaluate_out_of_sample(inst: Instance, params: ServiceParams, sched: Schedule,
                           eval_scen: ScenarioSet, method: str = "",
                           train_scen: ScenarioSet | None = None,
                           time_s: float = 0.0) -> EvalReport:
    """Percent of evaluation scenarios in which every requirement holds."""
    t0 = time.monotonic()
    pct = satisfaction_pct(inst, params, sched, eval_scen)
    train = satisfaction_pct(inst, params, sched, train_scen) if train_scen else None
    return EvalReport(method=method, objective=float(schedule_cost(inst, sched)),
                      eval_sat_pct=pct, train_sat_pct=train,
                      time_s=time_s or (time.monotonic() - t0),
                      config={"epsilon": params.epsilon,
                              "delta_trip": params.delta_trip,
                              "delta_route": params.delta_route})


COMPARE_HEADER = "method,instance,I,K,S,objective,obj_diff_vs_mean_pct,train_sat_pct,eval_sat_pct,time_s"


def compare_table(reports: list[tuple[str, Instance, int, EvalReport]]) -> str:
    """Aggregate (instance label, instance, S, report) rows into one CSV.

    The objective difference column is relative to the mean-times baseline of
    the same instance label, when present.
    """
    mean_obj: dict[str, float] = {}
    for label, _, _, rep in reports:
        if rep.method == "det-mean":
            mean_obj[label] = rep.objective
    rows = [COMPARE_HEADER]
    for label, inst, S, rep in reports:
        diff = ""
        if label in mean_obj and mean_obj[label] > 0:
            diff = f"{100.0 * (rep.objective - mean_obj[label]) / mean_obj[label]:.3f}"
        train = "" if rep.train_sat_pct is None else f"{rep.train_sat_pct:.2f}"
        rows.append(f"{rep.method},{label},{inst.n_trips},{inst.n_depots},{S},"
                    f"{rep.objective:.1f},{diff},{train},{rep.eval_sat_pct:.2f},"
                    f"{rep.time_s:.2f}")
    return "\n".join(rows)
