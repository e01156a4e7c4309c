"""Scenario-reformulation master problem and the exact branch-and-cut loop.

The master carries the flow variables, one indicator per scenario and the
violation budget; scenario requirements enter lazily as cuts whenever a
candidate schedule fails a scenario the master claimed satisfied. Enhancement
switches: per-scenario valid inequalities on the master, and relaxing the
indicator integrality (every cut forces its indicator to one at the generating
schedule, so branching on indicators is unnecessary).
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass

import numpy as np

from .core import (
    Arc,
    Instance,
    Schedule,
    ServiceParams,
    cc_threshold,
    schedule_from_arcs,
    validate_schedule,
)
from .cuts import (
    CUT_KINDS,
    ECMIS,
    MIS,
    NO_GOOD,
    STRONG_NO_GOOD,
    Cut,
    build_cmis,
    cmis_cut,
    extend_cmis,
    mis_deletion_filter,
    no_good_cut,
    strong_no_good_cut,
    valid_inequalities,
)
from .milp import EQUAL, LESS, MilpModel, bnb_solve
from .scenarios import ScenarioSet
from .subproblem import count_violated_scenarios, greedy_evaluate

VARIANTS = {
    "Nn": (False, False),   # no enhancements
    "VI": (True, False),    # valid inequalities only
    "ZC": (False, True),    # continuous indicators only
    "Bo": (True, True),     # both
}


@dataclass(frozen=True)
class BnCConfig:
    cut_family: str = ECMIS
    use_vi: bool = True
    relax_z: bool = True
    time_limit: float | None = None
    gap_tol: float = 1e-6
    warm_start: bool = False
    node_limit: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.cut_family not in CUT_KINDS:
            raise ValueError(f"unknown cut family {self.cut_family!r}")

    @classmethod
    def for_variant(cls, name: str, **kw) -> "BnCConfig":
        use_vi, relax_z = VARIANTS[name]
        return cls(use_vi=use_vi, relax_z=relax_z, **kw)


@dataclass
class BnCResult:
    status: str
    schedule: Schedule | None
    objective: float
    bound: float
    gap: float
    cuts_added: dict[str, int]
    nodes: int
    time_s: float
    z: tuple[float, ...]
    train_violations: int | None = None

    def to_json(self) -> dict:
        from .core import schedule_to_json

        return {
            "status": self.status,
            "objective": self.objective,
            "bound": self.bound,
            "gap": self.gap,
            "nodes": self.nodes,
            "cuts": dict(self.cuts_added),
            "time_s": self.time_s,
            "schedule": schedule_to_json(self.schedule) if self.schedule else None,
            "z": list(self.z),
            "train_violations": self.train_violations,
        }


class MasterModel:
    """Flow model over the arc network plus scenario indicators."""

    def __init__(self, inst: Instance, params: ServiceParams, scen: ScenarioSet,
                 cfg: BnCConfig, z_obj: np.ndarray | None = None,
                 force_z_binary: bool = False, var_cap: int = 200_000):
        self.inst = inst
        self.params = params
        self.scen = scen
        self.cfg = cfg
        model = MilpModel("saa-master")
        I, K = inst.n_trips, inst.n_depots
        if (len(inst.compat) + 2 * K * I) * K + scen.count > var_cap:
            raise ValueError("master model exceeds the configured size cap")
        self.x: dict[Arc, int] = {}
        for k in range(1, K + 1):
            for i in range(1, I + 1):
                self.x[(-k, i, k)] = model.add_var(
                    0, 1, float(inst.out_cost[k - 1, i - 1]), True, f"x_o{k}_{i}")
                self.x[(i, -k, k)] = model.add_var(
                    0, 1, float(inst.in_cost[i - 1, k - 1]), True, f"x_i{i}_{k}")
            for (i, j) in sorted(inst.compat):
                self.x[(i, j, k)] = model.add_var(
                    0, 1, float(inst.cost[i - 1, j - 1]), True, f"x_{i}_{j}_{k}")
        z_int = force_z_binary or not cfg.relax_z
        self.z = [model.add_var(0, 1, float(z_obj[s]) if z_obj is not None else 0.0,
                                z_int, f"z{s}")
                  for s in range(scen.count)]
        # each trip is reached exactly once, over all commodities
        for j in range(1, I + 1):
            coeffs = {self.x[(-k, j, k)]: 1.0 for k in range(1, K + 1)}
            for i in inst.pred[j]:
                for k in range(1, K + 1):
                    coeffs[self.x[(i, j, k)]] = 1.0
            model.add_constr(coeffs, EQUAL, 1.0, f"cover{j}")
        # depot capacities on pull-outs
        for k in range(1, K + 1):
            model.add_constr({self.x[(-k, i, k)]: 1.0 for i in range(1, I + 1)},
                             LESS, float(inst.depot(k).capacity), f"cap{k}")
        # per-commodity flow balance at every trip node
        for k in range(1, K + 1):
            for i in range(1, I + 1):
                coeffs = {self.x[(-k, i, k)]: 1.0, self.x[(i, -k, k)]: -1.0}
                for j in inst.pred[i]:
                    coeffs[self.x[(j, i, k)]] = 1.0
                for j in inst.succ[i]:
                    coeffs[self.x[(i, j, k)]] = coeffs.get(self.x[(i, j, k)], 0.0) - 1.0
                model.add_constr(coeffs, EQUAL, 0.0, f"flow{i}_{k}")
        # violation budget
        model.add_constr({zv: 1.0 for zv in self.z}, LESS,
                         float(cc_threshold(scen.count, params.epsilon)), "budget")
        if cfg.use_vi:
            for vi in valid_inequalities(inst, params, scen):
                coeffs = {}
                for (i, j) in sorted(vi.pairs):
                    for k in range(1, K + 1):
                        coeffs[self.x[(i, j, k)]] = 1.0
                # sum x <= theta1 + (theta0 - theta1) z
                coeffs[self.z[vi.s]] = float(vi.theta1 - vi.theta0)
                model.add_constr(coeffs, LESS, float(vi.theta1),
                                 f"vi{vi.s}_{vi.scope or 0}")
        self.model = model
        self.pool: set = set()

    def decode(self, x_vals: np.ndarray) -> Schedule:
        arcs = {arc for arc, j in self.x.items() if x_vals[j] > 0.5}
        return schedule_from_arcs(self.inst, arcs)

    def z_values(self, x_vals: np.ndarray) -> np.ndarray:
        return np.array([x_vals[j] for j in self.z])

    def cut_row(self, cut: Cut):
        coeffs: dict[int, float] = {}
        for (i, j), c in cut.pairs:
            for k in range(1, self.inst.n_depots + 1):
                coeffs[self.x[(i, j, k)]] = coeffs.get(self.x[(i, j, k)], 0.0) + float(c)
        for arc, c in cut.depot_terms:
            coeffs[self.x[arc]] = coeffs.get(self.x[arc], 0.0) + float(c)
        coeffs[self.z[cut.s]] = -1.0
        return (coeffs, LESS, float(cut.rhs_const - 1))

    def encode_incumbent(self, sched: Schedule):
        """Feasible start point: the schedule's arcs plus honest indicators."""
        from .core import schedule_cost, schedule_to_arcs

        bad = [s for s in range(self.scen.count)
               if greedy_evaluate(self.inst, self.params, sched, self.scen, s).z_star]
        if len(bad) > cc_threshold(self.scen.count, self.params.epsilon):
            return None
        x = np.zeros(self.model.n_vars)
        for arc in schedule_to_arcs(sched):
            x[self.x[arc]] = 1.0
        for s in bad:
            x[self.z[s]] = 1.0
        return x, float(schedule_cost(self.inst, sched))


def build_master(inst: Instance, params: ServiceParams, scen: ScenarioSet,
                 cfg: BnCConfig, **kw) -> MasterModel:
    """Construct the master model (flow variables, indicators, budget, rows)."""
    return MasterModel(inst, params, scen, cfg, **kw)


def cut_generation_routine(inst: Instance, params: ServiceParams, scen: ScenarioSet,
                           cfg: BnCConfig, sched: Schedule, z_vals: np.ndarray,
                           pool: set | None = None) -> list[Cut]:
    """All violated cuts of the configured family across unserved scenarios.

    Scenarios the master claims satisfied (indicator below one) are re-checked
    with the greedy evaluator; each violation yields cuts of the configured
    family, one per violated requirement for the subsequence families. A
    strong no-good backstop guarantees progress if a family ever returns
    nothing new for a violated scenario.
    """
    out: list[Cut] = []
    threshold = 0.5 if not cfg.relax_z else 1.0 - 1e-6
    for s in range(scen.count):
        if z_vals[s] >= threshold:
            continue
        g = greedy_evaluate(inst, params, sched, scen, s)
        if g.z_star == 0:
            continue
        produced: list[Cut] = []
        if cfg.cut_family == NO_GOOD:
            produced.append(no_good_cut(inst, params, sched, scen, s))
        elif cfg.cut_family == STRONG_NO_GOOD:
            produced.append(strong_no_good_cut(inst, params, sched, scen, s))
        elif cfg.cut_family == MIS:
            pairs = mis_deletion_filter(inst, params, scen, s,
                                        set(sched.sequenced_pairs()))
            produced.append(Cut(s, MIS, tuple((p, 1) for p in sorted(pairs)), len(pairs)))
        else:
            for con in g.violated:
                ctx = build_cmis(inst, params, sched, scen, s, g, con)
                if cfg.cut_family == ECMIS:
                    ctx = extend_cmis(inst, params, scen, s, ctx)
                produced.append(cmis_cut(ctx))
        fresh = [c for c in produced if pool is None or c.key() not in pool]
        if not fresh:
            backstop = strong_no_good_cut(inst, params, sched, scen, s)
            if pool is None or backstop.key() not in pool:
                fresh = [backstop]
        for c in fresh:
            if pool is not None:
                pool.add(c.key())
        out.extend(fresh)
    return out


def solve_bnc(inst: Instance, params: ServiceParams, scen: ScenarioSet,
              cfg: BnCConfig, z_obj: np.ndarray | None = None,
              force_z_binary: bool = False,
              initial_schedule: Schedule | None = None) -> BnCResult:
    """Exact solve of the scenario reformulation by branch-and-cut."""
    t0 = time.monotonic()
    master = MasterModel(inst, params, scen, cfg, z_obj=z_obj,
                         force_z_binary=force_z_binary)
    counts = {kind: 0 for kind in CUT_KINDS}

    def lazy(x_vals):
        sched = master.decode(x_vals)
        zv = master.z_values(x_vals)
        cuts = cut_generation_routine(inst, params, scen, cfg, sched, zv, master.pool)
        for c in cuts:
            counts[c.kind] += 1
        return [master.cut_row(c) for c in cuts]

    incumbent0 = None
    if cfg.warm_start and initial_schedule is not None:
        incumbent0 = master.encode_incumbent(initial_schedule)
    sol = bnb_solve(master.model, lazy=lazy, gap_tol=cfg.gap_tol,
                    time_limit=cfg.time_limit, node_limit=cfg.node_limit,
                    incumbent0=incumbent0)
    elapsed = time.monotonic() - t0
    if sol.x is None:
        return BnCResult(sol.status, None, float("nan"), sol.bound, sol.gap,
                         {k: v for k, v in counts.items() if v}, sol.nodes, elapsed, ())
    sched = master.decode(sol.x)
    validate_schedule(inst, sched)
    z = tuple(float(v) for v in master.z_values(sol.x))
    bad = count_violated_scenarios(inst, params, sched, scen)
    if sol.status == "Optimal" and bad > cc_threshold(scen.count, params.epsilon):
        raise AssertionError(
            f"accepted schedule violates {bad} scenarios, budget "
            f"{cc_threshold(scen.count, params.epsilon)}")
    return BnCResult(sol.status, sched, float(sol.obj), float(sol.bound), float(sol.gap),
                     {k: v for k, v in counts.items() if v}, sol.nodes, elapsed, z,
                     train_violations=bad)


def save_result(res: BnCResult, path) -> None:
    with open(path, "w") as fh:
        json.dump(res.to_json(), fh, indent=1)
