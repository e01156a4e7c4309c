"""Lagrangian decomposition heuristic for instances beyond exact reach.

Trips are partitioned along a deterministic schedule's buses; each group is a
small chance-constrained problem solved exactly. A linking constraint forcing
the first group's scenario indicators to dominate the others' is dualized;
the dual is maximized with a proximal bundle method. Every iteration the group
schedules are recombined (with depot reassignment when capacities overflow)
and evaluated against the full instance's requirements to drive an incumbent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .bnc import BnCConfig, solve_bnc
from .core import (
    Bus,
    Instance,
    Schedule,
    ServiceParams,
    Trip,
    ValidationError,
    cc_threshold,
    schedule_cost,
    validate_schedule,
)
from .scenarios import ScenarioSet
from .subproblem import count_violated_scenarios


@dataclass(frozen=True)
class Partition:
    groups: tuple[tuple[int, ...], ...]
    min_group_size: int

    def __post_init__(self):
        seen = [i for g in self.groups for i in g]
        if len(seen) != len(set(seen)):
            raise ValidationError("groups overlap")


def partition_trips(det_sched: Schedule, m_gr: int) -> Partition:
    """Append whole buses to the current group; close it at m_gr trips.

    Trips left over when the buses run out stay together as the final group
    (possibly smaller than m_gr), so every trip is assigned and no group grows
    past one bus beyond the threshold.
    """
    if m_gr < 1:
        raise ValidationError("minimum group size must be at least 1")
    groups: list[list[int]] = []
    current: list[int] = []
    for bus in det_sched.buses:
        current.extend(bus.trips)
        if len(current) >= m_gr:
            groups.append(current)
            current = []
    if current:
        groups.append(current)
    return Partition(tuple(tuple(g) for g in groups), m_gr)


@dataclass
class SubInstance:
    inst: Instance
    scen: ScenarioSet
    to_orig: dict[int, int]       # local trip id -> original trip id


def restrict(inst: Instance, scen: ScenarioSet, trip_ids) -> SubInstance:
    """Sub-instance over a trip subset, with local contiguous ids."""
    orig = sorted(trip_ids)
    to_local = {o: l for l, o in enumerate(orig, start=1)}
    route_ids = sorted({inst.trips[o - 1].route_id for o in orig})
    route_map = {r: l for l, r in enumerate(route_ids, start=1)}
    trips = [
        Trip(to_local[o], route_map[inst.trips[o - 1].route_id],
             inst.trips[o - 1].start_loc, inst.trips[o - 1].end_loc,
             inst.trips[o - 1].start, inst.trips[o - 1].mean_dur,
             inst.trips[o - 1].max_express)
        for o in orig
    ]
    routes = [[to_local[i] for i in inst.routes[r - 1] if i in to_local]
              for r in route_ids]
    idx = np.array([o - 1 for o in orig])
    sub_inst = Instance(
        trips, inst.depots, routes,
        dh_time=inst.dh_time[np.ix_(idx, idx)],
        out_time=inst.out_time[:, idx],
        in_time=inst.in_time[idx, :],
        cost=inst.cost[np.ix_(idx, idx)],
        out_cost=inst.out_cost[:, idx],
        in_cost=inst.in_cost[idx, :],
        compat=[(to_local[i], to_local[j]) for (i, j) in inst.compat
                if i in to_local and j in to_local],
        meta={"parent": inst.meta.get("name", ""), "orig_ids": orig},
    )
    sub_scen = ScenarioSet(
        dur=scen.dur[:, idx],
        travel=scen.travel[:, idx][:, :, idx],
        out_t=scen.out_t[:, :, idx],
        in_t=scen.in_t[:, idx, :],
        rng_seed=scen.rng_seed,
    )
    return SubInstance(sub_inst, sub_scen, {l: o for o, l in to_local.items()})


def penalty_coefficient(p: int, n_groups: int) -> int:
    """Multiplier on the dualized linking term: -(P-1) for group 1, else 1."""
    return -(n_groups - 1) if p == 1 else 1


def solve_group(sub: SubInstance, params: ServiceParams, cfg: BnCConfig,
                mu: np.ndarray, p: int, n_groups: int):
    """Exact solve of one group with the penalized indicator objective.

    Returns (schedule in original ids, z vector, value, solved_to_optimality).
    """
    z_obj = penalty_coefficient(p, n_groups) * mu
    res = solve_bnc(sub.inst, params.scaled_to(sub.inst), sub.scen, cfg,
                    z_obj=z_obj if np.any(z_obj != 0) else None,
                    force_z_binary=bool(np.any(z_obj != 0)))
    if res.schedule is None:
        raise ValidationError(f"group {p} has no feasible schedule")
    buses = tuple(Bus(b.depot, tuple(sub.to_orig[i] for i in b.trips))
                  for b in res.schedule.buses)
    z = np.array([round(v) for v in res.z], dtype=int)
    return Schedule(buses), z, float(res.objective), res.status == "Optimal"


def subgradient(z_by_group: list[np.ndarray]) -> np.ndarray:
    """Component s: -(P-1) z^1_s + sum over the other groups."""
    P = len(z_by_group)
    g = -(P - 1) * z_by_group[0].astype(float)
    for zp in z_by_group[1:]:
        g = g + zp
    return g


class BundleModel:
    """Cutting-plane over-model of the concave dual with a proximal master.

    The master  max theta - (1/2t)||mu - center||^2  s.t. the bundle cuts is
    solved through its simplex-constrained dual by projected gradient.
    """

    def __init__(self, dim: int, qp_tol: float = 1e-8, max_qp_iters: int = 2000):
        self.dim = dim
        self.consts: list[float] = []     # c_l = value_l - g_l . anchor_l
        self.grads: list[np.ndarray] = []
        self.qp_tol = qp_tol
        self.max_qp_iters = max_qp_iters

    def add_cut(self, value: float, g: np.ndarray, anchor: np.ndarray) -> None:
        self.consts.append(float(value - g @ anchor))
        self.grads.append(np.asarray(g, dtype=float).copy())

    def model_value(self, mu: np.ndarray) -> float:
        return min(c + g @ mu for c, g in zip(self.consts, self.grads))

    def proximal_step(self, center: np.ndarray, t: float):
        """Returns (new mu, model value there); falls back to a plain
        subgradient step if the inner solve stalls."""
        L = len(self.consts)
        G = np.stack(self.grads)                      # (L, S)
        c = np.array(self.consts)

        def mu_of(nu):
            return np.maximum(0.0, center + t * (G.T @ nu))

        def q(nu):
            mu = mu_of(nu)
            return float(nu @ c + (G @ mu) @ nu - ((mu - center) ** 2).sum() / (2 * t))

        def grad_q(nu):
            return c + G @ mu_of(nu)

        nu = np.full(L, 1.0 / L)
        step = t / (1.0 + float((G * G).sum()))
        val = q(nu)
        ok = True
        for _ in range(self.max_qp_iters):
            nu_new = _project_simplex(nu - step * grad_q(nu))
            if np.linalg.norm(nu_new - nu) < self.qp_tol:
                nu = nu_new
                break
            val_new = q(nu_new)
            if val_new > val + 1e-12:
                step *= 0.5
                if step < 1e-14:
                    ok = False
                    break
                continue
            nu, val = nu_new, val_new
        if not ok:
            mu = np.maximum(0.0, center + t * self.grads[-1])
            return mu, self.model_value(mu)
        mu = mu_of(nu)
        return mu, self.model_value(mu)


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    rho = np.nonzero(u * np.arange(1, len(v) + 1) > (css - 1))[0][-1]
    theta = (css[rho] - 1.0) / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def bundle_step(model: BundleModel, center: np.ndarray, t: float):
    return model.proximal_step(center, t)


class CapacityError(ValidationError):
    """Recombined buses exceed the total depot capacity."""


def combine_and_repair(sub_scheds: list[Schedule], inst: Instance) -> Schedule:
    """Concatenate group buses, then move sequences off overloaded depots.

    Repeatedly relocates the sequence whose new pull-out plus pull-in cost is
    smallest among all spare depots until every capacity holds.
    """
    buses = [b for sched in sub_scheds for b in sched.buses]
    caps = {k: inst.depot(k).capacity for k in range(1, inst.n_depots + 1)}
    if len(buses) > sum(caps.values()):
        raise CapacityError(
            f"{len(buses)} buses exceed the total depot capacity {sum(caps.values())}")
    while True:
        used = {k: 0 for k in caps}
        for b in buses:
            used[b.depot] += 1
        over = [k for k in caps if used[k] > caps[k]]
        if not over:
            break
        spare = [k for k in caps if used[k] < caps[k]]
        best = None
        for idx, b in enumerate(buses):
            if b.depot not in over:
                continue
            first, last = b.trips[0], b.trips[-1]
            for k in spare:
                delta = int(inst.out_cost[k - 1, first - 1]) + int(inst.in_cost[last - 1, k - 1])
                cand = (delta, idx, k)
                if best is None or cand < best:
                    best = cand
        _, idx, k = best
        buses[idx] = Bus(k, buses[idx].trips)
    sched = Schedule(tuple(buses))
    validate_schedule(inst, sched)
    return sched


@dataclass
class LagrIterate:
    iteration: int
    primal: float
    dual: float
    step: str
    t: float
    incumbent_violations: int | None
    incumbent_cost: float | None


@dataclass
class LagrangianResult:
    status: str
    schedule: Schedule | None
    objective: float
    violations: int | None
    feasible: bool
    primal_bound: float
    dual_bound: float
    iterations: int
    n_groups: int
    log: list[LagrIterate] = field(default_factory=list)
    time_s: float = 0.0

    def log_csv(self) -> str:
        rows = ["iter,primal,dual,step,t,incumbent_violations,incumbent_cost"]
        for e in self.log:
            rows.append(f"{e.iteration},{e.primal},{e.dual},{e.step},{e.t},"
                        f"{'' if e.incumbent_violations is None else e.incumbent_violations},"
                        f"{'' if e.incumbent_cost is None else e.incumbent_cost}")
        return "\n".join(rows)


def solve_lagrangian(inst: Instance, params: ServiceParams, scen: ScenarioSet,
                     cfg: BnCConfig, m_gr: int, det_sched: Schedule | None = None,
                     max_iters: int = 100, rel_tol: float = 1e-3,
                     group_time_limit: float | None = 600.0) -> LagrangianResult:
    """Run the decomposition loop; returns the best recombined schedule found.

    With a single group this is exactly the branch-and-cut solve. The dual
    bound reported is the bundle's over-model optimum, the primal bound the
    best penalized subproblem total.
    """
    import time as _time

    t0 = _time.monotonic()
    if det_sched is None:
        from .baselines import solve_deterministic

        det_sched = solve_deterministic(inst, ("percentile", 75.0), scen)
    part = partition_trips(det_sched, m_gr)
    P = len(part.groups)
    if P == 1:
        res = solve_bnc(inst, params, scen, cfg)
        return LagrangianResult(
            res.status, res.schedule, res.objective, res.train_violations,
            res.train_violations is not None
            and res.train_violations <= cc_threshold(scen.count, params.epsilon),
            res.objective, res.objective, 1, 1,
            [LagrIterate(0, res.objective, res.objective, "exact", 0.0,
                         res.train_violations, res.objective)],
            _time.monotonic() - t0)

    subs = [restrict(inst, scen, g) for g in part.groups]
    group_cfg = replace(cfg, time_limit=group_time_limit)
    S = scen.count
    budget = cc_threshold(S, params.epsilon)
    center = np.zeros(S)
    mu = center.copy()
    t = 0.5
    bundle = BundleModel(S)
    best_value = -math.inf          # value at the stability center
    dual_bound = math.inf
    incumbent: tuple[int, float, Schedule] | None = None
    log: list[LagrIterate] = []
    status = "IterLimit"
    prev_value = None
    prev_theta = None
    predicted = None

    for it in range(max_iters):
        scheds, zs, values = [], [], []
        for p, sub in enumerate(subs, start=1):
            sched_p, z_p, val_p, _ = solve_group(sub, params, group_cfg, mu, p, P)
            scheds.append(sched_p)
            zs.append(z_p)
            values.append(val_p)
        value = float(sum(values))
        g = subgradient(zs)
        try:
            combined = combine_and_repair(scheds, inst)
            bad = count_violated_scenarios(inst, params, combined, scen)
            cost = schedule_cost(inst, combined)
            cand = (bad, float(cost), combined)
            if incumbent is None or (cand[0], cand[1]) < (incumbent[0], incumbent[1]):
                incumbent = cand
        except CapacityError:
            pass

        bundle.add_cut(value, g, mu)
        step_kind = "serious"
        if it == 0 or value > best_value:
            center = mu.copy()
            best_value = value
        if predicted is not None:
            gain = value - (prev_value if prev_value is not None else value)
            if gain < 0.1 * max(predicted, 1e-12):
                step_kind = "null"
                t = max(t / 2.0, 1e-6)
            else:
                t = min(t * 2.0, 0.9)
        mu_new, theta = bundle.proximal_step(center, t)
        dual_bound = min(dual_bound, theta)
        log.append(LagrIterate(it, value, theta, step_kind, t,
                               None if incumbent is None else incumbent[0],
                               None if incumbent is None else incumbent[1]))
        denom = max(1.0, abs(value))
        if np.allclose(g, 0.0):
            status = "Converged"
            break
        if abs(theta - value) / max(1.0, abs(theta)) <= rel_tol:
            status = "Converged"
            break
        if prev_value is not None and abs(value - prev_value) / denom <= rel_tol \
                and prev_theta is not None and abs(theta - prev_theta) / max(1.0, abs(theta)) <= rel_tol:
            status = "Converged"
            break
        predicted = theta - best_value
        prev_value = value
        prev_theta = theta
        mu = np.maximum(mu_new, 0.0)

    if incumbent is None:
        return LagrangianResult(status, None, math.nan, None, False, best_value,
                                dual_bound, len(log), P, log, _time.monotonic() - t0)
    bad, cost, sched = incumbent
    return LagrangianResult(status, sched, cost, bad, bad <= budget, best_value,
                            dual_bound, len(log), P, log, _time.monotonic() - t0)
