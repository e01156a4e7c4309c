"""Cut families linking schedule arcs to scenario indicator variables.

Given a candidate schedule that breaks a scenario's service requirements, each
generator here produces a linear inequality over aggregated arc variables of
the master form  sum lambda_ij sum_k x_ijk <= lambda_0 - 1 + z_s.  Families:
plain and strong no-good cuts, infeasible-subsequence (minimal) cuts built by
backtracking over the greedy evaluation, their head-replacement extensions,
a deletion-filter minimizer used as an independent oracle, and an exact dual
certificate tying the subsequence cuts to Benders cuts of a tightened LP.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction

from .core import Arc, Instance, Pair, Schedule, ServiceParams, schedule_to_arcs
from .scenarios import ScenarioSet
from .subproblem import GreedyResult, Requirement, greedy_evaluate

NO_GOOD = "nogood"
STRONG_NO_GOOD = "snogood"
MIS = "mis"
CMIS = "cmis"
ECMIS = "ecmis"
CUT_KINDS = (NO_GOOD, STRONG_NO_GOOD, MIS, CMIS, ECMIS)


@dataclass(frozen=True)
class Cut:
    """One master inequality: sum over pairs (depot-aggregated) plus optional
    depot-specific terms <= rhs_const - 1 + z_s."""

    s: int
    kind: str
    pairs: tuple[tuple[Pair, int], ...]          # ((i, j), coefficient)
    rhs_const: int
    depot_terms: tuple[tuple[Arc, int], ...] = ()  # only the plain no-good uses these

    def key(self):
        return (self.s, tuple(sorted(self.pairs)), tuple(sorted(self.depot_terms)),
                self.rhs_const)

    def to_json(self) -> dict:
        return {"kind": self.kind, "s": self.s,
                "pairs": [[i, j, c] for (i, j), c in sorted(self.pairs)],
                "depot_terms": [[list(a), c] for a, c in sorted(self.depot_terms)],
                "rhs": self.rhs_const}

    def violated_by(self, sched: Schedule, z_s: float) -> bool:
        lhs = self.evaluate(sched)
        return lhs > self.rhs_const - 1 + z_s + 1e-9

    def evaluate(self, sched: Schedule) -> int:
        seq = {}
        for bus in sched.buses:
            for i, j in zip(bus.trips, bus.trips[1:]):
                seq[(i, j)] = bus.depot
        lhs = sum(c for (i, j), c in self.pairs if (i, j) in seq)
        if self.depot_terms:
            arcs = schedule_to_arcs(sched)
            lhs += sum(c for a, c in self.depot_terms if a in arcs)
        return lhs


@dataclass(frozen=True)
class ValidInequality:
    """sum of x over known-late pairs <= theta0 z_s + theta1 (1 - z_s)."""

    s: int
    pairs: frozenset[Pair]
    theta0: int
    theta1: int
    scope: int | None = None     # None = all trips, else route id

    def satisfied_by(self, sched: Schedule, z_s: int) -> bool:
        seq = set()
        for bus in sched.buses:
            seq.update(zip(bus.trips, bus.trips[1:]))
        lhs = len(self.pairs & seq)
        return lhs <= self.theta0 * z_s + self.theta1 * (1 - z_s) + 1e-9


@dataclass(frozen=True)
class CMisContext:
    """A delay core, the subsequences explaining it, and the backtracking trace."""

    s: int
    con: Requirement
    core: frozenset[int]
    pairs: frozenset[Pair]
    extra: frozenset[Pair] = frozenset()
    trace: tuple[tuple[int, int], ...] = ()


def operational_compat(inst: Instance, params: ServiceParams, scen: ScenarioSet,
                       s: int) -> set[Pair]:
    """Pairs that do not force a delay in scenario s:
    s_i - lb + d_i^s + t_ij^s - e_i <= s_j + ub."""
    out = set()
    dur = scen.dur[s]
    travel = scen.travel[s]
    for i, ti in enumerate(inst.trips, start=1):
        ready = ti.start - params.lb + int(dur[i - 1]) - ti.max_express
        for j, tj in enumerate(inst.trips, start=1):
            if i != j and ready + int(travel[i - 1, j - 1]) <= tj.start + params.ub:
                out.add((i, j))
    return out


def valid_inequalities(inst: Instance, params: ServiceParams,
                       scen: ScenarioSet) -> list[ValidInequality]:
    """One fleet-wide inequality per scenario and one per (scenario, route).

    Coefficients live on planning pairs that are operationally late in the
    scenario. With the indicator off, the number of sequenced late pairs is
    capped by the number of delays the requirement tolerates (I - f); with it
    on, by the number of trips that can be made late at all. Rows that can
    never bind are dropped.
    """
    out = []
    for s in range(scen.count):
        c_s = operational_compat(inst, params, scen, s)
        late = {(i, j) for (i, j) in inst.compat if (i, j) not in c_s}
        if late:
            i_s = len({j for (_, j) in late})
            allowed = inst.n_trips - params.f_trip
            if allowed < i_s:
                out.append(ValidInequality(s, frozenset(late), i_s, allowed, None))
        for r, members in enumerate(inst.routes, start=1):
            route_late = {(i, j) for (i, j) in late if j in set(members)}
            if route_late:
                i_rs = len({j for (_, j) in route_late})
                allowed = len(members) - params.f_route[r - 1]
                if allowed < i_rs:
                    out.append(ValidInequality(s, frozenset(route_late), i_rs,
                                               allowed, r))
    return out


def _require_violated(inst, params, sched, scen, s) -> GreedyResult:
    g = greedy_evaluate(inst, params, sched, scen, s)
    if g.z_star != 1:
        raise ValueError(f"schedule meets the requirements in scenario {s}; no cut to build")
    return g


def no_good_cut(inst: Instance, params: ServiceParams, sched: Schedule,
                scen: ScenarioSet, s: int) -> Cut:
    """Exclude exactly this schedule-with-depots (benchmarking baseline).

    Written over the arcs set to one; on the master polytope this matches the
    textbook form that also lists the zero variables, because covering every
    listed arc pins all remaining variables to zero.
    """
    _require_violated(inst, params, sched, scen, s)
    arcs = sorted(schedule_to_arcs(sched))
    return Cut(s, NO_GOOD, (), len(arcs), tuple((a, 1) for a in arcs))


def strong_no_good_cut(inst: Instance, params: ServiceParams, sched: Schedule,
                       scen: ScenarioSet, s: int) -> Cut:
    """Exclude the sequenced trip pairs under every depot assignment."""
    _require_violated(inst, params, sched, scen, s)
    pairs = sorted(set(sched.sequenced_pairs()))
    return Cut(s, STRONG_NO_GOOD, tuple((p, 1) for p in pairs), len(pairs))


def select_delay_core(inst: Instance, params: ServiceParams, sched: Schedule,
                      g: GreedyResult, con: Requirement) -> frozenset[int]:
    """Minimal predecessor-closed set of delayed trips witnessing the violation.

    Size is I - f_trip + 1 (or the route analogue). Candidates are taken
    latest-start-first (ties: lowest id); picking a trip pulls in every delayed
    candidate scheduled before it on the same bus, earliest first, so the
    selection per bus is a prefix of that bus's delayed trips.
    """
    if con not in g.violated:
        raise ValueError(f"requirement {con} is not violated by this evaluation")
    if con.route is None:
        pool = set(g.delayed)
        needed = len(g.v_star) - params.f_trip + 1
    else:
        members = set(inst.routes[con.route - 1])
        pool = set(g.delayed) & members
        needed = len(members) - params.f_route[con.route - 1] + 1
    bus_of = {}
    pos_of = {}
    for b, bus in enumerate(sched.buses):
        for p, i in enumerate(bus.trips):
            bus_of[i] = b
            pos_of[i] = p
    chosen: list[int] = []
    order = sorted(pool, key=lambda i: (-int(g.y_star[i - 1]), i))
    for cand in order:
        if len(chosen) >= needed:
            break
        if cand in chosen:
            continue
        required = sorted((i for i in pool if bus_of[i] == bus_of[cand]
                           and pos_of[i] <= pos_of[cand] and i not in chosen),
                          key=lambda i: pos_of[i])
        for i in required:
            if len(chosen) >= needed:
                break
            chosen.append(i)
    if len(chosen) != needed:
        raise ValueError("delay core selection failed; violation inconsistent with pool")
    return frozenset(chosen)


def build_cmis(inst: Instance, params: ServiceParams, sched: Schedule,
               scen: ScenarioSet, s: int, g: GreedyResult,
               con: Requirement) -> CMisContext:
    """Backtrack from each core trip to the subsequence that explains its delay.

    The working target starts at s_i + ub + eps_tol; passing a predecessor
    subtracts its leg time (net of expressing) and passing another core trip
    raises the target to that trip's own delay threshold. Backtracking stops
    once the current head, started as early as possible, still meets the
    target.
    """
    core = select_delay_core(inst, params, sched, g, con)
    dur = scen.dur[s]
    travel = scen.travel[s]
    pending = set(core)
    pairs: set[Pair] = set()
    trace: list[tuple[int, int]] = []
    for bus in sched.buses:
        in_bus = [t for t in bus.trips if t in pending]
        while in_bus:
            i = max(in_bus, key=lambda t: (int(g.y_star[t - 1]), bus.trips.index(t)))
            pending.discard(i)
            ti = inst.trips[i - 1]
            target = ti.start + params.ub + params.eps_tol
            trace.append((i, target))
            while target > 0:
                pos = bus.trips.index(i)
                if pos == 0:
                    raise ValueError(
                        f"reached the head of a bus with target {target} left to explain; "
                        f"evaluation and schedule disagree")
                j = bus.trips[pos - 1]
                tj = inst.trips[j - 1]
                pairs.add((j, i))
                leg = int(dur[j - 1]) + int(travel[j - 1, i - 1]) - tj.max_express
                if tj.start - params.lb + leg >= target:
                    target = 0
                    trace.append((j, 0))
                else:
                    target -= leg
                    if j in pending:
                        target = max(target, tj.start + params.ub + params.eps_tol)
                        pending.discard(j)
                    trace.append((j, target))
                    i = j
            in_bus = [t for t in bus.trips if t in pending]
    return CMisContext(s, con, core, frozenset(pairs), frozenset(), tuple(trace))


def pairs_to_paths(pairs) -> list[list[int]]:
    """Decompose a pair set into vertex-disjoint paths; error if not disjoint."""
    nxt: dict[int, int] = {}
    prev: dict[int, int] = {}
    for (i, j) in pairs:
        if i in nxt or j in prev:
            raise ValueError("pairs do not form vertex-disjoint paths")
        nxt[i] = j
        prev[j] = i
    heads = sorted(i for i in nxt if i not in prev)
    paths = []
    seen = 0
    for h in heads:
        path = [h]
        while path[-1] in nxt:
            path.append(nxt[path[-1]])
            seen += 1
        paths.append(path)
    if seen != len(set(pairs)):
        raise ValueError("pairs contain a cycle")
    return paths


def _propagate_path(inst: Instance, params: ServiceParams, scen: ScenarioSet,
                    s: int, path: list[int]) -> dict[int, int]:
    """Earliest starts along one path with the head as early as possible."""
    dur = scen.dur[s]
    travel = scen.travel[s]
    y: dict[int, int] = {}
    head = inst.trips[path[0] - 1]
    y[path[0]] = head.start - params.lb
    for j, i in zip(path, path[1:]):
        tj, ti = inst.trips[j - 1], inst.trips[i - 1]
        leg = int(dur[j - 1]) + int(travel[j - 1, i - 1]) - tj.max_express
        y[i] = max(ti.start - params.lb, y[j] + leg)
    return y


def is_infeasible_set(inst: Instance, params: ServiceParams, scen: ScenarioSet,
                      s: int, pairs, con: Requirement | None = None) -> bool:
    """True iff the pairs alone force enough delays to break a requirement.

    Each path is propagated with its head starting as early as possible and
    expressing at its maximum; a trip is forced late when its earliest start
    exceeds s + ub regardless of the rest of the schedule. With ``con`` given,
    only that requirement counts (the subsystem minimal subsequences are built
    against); by default any requirement does.
    """
    for p in pairs:
        if tuple(p) not in inst.compat:
            raise ValueError(f"pair {p} is not planning compatible")
    paths = pairs_to_paths(pairs)
    forced: set[int] = set()
    for path in paths:
        y = _propagate_path(inst, params, scen, s, path)
        for i in path:
            if y[i] > inst.trips[i - 1].start + params.ub:
                forced.add(i)
    if con is None or con.route is None:
        if len(forced) > inst.n_trips - params.f_trip:
            return True
    if con is not None and con.route is not None:
        members = inst.routes[con.route - 1]
        return len(forced & set(members)) > len(members) - params.f_route[con.route - 1]
    if con is None:
        for r, members in enumerate(inst.routes, start=1):
            if len(forced & set(members)) > len(members) - params.f_route[r - 1]:
                return True
    return False


def mis_deletion_filter(inst: Instance, params: ServiceParams, scen: ScenarioSet,
                        s: int, pairs, con: Requirement | None = None) -> frozenset[Pair]:
    """Shrink an infeasible pair set to a single-deletion-minimal one.

    Deterministic lexicographic scan; replaces solver-based conflict
    refinement with an oracle that has the same output contract. Minimality is
    relative to ``con`` when given, matching the per-requirement subsequence
    construction.
    """
    current = set(tuple(p) for p in pairs)
    if not is_infeasible_set(inst, params, scen, s, current, con):
        raise ValueError("input pair set is not an infeasible set")
    for p in sorted(current):
        trial = current - {p}
        if trial and is_infeasible_set(inst, params, scen, s, trial, con):
            current = trial
    return frozenset(current)


def extend_cmis(inst: Instance, params: ServiceParams, scen: ScenarioSet,
                s: int, ctx: CMisContext) -> CMisContext:
    """Add alternative head pairs that force the same core delays.

    A trip h can replace a path's head when (h, second) is planning compatible,
    h appears in no existing pair, and propagating from h's earliest start
    still delays every core trip on the path.
    """
    used = {t for p in ctx.pairs for t in p}
    extra: set[Pair] = set()
    for path in pairs_to_paths(ctx.pairs):
        tail = path[1:]
        targets = [t for t in path if t in ctx.core]
        for h in range(1, inst.n_trips + 1):
            if h in used or (h, path[1]) not in inst.compat:
                continue
            y = _propagate_path(inst, params, scen, s, [h] + tail)
            if all(y[t] > inst.trips[t - 1].start + params.ub for t in targets):
                extra.add((h, path[1]))
    return replace(ctx, extra=frozenset(extra))


def cmis_cut(ctx: CMisContext) -> Cut:
    """Master cut for the subsequences: coefficients one on every pair,
    right-hand side |pairs| - 1 + z_s (unchanged by extension)."""
    all_pairs = sorted(ctx.pairs | ctx.extra)
    kind = ECMIS if ctx.extra else CMIS
    return Cut(ctx.s, kind, tuple((p, 1) for p in all_pairs), len(ctx.pairs))


@dataclass
class CertificateReport:
    """Outcome of verifying the constructed dual of the tightened scenario LP."""

    ok: bool
    failures: list[str] = field(default_factory=list)
    alpha: dict[Pair, Fraction] = field(default_factory=dict)
    objective: Fraction = Fraction(0)
    cut: Cut | None = None


def dual_certificate(inst: Instance, params: ServiceParams, sched: Schedule,
                     scen: ScenarioSet, s: int, g: GreedyResult,
                     ctx: CMisContext) -> CertificateReport:
    """Construct and verify the closed-form dual of the tightened scenario LP.

    The LP is taken for the path-restricted schedule (each explaining
    subsequence as its own bus), whose earliest starts are exactly the
    backtracking targets; there every path head starts as early as possible,
    which the construction needs. The tightening pins M_otp to y' - s and, on
    path pairs, M_start to y'. The dual puts 1/y' on each subsequence pair,
    unit weight on the delay-core counting row, and head/middle/tail weights
    on the start-window rows. Verification (exact rational arithmetic):
    nonnegativity, the start-column equalities, the on-time column
    inequalities, unit dual objective, and that the induced Benders cut
    coincides with the subsequence cut.
    """
    report = CertificateReport(ok=True)
    if any(t.start - params.lb <= 0 for t in inst.trips):
        raise ValueError("certificate requires strictly positive earliest starts")
    sequenced = set(sched.sequenced_pairs())
    for p in ctx.pairs:
        if p not in sequenced:
            raise ValueError(f"subsequence pair {p} is not sequenced in the schedule")
    dur = scen.dur[s]
    travel = scen.travel[s]
    paths = pairs_to_paths(ctx.pairs)
    nxt = {j: i for (j, i) in ctx.pairs}
    heads = {p[0] for p in paths}
    tails = {p[-1] for p in paths}
    # earliest starts when each subsequence runs as its own bus
    y: dict[int, int] = {}
    for path in paths:
        y.update(_propagate_path(inst, params, scen, s, path))
    involved = sorted(y)

    alpha = {(j, i): Fraction(1, y[i]) for (j, i) in ctx.pairs}
    beta = {j: Fraction(1, y[nxt[j]]) for j in heads}
    pi: dict[int, Fraction] = {}
    for t in involved:
        if t in heads:
            continue
        if t in tails:
            pi[t] = Fraction(1, y[t])
        else:
            pi[t] = Fraction(1, y[t]) - Fraction(1, y[nxt[t]])
    sigma_mis = Fraction(1)

    def fail(msg):
        report.ok = False
        report.failures.append(msg)

    for t, val in pi.items():
        if val < 0:
            fail(f"pi[{t}] negative: start times not monotone along the path")
    # start-time column of each trip must price to exactly zero (y > 0 basic)
    for i in range(1, inst.n_trips + 1):
        total = Fraction(0)
        for (j2, i2), a in alpha.items():
            if i2 == i:
                total += a
            if j2 == i:
                total -= a
        total -= pi.get(i, Fraction(0))
        total += beta.get(i, Fraction(0))
        if total != 0:
            fail(f"start-column {i} prices to {total}, expected 0")
    # on-time columns: sigma terms plus pi (ub - y' + s) must stay nonnegative
    for i in involved:
        coef = Fraction(params.ub - y[i] + inst.trips[i - 1].start)
        lhs = pi.get(i, Fraction(0)) * coef
        if i in ctx.core:
            lhs += sigma_mis
        if lhs < 0:
            fail(f"on-time column {i} prices to {lhs} < 0")
    for i in ctx.core:
        if y[i] <= inst.trips[i - 1].start + params.ub:
            fail(f"core trip {i} is not forced late by the subsequence")
    # z column: the counting row alone carries the unit weight
    if sigma_mis != 1:
        fail("z-column weight differs from 1")

    obj = sigma_mis * Fraction(1)
    for (j, i), a in alpha.items():
        leg = int(dur[j - 1]) + int(travel[j - 1, i - 1]) - inst.trips[j - 1].max_express
        obj += a * leg
    for t, val in pi.items():
        obj -= val * y[t]
    for t, val in beta.items():
        obj += val * (inst.trips[t - 1].start - params.lb)
    report.objective = obj
    if obj != 1:
        fail(f"dual objective is {obj}, expected exactly 1")

    lam = {}
    for (j, i), a in alpha.items():
        lam[(j, i)] = a * y[i]   # alpha times the tightened M_start
    if any(v != 1 for v in lam.values()):
        fail("Benders coefficients are not all one")
    induced = Cut(ctx.s, CMIS, tuple((p, 1) for p in sorted(lam)), len(lam))
    reference = cmis_cut(replace(ctx, extra=frozenset()))
    if induced.key() != reference.key():
        fail("induced Benders cut differs from the subsequence cut")
    report.alpha = alpha
    report.cut = induced
    return report
