"""Self-contained LP and MILP solving for desk-scale models.

A dense revised simplex over bounded variables (two-phase, Dantzig pricing
with a Bland fallback under degeneracy) and a best-bound branch-and-bound with
a lazy-constraint hook. Built for the master problems and test oracles in this
package, not for industrial scale.
"""

from __future__ import annotations

import heapq
import math
import time
from dataclasses import dataclass, field

import numpy as np

FEAS_TOL = 1e-7
OPT_TOL = 1e-7
INT_TOL = 1e-6
GAP_TOL = 1e-6
INF = math.inf

LESS, GREATER, EQUAL = "<=", ">=", "=="


class MilpModel:
    """Bounded-variable LP/MILP in row form, minimization."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.obj: list[float] = []
        self.lb: list[float] = []
        self.ub: list[float] = []
        self.is_int: list[bool] = []
        self.var_names: list[str] = []
        # each row: (coeffs {var: coef}, sense, rhs, name)
        self.rows: list[tuple[dict[int, float], str, float, str]] = []

    def add_var(self, lb: float = 0.0, ub: float = INF, obj: float = 0.0,
                is_int: bool = False, name: str | None = None) -> int:
        if lb > ub + FEAS_TOL:
            raise ValueError(f"variable bounds cross: [{lb}, {ub}]")
        if is_int and (lb == -INF or ub == INF):
            raise ValueError("integer variables need finite bounds")
        self.obj.append(float(obj))
        self.lb.append(float(lb))
        self.ub.append(float(ub))
        self.is_int.append(bool(is_int))
        self.var_names.append(name or f"x{len(self.obj) - 1}")
        return len(self.obj) - 1

    def add_constr(self, coeffs: dict[int, float], sense: str, rhs: float,
                   name: str | None = None) -> int:
        if sense not in (LESS, GREATER, EQUAL):
            raise ValueError(f"unknown sense {sense!r}")
        self.rows.append(({int(k): float(v) for k, v in coeffs.items() if v != 0.0},
                          sense, float(rhs), name or f"c{len(self.rows)}"))
        return len(self.rows) - 1

    @property
    def n_vars(self) -> int:
        return len(self.obj)

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    def write_lp(self) -> str:
        """Model in the standard LP text format, for external debugging."""
        obj_terms = " + ".join(f"{c} {self.var_names[j]}" for j, c in enumerate(self.obj) if c)
        out = ["Minimize", " obj: " + (obj_terms or "0"), "Subject To"]
        for coeffs, sense, rhs, name in self.rows:
            terms = " + ".join(f"{v} {self.var_names[j]}" for j, v in sorted(coeffs.items()))
            op = {LESS: "<=", GREATER: ">=", EQUAL: "="}[sense]
            out.append(f" {name}: {terms} {op} {rhs}")
        out.append("Bounds")
        for j in range(self.n_vars):
            lo = "-inf" if self.lb[j] == -INF else str(self.lb[j])
            hi = "+inf" if self.ub[j] == INF else str(self.ub[j])
            out.append(f" {lo} <= {self.var_names[j]} <= {hi}")
        ints = [self.var_names[j] for j in range(self.n_vars) if self.is_int[j]]
        if ints:
            out.extend(["General", " " + " ".join(ints)])
        out.append("End")
        return "\n".join(out)


@dataclass
class LpSolution:
    status: str                      # Optimal | Infeasible | Unbounded | IterLimit
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    obj: float = math.nan
    dual_obj: float = math.nan
    iterations: int = 0
    basis: list[int] | None = None


@dataclass
class MilpSolution:
    status: str                      # Optimal | Infeasible | Unbounded | IterLimit
    x: np.ndarray | None = None
    obj: float = math.nan
    bound: float = -math.inf
    gap: float = math.inf
    nodes: int = 0
    iterations: int = 0


class _Simplex:
    """Revised simplex with bounds; columns are structural | slacks | artificials."""

    def __init__(self, model: MilpModel, var_lb=None, var_ub=None):
        n, m = model.n_vars, model.n_rows
        self.n, self.m = n, m
        ncols = n + 2 * m
        self.A = np.zeros((m, ncols))
        self.b = np.zeros(m)
        for i, (coeffs, sense, rhs, _) in enumerate(model.rows):
            for j, v in coeffs.items():
                self.A[i, j] = v
            self.b[i] = rhs
            self.A[i, n + i] = 1.0       # slack
            self.A[i, n + m + i] = 1.0   # artificial
        self.lo = np.empty(ncols)
        self.hi = np.empty(ncols)
        self.lo[:n] = model.lb if var_lb is None else var_lb
        self.hi[:n] = model.ub if var_ub is None else var_ub
        for i, (_, sense, _, _) in enumerate(model.rows):
            if sense == LESS:
                self.lo[n + i], self.hi[n + i] = 0.0, INF
            elif sense == GREATER:
                self.lo[n + i], self.hi[n + i] = -INF, 0.0
            else:
                self.lo[n + i], self.hi[n + i] = 0.0, 0.0
        self.cost = np.zeros(ncols)
        self.cost[:n] = model.obj
        self.iterations = 0
        self.basis: list[int] = []
        self.in_basis = np.zeros(ncols, dtype=bool)
        self.x = np.zeros(ncols)
        self.binv = np.eye(m)

    def set_start_point(self):
        """All-artificial starting basis absorbing the residual of each row."""
        n, m = self.n, self.m
        x = np.zeros(n + 2 * m)
        for j in range(n + m):
            if self.lo[j] > -INF:
                x[j] = self.lo[j]
            elif self.hi[j] < INF:
                x[j] = self.hi[j]
        resid = self.b - self.A[:, : n + m] @ x[: n + m]
        art = np.arange(n + m, n + 2 * m)
        x[art] = resid
        self.lo[art] = np.where(resid >= 0, 0.0, -INF)
        self.hi[art] = np.where(resid >= 0, INF, 0.0)
        self.basis = list(art)
        self.in_basis[:] = False
        self.in_basis[art] = True
        self.binv = np.eye(m)
        self.x = x
        return np.where(resid >= 0, 1.0, -1.0)

    def _refactor(self):
        try:
            self.binv = np.linalg.inv(self.A[:, self.basis])
        except np.linalg.LinAlgError:
            self.binv = np.linalg.pinv(self.A[:, self.basis])

    def _iterate(self, cost, max_iter) -> str:
        m = self.m
        basis_arr = np.array(self.basis, dtype=int)
        bland = False
        degen_streak = 0
        pivots = 0
        movable = self.lo < self.hi
        while True:
            if self.iterations >= max_iter:
                self.basis = list(basis_arr)
                return "IterLimit"
            self.iterations += 1
            y = cost[basis_arr] @ self.binv
            d = cost - y @ self.A
            at_lo = self.x <= self.lo + FEAS_TOL
            at_hi = self.x >= self.hi - FEAS_TOL
            free_nb = ~at_lo & ~at_hi
            ok = ~self.in_basis & movable
            up = ok & ((at_lo & (d < -OPT_TOL)) | (free_nb & (d < -OPT_TOL)))
            dn = ok & ((at_hi & (d > OPT_TOL)) | (free_nb & (d > OPT_TOL)))
            score = np.where(up, -d, 0.0) + np.where(dn, d, 0.0)
            if not score.any():
                self.basis = list(basis_arr)
                return "Optimal"
            if bland:
                enter = int(np.flatnonzero(score > 0)[0])
            else:
                enter = int(np.argmax(score))
            direction = 1.0 if up[enter] else -1.0
            w = self.binv @ self.A[:, enter]
            # ratio test; entering moves t*direction, basics move -t*direction*w
            step = -direction * w
            xb = self.x[basis_arr]
            lob = self.lo[basis_arr]
            hib = self.hi[basis_arr]
            t_rows = np.full(m, INF)
            dec = step < -FEAS_TOL
            has_lo = lob > -INF
            sel = dec & has_lo
            t_rows[sel] = (xb[sel] - lob[sel]) / -step[sel]
            inc = step > FEAS_TOL
            has_hi = hib < INF
            sel = inc & has_hi
            t_rows[sel] = (hib[sel] - xb[sel]) / step[sel]
            t_flip = self.hi[enter] - self.lo[enter]
            if m:
                leave = int(np.argmin(t_rows))
                t_limit = t_rows[leave]
                if bland and t_limit < INF:
                    # anti-cycling: among tied rows, leave by smallest variable index
                    ties = np.flatnonzero(t_rows <= t_limit + 1e-12)
                    leave = int(ties[np.argmin(basis_arr[ties])])
                    t_limit = t_rows[leave]
            else:
                leave, t_limit = -1, INF
            if t_flip < t_limit - 1e-12:
                if t_flip == INF:
                    self.basis = list(basis_arr)
                    return "Unbounded"
                self.x[enter] += direction * t_flip
                self.x[basis_arr] -= direction * t_flip * w
            else:
                if t_limit == INF:
                    self.basis = list(basis_arr)
                    return "Unbounded"
                t = max(t_limit, 0.0)
                self.x[enter] += direction * t
                self.x[basis_arr] -= direction * t * w
                out = basis_arr[leave]
                self.x[out] = lob[leave] if step[leave] < 0 else hib[leave]
                self.in_basis[out] = False
                self.in_basis[enter] = True
                basis_arr[leave] = enter
                piv = w[leave]
                row = self.binv[leave] / piv
                self.binv -= np.outer(w, row)
                self.binv[leave] = row
                pivots += 1
                if pivots >= 120:
                    self.basis = list(basis_arr)
                    self._refactor()
                    pivots = 0
                t_flip = t  # for the degeneracy bookkeeping below
            if t_flip <= 1e-10:
                degen_streak += 1
                if degen_streak > max(60, 2 * m):
                    bland = True
            else:
                degen_streak = 0
                bland = False

    def _extract(self) -> LpSolution:
        n, m = self.n, self.m
        y = self.cost[self.basis] @ self.binv
        obj = float(self.cost[: n + m] @ self.x[: n + m])
        d = self.cost[:n] - y @ self.A[:, :n]
        dual_obj = float(y @ self.b)
        for j in range(n):
            if self.in_basis[j]:
                continue
            if d[j] > 0 and self.lo[j] > -INF:
                dual_obj += d[j] * self.lo[j]
            elif d[j] < 0 and self.hi[j] < INF:
                dual_obj += d[j] * self.hi[j]
        return LpSolution("Optimal", x=self.x[:n].copy(), duals=np.asarray(y).copy(),
                          obj=obj, dual_obj=dual_obj, iterations=self.iterations,
                          basis=list(self.basis))

    def solve(self, max_iter: int) -> LpSolution:
        n, m = self.n, self.m
        phase1_sign = self.set_start_point()
        art = slice(n + m, n + 2 * m)
        if float(phase1_sign @ self.x[art]) > FEAS_TOL:
            p1cost = np.zeros(n + 2 * m)
            p1cost[art] = phase1_sign
            status = self._iterate(p1cost, max_iter)
            if status == "IterLimit":
                return LpSolution("IterLimit", iterations=self.iterations)
            if float(p1cost @ self.x) > 1e-6:
                return LpSolution("Infeasible", iterations=self.iterations)
        self.lo[art] = 0.0
        self.hi[art] = 0.0
        self.x[art][np.abs(self.x[art]) < 1e-9] = 0.0
        status = self._iterate(self.cost, max_iter)
        if status != "Optimal":
            return LpSolution(status, iterations=self.iterations)
        return self._extract()

    def solve_from_basis(self, basis: list[int], max_iter: int) -> LpSolution | None:
        """Try a warm basis; None means it was rejected (caller solves cold)."""
        n, m = self.n, self.m
        if len(basis) != m or len(set(basis)) != m or max(basis, default=-1) >= n + m:
            return None
        try:
            binv = np.linalg.inv(self.A[:, basis])
        except np.linalg.LinAlgError:
            return None
        self.basis = list(basis)
        self.in_basis[:] = False
        self.in_basis[np.array(basis, dtype=int)] = True
        nb = np.flatnonzero(~self.in_basis[: n + m])
        xn = np.where(self.lo[nb] > -INF, self.lo[nb],
                      np.where(self.hi[nb] < INF, self.hi[nb], 0.0))
        self.x[:] = 0.0
        self.x[nb] = xn
        xb = binv @ (self.b - self.A[:, nb] @ xn)
        lob, hib = self.lo[np.array(basis)], self.hi[np.array(basis)]
        if ((xb < lob - FEAS_TOL) | (xb > hib + FEAS_TOL)).any():
            return None      # warm basis is primal infeasible for the new bounds
        self.x[np.array(basis)] = xb
        self.binv = binv
        art = slice(n + m, n + 2 * m)
        self.lo[art] = 0.0
        self.hi[art] = 0.0
        status = self._iterate(self.cost, max_iter)
        if status != "Optimal":
            return LpSolution(status, iterations=self.iterations)
        return self._extract()


def lp_solve(model: MilpModel, warm_start: list[int] | None = None,
             var_lb=None, var_ub=None, max_iter: int | None = None) -> LpSolution:
    """Solve the LP relaxation; returns a primal-dual pair on Optimal."""
    if max_iter is None:
        max_iter = 2000 + 200 * (model.n_rows + model.n_vars)
    sim = _Simplex(model, var_lb=var_lb, var_ub=var_ub)
    if warm_start is not None:
        sol = sim.solve_from_basis(warm_start, max_iter)
        if sol is not None:
            return sol
        sim = _Simplex(model, var_lb=var_lb, var_ub=var_ub)
    return sim.solve(max_iter)


@dataclass(order=True)
class _Node:
    bound: float
    seq: int
    overrides: dict = field(compare=False, default_factory=dict)


def bnb_solve(model: MilpModel, lazy=None, gap_tol: float = GAP_TOL,
              time_limit: float | None = None, node_limit: int | None = None,
              backend=None, incumbent0=None) -> MilpSolution:
    """Best-bound branch-and-bound with lazy constraints added globally.

    ``lazy(x)`` runs at every integer-feasible point and returns a list of
    (coeffs, sense, rhs) rows; returned rows join the model for the whole tree
    and the node is re-solved. Branching picks the integer variable whose
    fractional part is closest to one half (ties: lowest index). Deterministic
    for identical inputs and configuration. ``incumbent0`` seeds the search
    with a known feasible (x, objective) pair; the caller vouches for its
    feasibility.
    """
    if backend is not None:
        return _solve_with_backend(model, lazy, backend)
    t0 = time.monotonic()
    int_vars = [j for j in range(model.n_vars) if model.is_int[j]]
    base_lb = np.array(model.lb)
    base_ub = np.array(model.ub)
    incumbent: np.ndarray | None = None
    inc_obj = INF
    if incumbent0 is not None:
        incumbent = np.asarray(incumbent0[0], dtype=float).copy()
        inc_obj = float(incumbent0[1])
    nodes = 0
    total_iters = 0
    counter = 0
    heap = [_Node(-INF, counter, {})]
    hit_limit = False

    while heap:
        if incumbent is not None:
            low = min(n.bound for n in heap)
            if _rel_gap(inc_obj, low) <= gap_tol:
                return MilpSolution("Optimal", incumbent, inc_obj, low,
                                    _rel_gap(inc_obj, low), nodes, total_iters)
        node = heapq.heappop(heap)
        if incumbent is not None and node.bound >= inc_obj - _gap_slack(inc_obj, gap_tol):
            continue
        if (time_limit is not None and time.monotonic() - t0 > time_limit) or \
           (node_limit is not None and nodes >= node_limit):
            heapq.heappush(heap, node)
            hit_limit = True
            break
        nodes += 1
        lb = base_lb.copy()
        ub = base_ub.copy()
        for j, (lo, hi) in node.overrides.items():
            lb[j] = max(lb[j], lo)
            ub[j] = min(ub[j], hi)
        while True:
            sol = lp_solve(model, var_lb=lb, var_ub=ub)
            total_iters += sol.iterations
            if sol.status == "Infeasible":
                break
            if sol.status != "Optimal":
                return MilpSolution(sol.status, incumbent, inc_obj, node.bound,
                                    _rel_gap(inc_obj, node.bound), nodes, total_iters)
            if incumbent is not None and sol.obj >= inc_obj - _gap_slack(inc_obj, gap_tol):
                break
            frac_j = _most_fractional(sol.x, int_vars)
            if frac_j is None:
                cuts = list(lazy(sol.x)) if lazy is not None else []
                if cuts:
                    for coeffs, sense, rhs in cuts:
                        model.add_constr(coeffs, sense, rhs)
                    continue  # re-solve this node under the new rows
                x = sol.x.copy()
                for j in int_vars:
                    x[j] = round(x[j])
                incumbent, inc_obj = x, sol.obj
                break
            lo_val = math.floor(sol.x[frac_j] + INT_TOL)
            l0, h0 = node.overrides.get(frac_j, (base_lb[frac_j], base_ub[frac_j]))
            counter += 1
            left = dict(node.overrides)
            left[frac_j] = (l0, min(h0, lo_val))
            heapq.heappush(heap, _Node(max(sol.obj, node.bound), counter, left))
            counter += 1
            right = dict(node.overrides)
            right[frac_j] = (max(l0, lo_val + 1), h0)
            heapq.heappush(heap, _Node(max(sol.obj, node.bound), counter, right))
            break

    if incumbent is None:
        status = "IterLimit" if hit_limit else "Infeasible"
        return MilpSolution(status, None, math.nan,
                            min((n.bound for n in heap), default=-INF),
                            math.inf, nodes, total_iters)
    if heap:
        low = min(n.bound for n in heap)
        gap = _rel_gap(inc_obj, low)
        status = "Optimal" if gap <= gap_tol else "IterLimit"
        return MilpSolution(status, incumbent, inc_obj, low, gap, nodes, total_iters)
    return MilpSolution("Optimal", incumbent, inc_obj, inc_obj, 0.0, nodes, total_iters)


def _gap_slack(inc_obj: float, gap_tol: float) -> float:
    return max(gap_tol * abs(inc_obj), 1e-9)


def _rel_gap(inc: float, bound: float) -> float:
    if inc == INF or bound == -INF:
        return math.inf
    return (inc - bound) / max(1.0, abs(inc))


def _most_fractional(x: np.ndarray, int_vars: list[int]):
    """Integer variable whose fraction is closest to 1/2, or None if all integral."""
    best, best_score = None, 0.0
    for j in int_vars:
        frac = abs(x[j] - round(x[j]))
        if frac <= INT_TOL:
            continue
        score = 0.5 - abs(frac - 0.5)
        if best is None or score > best_score + 1e-12:
            best, best_score = j, score
    return best


def _solve_with_backend(model: MilpModel, lazy, backend) -> MilpSolution:
    """Adapter seam: iterate an external solve against the lazy hook."""
    while True:
        sol = backend(model)
        if sol.status != "Optimal" or lazy is None:
            return sol
        cuts = list(lazy(sol.x))
        if not cuts:
            return sol
        for coeffs, sense, rhs in cuts:
            model.add_constr(coeffs, sense, rhs)
