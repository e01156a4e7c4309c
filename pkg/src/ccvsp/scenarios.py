"""Random instance generation and travel-time scenario sampling.

Instances follow the classic grid-based construction for multi-depot bus
scheduling benchmarks, extended with routes (trip groups sharing endpoints)
and expressing allowances. Stochastic travel times are lognormal around the
deterministic means with a fixed coefficient of variation, rounded to integer
minutes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (
    Depot,
    Instance,
    Pair,
    Trip,
    ValidationError,
    build_compat,
)


@dataclass(frozen=True)
class ScenarioSet:
    """Sampled travel-time realizations, each scenario with probability 1/S.

    ``dur[s, i-1]`` is trip i's duration, ``travel[s, i-1, j-1]`` the deadhead
    time between trips (meaningful on compatible pairs), ``out_t``/``in_t`` the
    depot deadheads.
    """

    dur: np.ndarray          # (S, I)
    travel: np.ndarray       # (S, I, I)
    out_t: np.ndarray        # (S, K, I)
    in_t: np.ndarray         # (S, I, K)
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("dur", "travel", "out_t", "in_t"):
            arr = getattr(self, name)
            if (arr < 0).any():
                raise ValidationError(f"scenario table {name} has negative times")
        if self.count < 1:
            raise ValidationError("a scenario set needs at least one scenario")

    @property
    def count(self) -> int:
        return self.dur.shape[0]

    def leg_time(self, s: int, i: int, j: int) -> int:
        """Duration of trip i plus deadhead to trip j's start, in scenario s."""
        return int(self.dur[s, i - 1]) + int(self.travel[s, i - 1, j - 1])


@dataclass(frozen=True)
class GenParams:
    """Knobs for the random instance generator; all recorded in instance meta."""

    n_trips: int
    n_depots: int
    trips_per_route: int = 10
    grid_width: int = 60
    grid_height: int = 60
    long_trip_frac: float = 0.4
    # each route's first departure is uniform over one of two peak windows
    peak_windows: tuple[tuple[int, int], tuple[int, int]] = ((360, 600), (840, 1080))
    # successive departures follow at the running time plus this buffer range
    headway_buffer: tuple[int, int] = (2, 12)
    lognormal_cv: float = 0.2
    deploy_cost: int = 1000
    seed: int = 0

    def validate(self) -> None:
        if self.n_trips < 1 or self.n_depots < 1 or self.trips_per_route < 1:
            raise ValidationError("n_trips, n_depots and trips_per_route must be positive")
        if self.grid_width < 1 or self.grid_height < 1:
            raise ValidationError("grid must be non-degenerate")
        if not 0 <= self.long_trip_frac <= 1:
            raise ValidationError("long_trip_frac must lie in [0, 1]")
        if self.lognormal_cv <= 0:
            raise ValidationError("lognormal_cv must be positive")
        if self.headway_buffer[0] < 0 or self.headway_buffer[1] < self.headway_buffer[0]:
            raise ValidationError("headway_buffer must be a non-negative range")


def _dist(a, b) -> int:
    return int(round(math.hypot(a[0] - b[0], a[1] - b[1])))


def generate_instance(p: GenParams) -> Instance:
    """Generate a random instance; deterministic for a fixed seed."""
    p.validate()
    rng = np.random.default_rng(p.seed)
    I, K = p.n_trips, p.n_depots
    n_routes = math.ceil(I / p.trips_per_route)

    route_locs = [
        (tuple(rng.integers(0, (p.grid_width, p.grid_height), endpoint=True)),
         tuple(rng.integers(0, (p.grid_width, p.grid_height), endpoint=True)))
        for _ in range(n_routes)
    ]
    route_locs = [((int(a[0]), int(a[1])), (int(b[0]), int(b[1]))) for a, b in route_locs]

    trips: list[Trip] = []
    routes: list[list[int]] = [[] for _ in range(n_routes)]
    # route cadence state: the next departure follows the previous trip's
    # running time plus a small buffer, so same-route chains are tight
    next_start = [0] * n_routes
    for r in range(n_routes):
        lo, hi = p.peak_windows[r % len(p.peak_windows)]
        next_start[r] = int(rng.integers(lo, hi, endpoint=True))
    for i in range(1, I + 1):
        r = (i - 1) // p.trips_per_route
        l1, l2 = route_locs[r]
        oneway = max(1, _dist(l1, l2))
        is_long = rng.random() < p.long_trip_frac
        start = next_start[r]
        if is_long:
            # round trip: out to the other endpoint and back
            a = l1 if rng.random() < 0.5 else l2
            dur = 2 * oneway + int(rng.integers(0, max(1, oneway // 4), endpoint=True))
            s_loc = e_loc = a
        else:
            # one-directional; alternate orientation within the route
            if len(routes[r]) % 2 == 0:
                s_loc, e_loc = l1, l2
            else:
                s_loc, e_loc = l2, l1
            dur = oneway + int(rng.integers(0, max(1, oneway // 4), endpoint=True))
        if dur < 10:
            express = 0
        else:
            express = int(rng.integers(math.ceil(0.05 * dur), math.floor(0.10 * dur), endpoint=True))
        trips.append(Trip(i, r + 1, s_loc, e_loc, start, dur, express))
        routes[r].append(i)
        buffer = int(rng.integers(p.headway_buffer[0], p.headway_buffer[1], endpoint=True))
        next_start[r] = start + dur + buffer

    depots = []
    cap = math.ceil(I / K)
    for k in range(1, K + 1):
        loc = (int(rng.integers(0, p.grid_width, endpoint=True)),
               int(rng.integers(0, p.grid_height, endpoint=True)))
        depots.append(Depot(k, loc, cap))

    dh_time = np.zeros((I, I), dtype=np.int64)
    cost = np.zeros((I, I), dtype=np.int64)
    for a, ti in enumerate(trips):
        for b, tj in enumerate(trips):
            if a == b:
                continue
            d = _dist(ti.end_loc, tj.start_loc)
            dh_time[a, b] = d
            cost[a, b] = d
    out_time = np.zeros((K, I), dtype=np.int64)
    in_time = np.zeros((I, K), dtype=np.int64)
    out_cost = np.zeros((K, I), dtype=np.int64)
    in_cost = np.zeros((I, K), dtype=np.int64)
    for k, dep in enumerate(depots):
        for a, t in enumerate(trips):
            d_out = _dist(dep.loc, t.start_loc)
            d_in = _dist(t.end_loc, dep.loc)
            out_time[k, a] = d_out
            in_time[a, k] = d_in
            out_cost[k, a] = d_out + p.deploy_cost   # pull-out carries the deployment cost
            in_cost[a, k] = d_in

    compat = build_compat(trips, dh_time)
    meta = {
        "seed": p.seed,
        "generator_params": {
            "n_trips": I, "n_depots": K, "trips_per_route": p.trips_per_route,
            "grid": [p.grid_width, p.grid_height], "long_trip_frac": p.long_trip_frac,
            "peak_windows": [list(w) for w in p.peak_windows],
            "headway_buffer": list(p.headway_buffer),
            "lognormal_cv": p.lognormal_cv, "deploy_cost": p.deploy_cost,
            "metric": "euclidean-rounded",
        },
    }
    return Instance(trips, depots, routes, dh_time, out_time, in_time,
                    cost, out_cost, in_cost, compat, meta)


def _lognormal_rounded(rng: np.random.Generator, means: np.ndarray, cv: float) -> np.ndarray:
    """Integer samples with the given means and sd = cv * mean; zero means stay zero."""
    means = np.asarray(means, dtype=float)
    out = np.zeros_like(means)
    pos = means > 0
    if pos.any():
        # sigma^2 = ln(1 + cv^2), mu = ln(mean) - sigma^2/2 gives the requested moments
        sigma2 = math.log(1.0 + cv * cv)
        sigma = math.sqrt(sigma2)
        mu = np.log(means[pos]) - sigma2 / 2.0
        out[pos] = np.exp(mu + sigma * rng.standard_normal(int(pos.sum())))
    return np.maximum(np.rint(out), 0).astype(np.int64)


def sample_scenarios(inst: Instance, n_scenarios: int, seed: int,
                     cv: float | None = None, degenerate: bool = False) -> ScenarioSet:
    """Sample S scenarios of all travel times; deterministic for a fixed seed.

    Each scenario draws from an independent substream keyed by (seed, s), so
    results do not depend on evaluation order. ``degenerate`` short-circuits
    the sampler to the rounded means (the cv -> 0 limit), for testing.
    """
    if n_scenarios < 1:
        raise ValidationError("need at least one scenario")
    if cv is None:
        cv = float(inst.meta.get("generator_params", {}).get("lognormal_cv", 0.2))
    I, K = inst.n_trips, inst.n_depots
    mean_dur = np.array([t.mean_dur for t in inst.trips], dtype=float)
    dur = np.zeros((n_scenarios, I), dtype=np.int64)
    travel = np.zeros((n_scenarios, I, I), dtype=np.int64)
    out_t = np.zeros((n_scenarios, K, I), dtype=np.int64)
    in_t = np.zeros((n_scenarios, I, K), dtype=np.int64)
    for s in range(n_scenarios):
        if degenerate:
            dur[s] = np.rint(mean_dur)
            travel[s] = inst.dh_time
            out_t[s] = inst.out_time
            in_t[s] = inst.in_time
            continue
        rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(s,)))
        dur[s] = _lognormal_rounded(rng, mean_dur, cv)
        travel[s] = _lognormal_rounded(rng, inst.dh_time.astype(float), cv)
        out_t[s] = _lognormal_rounded(rng, inst.out_time.astype(float), cv)
        in_t[s] = _lognormal_rounded(rng, inst.in_time.astype(float), cv)
    return ScenarioSet(dur, travel, out_t, in_t, rng_seed=seed)


def percentile_times(inst: Instance, scen: ScenarioSet, q: float):
    """Per-entry empirical q-th percentile (nearest-rank) across scenarios.

    Returns (dur, travel, out_t, in_t) tables shaped like one scenario.
    """
    if not 0 < q <= 100:
        raise ValidationError("percentile must lie in (0, 100]")
    S = scen.count
    rank = max(1, math.ceil(q / 100.0 * S - 1e-9))  # nearest-rank, 1-based

    def pick(arr):
        return np.sort(arr, axis=0)[rank - 1]

    return pick(scen.dur), pick(scen.travel), pick(scen.out_t), pick(scen.in_t)


def compat_for_times(inst: Instance, dur: np.ndarray, travel: np.ndarray) -> set[Pair]:
    """Planning compatibility recomputed for an alternative time table."""
    pairs = set()
    for a, ti in enumerate(inst.trips):
        for b, tj in enumerate(inst.trips):
            if a != b and ti.start + int(dur[a]) + int(travel[a, b]) <= tj.start:
                pairs.add((a + 1, b + 1))
    return pairs


def save_scenarios(scen: ScenarioSet, path) -> None:
    """Compact binary serialization (npz)."""
    np.savez_compressed(path, dur=scen.dur, travel=scen.travel, out_t=scen.out_t,
                        in_t=scen.in_t, rng_seed=np.array([scen.rng_seed]))


def load_scenarios(path) -> ScenarioSet:
    with np.load(path) as data:
        return ScenarioSet(dur=data["dur"], travel=data["travel"], out_t=data["out_t"],
                           in_t=data["in_t"], rng_seed=int(data["rng_seed"][0]))
