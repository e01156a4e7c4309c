"""Generate a random instance and solve it exactly under every configuration.

Compares the cut families and the two master enhancements (per-scenario valid
inequalities, continuous indicators) on one 12-trip instance: identical
optimal objectives, different work.
"""

from ccvsp.bnc import VARIANTS, BnCConfig, solve_bnc
from ccvsp.core import ServiceParams
from ccvsp.cuts import CUT_KINDS
from ccvsp.scenarios import GenParams, generate_instance, sample_scenarios

inst = generate_instance(GenParams(n_trips=12, n_depots=2, trips_per_route=6,
                                   grid_width=80, grid_height=80,
                                   headway_buffer=(2, 10), seed=11))
scen = sample_scenarios(inst, 12, seed=101)
params = ServiceParams.for_instance(inst, lb=1, ub=5, delta_trip=0.9,
                                    delta_route=0.8, epsilon=0.2)
print(f"instance: {inst.n_trips} trips, {len(inst.compat)} pairs, "
      f"{scen.count} scenarios, budget {int(scen.count * params.epsilon)}\n")
print(f"{'family':>8} {'variant':>7} {'objective':>10} {'nodes':>6} {'cuts':>5} {'time':>7}")
for family in CUT_KINDS:
    for variant in sorted(VARIANTS):
        cfg = BnCConfig.for_variant(variant, cut_family=family)
        res = solve_bnc(inst, params, scen, cfg)
        n_cuts = sum(res.cuts_added.values())
        print(f"{family:>8} {variant:>7} {res.objective:>10.0f} {res.nodes:>6} "
              f"{n_cuts:>5} {res.time_s:>6.2f}s")
