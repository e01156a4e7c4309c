"""Walk through the bundled two-depot grid instance.

Eight timetabled trips on four routes, two depots, Manhattan deadheads. Two
reference schedules cost exactly 20 each, but under the two bundled
travel-time scenarios only one of them keeps enough trips on time.
"""

from ccvsp import gallery
from ccvsp.core import cc_threshold, schedule_cost
from ccvsp.subproblem import count_violated_scenarios, greedy_evaluate

inst = gallery.two_depot_grid()
params = gallery.grid_service_params(inst)
scen = gallery.grid_scenarios()

print(f"instance: {inst.n_trips} trips, {inst.n_depots} depots, "
      f"{len(inst.compat)} compatible pairs, arcs A = {inst.arc_count()}")
print(f"service: at least {params.f_trip} of {inst.n_trips} trips on time, "
      f"{params.f_route[0]} per route, in at least half the scenarios\n")

for name, sched in [("left", gallery.grid_schedule_left()),
                    ("right", gallery.grid_schedule_right())]:
    print(f"{name} schedule, cost {schedule_cost(inst, sched)}:")
    for bus in sched.buses:
        print(f"  depot {bus.depot}: trips {bus.trips}")
    for s in range(scen.count):
        g = greedy_evaluate(inst, params, sched, scen, s)
        print(f"  scenario {s}: delayed {sorted(g.delayed) or 'none'}, "
              f"requirements {'met' if g.z_star == 0 else 'violated'}")
    bad = count_violated_scenarios(inst, params, sched, scen)
    budget = cc_threshold(scen.count, params.epsilon)
    print(f"  -> violates {bad} of {scen.count} scenarios "
          f"(budget {budget}): {'FEASIBLE' if bad <= budget else 'INFEASIBLE'}\n")
