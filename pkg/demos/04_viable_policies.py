# Cautious versus greedy adaptive policies, and a constant-catch policy that fails.
import numpy as np

from evykit import ConstraintSet, HarvestPolicy, LotkaVolterra, PERU_MIN_BIOMASS, PERU_PARAMS, audit, run

model = LotkaVolterra(PERU_PARAMS)
cstar = model.equilibrium_catches(np.array(PERU_MIN_BIOMASS))
cs = ConstraintSet(PERU_MIN_BIOMASS, tuple(0.8 * cstar))
x0 = (1.2e7, 3e5)

for policy in (HarvestPolicy.viable_min(), HarvestPolicy.viable_greedy()):
    traj = run(model, x0, policy, cs, horizon=50, start_year=1971)
    rep = audit(traj, cs)
    mean = traj.catches.mean(axis=0)
    print(f"{policy.kind:14s} mean catch {mean.round(-3)}  violations {len(rep.violations)}  "
          f"final state {traj.states[-1].round(-3)}")

# the same yearly catch, but fixed: no adaptation to the stock
traj = run(model, x0, HarvestPolicy.constant_catch(0.8 * cstar * 1.3), cs, horizon=50)
rep = audit(traj, cs)
print("constant catch: first violation in year", rep.first_violation_year,
      "extinct:", traj.extinction.any(axis=0))
