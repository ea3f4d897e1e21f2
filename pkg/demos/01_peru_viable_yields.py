# Viable yields of the anchovy/hake fishery.
import numpy as np

from evykit import (
    ConstraintSet,
    LotkaVolterra,
    PERU_MIN_BIOMASS,
    PERU_PARAMS,
    equilibrium_catches,
    evy,
    lv_evy_closed_form,
)

model = LotkaVolterra(PERU_PARAMS)
floor = ConstraintSet(PERU_MIN_BIOMASS, (0.0, 0.0))

# growth factors at the minimal biomass, no harvest: both above one
print("growth factors at the floor:", model.growth_factors(floor.biomass, np.zeros(2)))

# largest catches holding the floor in place
cstar = equilibrium_catches(model, floor).catches
print("equilibrium catches (t):", cstar)

# from a comfortable initial state the equilibrium bound binds
res = lv_evy_closed_form(PERU_PARAMS, floor, (1.2e7, 3e5))
print("EVY (t):", res.evy, [b.value for b in res.branch])

# close to the floor, with many predators, the first-year bound takes over
res = lv_evy_closed_form(PERU_PARAMS, floor, (7e6, 5e5))
print("EVY near the floor (t):", res.evy, [b.value for b in res.branch])

# the generic bisection agrees with the closed form
print("generic EVY (t):", evy(model, floor, (7e6, 5e5)).evy)

# a larger predator floor costs prey yield
print("prey EVY with z_min doubled:", lv_evy_closed_form(PERU_PARAMS, ConstraintSet((7e6, 4e5), (0, 0))).evy[0])
