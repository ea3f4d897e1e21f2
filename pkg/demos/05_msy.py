# Maximum sustainable yields at ecosystem equilibrium.
from evykit import ConstraintSet, LotkaVolterra, LVParams, PERU_MIN_BIOMASS, PERU_PARAMS, msy_multispecies, msy_schaefer

P = PERU_PARAMS
model = LotkaVolterra(P)
cs = ConstraintSet(PERU_MIN_BIOMASS, (0, 0))
bounds = [[0, P.R - 1], [0, P.L + P.beta * P.K - 1]]

s = msy_schaefer(P)
print(f"prey alone: MSY {s.msy:.0f} t at biomass {s.biomass:.0f} t")

for r in msy_multispecies(model, cs, bounds):
    e = r.equilibrium
    print(f"species {r.species}: MSY {r.msy:.0f} t, state {e.state.round(-3)}, efforts {e.efforts.round(4)}, "
          f"above the floor: {r.viable}")

# without interactions the prey MSY is the single-species one
flat = LotkaVolterra(LVParams(P.R, P.L, 0.0, 0.0, P.K))
print("decoupled prey MSY:", msy_multispecies(flat, cs, [[0, P.R - 1], [0, 0.5]])[0].msy)
