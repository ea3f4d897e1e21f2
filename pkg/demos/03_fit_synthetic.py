# Recovering the LV parameters from eleven years of noiseless synthetic data.
import numpy as np

from evykit import FitConfig, LVParams, PERU_PARAMS, fit, synthetic_series, wrss

T = 11
efforts = np.column_stack([
    np.linspace(0.3, 0.7, T) * np.tile([1.0, 0.8], 6)[:T],  # prey effort alternates
    np.linspace(0.1, 0.3, T),
])
series = synthetic_series(PERU_PARAMS, (12e6, 3e5), efforts, start_year=1971)
print("observed biomass (kt):")
print(np.round(series.biomass / 1e3).astype(int))

# start 20% off; L can only move down
guess = LVParams.from_array(PERU_PARAMS.as_array() * np.array([0.8, 0.8, 1.2, 1.2, 0.8]))
print("initial wrss:", wrss(guess, series))

res = fit(series, FitConfig(guess))
print("final wrss:", res.objective, "after", res.iterations, "iterations, converged:", res.converged)
for name, est, true in zip(("R", "L", "alpha", "beta", "K"), res.params.as_array(), PERU_PARAMS.as_array()):
    print(f"  {name:5s} {est:.6g}  (true {true:.6g}, rel err {abs(est / true - 1):.1e})")
