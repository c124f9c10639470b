"""The Lax-Oleinik operators on the periodic grid.

The discrete infimum over nodes keeps order and translation structure
exactly; the semigroup (Markov) identity holds up to a defect that
vanishes under grid refinement, and the forward/backward pair satisfies
the one-sided composition inequalities.
"""

import numpy as np

from hjkam import GridFunction, apply_T, apply_T_dual, pendulum_model

SIGMA = 0.2
model = pendulum_model()


def test_function(n):
    return GridFunction.from_callable(
        lambda q: 0.3 * np.cos(2 * np.pi * q) + 0.1 * np.sin(4 * np.pi * q), n)


print("== exact structure ==")
u = test_function(128)
Tu = apply_T(model, u, 0.0, 0.2, sigma_eff=SIGMA)
Tshift = apply_T(model, u.shifted(3.7), 0.0, 0.2, sigma_eff=SIGMA)
print("translation invariance defect:",
      np.max(np.abs(Tshift.values - Tu.values - 3.7)))
v = GridFunction(1, 128, u.values + 0.05)
print("monotone:", bool(np.all(apply_T(model, v, 0, 0.2, sigma_eff=SIGMA).values
                               >= Tu.values)))

print("\n== Markov defect under refinement ==")
for n in (64, 128, 256):
    un = test_function(n)
    comp = apply_T(model, apply_T(model, un, 0, 0.1, sigma_eff=SIGMA), 0, 0.1,
                   sigma_eff=SIGMA)
    direct = apply_T(model, un, 0, 0.2, sigma_eff=SIGMA)
    print(f"n={n}: ||T^0.1 T^0.1 u - T^0.2 u||_inf = "
          f"{np.max(np.abs(comp.values - direct.values)):.2e}")

print("\n== forward/backward inequalities ==")
td = apply_T_dual(model, Tu, 0.0, 0.2, sigma_eff=SIGMA)
bu = apply_T(model, apply_T_dual(model, u, 0, 0.2, sigma_eff=SIGMA), 0, 0.2,
             sigma_eff=SIGMA)
print(f"max(dual(T u) - u)   = {np.max(td.values - u.values):+.2e}  (<= 0 + grid)")
print(f"min(T(dual u) - u)   = {np.min(bu.values - u.values):+.2e}  (>= 0 - grid)")
