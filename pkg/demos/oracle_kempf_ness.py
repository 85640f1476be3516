"""The finite-dimensional model: C^n with a torus action.

Shows the descent of |Phi|^2 / 2 for a two-factor torus and the Kempf-Ness
profile along an imaginary direction, which is nondecreasing and crosses
zero at most once.
"""

import numpy as np

from vortexflow import oracle as orc

model = orc.FinDimModel([[1, 1, 0], [0, 1, -1]], [2.0, 0.5])
x0 = np.array([0.3 + 0.1j, 1.2, 0.4j])
traj = orc.findim_flow(model, x0, 1e-3, 10.0)
for t in (0, 1, 2, 5, 10):
    k = int(round(t / 1e-3))
    print(f"t = {t:4.1f}  |Phi|^2 = {2 * traj.functional[k]:.3e}  |x| = "
          + " ".join(f"{a:.4f}" for a in np.abs(traj.xs[k])))

rep = orc.kempf_ness_check(model, x0, [1.0, 0.5], samples=11)
print("profile:", " ".join(f"{v:+.3f}" for v in rep.values))
print(f"monotone {rep.monotone}, zero crossings {rep.zero_crossings}")
print(f"gradient check at x0: {orc.gradient_check(model, x0):.1e}")
