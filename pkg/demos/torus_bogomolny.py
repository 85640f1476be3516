"""Degree +-1 on a torus: which sign carries holomorphic sections.

With D = d + iA the theta section of degree -1 is holomorphic. Its flow
lowers the energy to the Bogomolny value pi * tau * |d|. The degree +1
section is antiholomorphic. The flow still reaches f = 0, but by winding
the zero the other way, and the energy goes up.
"""

import numpy as np

from vortexflow import fields as fl
from vortexflow import flow, moment
from vortexflow.grid import l2_norm, make_grid

for n in (16, 32):
    g = make_grid("torus", n, lx=6.0)
    for degree in (-1, 1):
        s = fl.theta_state(g, degree, 0.8)
        dbar0 = l2_norm(g, fl.dbar(s), "complex")
        tr = flow.run_flow(s, flow.FlowConfig(integrator="euler", tolerance=1e-6,
                                              output_every=10 ** 6))
        e = tr.column("energy")
        print(f"n={n:2d} d={degree:+d}: ||dbar u0|| {dbar0:.2e}, energy {e[0]:.4f} -> {e[-1]:.4f}"
              f" (pi = {np.pi:.4f}), count {moment.vortex_count(tr.state):+d},"
              f" flux {tr.final.flux:+.6f}")
