"""From a cone to its expanding soliton.

The flow from alpha|x| is self-similar: u(x, t) = sqrt(t) w(x / sqrt(t)).
In rescaled variables the cone relaxes to the expander w, whose height at
the origin we compare with an ODE shooting solution.
"""

import numpy as np

from anisoflow import ConeSpec, Euclidean, FlowParams, MobilityModel, compute_expander
from anisoflow.experiments import oracle_expander_ode
from anisoflow.selfsimilar import cone_grid

phi, psi = Euclidean(2), MobilityModel.euclidean(2)
for alpha in (0.5, 1.0, 2.0):
    cone = ConeSpec.abs(alpha)
    prof = compute_expander(cone, FlowParams(T=40.0, cfl_factor=0.5, tol_stat=1e-8), phi, psi,
                            cone_grid(cone, 1, 0.04, 4.0))
    w0 = prof.field.at(np.zeros(1))
    print(f"alpha={alpha}: w(0) = {w0:.5f} (ODE {oracle_expander_ode(alpha):.5f}), "
          f"stationary at tau = {prof.field.time:.1f}")
