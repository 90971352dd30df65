"""Perturbations die out.

A compactly supported bump on a line decays under the flow, squeezed
between periodic barriers; a sublinear perturbation of a cone is forgotten
in rescaled time. Both are run on coarse grids here.
"""

from anisoflow import ConeSpec, PowerNorm
from anisoflow.experiments import PerturbationSpec, exp_hyperplane_stability, exp_rescaled_convergence

bump = PerturbationSpec.vanishing(1.0, 2.0)
for phi in (None, PowerNorm(2, 4)):
    rep = exp_hyperplane_stability(bump, phi=phi, h=0.05, T=10.0, ratio=0.5)
    name = "euclidean" if phi is None else "power 4"
    print(f"bump, {name}: sup after T=10 is {rep.metric('M_ratio').value:.3f} of the initial sup")

rep = exp_rescaled_convergence(ConeSpec.abs(1.0), PerturbationSpec.sublinear(1.0, 0.5, 4.0),
                               h=0.05, half_width=4.0, tau_end=8.0, compare_expander=False)
D = rep.data["D"]
print(f"sublinear perturbation of |x|: rescaled gap {D[0]:.3f} -> {D[-1]:.2e} by tau = 8")
