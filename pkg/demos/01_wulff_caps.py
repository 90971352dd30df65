"""Wulff shapes have constant anisotropic curvature.

The lower cap of the Wulff shape of radius R is a graph whose anisotropic
mean curvature is N/R everywhere. We build caps for three anisotropies,
apply the discrete operator and watch the error fall like h^2.

The power norm with exponent 4 is degenerate along the coordinate axes: its
Hessian vanishes there and the cap is only C^1 at its apex. The discrete
identity still converges away from the apex but not at it.
"""

import numpy as np

from anisoflow import Elliptic, Euclidean, GraphGrid, PowerNorm, curvature_operator, wulff_lower_cap

R = 2.0
cases = [(Euclidean(2), 0.0), (Elliptic(np.array([[2.0, 0.3], [0.3, 1.0]])), 0.0),
         (PowerNorm(2, 4), 0.5), (PowerNorm(2, 4), 0.0)]
for phi, x in cases:
    print(f"{type(phi).__name__} at x = {x}")
    prev = None
    for h in (0.04, 0.02, 0.01):
        grid = GraphGrid.centered(1, h, 0.5 * R)
        L = curvature_operator(wulff_lower_cap(phi, R, grid).field(), phi)
        err = abs(L.at([x]) + 1 / R)
        rate = "" if prev is None else f"  order {np.log2(prev / err):.2f}"
        print(f"  h={h:<5} error {err:.3e}{rate}")
        prev = err
