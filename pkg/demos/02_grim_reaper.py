"""The grim reaper translates with unit speed.

u(x, t) = t - log cos x is an exact solution of the isotropic flow on
(-pi/2, pi/2). We run the solver with exact Dirichlet data on |x| <= 1.2
and compare at t = 1 on two grids.
"""

from anisoflow.experiments import oracle_grim_reaper

rep = oracle_grim_reaper(h=0.02)
print(rep.summary())
