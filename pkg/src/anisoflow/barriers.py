"""Barriers: shrinking Wulff caps, the periodic profile used for the hyperplane
argument, and harnesses that check ordering between evolutions.
"""

import math
from dataclasses import dataclass

import numpy as np

from .anisotropy import lower_cap_function, wulff_lower_cap
from .discretization import DirichletExact, GraphField, GraphGrid
from .errors import ConfigError, DomainError, UsageError
from .flow import FlowParams, evolve
from .reports import ExperimentReport

__all__ = [
    "PeriodicBarrierSpec",
    "shrinking_wulff_radii",
    "periodic_barrier_profile",
    "comparison_check",
    "wulff_barrier_check",
]

COMPARISON_TOL = 1e-10


@dataclass(frozen=True)
class PeriodicBarrierSpec:
    """Plateau of height M + eps on [-R, R], period 8R, odd about (2R, m*).

    ``M`` is the sup level being dominated and ``eps`` the margin above it.
    """

    R: float
    M: float
    eps: float

    def __post_init__(self):
        if not self.R > 0:
            raise UsageError(f"barrier scale R must be positive, got {self.R}")
        if not self.M > 0:
            raise UsageError(f"barrier level M must be positive, got {self.M}")
        if not 0 < self.eps < self.M / 2:
            raise UsageError(f"margin eps must lie in (0, M/2) = (0, {self.M / 2}), got {self.eps}")

    @property
    def period(self):
        return 8 * self.R

    @property
    def midlevel(self):
        return 0.75 * self.M + 0.5 * self.eps

    @property
    def minimum(self):
        return 2 * self.midlevel - self.M - self.eps

    def __call__(self, z):
        """Evaluate the profile at arbitrary coordinates."""
        R, top, mid = self.R, self.M + self.eps, self.midlevel
        z = np.mod(np.asarray(z, dtype=float) + 4 * R, 8 * R) - 4 * R  # in [-4R, 4R)
        a = np.abs(z)
        # distance-to-centre profile on [0, 4R]: plateau, descent, reflected ascent
        reflect = a > 2 * R
        a = np.where(reflect, 4 * R - a, a)
        s = np.clip((a - R) / R, 0.0, 1.0)
        # cubic with f(0)=top, f'(0)=0, f(1)=mid, f''(1)=0 so the odd reflection is C^2 there
        D = top - mid
        half = top - D * (1.5 * s**2 - 0.5 * s**3)
        return np.where(reflect, 2 * mid - half, half)


def shrinking_wulff_radii(R, t, N, psi, phi=None):
    """Radii (R_lower, R_upper) of the Wulff shapes bracketing the flow at time t.

    R_lower = sqrt(R^2 - 2 N s_max t) and R_upper = sqrt(R^2 - 2 N s_min t),
    where s is the mobility on the unit sphere. When ``phi`` is given, s is the
    ratio psi/phi instead, which is exact for anisotropies not normalised to
    one on the sphere.
    """
    if not R > 0:
        raise DomainError(f"radius must be positive, got {R}")
    if t < 0:
        raise DomainError(f"time must be nonnegative, got {t}")
    if phi is None:
        s_min, s_max = psi.psi_min, psi.psi_max
    else:
        s_min, s_max = psi.effective_bounds(phi)
    t_ext = R * R / (2 * N * s_max)
    lo2 = R * R - 2 * s_max * N * t
    if lo2 < 0:
        if lo2 > -1e-12 * R * R:
            lo2 = 0.0
        else:
            raise DomainError(
                f"t={t} is past the extinction time {t_ext:.12g} of the inner Wulff shape"
            )
    hi2 = R * R - 2 * s_min * N * t
    return math.sqrt(lo2), math.sqrt(max(hi2, 0.0))


def extinction_time(R, N, psi, phi=None):
    s_max = psi.psi_max if phi is None else psi.effective_bounds(phi)[1]
    return R * R / (2 * N * s_max)


def periodic_barrier_profile(spec, grid):
    """Nodal values of the barrier on a periodic 1-D grid of period 8R."""
    if grid.N != 1 or not grid.periodic_bc:
        raise ConfigError("periodic barrier needs a 1-D periodic grid")
    period = grid.shape[0] * grid.h
    if not math.isclose(period, spec.period, rel_tol=1e-12):
        raise ConfigError(f"grid period {period} differs from barrier period 8R = {spec.period}")
    x = grid.axes()[0]
    return GraphField(grid, spec(x), 0.0)


def comparison_check(lower, upper, tol=COMPARISON_TOL):
    """Max over shared snapshots and nodes of lower - upper; pass iff <= tol."""
    if len(lower.snapshots) != len(upper.snapshots):
        raise UsageError("comparison needs trajectories with the same snapshots")
    worst = -math.inf
    where = None
    for a, b in zip(lower.snapshots, upper.snapshots):
        if not a.grid.same_as(b.grid):
            raise UsageError("comparison needs trajectories on identical grids")
        if not math.isclose(a.time, b.time, rel_tol=1e-12, abs_tol=1e-14):
            raise UsageError(f"snapshot times differ: {a.time} vs {b.time}")
        d = a.values - b.values
        i = int(np.argmax(d))
        if d.flat[i] > worst:
            worst = float(d.flat[i])
            where = (a.time, np.unravel_index(i, d.shape))
    rep = ExperimentReport("comparison", config=dict(snapshots=len(lower.snapshots), tol=tol))
    rep.add("max_violation", worst, tol)
    rep.data["worst_at"] = where
    return rep


def wulff_barrier_check(R, phi, psi, params, N=1, h=0.01, half_width=None, tol=None):
    """Evolve the lower Wulff cap of radius R and check it stays between the
    caps of the bracketing radii: cap(R_upper) <= u <= cap(R_lower), nodewise
    to ``tol`` (default 5 h^2).

    The domain is |x| <= ``half_width`` (default R/2) and the boundary data
    are the midpoint of the two bracketing caps, which is exact when psi/phi
    is constant on the sphere.
    """
    if phi.dim != N + 1 or psi.dim != N + 1:
        raise UsageError("anisotropy dimension does not match N")
    t_ext = extinction_time(R, N, psi, phi)
    if params.T > t_ext / 4 * (1 + 1e-12):
        raise ConfigError(f"T={params.T} exceeds a quarter of the extinction time {t_ext:.6g}")
    tol = 5 * h * h if tol is None else tol
    hw = 0.5 * R if half_width is None else half_width

    def bracket(x, t):
        r_lo, r_hi = shrinking_wulff_radii(R, t, N, psi, phi)
        return lower_cap_function(phi, r_hi)(x), lower_cap_function(phi, r_lo)(x)

    def edge(x, t):
        a, b = bracket(x, t)
        return 0.5 * (a + b)

    grid = GraphGrid.centered(N, h, hw, DirichletExact(edge, label="wulff-bracket"))
    u0 = wulff_lower_cap(phi, R, grid).field(0.0)
    traj = evolve(u0, params, phi, psi, record=False)
    pts = grid.points()
    rep = ExperimentReport(
        "wulff_barrier",
        config=dict(R=R, N=N, h=h, half_width=hw, T=params.T, tol=tol,
                    phi=repr(phi), psi=repr(psi)),
    )
    worst_lo = worst_hi = -math.inf
    first = None
    apex = []
    for s in traj.snapshots:
        below, above = bracket(pts, s.time)
        v_lo = below - s.values  # > 0 means u dips under the outer cap
        v_hi = s.values - above  # > 0 means u rises over the inner cap
        worst_lo = max(worst_lo, float(v_lo.max()))
        worst_hi = max(worst_hi, float(v_hi.max()))
        bad = np.maximum(v_lo, v_hi) > tol
        if first is None and np.any(bad):
            idx = np.unravel_index(int(np.argmax(bad)), bad.shape)
            first = dict(time=s.time, node=tuple(int(i) for i in idx),
                         x=pts[idx].tolist(), value=float(s.values[idx]))
        centre = tuple(n // 2 for n in grid.shape)
        apex.append((s.time, float(s.values[centre])))
    rep.add("outer_cap_violation", worst_lo, tol)
    rep.add("inner_cap_violation", worst_hi, tol)
    rep.data.update(first_violation=first, apex=apex, trajectory=traj)
    return rep
