"""Cones, expanding self-similar solutions and their scaling identities.

A cone is the graph of a positively 1-homogeneous Lipschitz function. The flow
starting from a cone is self-similar, u(x, t) = sqrt(t) u(x / sqrt(t), 1), and
in rescaled variables it converges to a stationary profile: the expander.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .discretization import ConeExtension, GraphField, GraphGrid
from .errors import ConfigError, ConvergenceError, DomainError, UsageError
from .flow import FlowParams, evolve, evolve_rescaled
from .reports import ExperimentReport

__all__ = [
    "ConeSpec",
    "ExpanderProfile",
    "make_cone_field",
    "scaling_check",
    "compute_expander",
    "expander_far_field",
    "backward_extend",
    "recovered_cone",
    "backward_lambda",
    "expander_fixed_point_check",
    "cone_grid",
]


class ConeSpec:
    """Positively 1-homogeneous initial datum.

    Use the constructors :meth:`abs`, :meth:`max_affine` and :meth:`radial`.
    Calling the spec on points of shape (..., N) evaluates the cone.
    """

    def __init__(self, kind, N, slope=None, slopes=None, profile=None, label=None):
        self.kind = kind
        self.N = int(N)
        self.slope = slope
        self.slopes = slopes
        self.profile = profile
        self.label = label

    @classmethod
    def abs(cls, alpha, N=1):
        if alpha < 0:
            raise UsageError(f"cone slope must be nonnegative, got {alpha}")
        return cls("abs", N, slope=float(alpha))

    @classmethod
    def max_affine(cls, slopes):
        a = np.atleast_2d(np.asarray(slopes, dtype=float))
        if a.shape[0] == 1 and a.shape[1] > 2:
            a = a.T  # a flat list of 1-D slopes
        return cls("maxaffine", a.shape[1], slopes=a)

    @classmethod
    def radial(cls, profile, N, label="radial"):
        """u(x) = |x| g(x/|x|) for a function ``g`` on unit vectors (shape (..., N))."""
        return cls("radial", N, profile=profile, label=label)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.N == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        if self.kind == "abs":
            return self.slope * np.sqrt(np.sum(x * x, axis=-1))
        if self.kind == "maxaffine":
            return np.max(x @ self.slopes.T, axis=-1)
        r = np.sqrt(np.sum(x * x, axis=-1))
        safe = np.where(r > 0, r, 1.0)[..., None]
        unit = np.where(r[..., None] > 0, x / safe, 0.0)
        unit[r == 0, 0] = 1.0
        return np.where(r > 0, r * self.profile(unit), 0.0)

    @property
    def is_flat(self):
        if self.kind == "abs":
            return self.slope == 0
        if self.kind == "maxaffine":
            return bool(np.all(self.slopes == 0))
        return False

    @property
    def lipschitz(self):
        if self.kind == "abs":
            return self.slope
        if self.kind == "maxaffine":
            return float(np.max(np.linalg.norm(self.slopes, axis=1)))
        # difference quotients on a ring pair
        from .anisotropy import sphere_samples

        s = sphere_samples(self.N, 720) if self.N == 2 else np.array([[1.0], [-1.0]])
        pts = np.concatenate([s, 0.5 * s])
        vals = self(pts)
        d = np.abs(vals[:, None] - vals[None, :])
        dist = np.linalg.norm(pts[:, None] - pts[None, :], axis=-1)
        mask = dist > 1e-9
        return float(np.max(d[mask] / dist[mask]))

    def describe(self):
        if self.kind == "abs":
            return f"abs({self.slope!r})"
        if self.kind == "maxaffine":
            return "maxaffine(" + ";".join(",".join(repr(v) for v in row) for row in self.slopes) + ")"
        return f"radial({self.label})"

    def __repr__(self):
        return f"ConeSpec({self.describe()}, N={self.N})"


def make_cone_field(cone, grid):
    if cone.N != grid.N:
        raise UsageError(f"cone dimension {cone.N} does not match grid N={grid.N}")
    return GraphField(grid, cone(grid.points()), 0.0)


def cone_grid(cone, N, h, half_width):
    return GraphGrid.centered(N, h, half_width, ConeExtension(cone))


def _center_value(field):
    return float(field.sample(np.zeros(field.grid.N))[()])


def scaling_check(cone, t1, t2, phi, psi, h=0.01, half_width=32.0, cfl_factor=0.25,
                  rel_tol=0.02, profile_tol=None, trajectory=None):
    """Compare u(0, t2)/u(0, t1) with sqrt(t2/t1) for the flow from a cone.

    Also reports the full-profile deviation
    sup_{|x|<=1} |u(x, t2) - sqrt(t2/t1) u(x sqrt(t1/t2), t1)|. ``trajectory``
    may supply a precomputed run with snapshots at t1 and t2.
    """
    if not (0 < t1 <= t2):
        raise UsageError(f"need 0 < t1 <= t2, got t1={t1}, t2={t2}")
    N = cone.N
    rep = ExperimentReport(
        "scaling_check",
        config=dict(cone=cone.describe(), N=N, t1=t1, t2=t2, h=h, half_width=half_width,
                    cfl_factor=cfl_factor, rel_tol=rel_tol, phi=repr(phi), psi=repr(psi)),
    )
    r_exact = math.sqrt(t2 / t1)
    if t1 == t2:
        rep.flag("degenerate", 1)
        rep.add("ratio_error", 0.0, rel_tol)
        rep.data.update(r_measured=1.0, r_exact=1.0)
        return rep
    required = 8 * math.sqrt(t2 * psi.psi_max)
    if half_width < required and trajectory is None:
        raise ConfigError(
            f"half-width {half_width} below boundary-influence bound 8*sqrt(t2*psi_max)={required:.4g}"
        )
    if trajectory is None:
        grid = cone_grid(cone, N, h, half_width)
        params = FlowParams(T=t2, cfl_factor=cfl_factor, snapshot_times=(t1,),
                            stop_at_stationary=False)
        trajectory = evolve(make_cone_field(cone, grid), params, phi, psi, record=False)
    u1, u2 = trajectory.snapshot_at(t1), trajectory.snapshot_at(t2)
    a, b = _center_value(u1), _center_value(u2)
    rep.data.update(u_t1=a, u_t2=b, r_exact=r_exact, trajectory=trajectory)
    if cone.is_flat or abs(a) < 1e-14:
        rep.flag("degenerate", 1)
        rep.add("max_abs_u0", max(abs(a), abs(b)), 1e-12)
        rep.data["r_measured"] = math.nan
        return rep
    rep.flag("degenerate", 0)
    r = b / a
    rep.data["r_measured"] = r
    rep.add("ratio_error", abs(r - r_exact) / r_exact, rel_tol)
    pts = _ball_points(u2.grid, 1.0)
    pred = r_exact * u1.sample(pts / r_exact)
    dev = float(np.max(np.abs(u2.sample(pts) - pred)))
    rep.data["profile_deviation"] = dev
    if profile_tol is None:
        rep.flag("profile_deviation", dev)
    else:
        rep.add("profile_deviation", dev, profile_tol)
    return rep


def _ball_points(grid, radius):
    pts = grid.points().reshape(-1, grid.N)
    return pts[np.linalg.norm(pts, axis=1) <= radius + 1e-12]


@dataclass
class ExpanderProfile:
    """Stationary rescaled profile; solves c (p.nu) = -psi H_phi with c = 1."""

    field: GraphField
    residual: float
    c: float = 1.0
    history: list = field(default_factory=list)
    trajectory: object = None

    def save(self, path):
        from .io import write_snapshot

        write_snapshot(path, self.field, extra={"c": self.c, "residual": self.residual})


def compute_expander(cone, params, phi, psi, grid, record=False):
    """Long-time limit of the rescaled flow started from the cone itself.

    Runs until sup|w_tau| < ``params.tol_stat``; ``params.T`` caps the rescaled
    time. Raises :class:`ConvergenceError` if the cap is reached first.
    """
    if not isinstance(grid.boundary, ConeExtension):
        raise UsageError("compute_expander needs a ConeExtension boundary")
    w0 = make_cone_field(cone, grid)
    p = FlowParams(T=params.T, cfl_factor=params.cfl_factor, tol_stat=params.tol_stat,
                   snapshot_every=params.snapshot_every, snapshot_dt=params.snapshot_dt,
                   stop_at_stationary=True, max_steps=params.max_steps)
    traj = evolve_rescaled(w0, p, phi, psi, record=True)
    history = list(traj.records["sup_speed"])
    residual = history[-1]
    if not traj.stationary:
        raise ConvergenceError(
            f"rescaled flow not stationary by tau={traj.final.time:.4g}: residual {residual:.3e}",
            history=history[:: max(1, len(history) // 1000)],
        )
    return ExpanderProfile(traj.final, residual, 1.0, history[:: max(1, len(history) // 1000)],
                           traj if record else None)


def expander_fixed_point_check(profile, phi, psi, steps=100, cfl_factor=0.25):
    """Largest sup|w_tau| over ``steps`` further rescaled steps from the profile."""
    f = profile.field if isinstance(profile, ExpanderProfile) else profile
    start = f.copy(time=0.0)
    params = FlowParams(T=1e6, cfl_factor=cfl_factor, stop_at_stationary=False, max_steps=steps)
    traj = evolve_rescaled(start, params, phi, psi, record=True)
    return float(np.max(traj.records["sup_speed"]))


def _ring_points(N, rho, n=64):
    if N == 1:
        return np.array([[-rho], [rho]])
    th = 2 * np.pi * np.arange(n) / n
    return rho * np.stack([np.cos(th), np.sin(th)], axis=-1)


def expander_far_field(profile, cone, rings=None, slack=None):
    """Distance d(rho) = max_{|y|=rho} |profile - cone| on nested rings.

    Passes when d is nonincreasing over the outer half of the domain, up to
    ``slack`` (default 10 x residual, the profile's own accuracy).
    """
    f = profile.field if isinstance(profile, ExpanderProfile) else profile
    hw = f.grid.half_width()
    if rings is None:
        rings = np.linspace(0.5 * hw, hw, 5)
    rings = np.asarray(rings, float)
    if slack is None:
        res = profile.residual if isinstance(profile, ExpanderProfile) else 0.0
        slack = 10 * res + 1e-14
    d = np.array([float(np.max(np.abs(f.sample(_ring_points(f.grid.N, r)) - cone(_ring_points(f.grid.N, r)))))
                  for r in rings])
    rep = ExperimentReport("expander_far_field",
                           config=dict(cone=cone.describe(), rings=rings.tolist(), slack=slack))
    rep.data.update(rings=rings, distances=d)
    outer = rings >= 0.5 * hw - 1e-12
    dd = d[outer]
    rise = float(np.max(np.diff(dd))) if dd.size > 1 else 0.0
    rep.add("max_increase_outer", rise, slack)
    below = float(np.max(cone(f.grid.points()) - f.values))
    rep.data["max_cone_minus_profile"] = below
    return rep


def backward_lambda(c, t):
    return math.sqrt(2 * c * (t - 1) + 1)


def backward_extend(profile, c, t, grid=None):
    """u(x, t) = lambda(t) u1(x / lambda(t)) with lambda(t) = sqrt(2c(t-1) + 1).

    Valid for t > t0 = 1 - 1/(2c); outside the profile's grid the values come
    from its boundary policy (cone plus edge offset for expanders).
    """
    f = profile.field if isinstance(profile, ExpanderProfile) else profile
    if not c > 0:
        raise DomainError(f"expansion constant must be positive, got {c}")
    t0 = 1 - 1 / (2 * c)
    if t <= t0:
        raise DomainError(f"t={t} is not beyond the backward limit t0={t0}")
    lam = backward_lambda(c, t)
    grid = f.grid if grid is None else grid
    x = grid.points()
    vals = lam * f.sample(x / lam)
    return GraphField(grid, vals.reshape(grid.shape), t)


def recovered_cone(profile, lam=1e-3):
    """Cone lam * u1(x / lam), tabulated on the unit sphere."""
    f = profile.field if isinstance(profile, ExpanderProfile) else profile

    def g(unit):
        return lam * f.sample(unit / lam)

    return ConeSpec.radial(g, f.grid.N, label=f"recovered(lam={lam:g})")
