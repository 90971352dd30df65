"""Explicit time integration of the graphical flow and of its rescaled form.

Physical flow:  u_t = -psi(-grad u, 1) * L[u]
Rescaled flow:  w_tau = -w + y . grad w - psi(-grad w, 1) * L[w]

where L is :func:`~anisoflow.discretization.curvature_operator`. The rescaled
variables are tau = log(2t + 1)/2 and w(y, tau) = e^{-tau} u(y e^tau, t).
"""

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .discretization import (
    GraphField,
    GraphGrid,
    _face_components,
    _face_difference,
    _interior_faces,
    _nodal_components,
)
from .errors import DomainError, NumericalFailure, UsageError

log = logging.getLogger(__name__)

__all__ = [
    "FlowParams",
    "Trajectory",
    "cfl_dt",
    "step_explicit",
    "evolve",
    "evolve_rescaled",
    "evolve_lockstep",
    "rescale_transform",
    "rescaled_time",
    "physical_time",
]

RECORD_COLUMNS = ("step", "t", "dt", "sup_speed", "lipschitz", "area", "dissipation")
LIPSCHITZ_SLACK = 1e-6


@dataclass
class FlowParams:
    """Integration controls.

    ``T`` is the absolute end time (rescaled time for the rescaled flow).
    Snapshots are taken every ``snapshot_every`` steps, every ``snapshot_dt``
    units of time, or at the explicit ``snapshot_times``; the step size is
    clipped so that time-based snapshots are hit exactly.
    """

    T: float
    cfl_factor: float = 0.25
    snapshot_every: int = None
    snapshot_dt: float = None
    snapshot_times: tuple = None
    tol_stat: float = 1e-8
    stop_at_stationary: bool = True
    max_steps: int = 50_000_000

    def __post_init__(self):
        if not 0 < self.cfl_factor <= 0.5:
            raise UsageError(f"cfl_factor must lie in (0, 0.5], got {self.cfl_factor}")
        if not self.T > 0:
            raise UsageError(f"end time must be positive, got {self.T}")
        if self.snapshot_dt is not None and not self.snapshot_dt > 0:
            raise UsageError("snapshot_dt must be positive")
        if self.snapshot_every is not None and self.snapshot_every < 1:
            raise UsageError("snapshot_every must be at least 1")


@dataclass
class Trajectory:
    snapshots: list
    records: dict
    rescaled: bool = False
    stationary: bool = False
    lipschitz_flag: bool = False
    meta: dict = field(default_factory=dict)

    @property
    def times(self):
        return np.array([s.time for s in self.snapshots])

    @property
    def final(self):
        return self.snapshots[-1]

    @property
    def initial(self):
        return self.snapshots[0]

    def snapshot_at(self, t, rtol=1e-9):
        for s in self.snapshots:
            if abs(s.time - t) <= rtol * max(1.0, abs(t)):
                return s
        raise KeyError(f"no snapshot at t={t}")

    def to_csv(self, path):
        time_name = "tau" if self.rescaled else "t"
        cols = [c if c != "t" else time_name for c in RECORD_COLUMNS]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(cols)
            n = len(self.records["step"])
            for i in range(n):
                row = [int(self.records["step"][i])]
                row += [format(float(self.records[c][i]), ".17g") for c in RECORD_COLUMNS[1:]]
                w.writerow(row)


# --------------------------------------------------------------------------
# single-step machinery


class _State:
    """Everything derived from one field that a step or a record needs."""

    __slots__ = ("speed", "dt_cfl", "area", "psi_nodal", "lam", "psi_loc", "lip")

    def __init__(self, u, phi, psi, rescaled=False, y=None, need_area=True):
        grid = u.grid
        N, h = grid.N, grid.h
        U = grid.boundary.pad(u.values, grid, u.time)
        L = 0.0
        lam = 0.0
        psi_loc = 0.0
        area = 0.0
        lip = 0.0
        shared = _same_model(phi, psi.model)
        for k, g in enumerate(_face_components(U, h, N)):
            F, lam_k, val = phi.face_terms(g, k, need_value=need_area or shared)
            L = L + _face_difference(F, k) * (1.0 / h)
            lam = max(lam, float(np.max(lam_k)))
            psi_face = val if shared else psi.value_lifted(g)
            psi_loc = max(psi_loc, float(np.max(psi_face)))
            normal = _interior_faces(g[k], k, grid)
            if normal.size:
                lip = max(lip, float(np.max(np.abs(normal))))
            if need_area:
                area += float(np.sum(_interior_faces(val, k, grid)))
        self.area = area * h**N / N if need_area else math.nan
        self.lip = lip
        G = _nodal_components(U, h, N)
        if N == 1:
            # psi(-g,1) dPhi/dg is the derivative of a potential B, so the speed
            # (B(g+) - B(g-))/h is monotone in the neighbours; it equals psi at a
            # Phi-weighted mean of the two face slopes times -L
            B = mobility_potential(phi, psi, g[0])
            speed = (B[1:] - B[:-1]) * (1.0 / h)
            dPhi = -L * h
            safe = np.abs(dPhi) > 1e-13
            self.psi_nodal = np.where(safe, speed * h / np.where(safe, dPhi, 1.0),
                                      psi.value_lifted(G))
        else:
            self.psi_nodal = psi.value_lifted(G)
            speed = -self.psi_nodal * L
        if rescaled:
            speed = speed - u.values + _upwind_advection(U, y, h, N)
        self.speed = speed
        self.lam, self.psi_loc = lam, psi_loc
        denom = N * psi_loc * lam
        if N == 1:
            # monotonicity needs B' = psi phi_xx bounded on the hull of the face
            # slopes, since states between two fields take any slope in it
            denom = _hull_rate(phi, psi, g[0])
        self.dt_cfl = math.inf if denom == 0 else h * h / denom


def _hull_rate(phi, psi, g, n=33):
    lo, hi = float(np.min(g)), float(np.max(g))
    if _same_model(phi, psi.model) and type(phi).__name__ == "Euclidean":
        # B' = 1/(1+s^2)
        m = 0.0 if lo <= 0 <= hi else min(abs(lo), abs(hi))
        return 1.0 / (1.0 + m * m)
    s = np.concatenate([np.linspace(lo, hi, n), np.ravel(g), [0.0] if lo < 0 < hi else []])
    P = np.stack([-s, np.ones_like(s)], axis=-1)
    return float(np.max(psi.value_unchecked(P) * phi.xblock_max_eig(P)))


def _rescaled_dt(c, dt_cfl, grid):
    """Step for the rescaled flow: diffusion, upwind advection and the -w
    term share one monotonicity budget."""
    adv = sum(float(np.max(np.abs(grid.points()[..., k]))) for k in range(grid.N)) / grid.h
    rate = (2.0 / dt_cfl if dt_cfl > 0 else math.inf) + adv + 1.0
    return 2.0 * c / rate


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(16)
_GL_NODES = 0.5 * (_GL_NODES + 1.0)
_GL_WEIGHTS = 0.5 * _GL_WEIGHTS


def mobility_potential(phi, psi, g):
    """B(g) = int_0^g psi(-s, 1) phi_xx(-s, 1) ds for 1-D slopes g.

    Closed form arctan(g) for Euclidean phi and psi; 16-point Gauss-Legendre
    otherwise.
    """
    if _same_model(phi, psi.model) and type(phi).__name__ == "Euclidean":
        return np.arctan(g)
    s = g[..., None] * _GL_NODES
    P = np.empty(s.shape + (2,))
    P[..., 0] = -s
    P[..., 1] = 1.0
    f = psi.value_unchecked(P) * phi.xblock_max_eig(P)
    return g * (f @ _GL_WEIGHTS)


def _same_model(a, b):
    return a is b or (type(a) is type(b) and type(a).__name__ == "Euclidean" and a.dim == b.dim)


def _advection_weights(grid):
    """Per axis, (max(y_k, 0)/h, min(y_k, 0)/h) for the upwind differences."""
    y = grid.points()
    return [
        (np.maximum(y[..., k], 0.0) / grid.h, np.minimum(y[..., k], 0.0) / grid.h)
        for k in range(grid.N)
    ]


def _upwind_advection(U, weights, h, N):
    """y . grad w with one-sided differences taken from the side y points to."""
    if N == 1:
        (wp, wm), = weights
        c = U[1:-1]
        return wp * (U[2:] - c) + wm * (c - U[:-2])
    c = U[1:-1, 1:-1]
    (xp, xm), (yp, ym) = weights
    return (xp * (U[2:, 1:-1] - c) + xm * (c - U[:-2, 1:-1])
            + yp * (U[1:-1, 2:] - c) + ym * (c - U[1:-1, :-2]))


def _check_models(grid, phi, psi):
    if phi.dim != grid.N + 1 or psi.dim != grid.N + 1:
        raise UsageError(
            f"anisotropy/mobility dimension ({phi.dim}, {psi.dim}) does not match grid N={grid.N}"
        )


def cfl_dt(u, phi, psi, c_cfl=0.25):
    """Stable explicit step c * h^2 / (N * rate).

    In N=2 the rate is max psi(-g,1) times the largest eigenvalue of the x-block
    of D^2 phi over the faces; in N=1 it is max psi phi_xx over the hull of the
    face slopes, which keeps the potential-form update monotone for c <= 1/2.
    """
    _check_models(u.grid, phi, psi)
    st = _State(u, phi, psi, need_area=False)
    return c_cfl * st.dt_cfl


def step_explicit(u, dt, phi, psi, c_max=0.5):
    """One forward Euler step of the physical flow.

    ``dt`` may not exceed the stability bound with the largest admissible CFL
    factor (0.5).
    """
    _check_models(u.grid, phi, psi)
    st = _State(u, phi, psi, need_area=False)
    limit = c_max * st.dt_cfl
    if dt > limit * (1 + 1e-12):
        raise UsageError(f"dt={dt:.3e} exceeds the CFL limit {limit:.3e}")
    out = u.values + dt * st.speed
    if not np.all(np.isfinite(out)):
        raise NumericalFailure("non-finite values after step", step=0)
    return GraphField(u.grid, out, u.time + dt)


def rescaled_step(w, dt, phi, psi, c_max=0.5):
    _check_models(w.grid, phi, psi)
    st = _State(w, phi, psi, rescaled=True, y=_advection_weights(w.grid), need_area=False)
    limit = _rescaled_dt(c_max, st.dt_cfl, w.grid)
    if dt > limit * (1 + 1e-12):
        raise UsageError(f"dt={dt:.3e} exceeds the CFL limit {limit:.3e}")
    return GraphField(w.grid, w.values + dt * st.speed, w.time + dt)


# --------------------------------------------------------------------------
# time loop


class _SnapshotClock:
    def __init__(self, params, t0):
        self.every = params.snapshot_every
        times = []
        if params.snapshot_dt is not None:
            k = 1
            while t0 + k * params.snapshot_dt < params.T * (1 - 1e-14):
                times.append(t0 + k * params.snapshot_dt)
                k += 1
        if params.snapshot_times is not None:
            times += [float(s) for s in params.snapshot_times if t0 < s < params.T]
        self.times = sorted(set(times))
        self.idx = 0

    def next_time(self):
        return self.times[self.idx] if self.idx < len(self.times) else math.inf

    def due(self, t, step):
        hit = False
        while self.idx < len(self.times) and abs(t - self.times[self.idx]) <= 1e-12 * max(
            1.0, abs(t)
        ):
            self.idx += 1
            hit = True
        if self.every is not None and step % self.every == 0:
            hit = True
        return hit


def _run(fields, params, phi, psi, rescaled=False, record=True):
    grid = fields[0].grid
    for f in fields:
        if not f.grid.same_as(grid):
            raise UsageError("lockstep evolution needs identical grids")
        if not f.finite:
            raise NumericalFailure("initial data is not finite", step=0)
    _check_models(grid, phi, psi)
    N, h = grid.N, grid.h
    cell = h**N
    y = _advection_weights(grid) if rescaled else None

    us = [f.copy() for f in fields]
    t = fields[0].time
    for f in us:
        f.time = t
    clock = _SnapshotClock(params, t)
    snaps = [[f.copy()] for f in us]
    recs = [{c: [] for c in RECORD_COLUMNS} for _ in us]
    lip0 = [f.lipschitz for f in us]
    flagged = [False] * len(us)
    diss = [0.0] * len(us)
    stationary = False
    step = 0
    eps_t = 1e-12 * max(1.0, abs(params.T))

    while True:
        states = [_State(f, phi, psi, rescaled, y, need_area=record) for f in us]
        sup = [float(np.max(np.abs(s.speed))) for s in states]
        if params.stop_at_stationary and max(sup) < params.tol_stat:
            stationary = True
        done = stationary or t >= params.T - eps_t or step >= params.max_steps
        dt = 0.0
        if not done:
            dt_cfl = min(s.dt_cfl for s in states)
            if rescaled:
                dt = _rescaled_dt(params.cfl_factor, dt_cfl, grid)
            else:
                dt = params.cfl_factor * dt_cfl
            dt = min(dt, params.T - t, clock.next_time() - t)
            if not dt > 0 or not math.isfinite(dt):
                dt = params.T - t
        for i, (f, s) in enumerate(zip(us, states)):
            lip = s.lip
            if record:
                r = recs[i]
                r["step"].append(step)
                r["t"].append(t)
                r["dt"].append(dt)
                r["sup_speed"].append(sup[i])
                r["lipschitz"].append(lip)
                r["area"].append(s.area)
                r["dissipation"].append(diss[i])
            if lip > lip0[i] + LIPSCHITZ_SLACK and not flagged[i]:
                flagged[i] = True
                log.warning(
                    "discrete Lipschitz constant grew from %.9g to %.9g at step %d",
                    lip0[i], lip, step,
                )
        if done:
            break
        for i, (f, s) in enumerate(zip(us, states)):
            new = f.values + dt * s.speed
            if not np.all(np.isfinite(new)):
                raise NumericalFailure(
                    f"non-finite values at step {step + 1} (t={t:.6g}, dt={dt:.3e})",
                    step=step + 1,
                )
            if record:
                diss[i] += dt * cell * float(np.sum(s.speed * s.speed / s.psi_nodal))
            f.values = new
        step += 1
        t_next = t + dt
        if abs(t_next - params.T) <= eps_t:
            t_next = params.T
        t = t_next
        for f in us:
            f.time = t
        if clock.due(t, step):
            for i, f in enumerate(us):
                snaps[i].append(f.copy())

    trajs = []
    for i, f in enumerate(us):
        if snaps[i][-1].time != f.time:
            snaps[i].append(f.copy())
        records = {c: np.asarray(v) for c, v in recs[i].items()}
        trajs.append(
            Trajectory(
                snaps[i], records, rescaled=rescaled, stationary=stationary,
                lipschitz_flag=flagged[i],
                meta={"steps": step, "lipschitz0": lip0[i]},
            )
        )
    return trajs


def evolve(u0, params, phi, psi, record=True):
    """Integrate the physical flow from ``u0`` to ``params.T`` (or stationarity)."""
    return _run([u0], params, phi, psi, rescaled=False, record=record)[0]


def evolve_lockstep(fields, params, phi, psi, rescaled=False, record=True):
    """Advance several fields with a common step sequence (minimum CFL step).

    Used for discrete comparison checks, where ordering must hold step by step.
    """
    return _run(list(fields), params, phi, psi, rescaled=rescaled, record=record)


def evolve_rescaled(w0, params, phi, psi, record=True):
    """Integrate the rescaled flow; advection is first-order upwind and the
    step is ``2 cfl_factor / (2/dt_diff + sum_k max|y_k|/h + 1)``."""
    from .discretization import ConeExtension, DirichletExact

    if not isinstance(w0.grid.boundary, (ConeExtension, DirichletExact)):
        raise UsageError("the rescaled flow needs a cone-extension or exact Dirichlet boundary")
    return _run([w0], params, phi, psi, rescaled=True, record=record)[0]


# --------------------------------------------------------------------------
# rescaling


def rescaled_time(t):
    return 0.5 * math.log(2 * t + 1)


def physical_time(tau):
    return 0.5 * (math.exp(2 * tau) - 1)


def rescale_transform(u, target=None):
    """Map a physical snapshot at time t to rescaled time tau = log(2t+1)/2.

    w(y) = e^{-tau} u(y e^tau) by multilinear interpolation. The default target
    is the largest centred grid with the same spacing whose scaled image stays
    inside the physical grid.
    """
    t = u.time
    if t < 0:
        raise DomainError("rescaling needs t >= 0")
    tau = rescaled_time(t)
    s = math.exp(tau)
    g = u.grid
    if target is None:
        hw = g.half_width() / s
        n = int(math.floor(hw / g.h + 1e-9))
        target = GraphGrid(g.N, g.h, (2 * n + 1,) * g.N, (-n * g.h,) * g.N, g.boundary)
    y = target.points()
    x = y * s
    lo = np.asarray(g.origin)
    hi = lo + (np.asarray(g.shape) - 1) * g.h
    tol = 1e-9 * g.h
    if np.any(x < lo - tol) or np.any(x > hi + tol):
        raise DomainError(
            f"rescaled grid scaled by e^tau={s:.6g} leaves the physical domain"
        )
    vals = u.sample(np.clip(x, lo, hi)) / s
    return GraphField(target, vals.reshape(target.shape), tau)
