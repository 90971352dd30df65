"""Verification experiments: stability of cones and hyperplanes, exact-solution
oracles, and the suite that runs them all.

Each runner returns an :class:`~anisoflow.reports.ExperimentReport` whose
configuration echo is enough to rerun it.
"""

import math
import os
from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .anisotropy import Euclidean, MobilityModel
from .barriers import PeriodicBarrierSpec, comparison_check, periodic_barrier_profile
from .discretization import (
    ConeExtension,
    DirichletExact,
    GraphField,
    GraphGrid,
    curvature_operator,
)
from .errors import ConfigError, ConvergenceError, UsageError
from .flow import FlowParams, evolve, evolve_lockstep
from .reports import ExperimentReport
from .selfsimilar import (
    ConeSpec,
    compute_expander,
    cone_grid,
    expander_fixed_point_check,
    make_cone_field,
    scaling_check,
)

__all__ = [
    "PerturbationSpec",
    "ExperimentReport",
    "exp_rescaled_convergence",
    "exp_hyperplane_stability",
    "exp_meanconvex_stability",
    "exp_expander_crossval",
    "oracle_grim_reaper",
    "oracle_expander_ode",
    "grim_reaper_exact",
    "suite",
]

MONOTONE_SLACK = 1e-12


def bump(z):
    """cos^2 bump on the unit ball: C^{1,1}, 1 at the centre, 0 for |z| >= 1."""
    r = np.sqrt(np.sum(np.asarray(z, float) ** 2, axis=-1))
    return np.where(r < 1, np.cos(0.5 * np.pi * np.minimum(r, 1.0)) ** 2, 0.0)


@dataclass(frozen=True)
class PerturbationSpec:
    """Additive perturbation of initial data.

    kinds:
      ``sublinear``  K (1+|x|)^(1-delta) bump(2x/width)
      ``vanishing``  amplitude bump(2x/width)
      ``offset``     the constant m

    ``width`` is the diameter of the bump's support.
    """

    kind: str
    K: float = 0.0
    delta: float = 0.5
    width: float = 1.0
    amplitude: float = 0.0
    m: float = 0.0

    def __post_init__(self):
        if self.kind not in ("sublinear", "vanishing", "offset"):
            raise UsageError(f"unknown perturbation kind {self.kind!r}")
        if self.kind == "sublinear":
            if self.K < 0:
                raise UsageError(f"K must be nonnegative, got {self.K}")
            if not 0 < self.delta < 1:
                raise UsageError("delta out of (0,1)")
        if self.kind in ("sublinear", "vanishing") and not self.width > 0:
            raise UsageError(f"bump width must be positive, got {self.width}")

    @classmethod
    def sublinear(cls, K, delta, width):
        return cls("sublinear", K=float(K), delta=float(delta), width=float(width))

    @classmethod
    def vanishing(cls, amplitude, width):
        return cls("vanishing", amplitude=float(amplitude), width=float(width))

    @classmethod
    def offset(cls, m):
        return cls("offset", m=float(m))

    def __call__(self, x):
        x = np.asarray(x, float)
        if self.kind == "offset":
            return np.full(x.shape[:-1], self.m)
        b = bump(2 * x / self.width)
        if self.kind == "vanishing":
            return self.amplitude * b
        r = np.sqrt(np.sum(x * x, axis=-1))
        return self.K * (1 + r) ** (1 - self.delta) * b

    @property
    def is_zero(self):
        if self.kind == "offset":
            return self.m == 0
        if self.kind == "vanishing":
            return self.amplitude == 0
        return self.K == 0

    def describe(self):
        if self.kind == "offset":
            return f"offset(m={self.m!r})"
        if self.kind == "vanishing":
            return f"vanishing(amplitude={self.amplitude!r}, width={self.width!r})"
        return f"sublinear(K={self.K!r}, delta={self.delta!r}, width={self.width!r})"


def _defaults(phi, psi, N):
    phi = Euclidean(N + 1) if phi is None else phi
    psi = MobilityModel.euclidean(N + 1) if psi is None else MobilityModel(psi)
    return phi, psi


def _ball_max(field_values, grid, radius):
    r = np.sqrt(np.sum(grid.points() ** 2, axis=-1))
    return float(np.max(np.abs(field_values[r <= radius + 1e-12])))


def _max_rise(seq):
    seq = np.asarray(seq, float)
    return float(np.max(np.diff(seq))) if seq.size > 1 else 0.0


# --------------------------------------------------------------------------
# rescaled convergence to the expander


def exp_rescaled_convergence(cone, perturbation, phi=None, psi=None, h=0.02, half_width=8.0,
                             tau_end=14.0, threshold=1e-2, tol_stat=1e-8, cfl_factor=0.25,
                             snapshot_dt=0.25, compare_expander=True, rate_tol=0.1):
    """Rescaled flows from cone + p and from the cone, advanced in lockstep.

    D(tau) = sup_{|y|<=1} |w_pert - w_cone|. Metrics: D nonincreasing over the
    second half of the run, final D below ``threshold``, the unperturbed run
    equal to the computed expander within 10 tol_stat, and for constant
    offsets the fitted exponential decay rate within ``rate_tol`` of 1.
    """
    if perturbation.kind not in ("sublinear", "offset"):
        raise UsageError("rescaled convergence needs a sublinear or offset perturbation")
    N = cone.N
    phi, psi = _defaults(phi, psi, N)
    grid = cone_grid(cone, N, h, half_width)
    rep = ExperimentReport(
        "rescaled_convergence",
        config=dict(cone=cone.describe(), perturbation=perturbation.describe(), N=N, h=h,
                    half_width=half_width, tau_end=tau_end, threshold=threshold,
                    tol_stat=tol_stat, cfl_factor=cfl_factor, snapshot_dt=snapshot_dt,
                    phi=repr(phi), psi=repr(psi)),
    )
    w_cone = make_cone_field(cone, grid)
    w_pert = w_cone + perturbation(grid.points())
    params = FlowParams(T=tau_end, cfl_factor=cfl_factor, snapshot_dt=snapshot_dt,
                        tol_stat=tol_stat, stop_at_stationary=False)
    tp, tc = evolve_lockstep([w_pert, w_cone], params, phi, psi, rescaled=True, record=True)
    taus = tc.times
    D = np.array([_ball_max(a.values - b.values, grid, 1.0)
                  for a, b in zip(tp.snapshots, tc.snapshots)])
    rep.data.update(tau=taus, D=D, trajectories=(tp, tc))
    late = taus >= 0.5 * taus[-1] - 1e-12
    rep.add("D_max_rise_last_half", _max_rise(D[late]), MONOTONE_SLACK)
    rep.add("D_final", float(D[-1]), threshold)
    if perturbation.kind == "offset" and perturbation.m != 0:
        ok = D > 1e-300
        slope = np.polyfit(taus[ok], np.log(D[ok]), 1)[0]
        rep.data["decay_rate"] = -slope
        rep.add("decay_rate_error", abs(-slope - 1.0), rate_tol)
    if compare_expander:
        profile = compute_expander(
            cone, FlowParams(T=max(4 * tau_end, 40.0), cfl_factor=cfl_factor, tol_stat=tol_stat),
            phi, psi, grid,
        )
        gap = float(np.max(np.abs(tc.final.values - profile.field.values)))
        rep.data["expander_profile"] = profile
        rep.add("cone_run_vs_expander", gap, 10 * tol_stat)
    rep.flag("lipschitz_growth", max(tp.records["lipschitz"].max() - tp.meta["lipschitz0"],
                                    tc.records["lipschitz"].max() - tc.meta["lipschitz0"]))
    return rep


# --------------------------------------------------------------------------
# hyperplane stability


def _dissipation_metrics(rep, traj, label, h, N):
    rec = traj.records
    A0 = rec["area"][0]
    drop = A0 - rec["area"]
    excess = rec["dissipation"] - drop
    slack = 5 * float(np.max(rec["dt"])) / h**2
    rel = float(np.max(rec["dissipation"] - drop * (1 + slack)))
    rep.add(f"{label}_dissipation_over_bound", rel, 1e-12)
    rep.add(f"{label}_dissipation_excess_rel", float(np.max(excess)) / A0, 0.01)
    return excess


def exp_hyperplane_stability(perturbation, phi=None, psi=None, h=0.02, period=16.0, T=20.0,
                             eps=0.1, ratio=0.1, snapshot_dt=0.05, cfl_factor=0.25,
                             check_symmetry=True):
    """Flow of a compactly supported bump on a periodic line.

    Metrics: M(t) = sup|u| nonincreasing, M(T) <= ratio M(0), the matched
    periodic barrier dominates u at every snapshot, and the discrete
    dissipation stays below the area drop up to the explicit-step slack.
    """
    if perturbation.kind != "vanishing":
        raise UsageError("hyperplane stability needs a vanishing bump")
    if period < 8 * perturbation.width * (1 - 1e-12):
        raise ConfigError(f"period {period} is below 8 x bump width {perturbation.width}")
    phi, psi = _defaults(phi, psi, 1)
    grid = GraphGrid.periodic(1, h, period)
    rep = ExperimentReport(
        "hyperplane_stability",
        config=dict(perturbation=perturbation.describe(), h=h, period=period, T=T, eps=eps,
                    ratio=ratio, snapshot_dt=snapshot_dt, cfl_factor=cfl_factor,
                    phi=repr(phi), psi=repr(psi)),
    )
    x = grid.points()
    u0 = GraphField(grid, perturbation(x), 0.0)
    M0 = float(np.max(np.abs(u0.values)))
    params = FlowParams(T=T, cfl_factor=cfl_factor, snapshot_dt=snapshot_dt,
                        stop_at_stationary=False)
    if M0 == 0:
        traj = evolve(u0, params, phi, psi)
        M = np.array([np.max(np.abs(s.values)) for s in traj.snapshots])
        rep.add("M_max_rise", _max_rise(M), MONOTONE_SLACK)
        rep.add("M_final", float(M[-1]), 0.0)
        rep.data.update(t=traj.times, M=M, trajectory=traj)
        return rep
    spec = PeriodicBarrierSpec(R=period / 8, M=M0, eps=eps)
    f0 = periodic_barrier_profile(spec, grid)
    symmetric = check_symmetry and phi.is_even_in_x() and psi.model.is_even_in_x()
    fields = [u0, f0] + ([GraphField(grid, -u0.values, 0.0)] if symmetric else [])
    trajs = evolve_lockstep(fields, params, phi, psi, record=True)
    tu, tf = trajs[0], trajs[1]
    t = tu.times
    M = np.array([np.max(np.abs(s.values)) for s in tu.snapshots])
    rep.data.update(t=t, M=M, trajectories=(tu, tf), barrier=spec)
    rep.add("M_max_rise", _max_rise(M), MONOTONE_SLACK)
    rep.add("M_ratio", float(M[-1] / M0), ratio, relation="<")
    if np.all(u0.values <= f0.values):
        cmp = comparison_check(tu, tf)
        rep.add("barrier_violation", cmp.metric("max_violation").value, 1e-10)
    else:
        rep.flag("barrier_skipped", 1)
    barrier_dev = np.array([np.max(np.abs(s.values - spec.midlevel)) for s in tf.snapshots])
    rep.data["barrier_deviation"] = barrier_dev
    _dissipation_metrics(rep, tu, "bump", h, 1)
    _dissipation_metrics(rep, tf, "barrier", h, 1)
    pos = (t > 0) & (M > 0)
    if np.count_nonzero(pos) > 2:
        rep.flag("empirical_log_decay_rate",
                 -float(np.polyfit(np.log(t[pos]), np.log(M[pos]), 1)[0]))
    if symmetric:
        Mm = np.array([np.max(np.abs(s.values)) for s in trajs[2].snapshots])
        rep.add("sign_flip_M_difference", float(np.max(np.abs(Mm - M))), MONOTONE_SLACK)
    elif check_symmetry:
        rep.flag("sign_flip_skipped", 1)
    rep.flag("lipschitz_growth", float(tu.records["lipschitz"].max() - tu.meta["lipschitz0"]))
    return rep


# --------------------------------------------------------------------------
# mean-convex cone stability


def meanconvex_grid(cone, h=0.05, n=256):
    """n^N grid with a node at the origin: nodes -n/2 h .. (n/2 - 1) h."""
    N = cone.N
    return GraphGrid(N, h, (n,) * N, (-(n // 2) * h,) * N, ConeExtension(cone))


def exp_meanconvex_stability(cone, perturbation, phi=None, psi=None, h=0.05, n=256, T=4.0,
                             threshold=2e-2, snapshot_dt=0.25, cfl_factor=0.25,
                             apex_radius=0.5, scaling_tol=0.02, scaling_from=1.0):
    """Flow of cone + compactly supported bump versus the flow of the cone, N=2.

    Metrics: (a) the discrete curvature of the cone is strictly negative away
    from the apex; (b) the cone's flow stays above the cone up to 5 h^2 and
    u(0,t)/sqrt(t) is constant within ``scaling_tol`` for t >= ``scaling_from``;
    (c) the local gap sup_{|x|<=1}|u - u_cone| is nonincreasing over the second
    half and below ``threshold`` at T.
    """
    if cone.N != 2:
        raise UsageError("the mean-convex experiment is two-dimensional")
    if perturbation.kind != "vanishing":
        raise UsageError("mean-convex stability needs a vanishing bump")
    phi, psi = _defaults(phi, psi, 2)
    grid = meanconvex_grid(cone, h, n)
    rep = ExperimentReport(
        "meanconvex_stability",
        config=dict(cone=cone.describe(), perturbation=perturbation.describe(), h=h, n=n, T=T,
                    threshold=threshold, snapshot_dt=snapshot_dt, cfl_factor=cfl_factor,
                    apex_radius=apex_radius, phi=repr(phi), psi=repr(psi)),
    )
    ubar = make_cone_field(cone, grid)
    # (a) precondition away from the apex and the far boundary layer
    L = curvature_operator(ubar, phi).values
    r = np.sqrt(np.sum(grid.points() ** 2, axis=-1))
    ring = (r >= apex_radius) & (r <= grid.half_width() - 2 * h)
    worst = float(L[ring].max())
    rep.add("cone_curvature_max", worst, 0.0, relation="<")
    if worst >= 0:
        raise ConfigError(f"cone is not mean convex for {phi!r}: curvature reaches {worst:.3e}")
    i1 = grid.index_of([1.0, 0.0])
    rep.data["curvature_at_r1"] = float(L[i1])
    rep.flag("curvature_at_r1", float(L[i1]))

    u0 = ubar + perturbation(grid.points())
    params = FlowParams(T=T, cfl_factor=cfl_factor, snapshot_dt=snapshot_dt,
                        stop_at_stationary=False)
    tp, tc = evolve_lockstep([u0, ubar], params, phi, psi, record=True)
    t = tc.times
    # (b) discrete analogue of the cone flow lying above the cone, and sqrt(t) scaling
    below = max(float(np.max(ubar.values - s.values)) for s in tc.snapshots)
    rep.add("cone_flow_below_cone", below, 5 * h * h)
    centre = grid.index_of([0.0, 0.0])
    sel = t >= scaling_from - 1e-12
    q = np.array([tc.snapshots[i].values[centre] / math.sqrt(t[i]) for i in np.flatnonzero(sel)])
    spread = float(np.max(np.abs(q / q.mean() - 1))) if q.size else 0.0
    rep.add("center_sqrt_t_spread", spread, scaling_tol)
    # (c) local gap
    gap = np.array([_ball_max(a.values - b.values, grid, 1.0)
                    for a, b in zip(tp.snapshots, tc.snapshots)])
    late = t >= 0.5 * t[-1] - 1e-12
    rep.add("gap_max_rise_last_half", _max_rise(gap[late]), MONOTONE_SLACK)
    rep.add("gap_final", float(gap[-1]), threshold)
    rep.data.update(t=t, gap=gap, center_ratio=q, trajectories=(tp, tc))
    rep.flag("lipschitz_growth", max(tp.records["lipschitz"].max() - tp.meta["lipschitz0"],
                                    tc.records["lipschitz"].max() - tc.meta["lipschitz0"]))
    return rep


# --------------------------------------------------------------------------
# oracles


def grim_reaper_exact(x, t):
    """u(x, t) = t - log cos x on |x| < pi/2; x of shape (..., 1)."""
    x = np.asarray(x, float)
    return t - np.log(np.cos(x[..., 0]))


def _grim_reaper_error(h, T, half_width, cfl_factor):
    n = int(round(half_width / h))
    grid = GraphGrid(1, h, (2 * n + 1,), (-n * h,), DirichletExact(grim_reaper_exact, "grim"))
    u0 = GraphField(grid, grim_reaper_exact(grid.points(), 0.0), 0.0)
    traj = evolve(u0, FlowParams(T=T, cfl_factor=cfl_factor, stop_at_stationary=False),
                  Euclidean(2), MobilityModel.euclidean(2))
    err = float(np.max(np.abs(traj.final.values - grim_reaper_exact(grid.points(), T))))
    return err, traj


def oracle_grim_reaper(h=0.01, T=1.0, half_width=1.2, cfl_factor=0.25, tol=1e-3,
                       min_order=1.9):
    """Evolve the grim reaper at h and 2h and compare with the closed form."""
    if half_width >= math.pi / 2:
        raise ConfigError("grim reaper domain must stay inside |x| < pi/2")
    rep = ExperimentReport(
        "grim_reaper",
        config=dict(h=h, T=T, half_width=half_width, cfl_factor=cfl_factor, tol=tol,
                    min_order=min_order),
    )
    e_fine, traj = _grim_reaper_error(h, T, half_width, cfl_factor)
    e_coarse, _ = _grim_reaper_error(2 * h, T, half_width, cfl_factor)
    order = math.log2(e_coarse / e_fine)
    rep.add("sup_error", e_fine, tol)
    rep.add("observed_order", order, min_order, relation=">=")
    rep.data.update(error_coarse=e_coarse, error_fine=e_fine, trajectory=traj)
    rep.flag("lipschitz_growth", float(traj.records["lipschitz"].max() - traj.meta["lipschitz0"]))
    return rep


def _expander_rhs(y, s):
    w, p = s
    return [p, (1 + p * p) * (w - y * p)]


def _slope_blowup(y, s):
    return 50.0 - abs(s[1])


_slope_blowup.terminal = True


def oracle_expander_ode(alpha, tol=1e-13, Y=10.0):
    """w(0) for the 1-D expander: w'' = (1 + w'^2)(w - y w'), w'(0) = 0, w'(Y) = alpha.

    The stationary rescaled equation in one dimension with Euclidean phi and
    psi, solved by shooting on w(0) with an eighth-order Runge-Kutta method.
    """
    if alpha < 0:
        raise UsageError(f"slope must be nonnegative, got {alpha}")
    if alpha == 0:
        return 0.0

    def end_slope(a):
        sol = solve_ivp(_expander_rhs, (0.0, Y), [a, 0.0], method="DOP853",
                        rtol=1e-12, atol=1e-13, events=_slope_blowup)
        return sol.y[1, -1] if sol.status == 0 else 50.0

    hi = 1.0
    while end_slope(hi) < alpha:
        hi *= 2
        if hi > 1e3:
            raise ConvergenceError(f"shooting bracket not found for alpha={alpha}")
    try:
        return brentq(lambda a: end_slope(a) - alpha, 0.0, hi, xtol=tol)
    except ValueError as exc:
        raise ConvergenceError(f"shooting failed for alpha={alpha}: {exc}") from None


def exp_expander_crossval(alphas=(0.5, 1.0), h=0.008, half_width=4.0, tol=1e-3,
                          tol_stat=1e-8, cfl_factor=0.5, extra_steps=100, tau_max=40.0):
    """compute_expander at y = 0 against the shooting oracle, plus the
    fixed-point residual of each profile over ``extra_steps`` further steps."""
    phi, psi = _defaults(None, None, 1)
    rep = ExperimentReport(
        "expander_crossval",
        config=dict(alphas=list(alphas), h=h, half_width=half_width, tol=tol,
                    tol_stat=tol_stat, cfl_factor=cfl_factor, extra_steps=extra_steps),
    )
    for a in alphas:
        cone = ConeSpec.abs(a)
        prof = compute_expander(cone, FlowParams(T=tau_max, cfl_factor=cfl_factor,
                                                 tol_stat=tol_stat),
                                phi, psi, cone_grid(cone, 1, h, half_width))
        w0 = oracle_expander_ode(a)
        u0 = prof.field.at(np.zeros(1))
        rep.data[f"profile_{a:g}"] = prof
        rep.data[f"u0_{a:g}"] = u0
        rep.data[f"oracle_{a:g}"] = w0
        rep.add(f"alpha={a:g}_center_error", abs(u0 - w0), tol)
        fp = expander_fixed_point_check(prof, phi, psi, steps=extra_steps, cfl_factor=cfl_factor)
        rep.add(f"alpha={a:g}_fixed_point_residual", fp, 10 * tol_stat)
    return rep


# --------------------------------------------------------------------------
# suite


def suite(out_dir, quick=False):
    """Run every experiment with its default configuration; write each report.

    ``quick`` coarsens grids and shortens runs for smoke testing; its reports
    are not expected to meet the default thresholds.
    """
    s = 2 if quick else 1
    runs = [
        ("grim_reaper", lambda: oracle_grim_reaper(h=0.01 * s)),
        ("scaling", lambda: scaling_check(ConeSpec.abs(1.0), 1.0, 4.0, Euclidean(2),
                                          MobilityModel.euclidean(2), h=0.01 * s)),
        ("expander", lambda: exp_expander_crossval(h=0.008 * s)),
        ("rescaled", lambda: exp_rescaled_convergence(
            ConeSpec.abs(1.0), PerturbationSpec.sublinear(1.0, 0.5, 4.0), h=0.02 * s)),
        ("hyperplane", lambda: exp_hyperplane_stability(
            PerturbationSpec.vanishing(1.0, 2.0), h=0.02 * s)),
        ("meanconvex", lambda: exp_meanconvex_stability(
            ConeSpec.abs(1.0, N=2), PerturbationSpec.vanishing(0.5, 1.0),
            h=0.05 * s, n=256 // s, T=4.0 / s)),
    ]
    reports = []
    for name, run in runs:
        rep = run()
        rep.artifacts += rep.write(os.path.join(out_dir, name))
        reports.append(rep)
    return reports
