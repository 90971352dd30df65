"""Acceptance criteria 1-11.

Each test records one status line (see conftest). Long runs are cached for
the session so the Lipschitz/Hoelder and domain-doubling criteria reuse them.
Run with ``pytest tests/test_acceptance.py -v``; about half an hour in total.
"""

import itertools
import math
import time

import numpy as np
import pytest

from anisoflow.anisotropy import Elliptic, Euclidean, MobilityModel, wulff_lower_cap
from anisoflow.barriers import PeriodicBarrierSpec, periodic_barrier_profile
from anisoflow.cli import parse_config, run_experiment
from anisoflow.discretization import GraphGrid, curvature_operator
from anisoflow.experiments import (
    PerturbationSpec,
    exp_expander_crossval,
    exp_hyperplane_stability,
    exp_meanconvex_stability,
    exp_rescaled_convergence,
    oracle_grim_reaper,
)
from anisoflow.flow import FlowParams, evolve
from anisoflow.selfsimilar import ConeSpec, cone_grid, make_cone_field, scaling_check

pytestmark = pytest.mark.slow

E2, PSI2 = Euclidean(2), MobilityModel.euclidean(2)
CONE = ConeSpec.abs(1.0)
SUBLINEAR = PerturbationSpec.sublinear(1.0, 0.5, 4.0)
OFFSET = PerturbationSpec.offset(0.3)

_cache = {}


def cached(key, fn):
    if key not in _cache:
        t0 = time.perf_counter()
        value = fn()
        _cache[key] = (value, time.perf_counter() - t0)
    return _cache[key]


# --------------------------------------------------------------------------
# shared runs


def cone_run(h, half_width):
    """Flow from alpha|x| to t = 4 with snapshots every 0.25 (Hoelder fit)."""
    def run():
        grid = cone_grid(CONE, 1, h, half_width)
        params = FlowParams(T=4.0, snapshot_dt=0.25, stop_at_stationary=False)
        return evolve(make_cone_field(CONE, grid), params, E2, PSI2)
    return cached(("cone", h, half_width), run)


def scaling(half_width):
    def run():
        traj, _ = cone_run(0.01, half_width)
        return scaling_check(CONE, 1.0, 4.0, E2, PSI2, h=0.01, half_width=half_width,
                             trajectory=traj)
    rep, dt = cached(("scaling", half_width), run)
    return rep, dt + cone_run(0.01, half_width)[1]


def grim():
    return cached("grim", lambda: oracle_grim_reaper(h=0.01))


def rescaled(perturbation, half_width=8.0):
    compare = perturbation.kind == "sublinear"
    return cached(("rescaled", perturbation.kind, half_width),
                  lambda: exp_rescaled_convergence(CONE, perturbation, h=0.02,
                                                   half_width=half_width,
                                                   compare_expander=compare))


def expander(half_width=4.0):
    return cached(("expander", half_width), lambda: exp_expander_crossval(half_width=half_width))


def hyperplane():
    return cached("hyperplane", lambda: exp_hyperplane_stability(
        PerturbationSpec.vanishing(1.0, 2.0)))


def meanconvex():
    return cached("meanconvex", lambda: exp_meanconvex_stability(
        ConeSpec.abs(1.0, N=2), PerturbationSpec.vanishing(0.5, 1.0)))


def _fails(rep):
    return [m.line() for m in rep.metrics if not m.passed]


# --------------------------------------------------------------------------
# criteria


CAP_CASES = [
    (1, Euclidean(2), 0.01), (1, Elliptic(np.diag([2.0, 1.0])), 0.01),
    (1, Elliptic(np.diag([0.5, 1.0])), 0.01),
    (2, Euclidean(3), 0.05), (2, Elliptic(np.diag([2.0, 1.5, 1.0])), 0.05),
]


def _apex_error(phi, N, R, h):
    grid = GraphGrid.centered(N, h, 0.5 * R)
    L = curvature_operator(wulff_lower_cap(phi, R, grid).field(), phi)
    return abs(L.at(np.zeros(N)) + N / R)


def test_c01_wulff_curvature_identity(criterion):
    t0 = time.perf_counter()
    worst_rel, worst_order = 0.0, math.inf
    for (N, phi, h), R in itertools.product(CAP_CASES, (1.0, 2.0)):
        e, e2 = _apex_error(phi, N, R, h), _apex_error(phi, N, R, h / 2)
        worst_rel = max(worst_rel, e / (N / R))
        worst_order = min(worst_order, math.log2(e / e2))
    dt = time.perf_counter() - t0
    ok = worst_rel <= 0.02 and worst_order >= 1.9 and dt < 10
    criterion(1, "Wulff curvature identity", ok,
              f"max rel apex error {worst_rel:.3g} <= 0.02, min order {worst_order:.3f} >= 1.9",
              dt)
    assert ok


def test_c02_grim_reaper(criterion):
    rep, dt = grim()
    err, order = rep.metric("sup_error").value, rep.metric("observed_order").value
    ok = err <= 1e-3 and order >= 1.9 and dt < 60
    criterion(2, "grim reaper", ok, f"sup error {err:.3g} <= 1e-3, order {order:.3f} >= 1.9", dt)
    assert ok, rep.summary()


def test_c03_homothety_scaling(criterion):
    rep, dt = scaling(32.0)
    r = rep.data["r_measured"]
    ok = abs(r - 2) <= 0.04 and dt < 300
    criterion(3, "homothety scaling", ok, f"u(0,4)/u(0,1) = {r:.6f} (2 +- 2%)", dt)
    assert ok, rep.summary()


@pytest.mark.parametrize("family", ["euclidean", "power"])
def test_c04_comparison(criterion, tmp_path, family):
    t0 = time.perf_counter()
    cfg = parse_config("[experiment]\nid = comparison\n", [f"anisotropy.family={family}"])
    rep = run_experiment(cfg, str(tmp_path), seed=2024)
    dt = time.perf_counter() - t0
    worst = rep.metric("max_violation").value
    _cache[("comparison", family)] = (worst, dt)
    if all(("comparison", f) in _cache for f in ("euclidean", "power")):
        w = {f: _cache[("comparison", f)] for f in ("euclidean", "power")}
        total = sum(v[1] for v in w.values())
        ok4 = all(v[0] <= 1e-10 for v in w.values()) and total < 120
        criterion(4, "discrete comparison", ok4,
                  f"100 seeded pairs each, max violation Euclidean {w['euclidean'][0]:.3g}, "
                  f"PowerNorm(4) {w['power'][0]:.3g} (<= 1e-10)", total)
    assert worst <= 1e-10 and dt < 120


def _hoelder_K(traj):
    pairs = [(s.time, float(s.values[s.grid.index_of([0.0])])) for s in traj.snapshots
             if 0.5 - 1e-12 <= s.time <= 4 + 1e-12]
    return max(abs(a[1] - b[1]) / math.sqrt(abs(a[0] - b[0]))
               for a, b in itertools.combinations(pairs, 2))


def test_c05_lipschitz_and_hoelder(criterion):
    t0 = time.perf_counter()
    runs = {
        "grim reaper": [grim()[0].data["trajectory"]],
        "cone h=0.01": [cone_run(0.01, 32.0)[0]],
        "cone h=0.02": [cone_run(0.02, 32.0)[0]],
        "rescaled": list(rescaled(SUBLINEAR)[0].data["trajectories"]),
        "rescaled offset": list(rescaled(OFFSET)[0].data["trajectories"]),
        "hyperplane": list(hyperplane()[0].data["trajectories"]),
        "mean-convex": list(meanconvex()[0].data["trajectories"]),
    }
    growth = {k: max(float(t.records["lipschitz"].max() - t.meta["lipschitz0"]) for t in v)
              for k, v in runs.items()}
    worst_run = max(growth, key=growth.get)
    K_coarse = _hoelder_K(cone_run(0.02, 32.0)[0])
    K_fine = _hoelder_K(cone_run(0.01, 32.0)[0])
    spread = abs(K_fine - K_coarse) / K_coarse
    dt = time.perf_counter() - t0
    ok = growth[worst_run] <= 1e-6 and K_fine <= 1.1 * K_coarse and spread <= 0.1
    criterion(5, "Lipschitz and Hoelder", ok,
              f"max Lipschitz growth {growth[worst_run]:.3g} ({worst_run}) <= 1e-6; "
              f"K(h=0.02) = {K_coarse:.5f}, K(h=0.01) = {K_fine:.5f}, spread {spread:.3g} <= 0.1",
              dt)
    assert ok, growth


def test_c06_energy_dissipation(criterion):
    t0 = time.perf_counter()
    h = 0.02
    spec = PeriodicBarrierSpec(R=2.0, M=1.0, eps=0.1)
    grid = GraphGrid.periodic(1, h, spec.period)
    traj = evolve(periodic_barrier_profile(spec, grid),
                  FlowParams(T=10.0, stop_at_stationary=False), E2, PSI2)
    rec = traj.records
    A0 = rec["area"][0]
    drop = A0 - rec["area"]
    slack = 5 * rec["dt"].max() / h**2
    over = float(np.max(rec["dissipation"] - drop * (1 + slack)))
    excess = float(np.max(rec["dissipation"] - drop)) / A0
    dt = time.perf_counter() - t0
    ok = over <= 1e-12 and excess <= 0.01 and dt < 60
    criterion(6, "energy dissipation", ok,
              f"max(diss - drop(1 + 5dt/h^2)) = {over:.3g} <= 0, "
              f"max excess / A0 = {excess:.3g} <= 0.01", dt)
    assert ok


def test_c07_rescaled_convergence(criterion):
    rep, dt1 = rescaled(SUBLINEAR)
    off, dt2 = rescaled(OFFSET)
    ok = rep.passed and off.passed and dt1 + dt2 < 300
    criterion(7, "rescaled convergence", ok,
              f"D rise {rep.metric('D_max_rise_last_half').value:.3g} <= 1e-12, "
              f"D final {rep.metric('D_final').value:.3g} <= 1e-2, "
              f"offset decay rate {off.data['decay_rate']:.4f} (1 +- 10%)", dt1 + dt2)
    assert ok, _fails(rep) + _fails(off)


def test_c08_expander_crossval(criterion):
    rep, dt = expander()
    errs = [rep.metric(f"alpha={a:g}_center_error").value for a in (0.5, 1.0)]
    res = [rep.metric(f"alpha={a:g}_fixed_point_residual").value for a in (0.5, 1.0)]
    ok = rep.passed and dt < 300
    criterion(8, "expander cross-validation", ok,
              f"|u(0) - w(0)| = {errs[0]:.3g}, {errs[1]:.3g} <= 1e-3; "
              f"fixed-point residual {max(res):.3g} <= 1e-7", dt)
    assert ok, _fails(rep)


def test_c09_hyperplane(criterion):
    rep, dt = hyperplane()
    ok = rep.passed and dt < 300
    criterion(9, "hyperplane stability", ok,
              f"M rise {rep.metric('M_max_rise').value:.3g} <= 1e-12, "
              f"M(T)/M(0) = {rep.metric('M_ratio').value:.4f} < 0.1, "
              f"barrier violation {rep.metric('barrier_violation').value:.3g} <= 1e-10", dt)
    assert ok, _fails(rep)


def test_c10_meanconvex(criterion):
    rep, dt = meanconvex()
    ok = rep.passed and dt < 1800
    criterion(10, "mean-convex cone stability", ok,
              f"cone curvature max {rep.metric('cone_curvature_max').value:.3g} < 0, "
              f"cone flow below cone {rep.metric('cone_flow_below_cone').value:.3g} <= 5h^2, "
              f"gap final {rep.metric('gap_final').value:.3g} <= 2e-2, "
              f"gap rise {rep.metric('gap_max_rise_last_half').value:.3g} <= 1e-12", dt)
    assert ok, _fails(rep)


def test_c11_domain_doubling(criterion):
    t0 = time.perf_counter()
    pairs = {
        "scaling ratio": (scaling(32.0)[0].data["r_measured"], scaling(64.0)[0].data["r_measured"]),
        "rescaled D final": (rescaled(SUBLINEAR)[0].metric("D_final").value,
                             rescaled(SUBLINEAR, 16.0)[0].metric("D_final").value),
        "offset decay rate": (rescaled(OFFSET)[0].data["decay_rate"],
                              rescaled(OFFSET, 16.0)[0].data["decay_rate"]),
    }
    for a in (0.5, 1.0):
        pairs[f"expander u(0) alpha={a:g}"] = (expander()[0].data[f"u0_{a:g}"],
                                               expander(8.0)[0].data[f"u0_{a:g}"])
    change = {k: abs(b - a) / abs(a) for k, (a, b) in pairs.items()}
    worst = max(change, key=change.get)
    dt = time.perf_counter() - t0
    ok = change[worst] < 0.1
    criterion(11, "domain doubling", ok,
              f"largest relative change {change[worst]:.3g} ({worst}) < 0.1", dt)
    assert ok, change
