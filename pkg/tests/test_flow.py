import math

import numpy as np
import pytest

from anisoflow.anisotropy import Elliptic, Euclidean, MobilityModel, PowerNorm
from anisoflow.discretization import (
    ConeExtension,
    DirichletExact,
    GraphField,
    GraphGrid,
    LinearExtrapolation,
)
from anisoflow.errors import NumericalFailure, UsageError
from anisoflow.experiments import grim_reaper_exact
from anisoflow.flow import (
    FlowParams,
    cfl_dt,
    evolve,
    evolve_lockstep,
    evolve_rescaled,
    mobility_potential,
    physical_time,
    rescale_transform,
    rescaled_time,
    step_explicit,
)
from anisoflow.selfsimilar import ConeSpec, cone_grid, make_cone_field

E2, PSI2 = Euclidean(2), MobilityModel.euclidean(2)


def _flat(N, h, n=16):
    grid = GraphGrid(N, h, (n,) * N, (0.0,) * N)
    return GraphField(grid, np.zeros(grid.shape))


def test_flow_params_validation():
    with pytest.raises(UsageError):
        FlowParams(T=1.0, cfl_factor=0.9)
    with pytest.raises(UsageError):
        FlowParams(T=0.0)
    with pytest.raises(UsageError):
        FlowParams(T=1.0, snapshot_every=0)


@pytest.mark.parametrize("N, h, expected", [(1, 0.01, 2.5e-5), (2, 0.01, 1.25e-5), (1, 0.02, 1e-4)])
def test_cfl_examples(N, h, expected):
    u = _flat(N, h)
    assert cfl_dt(u, Euclidean(N + 1), MobilityModel.euclidean(N + 1), 0.25) == pytest.approx(
        expected, rel=1e-14)


def test_cfl_quadruples_when_h_doubles():
    u = GraphField(GraphGrid.centered(1, 0.05, 1.0), np.zeros(41))
    v = GraphField(GraphGrid.centered(1, 0.1, 1.0), np.zeros(21))
    assert cfl_dt(v, E2, PSI2) == pytest.approx(4 * cfl_dt(u, E2, PSI2), rel=1e-14)


def test_step_rejects_large_dt():
    u = _flat(1, 0.01)
    with pytest.raises(UsageError):
        step_explicit(u, 1e-4, E2, PSI2)


@pytest.mark.parametrize("phi, psi", [
    (E2, PSI2),
    (PowerNorm(2, 4), MobilityModel(Elliptic(np.diag([2.0, 1.0])))),
])
def test_affine_is_stationary(phi, psi):
    cone = ConeSpec.max_affine([[0.6]])
    grid = GraphGrid.centered(1, 0.05, 1.0, ConeExtension(cone))
    u = GraphField(grid, 0.6 * grid.axes()[0] + 0.25)
    out = step_explicit(u, cfl_dt(u, phi, psi), phi, psi)
    np.testing.assert_allclose(out.values, u.values, atol=1e-15)
    traj = evolve(u, FlowParams(T=0.01, stop_at_stationary=False), phi, psi)
    np.testing.assert_allclose(traj.final.values, u.values, atol=1e-13)


def test_vertical_translation():
    rng = np.random.default_rng(0)
    grid = GraphGrid.periodic(1, 0.05, 2.0)
    u = GraphField(grid, 0.1 * np.cumsum(rng.uniform(-1, 1, grid.shape)) * grid.h)
    dt = cfl_dt(u, E2, PSI2)
    a = step_explicit(u, dt, E2, PSI2).values
    b = step_explicit(u + 0.75, dt, E2, PSI2).values
    np.testing.assert_allclose(b - a, 0.75, atol=1e-13)
    p = FlowParams(T=0.05, stop_at_stationary=False)
    ta, tb = evolve_lockstep([u, u + 0.75], p, E2, PSI2)
    np.testing.assert_allclose(tb.final.values - ta.final.values, 0.75, atol=1e-12)


def test_grim_reaper_single_step():
    grid = GraphGrid.centered(1, 0.01, 1.2, DirichletExact(grim_reaper_exact))
    u = GraphField(grid, grim_reaper_exact(grid.points(), 0.0))
    dt = cfl_dt(u, E2, PSI2)
    out = step_explicit(u, dt, E2, PSI2)
    np.testing.assert_allclose((out.values - u.values) / dt, 1.0, atol=1e-3)


def test_zero_data_is_stationary_at_once():
    grid = GraphGrid.periodic(1, 0.1, 2.0)
    traj = evolve(GraphField(grid, np.zeros(grid.shape)), FlowParams(T=1.0), E2, PSI2)
    assert traj.stationary and traj.meta["steps"] == 0
    assert np.all(traj.final.values == 0)


def test_non_finite_data_is_loud():
    grid = GraphGrid.periodic(1, 0.1, 2.0)
    vals = np.zeros(grid.shape)
    vals[3] = np.nan
    with pytest.raises(NumericalFailure) as err:
        evolve(GraphField(grid, vals), FlowParams(T=1.0), E2, PSI2)
    assert err.value.step == 0


def test_snapshots_hit_requested_times():
    grid = GraphGrid.periodic(1, 0.1, 3.2)
    u = GraphField(grid, 0.2 * np.sin(2 * np.pi * grid.axes()[0] / 3.2))
    traj = evolve(u, FlowParams(T=0.3, snapshot_dt=0.1, snapshot_times=(0.25,)), E2, PSI2)
    np.testing.assert_allclose(traj.times, [0.0, 0.1, 0.2, 0.25, 0.3], atol=1e-12)
    assert np.all(np.diff(traj.records["t"]) > 0)
    assert len(traj.records["t"]) == traj.meta["steps"] + 1


def test_records_csv(tmp_path):
    grid = GraphGrid.periodic(1, 0.1, 3.2)
    u = GraphField(grid, 0.2 * np.cos(2 * np.pi * grid.axes()[0] / 3.2))
    traj = evolve(u, FlowParams(T=0.01), E2, PSI2)
    path = tmp_path / "rec.csv"
    traj.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "step,t,dt,sup_speed,lipschitz,area,dissipation"
    assert len(lines) == traj.meta["steps"] + 2


@pytest.mark.parametrize("phi", [E2, PowerNorm(2, 4), Elliptic([[1.5, 0.3], [0.3, 1.0]])])
def test_lipschitz_non_increase_and_dissipation(phi):
    rng = np.random.default_rng(2)
    grid = GraphGrid.periodic(1, 0.05, 4.0)
    u = GraphField(grid, np.cumsum(rng.uniform(-1, 1, grid.shape)) * grid.h)
    u.values -= np.linspace(0, u.values[-1] - u.values[0], grid.shape[0])
    traj = evolve(u, FlowParams(T=0.2, stop_at_stationary=False), phi, PSI2)
    rec = traj.records
    assert rec["lipschitz"].max() <= traj.meta["lipschitz0"] + 1e-6
    assert np.all(np.diff(rec["area"]) <= 1e-12)
    drop = rec["area"][0] - rec["area"]
    assert np.all(rec["dissipation"] <= drop * (1 + 5 * rec["dt"].max() / grid.h**2) + 1e-12)


def test_two_dimensional_ordering_of_separated_data():
    # the 2-D cross-derivative stencil is not monotone, so only strictly
    # separated smooth data are checked here
    grid = GraphGrid.periodic(2, 0.1, 3.2)
    x, y = np.moveaxis(grid.points(), -1, 0)
    k = 2 * np.pi / 3.2
    u = 0.3 * np.sin(k * x) * np.cos(2 * k * y)
    v = u + 0.05 + 0.02 * np.cos(k * (x + y))
    a, b = evolve_lockstep([GraphField(grid, u), GraphField(grid, v)],
                           FlowParams(T=0.1, snapshot_every=1), Euclidean(3),
                           MobilityModel.euclidean(3))
    worst = max(np.max(p.values - q.values) for p, q in zip(a.snapshots, b.snapshots))
    assert worst <= 1e-10


def test_mobility_potential_closed_form_matches_quadrature():
    g = np.linspace(-3, 3, 13)
    # same model by value, distinct objects: forces the quadrature path
    quad = mobility_potential(Elliptic(np.eye(2)), MobilityModel(Elliptic(np.eye(2))), g)
    np.testing.assert_allclose(quad, np.arctan(g), atol=1e-12)
    np.testing.assert_allclose(mobility_potential(E2, PSI2, g), np.arctan(g), atol=0)


def test_rescaled_zero_stays_zero():
    cone = ConeSpec.abs(0.0)
    grid = cone_grid(cone, 1, 0.05, 2.0)
    traj = evolve_rescaled(make_cone_field(cone, grid), FlowParams(T=1.0), E2, PSI2)
    assert np.all(traj.final.values == 0)


def test_rescaled_needs_cone_boundary():
    grid = GraphGrid.centered(1, 0.1, 1.0, LinearExtrapolation())
    with pytest.raises(UsageError):
        evolve_rescaled(GraphField(grid, np.zeros(21)), FlowParams(T=1.0), E2, PSI2)


def test_time_maps():
    assert rescaled_time((math.e**2 - 1) / 2) == pytest.approx(1.0, rel=1e-15)
    assert physical_time(rescaled_time(0.37)) == pytest.approx(0.37, rel=1e-14)
    cone = ConeSpec.abs(1.0)
    u = make_cone_field(cone, cone_grid(cone, 1, 0.1, 2.0))
    w = rescale_transform(u)
    assert w.time == 0.0
    np.testing.assert_array_equal(w.values, u.values)


def test_rescaled_route_matches_transformed_physical_route():
    cone = ConeSpec.abs(1.0)
    errs = []
    for h in (0.04, 0.02):
        u = evolve(make_cone_field(cone, cone_grid(cone, 1, h, 8.0)),
                   FlowParams(T=physical_time(0.5), stop_at_stationary=False), E2, PSI2,
                   record=False).final
        target = cone_grid(cone, 1, h, 2.0)
        w1 = rescale_transform(u, target)
        w2 = evolve_rescaled(make_cone_field(cone, target),
                             FlowParams(T=0.5, stop_at_stationary=False), E2, PSI2,
                             record=False).final
        near = np.abs(target.axes()[0]) <= 1
        errs.append(np.max(np.abs(w1.values - w2.values)[near]))
    assert errs[0] < 0.1 * 0.04
    assert 1.8 < errs[0] / errs[1] < 2.2
