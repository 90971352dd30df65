import numpy as np
import pytest

from anisoflow.discretization import GraphField, GraphGrid, Periodic
from anisoflow.errors import UsageError
from anisoflow.io import read_snapshot, write_snapshot


@pytest.mark.parametrize("N", [1, 2])
def test_round_trip_is_exact(tmp_path, N):
    grid = GraphGrid.centered(N, 0.1, 1.0)
    rng = np.random.default_rng(N)
    u = GraphField(grid, rng.normal(size=grid.shape) / 3, time=0.1 + 1e-17)
    path = tmp_path / "snap.txt"
    write_snapshot(path, u, extra={"c": 1.0, "residual": 3.5e-9})
    v, header = read_snapshot(path)
    assert np.array_equal(v.values, u.values)
    assert v.time == u.time and v.grid.key == grid.key
    assert float(header["residual"]) == 3.5e-9


def test_header_layout(tmp_path):
    grid = GraphGrid.periodic(1, 0.5, 4.0)
    path = tmp_path / "snap.txt"
    write_snapshot(path, GraphField(grid, np.arange(8.0), 2.0))
    lines = path.read_text().splitlines()
    assert lines[:4] == ["N 1", "h 0.5", "shape 8", "t 2"]
    assert lines[lines.index("values") + 1:] == [str(float(i)).rstrip("0").rstrip(".") for i in range(8)]
    v, _ = read_snapshot(path, boundary=Periodic())
    assert v.grid.periodic_bc


def test_truncated_file(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("N 1\nh 0.1\nshape 10\nt 0\nvalues\n1\n2\n")
    with pytest.raises(UsageError):
        read_snapshot(path)
    path.write_text("N 1\nh 0.1\nvalues\n1\n")
    with pytest.raises(UsageError):
        read_snapshot(path)
