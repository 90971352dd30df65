"""Plain-text snapshot files.

Layout: one ``key value`` header line each for N, h, shape, t (plus origin
and any extra keys such as c and residual for expander profiles), a line
``values``, then the nodal values in row-major order, 17 significant digits.
"""

import numpy as np

from .discretization import GraphField, GraphGrid, LinearExtrapolation
from .errors import UsageError


def _num(v):
    return format(float(v), ".17g")


def write_snapshot(path, field, extra=None):
    g = field.grid
    lines = [
        f"N {g.N}",
        f"h {_num(g.h)}",
        "shape " + " ".join(str(n) for n in g.shape),
        f"t {_num(field.time)}",
        "origin " + " ".join(_num(o) for o in g.origin),
        f"boundary {g.boundary.describe()}",
    ]
    for k, v in (extra or {}).items():
        lines.append(f"{k} {_num(v)}")
    lines.append("values")
    lines.extend(_num(v) for v in field.values.ravel(order="C"))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_snapshot(path, boundary=None):
    """Return ``(field, header)``; ``boundary`` replaces the recorded policy."""
    header = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line == "values":
                break
            key, _, rest = line.partition(" ")
            header[key] = rest
        values = np.array([float(v) for v in fh.read().split()])
    try:
        N = int(header["N"])
        h = float(header["h"])
        shape = tuple(int(s) for s in header["shape"].split())
        t = float(header["t"])
    except KeyError as exc:
        raise UsageError(f"snapshot {path} lacks header line {exc}") from None
    origin = tuple(float(s) for s in header.get("origin", "0 " * N).split())
    if values.size != int(np.prod(shape)):
        raise UsageError(f"snapshot {path}: {values.size} values for shape {shape}")
    grid = GraphGrid(N, h, shape, origin, boundary or LinearExtrapolation())
    return GraphField(grid, values.reshape(shape), t), header
