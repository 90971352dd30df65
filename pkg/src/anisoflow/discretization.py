"""Uniform Cartesian grids, boundary policies and the discrete curvature operator.

The graph operator is written in conservative face-flux form

    L[u]_i = sum_k (F_k(i + e_k/2) - F_k(i - e_k/2)) / h,
    F = first N components of grad phi(-g, 1),

with ``g`` the gradient estimated on each face. One ghost layer, supplied by
the grid's boundary policy, closes the stencil.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from .errors import DomainError, UsageError

__all__ = [
    "Periodic",
    "ConeExtension",
    "DirichletExact",
    "LinearExtrapolation",
    "GraphGrid",
    "GraphField",
    "apply_boundary",
    "gradient_faces",
    "nodal_gradient",
    "curvature_operator",
    "lift",
    "discrete_lipschitz",
    "anisotropic_area",
]


# --------------------------------------------------------------------------
# boundary policies


class Periodic:
    name = "periodic"

    def __init__(self, period=None):
        self.period = None if period is None else np.atleast_1d(np.asarray(period, float))

    def validate(self, grid):
        if self.period is None:
            return
        expected = np.asarray(grid.shape, float) * grid.h
        if self.period.shape != expected.shape and self.period.size != 1:
            raise UsageError("periodic boundary: period vector has wrong length")
        if not np.allclose(self.period, expected, rtol=1e-12, atol=1e-12):
            raise UsageError(
                f"periodic boundary: period {self.period.tolist()} must equal node "
                f"count x h = {expected.tolist()}"
            )

    def pad(self, values, grid, t):
        if values.ndim == 1:
            U = np.empty(values.size + 2)
            U[1:-1] = values
            U[0], U[-1] = values[-1], values[0]
            return U
        return np.pad(values, 1, mode="wrap")

    def extend(self, values, grid, t, x):
        lo = np.asarray(grid.origin)
        L = np.asarray(grid.shape) * grid.h
        xw = lo + np.mod(x - lo, L)
        # wrap the interpolation stencil by appending the first node after the last
        ext = np.pad(values, [(0, 1)] * grid.N, mode="wrap")
        axes = [grid.origin[k] + grid.h * np.arange(grid.shape[k] + 1) for k in range(grid.N)]
        return RegularGridInterpolator(axes, ext)(xw)

    def describe(self):
        return "periodic"


class LinearExtrapolation:
    name = "linear"

    def validate(self, grid):
        pass

    def pad(self, values, grid, t):
        # odd reflection about the edge node: ghost = 2 u_edge - u_inner
        if values.ndim == 1:
            U = np.empty(values.size + 2)
            U[1:-1] = values
            U[0] = 2 * values[0] - values[1]
            U[-1] = 2 * values[-1] - values[-2]
            return U
        return np.pad(values, 1, mode="reflect", reflect_type="odd")

    def extend(self, values, grid, t, x):
        return RegularGridInterpolator(
            grid.axes(), values, bounds_error=False, fill_value=None
        )(x)

    def describe(self):
        return "linear"


class DirichletExact:
    """Ghost values from a closed-form evaluator ``func(x, t)``, x of shape (..., N)."""

    name = "dirichlet"

    def __init__(self, func, label="exact"):
        self.func = func
        self.label = label
        self._cache = {}

    def validate(self, grid):
        pass

    def _ghosts(self, grid):
        key = grid.key
        if key not in self._cache:
            mask = np.ones(tuple(n + 2 for n in grid.shape), bool)
            mask[(slice(1, -1),) * grid.N] = False
            pts = grid.padded_points()[mask]
            self._cache[key] = (mask, pts)
        return self._cache[key]

    def pad(self, values, grid, t):
        mask, pts = self._ghosts(grid)
        U = np.pad(values, 1)
        U[mask] = self.func(pts, t)
        return U

    def extend(self, values, grid, t, x):
        return self.func(x, t)

    def describe(self):
        return f"dirichlet:{self.label}"


class ConeExtension:
    """ghost = cone(x_ghost) + (u(x_edge) - cone(x_edge)): cone plus edge offset."""

    name = "cone"

    def __init__(self, cone):
        self.cone = cone
        self._cache = {}

    def validate(self, grid):
        if self.cone.N != grid.N:
            raise UsageError("cone dimension does not match grid dimension")

    def _cone_values(self, grid):
        key = grid.key
        if key not in self._cache:
            self._cache[key] = (
                self.cone(grid.points()),
                self.cone(grid.padded_points()),
            )
        return self._cache[key]

    def pad(self, values, grid, t):
        inner, padded = self._cone_values(grid)
        if values.ndim == 1:
            U = padded.copy()
            U[1:-1] = values
            U[0] += values[0] - inner[0]
            U[-1] += values[-1] - inner[-1]
            return U
        return padded + np.pad(values - inner, 1, mode="edge")

    def extend(self, values, grid, t, x):
        inner, _ = self._cone_values(grid)
        lo = np.asarray(grid.origin)
        hi = lo + (np.asarray(grid.shape) - 1) * grid.h
        xc = np.clip(x, lo, hi)
        offset = RegularGridInterpolator(grid.axes(), values - inner)(xc)
        return self.cone(x) + offset

    def describe(self):
        return f"cone:{self.cone.describe()}"


# --------------------------------------------------------------------------
# grid and field


@dataclass(frozen=True, eq=False)
class GraphGrid:
    N: int
    h: float
    shape: tuple
    origin: tuple
    boundary: object = field(default_factory=LinearExtrapolation)

    def __post_init__(self):
        if self.N not in (1, 2):
            raise UsageError(f"grid dimension must be 1 or 2, got {self.N}")
        if not self.h > 0:
            raise UsageError(f"grid spacing must be positive, got {self.h}")
        shape = tuple(int(n) for n in np.atleast_1d(self.shape))
        origin = tuple(float(o) for o in np.atleast_1d(self.origin))
        if len(shape) != self.N or len(origin) != self.N:
            raise UsageError("shape and origin must have one entry per axis")
        if min(shape) < 8:
            raise UsageError(f"need at least 8 nodes per axis, got {shape}")
        object.__setattr__(self, "shape", shape)
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "h", float(self.h))
        self.boundary.validate(self)

    @classmethod
    def centered(cls, N, h, half_width, boundary=None):
        """Nodes at -half_width .. +half_width (inclusive) on every axis."""
        n = int(round(half_width / h))
        boundary = LinearExtrapolation() if boundary is None else boundary
        return cls(N, h, (2 * n + 1,) * N, (-n * h,) * N, boundary)

    @classmethod
    def periodic(cls, N, h, period, start=None):
        n = int(round(period / h))
        if not np.isclose(n * h, period, rtol=1e-12):
            raise UsageError(f"period {period} is not a multiple of h={h}")
        start = -period / 2 if start is None else start
        return cls(N, h, (n,) * N, (start,) * N, Periodic((period,) * N))

    def with_boundary(self, boundary):
        return GraphGrid(self.N, self.h, self.shape, self.origin, boundary)

    @property
    def key(self):
        return (self.N, self.h, self.shape, self.origin)

    @property
    def periodic_bc(self):
        return isinstance(self.boundary, Periodic)

    def axes(self):
        return [self.origin[k] + self.h * np.arange(self.shape[k]) for k in range(self.N)]

    def points(self):
        """Node coordinates, shape ``shape + (N,)``."""
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def padded_points(self):
        axes = [self.origin[k] + self.h * np.arange(-1, self.shape[k] + 1) for k in range(self.N)]
        return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)

    def radius(self):
        return np.sqrt(np.sum(self.points() ** 2, axis=-1))

    def index_of(self, x):
        """Nearest node index to point ``x``."""
        x = np.atleast_1d(np.asarray(x, float))
        idx = np.rint((x - np.asarray(self.origin)) / self.h).astype(int)
        if np.any(idx < 0) or np.any(idx >= np.asarray(self.shape)):
            raise DomainError(f"point {x.tolist()} is outside the grid")
        return tuple(idx)

    def half_width(self):
        lo = np.asarray(self.origin)
        hi = lo + (np.asarray(self.shape) - 1) * self.h
        return float(np.min(np.minimum(-lo, hi)))

    def same_as(self, other):
        return self.key == other.key


@dataclass(eq=False)
class GraphField:
    """Nodal values of u on a grid at time ``time``."""

    grid: GraphGrid
    values: np.ndarray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise UsageError(
                f"values have shape {self.values.shape}, grid expects {self.grid.shape}"
            )
        self.time = float(self.time)

    @property
    def lipschitz(self):
        return discrete_lipschitz(self.values, self.grid)

    @property
    def finite(self):
        return bool(np.all(np.isfinite(self.values)))

    def copy(self, values=None, time=None):
        return GraphField(
            self.grid,
            self.values.copy() if values is None else values,
            self.time if time is None else time,
        )

    def at(self, x):
        return float(self.values[self.grid.index_of(x)])

    def sample(self, x):
        """Multilinear interpolation at points ``x`` (shape (..., N)).

        Points outside the grid are filled from the boundary policy.
        """
        grid = self.grid
        x = np.asarray(x, dtype=float)
        if grid.N == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        lo = np.asarray(grid.origin)
        hi = lo + (np.asarray(grid.shape) - 1) * grid.h
        inside = np.all((x >= lo - 1e-12 * grid.h) & (x <= hi + 1e-12 * grid.h), axis=-1)
        out = np.empty(x.shape[:-1])
        if grid.periodic_bc:
            return grid.boundary.extend(self.values, grid, self.time, x)
        if np.any(inside):
            xi = np.clip(x[inside], lo, hi)
            out[inside] = RegularGridInterpolator(grid.axes(), self.values)(xi)
        if np.any(~inside):
            out[~inside] = grid.boundary.extend(self.values, grid, self.time, x[~inside])
        return out

    def __add__(self, other):
        if isinstance(other, GraphField):
            other = other.values
        return self.copy(values=self.values + other)

    def __sub__(self, other):
        if isinstance(other, GraphField):
            other = other.values
        return self.copy(values=self.values - other)


def discrete_lipschitz(values, grid):
    """Largest forward-difference quotient over all axes (wrap included if periodic)."""
    best = 0.0
    for k in range(grid.N):
        if grid.periodic_bc:
            d = np.roll(values, -1, axis=k) - values
        else:
            d = np.diff(values, axis=k)
        if d.size:
            best = max(best, float(np.max(np.abs(d))) / grid.h)
    return best


# --------------------------------------------------------------------------
# operators


def apply_boundary(u):
    """Values padded with one ghost layer per side according to the grid policy."""
    return u.grid.boundary.pad(u.values, u.grid, u.time)


def lift(g):
    """(..., N) face gradients -> (..., N+1) arguments (-g, 1)."""
    p = np.empty(g.shape[:-1] + (g.shape[-1] + 1,))
    p[..., :-1] = -g
    p[..., -1] = 1.0
    return p


def _face_components(U, h, N):
    """Face gradients from a ghost-padded array, as separate component arrays.

    Returns, for each axis k, the list of N gradient components on the faces
    between node i and i + e_k. In 2-D the tangential component is the mean of
    the centred differences at the two adjacent nodes.
    """
    if N == 1:
        return [[(U[1:] - U[:-1]) * (1.0 / h)]]
    nx = (U[1:, 1:-1] - U[:-1, 1:-1]) * (1.0 / h)
    cy = (U[:, 2:] - U[:, :-2]) * (0.25 / h)
    tx = cy[1:] + cy[:-1]
    ny = (U[1:-1, 1:] - U[1:-1, :-1]) * (1.0 / h)
    cx = (U[2:, :] - U[:-2, :]) * (0.25 / h)
    ty = cx[:, 1:] + cx[:, :-1]
    return [[nx, tx], [ty, ny]]


def _face_gradients(U, h, N):
    """Face gradients stacked on a trailing axis: one (..., N) array per axis."""
    return [np.stack(c, axis=-1) for c in _face_components(U, h, N)]


def gradient_faces(u):
    """Face gradient fields of ``u``, one array per axis (see ``_face_gradients``)."""
    return _face_gradients(apply_boundary(u), u.grid.h, u.grid.N)


def _nodal_components(U, h, N):
    """Centred differences, i.e. the mean of the two adjacent face gradients."""
    if N == 1:
        return [(U[2:] - U[:-2]) * (0.5 / h)]
    return [
        (U[2:, 1:-1] - U[:-2, 1:-1]) * (0.5 / h),
        (U[1:-1, 2:] - U[1:-1, :-2]) * (0.5 / h),
    ]


def _nodal_gradient(U, h, N):
    return np.stack(_nodal_components(U, h, N), axis=-1)


def nodal_gradient(u):
    return _nodal_gradient(apply_boundary(u), u.grid.h, u.grid.N)


def _face_difference(F, k):
    if k == 0:
        return F[1:] - F[:-1]
    return F[:, 1:] - F[:, :-1]


def _divergence(faces, phi, h, N):
    L = 0.0
    for k, g in enumerate(faces):
        F = phi.grad_unchecked(lift(g))[..., k]
        L = L + _face_difference(F, k) / h
    return L


def curvature_operator(u, phi):
    """Nodal field div(grad_x phi(-grad u, 1)) in conservative flux form."""
    grid = u.grid
    if phi.dim != grid.N + 1:
        raise UsageError(f"anisotropy dimension {phi.dim} does not match grid N={grid.N}")
    faces = gradient_faces(u)
    return GraphField(grid, _divergence(faces, phi, grid.h, grid.N), u.time)


def _interior_faces(g, k, grid):
    sl = [slice(None)] * grid.N
    sl[k] = slice(None, -1) if grid.periodic_bc else slice(1, -1)
    return g[tuple(sl)]


def anisotropic_area(u, phi, faces=None):
    """Face-quadrature approximation of the integral of phi(-grad u, 1) over the cell.

    Periodic grids integrate one full period; otherwise the faces strictly
    inside the node range are used.
    """
    grid = u.grid
    if faces is None:
        faces = gradient_faces(u)
    total = 0.0
    for k, g in enumerate(faces):
        gi = _interior_faces(g, k, grid)
        total += float(np.sum(phi.value(lift(gi))))
    return total * grid.h**grid.N / grid.N
