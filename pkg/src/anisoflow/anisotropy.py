"""Surface tensions, mobilities, dual norms and Wulff shapes.

All models act on arrays whose last axis has length ``dim = N + 1``; leading
axes are broadcast, so a whole face field can be evaluated in one call.
"""

from functools import cached_property

import numpy as np
from scipy import optimize

from .errors import DomainError, SingularityError, UsageError

__all__ = [
    "AnisotropyModel",
    "Euclidean",
    "PowerNorm",
    "Elliptic",
    "UserSmooth",
    "MobilityModel",
    "WulffCap",
    "eval_phi",
    "grad_phi",
    "hess_phi",
    "dual_phi",
    "wulff_lower_cap",
    "sphere_samples",
]


def sphere_samples(dim, n=None):
    """Quasi-uniform points on the unit sphere of R^dim.

    dim=2 uses ``n`` equally spaced angles (default 3600), dim=3 a Fibonacci
    lattice (default 10**4).
    """
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        n = 3600 if n is None else n
        theta = 2 * np.pi * np.arange(n) / n
        return np.stack([np.cos(theta), np.sin(theta)], axis=-1)
    if dim == 3:
        n = 10_000 if n is None else n
        k = np.arange(n) + 0.5
        z = 1 - 2 * k / n
        r = np.sqrt(1 - z * z)
        theta = np.pi * (1 + 5**0.5) * k
        return np.stack([r * np.cos(theta), r * np.sin(theta), z], axis=-1)
    raise UsageError(f"sphere sampling supports dim <= 3, got {dim}")


def _lift_components(g):
    """Component list of face gradients -> stacked (..., N+1) arguments (-g, 1)."""
    p = np.empty(np.shape(g[0]) + (len(g) + 1,))
    for i, c in enumerate(g):
        p[..., i] = -c
    p[..., -1] = 1.0
    return p


def _sqnorm(p):
    # unrolled over the short last axis; much faster than a reduction
    out = p[..., 0] * p[..., 0]
    for i in range(1, p.shape[-1]):
        out = out + p[..., i] * p[..., i]
    return out


class AnisotropyModel:
    """Positively 1-homogeneous convex function on R^dim.

    Subclasses implement ``_value``, ``_grad`` and ``_hess`` on arrays whose
    last axis is already checked to be ``dim``.
    """

    family = "abstract"
    closed_form = True

    def __init__(self, dim):
        if dim < 1:
            raise UsageError("dimension must be positive")
        self.dim = int(dim)

    def _check(self, p):
        p = np.asarray(p, dtype=float)
        if p.shape[-1:] != (self.dim,):
            raise UsageError(
                f"{self.family}: expected vectors of length {self.dim}, got shape {p.shape}"
            )
        return p

    def _check_nonzero(self, p):
        if np.any(np.all(p == 0, axis=-1)):
            raise SingularityError(f"{self.family}: derivative undefined at p = 0")

    def value(self, p):
        return self._value(self._check(p))

    def grad(self, p):
        p = self._check(p)
        self._check_nonzero(p)
        return self._grad(p)

    def hess(self, p):
        p = self._check(p)
        self._check_nonzero(p)
        return self._hess(p)

    def dual(self, q):
        return self._dual(self._check(q))

    # Used on hot paths with inputs known to be nonzero and well shaped.
    def grad_unchecked(self, p):
        return self._grad(p)

    def xblock_max_eig(self, p):
        """Largest eigenvalue of the leading (dim-1)x(dim-1) block of the Hessian."""
        H = self._hess(p)[..., :-1, :-1]
        if H.shape[-1] == 1:
            return H[..., 0, 0]
        return np.linalg.eigvalsh(H)[..., -1]

    def _dual(self, q):
        return _sampled_dual(self, q)

    # Hot path of the flow: arguments are p = (-g, 1) with g given as a list of
    # component arrays. Families with closed forms override these.
    def face_terms(self, g, k, need_value=False):
        """(flux component k, largest x-block Hessian eigenvalue, value or None) at p = (-g, 1)."""
        P = _lift_components(g)
        F = self._grad(P)[..., k]
        lam = self.xblock_max_eig(P)
        return F, lam, self._value(P) if need_value else None

    def value_lifted(self, g):
        return self._value(_lift_components(g))

    @property
    def params(self):
        return {}

    def is_even_in_x(self, n=200, seed=0):
        """True if phi(-p_x, z) == phi(p_x, z), i.e. the graph operator is odd in u."""
        rng = np.random.default_rng(seed)
        p = rng.normal(size=(n, self.dim))
        q = p.copy()
        q[:, :-1] *= -1
        a, b = self.value(p), self.value(q)
        return bool(np.allclose(a, b, rtol=1e-10, atol=0))

    def __repr__(self):
        args = ", ".join(f"{k}={v!r}" for k, v in self.params.items())
        return f"{type(self).__name__}(dim={self.dim}{', ' if args else ''}{args})"


class Euclidean(AnisotropyModel):
    family = "euclidean"

    def _value(self, p):
        return np.sqrt(_sqnorm(p))

    def _grad(self, p):
        return p / self._value(p)[..., None]

    def _hess(self, p):
        n = self._value(p)[..., None, None]
        u = p / n[..., 0]
        eye = np.eye(self.dim)
        return (eye - u[..., :, None] * u[..., None, :]) / n

    def xblock_max_eig(self, p):
        n2 = _sqnorm(p)
        n = np.sqrt(n2)
        if self.dim == 2:
            return p[..., 1] ** 2 / (n2 * n)
        # eigenvalues of (I - uu^T)/n restricted to the x block: 1/n (multiplicity
        # dim-2) and (1 - |u_x|^2)/n
        return 1.0 / n

    def _dual(self, q):
        return self._value(q)

    def face_terms(self, g, k, need_value=False):
        n2 = 1.0
        for c in g:
            n2 = n2 + c * c
        n = np.sqrt(n2)
        lam = 1.0 / (n2 * n) if self.dim == 2 else 1.0 / n
        return -g[k] / n, lam, n if need_value else None

    def value_lifted(self, g):
        n2 = 1.0
        for c in g:
            n2 = n2 + c * c
        return np.sqrt(n2)


class PowerNorm(AnisotropyModel):
    """phi(p) = (sum |p_i|^m)^(1/m), m > 1. C^2 away from 0 requires m >= 2."""

    family = "power"

    def __init__(self, dim, exponent):
        super().__init__(dim)
        if not exponent > 1:
            raise UsageError(f"power norm exponent must exceed 1, got {exponent}")
        self.exponent = float(exponent)

    @property
    def params(self):
        return {"exponent": self.exponent}

    def _value(self, p):
        m = self.exponent
        a = np.abs(p)
        s = np.max(a, axis=-1)
        safe = np.where(s > 0, s, 1.0)
        return s * np.sum((a / safe[..., None]) ** m, axis=-1) ** (1 / m)

    def _grad(self, p):
        m = self.exponent
        v = self._value(p)[..., None]
        r = p / v
        return np.sign(r) * np.abs(r) ** (m - 1)

    def _hess(self, p):
        m = self.exponent
        v = self._value(p)
        r = np.abs(p / v[..., None])
        g = self._grad(p)
        with np.errstate(divide="ignore"):
            d = r ** (m - 2)
        H = -g[..., :, None] * g[..., None, :]
        idx = np.arange(self.dim)
        H[..., idx, idx] += d
        return (m - 1) / v[..., None, None] * H

    def _dual(self, q):
        m = self.exponent
        return PowerNorm(self.dim, m / (m - 1))._value(q)


class Elliptic(AnisotropyModel):
    """phi(p) = sqrt(p^T A p) with A symmetric positive definite."""

    family = "elliptic"

    def __init__(self, matrix):
        A = np.array(matrix, dtype=float)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise UsageError("elliptic anisotropy needs a square matrix")
        if not np.allclose(A, A.T, rtol=0, atol=1e-14 * np.abs(A).max()):
            raise UsageError("elliptic anisotropy matrix must be symmetric")
        if np.linalg.eigvalsh(A)[0] <= 0:
            raise UsageError("elliptic anisotropy matrix must be positive definite")
        super().__init__(A.shape[0])
        self.matrix = A
        self.inverse = np.linalg.inv(A)

    @property
    def params(self):
        return {"matrix": self.matrix.tolist()}

    def _value(self, p):
        return np.sqrt(np.einsum("...i,ij,...j->...", p, self.matrix, p))

    def _grad(self, p):
        Ap = p @ self.matrix
        return Ap / np.sqrt(np.sum(Ap * p, axis=-1))[..., None]

    def _hess(self, p):
        Ap = p @ self.matrix
        v = np.sqrt(np.sum(Ap * p, axis=-1))[..., None, None]
        return (self.matrix - Ap[..., :, None] * Ap[..., None, :] / v**2) / v

    def _dual(self, q):
        return np.sqrt(np.einsum("...i,ij,...j->...", q, self.inverse, q))

    def _lifted_Ap(self, g):
        A = self.matrix
        d = self.dim
        Ap = []
        for i in range(d):
            row = A[i, d - 1]
            for j, c in enumerate(g):
                row = row - A[i, j] * c
            Ap.append(row)
        v2 = Ap[-1] * 1.0
        for j, c in enumerate(g):
            v2 = v2 - Ap[j] * c
        return Ap, np.sqrt(v2)

    def face_terms(self, g, k, need_value=False):
        Ap, v = self._lifted_Ap(g)
        A = self.matrix
        iv2 = 1.0 / (v * v)
        if self.dim == 2:
            lam = (A[0, 0] - Ap[0] * Ap[0] * iv2) / v
        else:
            a = A[0, 0] - Ap[0] * Ap[0] * iv2
            b = A[0, 1] - Ap[0] * Ap[1] * iv2
            d = A[1, 1] - Ap[1] * Ap[1] * iv2
            lam = (0.5 * (a + d) + np.sqrt(0.25 * (a - d) ** 2 + b * b)) / v
        return Ap[k] / v, lam, v if need_value else None

    def value_lifted(self, g):
        return self._lifted_Ap(g)[1]


class UserSmooth(AnisotropyModel):
    """Black-box smooth anisotropy.

    ``value``, ``gradient`` and ``hessian`` must accept arrays with last axis
    ``dim`` and broadcast over the leading axes. The dual is computed by dense
    sampling of the unit sphere followed by local ascent (accuracy ~1e-6).
    """

    family = "user"
    closed_form = False

    def __init__(self, dim, value, gradient, hessian, name="user"):
        super().__init__(dim)
        self._v, self._g, self._h = value, gradient, hessian
        self.name = name

    @property
    def params(self):
        return {"name": self.name}

    def _value(self, p):
        return np.asarray(self._v(p), dtype=float)

    def _grad(self, p):
        return np.asarray(self._g(p), dtype=float)

    def _hess(self, p):
        return np.asarray(self._h(p), dtype=float)


def _sampled_dual(model, q):
    """sup{p.q : phi(p) <= 1} by sphere sampling plus Nelder-Mead refinement."""
    q = np.asarray(q, dtype=float)
    flat = q.reshape(-1, model.dim)
    dirs = sphere_samples(model.dim) if model.dim > 1 else np.array([[1.0], [-1.0]])
    dirs = dirs / model.value(dirs)[:, None]
    out = np.empty(len(flat))
    for k, qk in enumerate(flat):
        if not np.any(qk):
            out[k] = 0.0
            continue
        scores = dirs @ qk
        p0 = dirs[np.argmax(scores)]
        if model.dim == 1:
            out[k] = scores.max()
            continue

        def neg_ratio(p):
            v = model.value(p)
            return -(p @ qk) / v if v > 0 else np.inf

        res = optimize.minimize(
            neg_ratio, p0, method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000},
        )
        out[k] = max(-res.fun, scores.max())
    return out.reshape(q.shape[:-1])


def eval_phi(model, p):
    return model.value(p)


def grad_phi(model, p):
    return model.grad(p)


def hess_phi(model, p):
    return model.hess(p)


def dual_phi(model, q):
    return model.dual(q)


class MobilityModel:
    """Positive 1-homogeneous mobility; wraps any anisotropy family.

    Convexity is not required. ``psi_max``/``psi_min`` are the extrema over the
    unit sphere, found by dense sampling.
    """

    def __init__(self, model):
        if isinstance(model, MobilityModel):
            model = model.model
        self.model = model
        self.dim = model.dim

    @classmethod
    def euclidean(cls, dim):
        return cls(Euclidean(dim))

    def value(self, p):
        return self.model.value(p)

    def value_unchecked(self, p):
        return self.model._value(p)

    def value_lifted(self, g):
        return self.model.value_lifted(g)

    __call__ = value

    @cached_property
    def _sphere_values(self):
        return self.model.value(sphere_samples(self.dim))

    @cached_property
    def psi_max(self):
        return float(self._sphere_values.max())

    @cached_property
    def psi_min(self):
        v = float(self._sphere_values.min())
        if not v > 0:
            raise UsageError("mobility must be positive on the unit sphere")
        return v

    def effective_bounds(self, phi):
        """(min, max) of psi/phi over the unit sphere.

        These are the speeds that make shrinking Wulff shapes exact sub- and
        supersolutions when phi is not normalised on the sphere.
        """
        s = sphere_samples(self.dim)
        r = self.model.value(s) / phi.value(s)
        return float(r.min()), float(r.max())

    @property
    def family(self):
        return self.model.family

    @property
    def params(self):
        return self.model.params

    def __repr__(self):
        return f"MobilityModel({self.model!r})"


class WulffCap:
    """Lower boundary of R * W_{phi0} sampled on a grid, as a graph z = w(x)."""

    def __init__(self, radius, grid, values):
        self.radius = float(radius)
        self.grid = grid
        self.values = values

    def field(self, time=0.0):
        from .discretization import GraphField

        return GraphField(self.grid, self.values.copy(), time)


def _quadratic_dual_matrix(phi):
    if isinstance(phi, Euclidean):
        return np.eye(phi.dim)
    if isinstance(phi, Elliptic):
        return phi.inverse
    return None


def _lower_cap_closed(B, R, X):
    """Lower root z of (x, z)^T B (x, z) = R^2: the cap of an ellipsoidal Wulff shape."""
    a = B[-1, -1]
    b = 2 * (X @ B[:-1, -1])
    c = np.einsum("ni,ij,nj->n", X, B[:-1, :-1], X) - R * R
    disc = b * b - 4 * a * c
    if np.any(disc < 0):
        bad = int(np.flatnonzero(disc < 0)[0])
        raise DomainError(
            f"node {bad} at x={X[bad].tolist()} lies outside the projection of the "
            f"Wulff shape of radius {R}"
        )
    return (-b - np.sqrt(disc)) / (2 * a)


def _lower_cap_points(phi, R, X, tol=1e-15, closed=True):
    """Vectorised min{z : phi0(x, z) <= R} for the rows of X (shape (n, N)).

    Quadratic anisotropies use the closed form unless ``closed`` is False;
    the rest use a ternary search for the lowest point of the dual's sublevel
    line followed by bisection.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = len(X)
    B = _quadratic_dual_matrix(phi) if closed else None
    if B is not None:
        return _lower_cap_closed(B, R, X)

    def dual_at(z):
        return phi.dual(np.concatenate([X, z[:, None]], axis=1))

    # phi0(q) >= |q| / max_sphere(phi), so R*W lies in the ball of radius R*max(phi)
    span = 2.2 * R * float(phi.value(sphere_samples(phi.dim)).max())
    lo = np.full(n, -span)
    hi = np.full(n, span)
    for _ in range(200):
        m1 = lo + (hi - lo) / 3
        m2 = hi - (hi - lo) / 3
        f1, f2 = dual_at(m1), dual_at(m2)
        left = f1 < f2
        hi = np.where(left, m2, hi)
        lo = np.where(left, lo, m1)
        if np.max(hi - lo) < 1e-14 * span:
            break
    z_in = 0.5 * (lo + hi)
    inside = dual_at(z_in) <= R
    if not np.all(inside):
        bad = int(np.flatnonzero(~inside)[0])
        raise DomainError(
            f"node {bad} at x={X[bad].tolist()} lies outside the projection of the "
            f"Wulff shape of radius {R}"
        )
    step = np.full(n, R)
    z_out = z_in - step
    while True:
        outside = dual_at(z_out) > R
        if np.all(outside):
            break
        step = np.where(outside, step, 2 * step)
        z_out = np.where(outside, z_out, z_in - step)
    a, b = z_out, z_in  # phi0(a) > R >= phi0(b)
    for _ in range(200):
        if np.max(b - a) <= tol * R:
            break
        mid = 0.5 * (a + b)
        out = dual_at(mid) > R
        a = np.where(out, mid, a)
        b = np.where(out, b, mid)
    return 0.5 * (a + b)


def wulff_lower_cap(phi, R, base, tol=1e-15, closed=True):
    """Sample the lower cap of ``R * W_{phi0}`` over the nodes of ``base``.

    w(x) = min{z : phi0(x, z) <= R}; closed form for quadratic anisotropies,
    otherwise located by bisection to ``tol * R``.
    """
    if not R > 0:
        raise DomainError(f"Wulff radius must be positive, got {R}")
    if phi.dim != base.N + 1:
        raise UsageError(f"anisotropy dimension {phi.dim} does not match grid N={base.N}")
    X = base.points().reshape(-1, base.N)
    w = _lower_cap_points(phi, R, X, tol=tol, closed=closed)
    return WulffCap(R, base, w.reshape(base.shape))


def lower_cap_function(phi, R):
    """Callable x -> lower cap height, x of shape (..., N)."""

    def cap(x):
        x = np.asarray(x, dtype=float)
        shape = x.shape[:-1]
        return _lower_cap_points(phi, R, x.reshape(-1, x.shape[-1])).reshape(shape)

    return cap
