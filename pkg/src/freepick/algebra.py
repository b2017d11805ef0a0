"""Finite-dimensional C*-algebras realized as block-diagonal matrix algebras.

An algebra ``B = M_{k_1} + ... + M_{k_r}`` sits inside ``M_d`` with
``d = k_1 + ... + k_r`` as block-diagonal matrices.  A point of the matrix
universe over ``B`` at level ``n`` is an ``n x n`` grid of elements of ``B``.

Flat layout: the ``nd x nd`` matrix of a level-``n`` point is the grid of
``d x d`` blocks with the grid index outer and the algebra index inner, so
``flat[i*d + a, j*d + b] == grid[i, j, a, b]``.  Under this layout the
amplification ``b (x) I_n`` places ``b`` on the grid diagonal and a scalar
``n x n`` matrix ``G`` acts as ``kron(G, I_d)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import InputError, NotHermitian, SingularResolvent, SpecMismatch

TOL_PSD = 1e-9
HERMITIAN_RTOL = 1e-8
BLOCK_RTOL = 1e-10
SINGULAR_RTOL = 1e-12


def opnorm(m: np.ndarray) -> float:
    """Spectral norm; zero for empty matrices."""
    if m.size == 0:
        return 0.0
    return float(np.linalg.norm(m, 2))


def hermitize(h: np.ndarray, what: str = "matrix") -> np.ndarray:
    """Return ``(h + h*)/2`` if ``h`` is Hermitian up to round-off, else raise."""
    h = np.asarray(h, dtype=complex)
    defect = opnorm(h - h.conj().T)
    if defect > HERMITIAN_RTOL * (1.0 + opnorm(h)):
        raise NotHermitian(f"{what} is not Hermitian (defect {defect:.3e})")
    return (h + h.conj().T) / 2


def checked_inverse(k: np.ndarray, what: str = "operator") -> np.ndarray:
    """Invert ``k`` after a singular-value guard.

    Raises :class:`SingularResolvent` when the smallest singular value is
    below ``1e-12`` times the largest.
    """
    if k.size == 0:
        return k.copy()
    sv = np.linalg.svd(k, compute_uv=False)
    if sv[-1] < SINGULAR_RTOL * max(sv[0], np.finfo(float).tiny):
        raise SingularResolvent(
            f"{what} is numerically singular (sigma_min={sv[-1]:.3e}, sigma_max={sv[0]:.3e})",
            smallest=float(sv[-1]), largest=float(sv[0]))
    return np.linalg.inv(k)


@dataclass(frozen=True)
class AlgebraSpec:
    """Direct sum of full matrix algebras, given by its block sizes."""

    blocks: tuple[int, ...]

    def __post_init__(self):
        blocks = tuple(int(b) for b in self.blocks)
        if not blocks:
            raise InputError("an algebra needs at least one block")
        if any(b < 1 for b in blocks):
            raise InputError(f"block sizes must be positive, got {blocks}")
        object.__setattr__(self, "blocks", blocks)

    @property
    def total_dim(self) -> int:
        return sum(self.blocks)

    @property
    def dim(self) -> int:
        """Vector-space dimension of the algebra."""
        return sum(b * b for b in self.blocks)

    @property
    def is_diagonal(self) -> bool:
        return all(b == 1 for b in self.blocks)

    @cached_property
    def mask(self) -> np.ndarray:
        d = self.total_dim
        m = np.zeros((d, d), dtype=bool)
        o = 0
        for b in self.blocks:
            m[o:o + b, o:o + b] = True
            o += b
        return m

    def level_mask(self, n: int) -> np.ndarray:
        return np.kron(np.ones((n, n), dtype=bool), self.mask)

    def unit(self) -> "AlgElement":
        return AlgElement(self, np.eye(self.total_dim, dtype=complex))

    def zero(self) -> "AlgElement":
        return AlgElement(self, np.zeros((self.total_dim,) * 2, dtype=complex))

    def basis(self) -> list["AlgElement"]:
        """Matrix units supported inside the blocks."""
        out = []
        d = self.total_dim
        for a, b in zip(*np.nonzero(self.mask)):
            e = np.zeros((d, d), dtype=complex)
            e[a, b] = 1.0
            out.append(AlgElement(self, e))
        return out

    def diag(self, values: Sequence[complex]) -> "AlgElement":
        return AlgElement(self, np.diag(np.asarray(values, dtype=complex)))

    def random_element(self, rng: np.random.Generator, hermitian: bool = False) -> "AlgElement":
        d = self.total_dim
        g = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
        g = np.where(self.mask, g, 0)
        if hermitian:
            g = (g + g.conj().T) / 2
        return AlgElement(self, g)


def _check_block(spec: AlgebraSpec, data: np.ndarray, mask: np.ndarray, what: str) -> np.ndarray:
    off = np.where(mask, 0, data)
    if off.size and np.abs(off).max() > BLOCK_RTOL * (1.0 + np.abs(data).max()):
        raise SpecMismatch(f"{what} has mass outside the block structure {spec.blocks}")
    return np.where(mask, data, 0).astype(complex)


@dataclass(frozen=True, eq=False)
class AlgElement:
    """An element of a block-diagonal algebra; off-block entries are exactly zero."""

    spec: AlgebraSpec
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=complex)
        d = self.spec.total_dim
        if data.shape != (d, d):
            raise InputError(f"expected a {d}x{d} matrix, got shape {data.shape}")
        data = _check_block(self.spec, data, self.spec.mask, "element")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    def __add__(self, other):
        self._same(other)
        return AlgElement(self.spec, self.data + other.data)

    def __sub__(self, other):
        self._same(other)
        return AlgElement(self.spec, self.data - other.data)

    def __neg__(self):
        return AlgElement(self.spec, -self.data)

    def __mul__(self, c):
        return AlgElement(self.spec, complex(c) * self.data)

    __rmul__ = __mul__

    def __matmul__(self, other):
        self._same(other)
        return AlgElement(self.spec, self.data @ other.data)

    def adjoint(self) -> "AlgElement":
        return AlgElement(self.spec, self.data.conj().T)

    def norm(self) -> float:
        return opnorm(self.data)

    def _same(self, other):
        if not isinstance(other, AlgElement) or other.spec != self.spec:
            raise SpecMismatch("operands live in different algebras")

    def __repr__(self):
        return f"AlgElement(blocks={self.spec.blocks}, data={self.data!r})"


@dataclass(frozen=True, eq=False)
class MatPoint:
    """A level-``n`` matrix over an algebra, stored as an ``(n, n, d, d)`` grid."""

    spec: AlgebraSpec
    grid: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=complex)
        d = self.spec.total_dim
        if g.ndim != 4 or g.shape[0] != g.shape[1] or g.shape[2:] != (d, d) or g.shape[0] < 1:
            raise InputError(f"grid must have shape (n, n, {d}, {d}) with n >= 1, got {g.shape}")
        g = _check_block(self.spec, g, self.spec.mask, "grid entry")
        g.setflags(write=False)
        object.__setattr__(self, "grid", g)

    @classmethod
    def from_flat(cls, spec: AlgebraSpec, flat: np.ndarray) -> "MatPoint":
        flat = np.asarray(flat, dtype=complex)
        d = spec.total_dim
        if flat.ndim != 2 or flat.shape[0] != flat.shape[1] or flat.shape[0] % d or flat.shape[0] == 0:
            raise InputError(f"flat matrix of shape {flat.shape} is not a level-n point over dimension {d}")
        n = flat.shape[0] // d
        return cls(spec, flat.reshape(n, d, n, d).transpose(0, 2, 1, 3))

    @classmethod
    def from_entries(cls, spec: AlgebraSpec, entries) -> "MatPoint":
        """Build from a nested list of :class:`AlgElement` or ``d x d`` arrays."""
        rows = [[e.data if isinstance(e, AlgElement) else np.asarray(e, dtype=complex) for e in row]
                for row in entries]
        return cls(spec, np.array(rows, dtype=complex))

    @property
    def level(self) -> int:
        return self.grid.shape[0]

    @cached_property
    def flat(self) -> np.ndarray:
        n, d = self.level, self.spec.total_dim
        f = self.grid.transpose(0, 2, 1, 3).reshape(n * d, n * d)
        f.setflags(write=False)
        return f

    def entry(self, i: int, j: int) -> AlgElement:
        return AlgElement(self.spec, self.grid[i, j])

    def adjoint(self) -> "MatPoint":
        return MatPoint.from_flat(self.spec, self.flat.conj().T)

    def norm(self) -> float:
        return opnorm(self.flat)

    def __add__(self, other: "MatPoint") -> "MatPoint":
        _same_shape(self, other)
        return MatPoint(self.spec, self.grid + other.grid)

    def __sub__(self, other: "MatPoint") -> "MatPoint":
        _same_shape(self, other)
        return MatPoint(self.spec, self.grid - other.grid)

    def __mul__(self, c) -> "MatPoint":
        return MatPoint(self.spec, complex(c) * self.grid)

    __rmul__ = __mul__

    def __matmul__(self, other: "MatPoint") -> "MatPoint":
        _same_shape(self, other)
        return MatPoint.from_flat(self.spec, self.flat @ other.flat)

    def inverse(self) -> "MatPoint":
        return MatPoint.from_flat(self.spec, checked_inverse(self.flat, "point"))

    def __repr__(self):
        return f"MatPoint(blocks={self.spec.blocks}, level={self.level})"


def _same_shape(x: MatPoint, y: MatPoint):
    if x.spec != y.spec or x.level != y.level:
        raise SpecMismatch("points differ in algebra or level")


def identity(spec: AlgebraSpec, n: int) -> MatPoint:
    return MatPoint.from_flat(spec, np.eye(n * spec.total_dim, dtype=complex))


def imaginary_part(X: MatPoint) -> MatPoint:
    """``(X - X*)/(2i)``, symmetrized exactly."""
    f = X.flat
    h = (f - f.conj().T) / 2j
    return MatPoint.from_flat(X.spec, (h + h.conj().T) / 2)


def real_part(X: MatPoint) -> MatPoint:
    f = X.flat
    h = (f + f.conj().T) / 2
    return MatPoint.from_flat(X.spec, (h + h.conj().T) / 2)


@dataclass(frozen=True)
class RegionReport:
    in_open_uhp: bool
    in_closed_uhp: bool
    in_ball: bool
    in_closed_rhp: bool
    min_im_eigenvalue: float
    operator_norm: float
    min_re_eigenvalue: float


def classify_region(X: MatPoint, tol: float = TOL_PSD) -> RegionReport:
    """Locate ``X`` relative to the half planes and the unit ball.

    Strict inequalities must hold with room ``tol``; closed ones may fail by
    at most ``tol``.
    """
    if tol < 0:
        raise InputError("tol must be non-negative")
    im_min = float(np.linalg.eigvalsh(imaginary_part(X).flat)[0])
    re_min = float(np.linalg.eigvalsh(real_part(X).flat)[0])
    nrm = X.norm()
    return RegionReport(
        in_open_uhp=im_min > tol,
        in_closed_uhp=im_min >= -tol,
        in_ball=1.0 - nrm > tol,
        in_closed_rhp=re_min >= -tol,
        min_im_eigenvalue=im_min,
        operator_norm=nrm,
        min_re_eigenvalue=re_min,
    )


def amplify(b: AlgElement, n: int) -> MatPoint:
    """``b (x) I_n``: ``b`` on the grid diagonal, zero elsewhere."""
    if n < 1:
        raise InputError("level must be at least 1")
    grid = np.zeros((n, n) + b.data.shape, dtype=complex)
    for i in range(n):
        grid[i, i] = b.data
    return MatPoint(b.spec, grid)


def direct_sum(*points: MatPoint) -> MatPoint:
    spec = points[0].spec
    if any(p.spec != spec for p in points):
        raise SpecMismatch("direct sum of points over different algebras")
    n = sum(p.level for p in points)
    grid = np.zeros((n, n) + points[0].grid.shape[2:], dtype=complex)
    o = 0
    for p in points:
        grid[o:o + p.level, o:o + p.level] = p.grid
        o += p.level
    return MatPoint(spec, grid)


def scalar_action(gamma: np.ndarray, d: int) -> np.ndarray:
    """Flat form of a scalar (rectangular) matrix acting on the grid index."""
    return np.kron(np.asarray(gamma, dtype=complex), np.eye(d))


def intertwining_residual(gamma: np.ndarray, X: MatPoint, Y: MatPoint) -> float:
    """``||Gamma X - Y Gamma||`` on flat forms."""
    g = scalar_action(gamma, X.spec.total_dim)
    return opnorm(g @ X.flat - Y.flat @ g)


def _gaussian_over(spec: AlgebraSpec, n: int, rng: np.random.Generator) -> np.ndarray:
    m = n * spec.total_dim
    g = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2)
    return np.where(spec.level_mask(n), g, 0)


def sample_uhp(spec: AlgebraSpec, n: int, margin: float = 0.1, seed=0,
               imag_scale: float = 1.0) -> MatPoint:
    """Random point ``H + iP`` of the upper half plane over ``spec``.

    ``H`` is a Hermitian Gaussian matrix over the algebra and
    ``P = imag_scale**2 * G*G + margin*I`` with ``G`` Gaussian over the
    algebra, so ``Im Z >= margin``.  ``seed`` may be an int or a
    :class:`numpy.random.Generator`.
    """
    if margin <= 0:
        raise InputError("margin must be positive")
    if n < 1:
        raise InputError("level must be at least 1")
    rng = np.random.default_rng(seed)
    h = _gaussian_over(spec, n, rng)
    h = (h + h.conj().T) / 2
    g = imag_scale * _gaussian_over(spec, n, rng)
    p = g.conj().T @ g + margin * np.eye(n * spec.total_dim)
    p = (p + p.conj().T) / 2
    return MatPoint.from_flat(spec, h + 1j * p)


def sample_ball(spec: AlgebraSpec, n: int, radius: float = 0.95, seed=0) -> MatPoint:
    """Random point over ``spec`` with operator norm ``radius * u``, ``u`` uniform in (0, 1]."""
    rng = np.random.default_rng(seed)
    g = _gaussian_over(spec, n, rng)
    nrm = opnorm(g)
    scale = radius * (1.0 - rng.uniform(0.0, 1.0)) / nrm
    return MatPoint.from_flat(spec, g * scale)


def _random_unitary(m: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def make_intertwiner_cases(X: MatPoint, seed=0) -> list[tuple[MatPoint, MatPoint, np.ndarray]]:
    """Triples ``(X', Y, Gamma)`` with ``Gamma X' = Y Gamma`` by construction.

    Cases emitted, in order: the trivial ``S = I``; a direct sum
    ``Y = X + X_extra`` with the injection ``[I; 0]``; a unitary similarity;
    a non-unitary similarity (only if ``Y`` stays in the open upper half
    plane whenever ``X`` is in it); and an injection into a unitarily rotated
    direct sum.
    """
    rng = np.random.default_rng(seed)
    spec, n, d = X.spec, X.level, X.spec.total_dim
    cases = [(X, X, np.eye(n, dtype=complex))]

    extra = sample_uhp(spec, int(rng.integers(1, 3)), margin=0.5, seed=rng)
    Y = direct_sum(X, extra)
    inj = np.vstack([np.eye(n), np.zeros((extra.level, n))]).astype(complex)
    cases.append((X, Y, inj))

    U = _random_unitary(n, rng)
    Uf = scalar_action(U, d)
    cases.append((X, MatPoint.from_flat(spec, Uf @ X.flat @ Uf.conj().T), U))

    in_uhp = classify_region(X).in_open_uhp
    eps = 0.3
    for _ in range(6):
        S = np.eye(n) + eps * (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2 * n)
        Sf = scalar_action(S, d)
        Yf = Sf @ X.flat @ np.linalg.inv(Sf)
        Ys = MatPoint.from_flat(spec, Yf)
        if not in_uhp or classify_region(Ys).in_open_uhp:
            cases.append((X, Ys, S))
            break
        eps /= 2

    m = Y.level
    U2 = _random_unitary(m, rng)
    U2f = scalar_action(U2, d)
    Y2 = MatPoint.from_flat(spec, U2f @ Y.flat @ U2f.conj().T)
    cases.append((X, Y2, U2 @ inj))
    return cases


def components(X: MatPoint) -> list[np.ndarray]:
    """Split a point over a diagonal algebra ``C^m`` into ``m`` scalar ``n x n`` matrices."""
    if not X.spec.is_diagonal:
        raise SpecMismatch("components are defined only over diagonal algebras")
    return [X.grid[:, :, k, k].copy() for k in range(X.spec.total_dim)]


def from_components(mats: Sequence[np.ndarray]) -> MatPoint:
    """Inverse of :func:`components`."""
    mats = [np.asarray(m, dtype=complex) for m in mats]
    n = mats[0].shape[0]
    spec = AlgebraSpec((1,) * len(mats))
    grid = np.zeros((n, n, len(mats), len(mats)), dtype=complex)
    for k, m in enumerate(mats):
        if m.shape != (n, n):
            raise InputError("component matrices must share a square shape")
        grid[:, :, k, k] = m
    return MatPoint(spec, grid)
