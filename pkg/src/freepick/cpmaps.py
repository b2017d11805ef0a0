"""Linear maps between block-diagonal algebras and their positivity certificates.

Maps are stored as matrices acting on column-stacked vectorizations
(``vec(x) = x.reshape(-1, order="F")``) of the enveloping ``d x d``
matrices.  Every map built here is pre-composed with the block pinching of
its domain, so its Choi matrix over the enveloping ``M_d`` certifies
complete positivity on the block algebra itself.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .algebra import AlgebraSpec, AlgElement, MatPoint, opnorm, BLOCK_RTOL
from .errors import InputError, SpecMismatch


def vec(x: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(x).reshape(-1, order="F")


def unvec(v: np.ndarray, d: int) -> np.ndarray:
    return np.asarray(v).reshape(d, d, order="F")


@dataclass(frozen=True)
class MapFlags:
    unital: bool = False
    cp_verified: bool = False
    homomorphic_on: tuple | None = None


@dataclass(frozen=True, eq=False)
class LinMap:
    """Linear map ``dom -> cod`` given by a ``(d_cod**2, d_dom**2)`` matrix."""

    dom: AlgebraSpec
    cod: AlgebraSpec
    matrix: np.ndarray
    flags: MapFlags = field(default_factory=MapFlags)

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        dd, dc = self.dom.total_dim, self.cod.total_dim
        if m.shape != (dc * dc, dd * dd):
            raise InputError(f"map matrix must have shape {(dc * dc, dd * dd)}, got {m.shape}")
        # zero the columns of off-block inputs (pinching) and check the outputs
        m = m * vec(self.dom.mask)[None, :]
        out_mask = vec(self.cod.mask)
        off = m[~out_mask]
        if off.size and np.abs(off).max() > BLOCK_RTOL * (1.0 + np.abs(m).max()):
            raise SpecMismatch("map output leaves the block structure of the codomain")
        m = m * out_mask[:, None]
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def from_function(cls, dom: AlgebraSpec, cod: AlgebraSpec,
                      fn: Callable[[np.ndarray], np.ndarray], flags: MapFlags | None = None) -> "LinMap":
        """Tabulate ``fn`` (acting on ``d_dom x d_dom`` arrays) on the block matrix units."""
        dd, dc = dom.total_dim, cod.total_dim
        m = np.zeros((dc * dc, dd * dd), dtype=complex)
        for a, b in zip(*np.nonzero(dom.mask)):
            e = np.zeros((dd, dd), dtype=complex)
            e[a, b] = 1.0
            m[:, a + b * dd] = vec(np.asarray(fn(e), dtype=complex))
        return cls(dom, cod, m, flags or MapFlags())

    def with_flags(self, **kw) -> "LinMap":
        f = MapFlags(**{**self.flags.__dict__, **kw})
        return LinMap(self.dom, self.cod, self.matrix, f)

    def __call__(self, x: AlgElement) -> AlgElement:
        return apply(self, x)

    def __mul__(self, c) -> "LinMap":
        return LinMap(self.dom, self.cod, complex(c) * self.matrix)

    __rmul__ = __mul__

    def __add__(self, other: "LinMap") -> "LinMap":
        if (self.dom, self.cod) != (other.dom, other.cod):
            raise SpecMismatch("cannot add maps between different algebras")
        return LinMap(self.dom, self.cod, self.matrix + other.matrix)


def identity_map(spec: AlgebraSpec) -> LinMap:
    return LinMap.from_function(spec, spec, lambda x: x, MapFlags(unital=True, cp_verified=True))


def zero_map(dom: AlgebraSpec, cod: AlgebraSpec) -> LinMap:
    return LinMap(dom, cod, np.zeros((cod.total_dim ** 2, dom.total_dim ** 2), dtype=complex))


def compose(f: LinMap, g: LinMap) -> LinMap:
    """``f o g``."""
    if g.cod != f.dom:
        raise SpecMismatch("composition of incompatible maps")
    return LinMap(g.dom, f.cod, f.matrix @ g.matrix)


def compression(dom: AlgebraSpec, cod: AlgebraSpec, K: np.ndarray) -> LinMap:
    """``x -> K* x K`` with ``K`` of shape ``(d_dom, d_cod)``."""
    K = np.asarray(K, dtype=complex)
    return LinMap.from_function(dom, cod, lambda x: K.conj().T @ x @ K)


def pinching(spec: AlgebraSpec) -> LinMap:
    """Trace-preserving conditional expectation ``M_d -> spec`` (zero the off-block entries)."""
    full = AlgebraSpec((spec.total_dim,))
    return LinMap.from_function(full, spec, lambda x: np.where(spec.mask, x, 0),
                                MapFlags(unital=True, cp_verified=True))


def apply(map: LinMap, x: AlgElement) -> AlgElement:
    if x.spec != map.dom:
        raise SpecMismatch(f"map domain {map.dom.blocks} does not match element algebra {x.spec.blocks}")
    return AlgElement(map.cod, unvec(map.matrix @ vec(x.data), map.cod.total_dim))


def apply_flat(map: LinMap, flat: np.ndarray) -> np.ndarray:
    """``(map (x) id_n)`` on flat ``n d_dom`` square matrices; returns the flat image.

    Leading dimensions of ``flat`` are treated as a batch.
    """
    dd, dc = map.dom.total_dim, map.cod.total_dim
    lead = flat.shape[:-2]
    n = flat.shape[-1] // dd
    grid = flat.reshape(lead + (n, dd, n, dd))
    grid = np.moveaxis(grid, (-4, -3, -2, -1), (-4, -1, -3, -2))   # (i, j, b, a): column-stacked entries
    v = grid.reshape(lead + (n, n, dd * dd)) @ map.matrix.T
    out = v.reshape(lead + (n, n, dc, dc))
    out = np.moveaxis(out, (-4, -3, -2, -1), (-4, -2, -1, -3))     # (i, a, j, b)
    return out.reshape(lead + (n * dc, n * dc))


def apply_amplified(map: LinMap, X: MatPoint) -> MatPoint:
    """Entrywise application on the grid of ``X``; the level is preserved."""
    if X.spec != map.dom:
        raise SpecMismatch(f"map domain {map.dom.blocks} does not match point algebra {X.spec.blocks}")
    return MatPoint.from_flat(map.cod, apply_flat(map, np.asarray(X.flat)))


@dataclass(frozen=True, eq=False)
class ChoiMatrix:
    data: np.ndarray
    min_eigenvalue: float
    hermitian_defect: float


def choi(map: LinMap) -> ChoiMatrix:
    """``sum_ab E_ab (x) map(E_ab)`` over the matrix units of the enveloping ``M_{d_dom}``."""
    dd, dc = map.dom.total_dim, map.cod.total_dim
    c = np.zeros((dd * dc, dd * dc), dtype=complex)
    for a in range(dd):
        for b in range(dd):
            c[a * dc:(a + 1) * dc, b * dc:(b + 1) * dc] = unvec(map.matrix[:, a + b * dd], dc)
    defect = opnorm(c - c.conj().T)
    h = (c + c.conj().T) / 2
    return ChoiMatrix(h, float(np.linalg.eigvalsh(h)[0]), defect)


def is_completely_positive(map: LinMap, tol: float = 1e-9) -> bool:
    c = choi(map)
    return c.hermitian_defect <= tol and c.min_eigenvalue >= -tol


def kraus_operators(map: LinMap, tol: float = 1e-12) -> list[np.ndarray]:
    """Diagnostic Kraus family ``map(x) = sum K x K*`` from the Choi eigendecomposition.

    Operators have shape ``(d_cod, d_dom)``.  Only meaningful for CP maps.
    """
    c = choi(map)
    dd, dc = map.dom.total_dim, map.cod.total_dim
    w, v = np.linalg.eigh(c.data)
    return [np.sqrt(lam) * v[:, k].reshape(dd, dc).T for k, lam in enumerate(w) if lam > tol]


def is_unital(map: LinMap, tol: float = 1e-9) -> bool:
    return opnorm(apply(map, map.dom.unit()).data - np.eye(map.cod.total_dim)) <= tol


def _orthonormal_span(mats: np.ndarray, existing: np.ndarray | None, rtol: float = 1e-10) -> np.ndarray:
    """Orthonormal (Frobenius) basis for span(mats) modulo span(existing); rows are vec'd matrices."""
    if mats.shape[0] == 0:
        return mats
    v = mats.reshape(mats.shape[0], -1)
    if existing is not None and existing.shape[0]:
        v = v - (v @ existing.conj().T) @ existing
        v = v - (v @ existing.conj().T) @ existing
    u, s, vh = np.linalg.svd(v, full_matrices=False)
    keep = s > rtol * max(1.0, np.abs(mats).max())
    return vh[keep]


def generated_span(generators: Sequence[np.ndarray], depth: int) -> np.ndarray:
    """Orthonormal basis of the span of all words of length ``1..depth`` in ``generators``.

    Returned as an array of shape ``(k, d, d)``.
    """
    gens = np.array([np.asarray(g, dtype=complex) for g in generators])
    d = gens.shape[-1]
    basis = _orthonormal_span(gens, None)
    level = basis
    for _ in range(depth - 1):
        if level.shape[0] == 0:
            break
        prods = np.einsum("kab,gbc->kgac", level.reshape(-1, d, d), gens).reshape(-1, d, d)
        level = _orthonormal_span(prods, basis)
        basis = np.vstack([basis, level])
    return basis.reshape(-1, d, d)


@dataclass(frozen=True)
class HomomorphyReport:
    passed: bool
    max_product_residual: float
    max_adjoint_residual: float
    span_dim: int


def homomorphy_report(map: LinMap, generators: Sequence[AlgElement], depth: int = 4,
                      tol: float = 1e-9) -> HomomorphyReport:
    """Multiplicativity and *-compatibility of ``map`` on words of length ``<= depth``.

    By bilinearity it is enough to test pairs from an orthonormal basis of the
    span of such words.
    """
    for g in generators:
        if g.spec != map.dom:
            raise SpecMismatch("generator outside the map's domain")
    basis = generated_span([g.data for g in generators], depth)
    d, dc = map.dom.total_dim, map.cod.total_dim
    img = np.array([unvec(map.matrix @ vec(b), dc) for b in basis])
    prods = np.einsum("iab,jbc->ijac", basis, basis).reshape(-1, d, d)
    img_prod = (np.array([vec(p) for p in prods]) @ map.matrix.T)
    img_prod = img_prod.reshape(len(basis), len(basis), dc, dc, order="C")
    img_prod = img_prod.transpose(0, 1, 3, 2)                      # undo column stacking
    expected = np.einsum("iab,jbc->ijac", img, img)
    norms = np.array([opnorm(b) for b in basis])
    diff = img_prod - expected
    prod_res = 0.0
    ok = True
    for i in range(len(basis)):
        for j in range(len(basis)):
            r = opnorm(diff[i, j])
            prod_res = max(prod_res, r)
            ok &= r <= tol * (1 + norms[i] * norms[j])
    adj_res = 0.0
    for b, im, nb in zip(basis, img, norms):
        r = opnorm(unvec(map.matrix @ vec(b.conj().T), dc) - im.conj().T)
        adj_res = max(adj_res, r)
        ok &= r <= tol * (1 + nb)
    return HomomorphyReport(bool(ok), prod_res, adj_res, len(basis))


def is_homomorphic_on(map: LinMap, generators: Sequence[AlgElement], depth: int = 4,
                      tol: float = 1e-9) -> bool:
    return homomorphy_report(map, generators, depth, tol).passed


def check_dilation_pair(E: LinMap, psi: LinMap, tol: float = 1e-10) -> bool:
    """``E o psi = id`` on a basis of ``psi.dom``."""
    if psi.cod != E.dom or psi.dom != E.cod:
        raise SpecMismatch("E and psi are not composable back to the base algebra")
    for b in psi.dom.basis():
        if (apply(E, apply(psi, b)) - b).norm() > tol * (1 + b.norm()):
            return False
    return True


def range_generators(psi: LinMap, include_unit: bool = True) -> list[AlgElement]:
    """Images of a basis under ``psi`` (plus the unit), generating the subalgebra ``B-hat``."""
    gens = [apply(psi, b) for b in psi.dom.basis()]
    if include_unit:
        gens.append(psi.cod.unit())
    return gens


@dataclass
class TomiyamaReport:
    samples: int
    max_residual: float
    max_projection_residual: float
    tol: float
    passed: bool
    witness: dict | None = None


def _random_word(gens: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    d = gens.shape[-1]
    w = np.eye(d, dtype=complex)
    for _ in range(int(rng.integers(1, 4))):
        c = rng.standard_normal(len(gens)) + 1j * rng.standard_normal(len(gens))
        w = w @ np.tensordot(c, gens, axes=1)
    return w / max(opnorm(w), 1e-300)


def _random_projection(gens: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """A spectral projection of a random Hermitian element of the generated algebra."""
    c = rng.standard_normal(len(gens))
    h = np.tensordot(c, gens + gens.conj().transpose(0, 2, 1), axes=1)
    h = (h + h.conj().T) / 2
    w, v = np.linalg.eigh(h)
    clusters = []
    for k, lam in enumerate(w):
        if clusters and abs(lam - w[clusters[-1][-1]]) <= 1e-8 * (1 + abs(lam)):
            clusters[-1].append(k)
        else:
            clusters.append([k])
    chosen = [c for c in clusters if rng.uniform() < 0.5] or [clusters[0]]
    idx = [k for c in chosen for k in c]
    return v[:, idx] @ v[:, idx].conj().T


def tomiyama_check(E: LinMap, bhat_generators: Sequence[AlgElement], m_samples: int = 100,
                   tol: float = 1e-10, seed=0) -> TomiyamaReport:
    """Check ``E(b1 m b2) = E(b1) E(m) E(b2)`` for ``b1, b2`` in the subalgebra ``B-hat``.

    Samples random normalized ``m`` in the domain and random normalized words
    ``b1, b2`` in the generators.  Also checks the projection step
    ``E(exe) = E(e) E(exe) E(e)`` for spectral projections ``e`` of ``B-hat``
    and positive ``x``.
    """
    if not is_homomorphic_on(E, bhat_generators, 2, max(tol, 1e-9)):
        raise InputError("E is not homomorphic on the given generators")
    rng = np.random.default_rng(seed)
    gens = np.array([g.data for g in bhat_generators])
    dom = E.dom
    ev = lambda x: apply(E, AlgElement(dom, x)).data  # noqa: E731
    worst, worst_p, witness = 0.0, 0.0, None
    for _ in range(m_samples):
        m = dom.random_element(rng).data
        m = m / opnorm(m)
        b1, b2 = _random_word(gens, rng), _random_word(gens, rng)
        r = opnorm(ev(b1 @ m @ b2) - ev(b1) @ ev(m) @ ev(b2))
        if r > worst:
            worst = r
            witness = {"b1": b1, "m": m, "b2": b2}
        e = _random_projection(gens, rng)
        g = dom.random_element(rng).data
        x = g @ g.conj().T
        x = x / opnorm(x)
        exe = ev(e @ x @ e)
        ee = ev(e)
        worst_p = max(worst_p, opnorm(exe - ee @ exe @ ee))
    passed = worst <= tol and worst_p <= tol
    return TomiyamaReport(m_samples, worst, worst_p, tol, passed, None if passed else witness)
