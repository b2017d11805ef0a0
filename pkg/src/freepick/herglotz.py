"""Cayley transforms, Herglotz representations and the Nevanlinna extraction.

Herglotz data ``(T, L, V)`` describe a map from the ball over ``B1`` into the
right half plane over ``B2``::

    h(X) = (V* (x) I) (L (x) I - X)^-1 (L (x) I + X) (V (x) I)

where ``L`` is a unitary on ``C^{d'}`` with ``d' = q * dim(B1)`` and ``X``
acts through the unital embedding ``b -> kron(b, I_q)``.  The associated
Pick function is ``f(Z) = T + i h(cayley(Z))``.

Extraction splits ``L = 1 + L0`` along ``ker(1 - L)`` and rewrites ``f`` as::

    f(Z) = C + W* (A - P Z P*)^-1 W

with ``A = i (1 + L0)(1 - L0)^-1`` Hermitian, ``P`` the coisometry onto
``ker(1 - L)^perp``, ``W = 2 (1 - L0*)^-1 P V`` and ``C = T - (PV)* A (PV)``.
The function is a Cauchy transform exactly when ``C = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla

from .algebra import (AlgebraSpec, AlgElement, MatPoint, TOL_PSD, checked_inverse, classify_region,
                      hermitize, opnorm, _random_unitary)
from .cpmaps import generated_span
from .errors import (DomainError, InputError, RangeNotPerpendicular, SingularCompression,
                     SpecMismatch)

TOL_KER = 1e-8


def cayley(Z: MatPoint) -> MatPoint:
    """``(Z + i)^-1 (Z - i)``, mapping the upper half plane into the open ball."""
    reg = classify_region(Z)
    if not reg.in_open_uhp:
        raise DomainError(f"Im Z is not strictly positive (min eigenvalue {reg.min_im_eigenvalue:.3e})")
    f = np.asarray(Z.flat)
    eye = np.eye(f.shape[0])
    return MatPoint.from_flat(Z.spec, checked_inverse(f + 1j * eye, "Z + i") @ (f - 1j * eye))


def inverse_cayley(Lam: MatPoint) -> MatPoint:
    """``i (I + Lam)(I - Lam)^-1``."""
    reg = classify_region(Lam)
    if not reg.in_ball:
        raise DomainError(f"||Lambda|| = {reg.operator_norm:.6f} is not below 1")
    f = np.asarray(Lam.flat)
    eye = np.eye(f.shape[0])
    return MatPoint.from_flat(Lam.spec, 1j * (eye + f) @ checked_inverse(eye - f, "I - Lambda"))


def embed(flat: np.ndarray, q: int) -> np.ndarray:
    """Amplified embedding ``b -> kron(b, I_q)`` applied to a flat point."""
    return np.kron(flat, np.eye(q))


@dataclass(frozen=True, eq=False)
class HerglotzData:
    """``(T, L, V)`` with ``T`` Hermitian in ``out_spec`` and ``L`` unitary on ``C^{d'}``."""

    T: np.ndarray
    L: np.ndarray
    V: np.ndarray
    in_spec: AlgebraSpec
    out_spec: AlgebraSpec

    def __post_init__(self):
        T = hermitize(self.T, "T")
        L = np.asarray(self.L, dtype=complex)
        V = np.asarray(self.V, dtype=complex)
        d_in, d_out = self.in_spec.total_dim, self.out_spec.total_dim
        dp = L.shape[0]
        if L.shape != (dp, dp) or dp % d_in:
            raise InputError(f"L must be square with size a multiple of {d_in}, got {L.shape}")
        if V.shape != (dp, d_out):
            raise InputError(f"V must have shape {(dp, d_out)}, got {V.shape}")
        if T.shape != (d_out, d_out):
            raise InputError(f"T must be {d_out}x{d_out}")
        if opnorm(L.conj().T @ L - np.eye(dp)) > 1e-10:
            raise InputError("L is not unitary")
        T = AlgElement(self.out_spec, T).data
        for name, val in (("T", T), ("L", L), ("V", V)):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def q(self) -> int:
        return self.L.shape[0] // self.in_spec.total_dim

    def range_defect(self, depth: int = 3) -> float:
        """Largest off-block mass of ``V* x V`` over an orthonormal basis of words in
        ``L``, ``L*`` and the embedded matrix units of ``in_spec``."""
        gens = [self.L, self.L.conj().T] + [embed(e.data, self.q) for e in self.in_spec.basis()]
        basis = generated_span(gens, depth)
        mask = self.out_spec.mask
        worst = 0.0
        for x in basis:
            y = self.V.conj().T @ x @ self.V
            worst = max(worst, float(np.abs(np.where(mask, 0, y)).max(initial=0.0)))
        return worst


def herglotz_eval(data: HerglotzData, X: MatPoint) -> MatPoint:
    """Value of the Herglotz map at a strict contraction over ``in_spec``."""
    if X.spec != data.in_spec:
        raise SpecMismatch("point does not live over the input algebra")
    reg = classify_region(X)
    if not reg.in_ball:
        raise DomainError(f"||X|| = {reg.operator_norm:.6f} is not below 1")
    n = X.level
    Ln = np.kron(np.eye(n), data.L)
    Xe = embed(np.asarray(X.flat), data.q)
    Vn = np.kron(np.eye(n), data.V)
    r = checked_inverse(Ln - Xe, "L - X") @ (Ln + Xe)
    return MatPoint.from_flat(data.out_spec, Vn.conj().T @ r @ Vn)


def pick_value(data: HerglotzData, Z: MatPoint) -> MatPoint:
    """``T (x) I + i h(cayley(Z))``."""
    h = herglotz_eval(data, cayley(Z))
    return MatPoint.from_flat(data.out_spec, np.kron(np.eye(Z.level), data.T) + 1j * np.asarray(h.flat))


@dataclass(frozen=True, eq=False)
class KernelSplit:
    """Orthogonal splitting of ``C^{d'}`` along ``ker(1 - L)``.

    ``coisometry`` has orthonormal rows spanning ``ker(1 - L)^perp``;
    ``projection = coisometry* coisometry``.  ``eigenvalues`` are the
    eigenvalues of ``L`` (the discrete stand-in for its spectral measure).
    """

    projection: np.ndarray
    coisometry: np.ndarray
    L0: np.ndarray
    kernel_dim: int
    eigenvalues: np.ndarray

    @property
    def P(self) -> np.ndarray:
        return self.projection


def kernel_split(L: np.ndarray, tol_ker: float = TOL_KER) -> KernelSplit:
    """Eigenvectors of ``L`` with ``|lambda - 1| <= tol_ker`` span the kernel."""
    L = np.asarray(L, dtype=complex)
    # complex Schur form of a normal matrix is diagonal with orthonormal vectors
    T, U = sla.schur(L, output="complex")
    lam = np.diag(T).copy()
    ker = np.abs(lam - 1) <= tol_ker
    Q = U[:, ~ker]
    co = Q.conj().T
    L0 = co @ L @ Q
    return KernelSplit(Q @ co, co, L0, int(ker.sum()), lam)


def check_range_perp(V: np.ndarray, split: KernelSplit, tol: float = 1e-8) -> bool:
    """``||(I - P*P) V|| <= tol``: the range of ``V`` misses ``ker(1 - L)``."""
    V = np.asarray(V)
    return opnorm(V - split.projection @ V) <= tol


@dataclass(frozen=True, eq=False)
class NevanlinnaData:
    A: np.ndarray
    P: np.ndarray
    W: np.ndarray
    C: np.ndarray
    is_cauchy: bool
    in_spec: AlgebraSpec
    out_spec: AlgebraSpec

    @property
    def q(self) -> int:
        return self.P.shape[1] // self.in_spec.total_dim


def extract(data: HerglotzData, tol: float = 1e-9, tol_ker: float = TOL_KER) -> NevanlinnaData:
    """Rewrite Herglotz data as ``C + W* (A - P Z P*)^-1 W``.

    Raises :class:`RangeNotPerpendicular` when ``V`` meets ``ker(1 - L)``,
    which is the finite-dimensional form of ``liminf |s f(is)| = infinity``.
    """
    split = kernel_split(data.L, tol_ker)
    if not check_range_perp(data.V, split, 1e-8 * max(1.0, opnorm(data.V))):
        raise RangeNotPerpendicular(
            "liminf condition violated: range of V is not perpendicular to ker(1 - L)")
    c = split.L0.shape[0]
    eye = np.eye(c)
    if c and np.abs(np.linalg.eigvals(split.L0) - 1).min() < tol_ker:
        raise SingularCompression("compressed unitary has an eigenvalue at 1")
    A = hermitize(1j * (eye + split.L0) @ np.linalg.inv(eye - split.L0), "A") if c else np.zeros((0, 0), complex)
    V0 = split.coisometry @ data.V
    W = 2 * np.linalg.solve(eye - split.L0.conj().T, V0) if c else np.zeros((0, data.V.shape[1]), complex)
    C = data.T - V0.conj().T @ A @ V0
    C = AlgElement(data.out_spec, hermitize(C, "C")).data
    return NevanlinnaData(A, split.coisometry, W, C, bool(opnorm(C) <= tol), data.in_spec, data.out_spec)


def nev_eval(nd: NevanlinnaData, Z: MatPoint) -> MatPoint:
    """``C (x) I + (W* (x) I)(A (x) I - P Z P*)^-1 (W (x) I)`` on the open upper half plane."""
    if Z.spec != nd.in_spec:
        raise SpecMismatch("point does not live over the input algebra")
    reg = classify_region(Z, TOL_PSD)
    if not reg.in_open_uhp:
        raise DomainError(f"Im Z is not strictly positive (min eigenvalue {reg.min_im_eigenvalue:.3e})")
    n = Z.level
    out = np.kron(np.eye(n), nd.C).astype(complex)
    if nd.A.shape[0]:
        Pn = np.kron(np.eye(n), nd.P)
        zpsi = Pn @ embed(np.asarray(Z.flat), nd.q) @ Pn.conj().T
        Wn = np.kron(np.eye(n), nd.W)
        r = checked_inverse(np.kron(np.eye(n), nd.A) - zpsi, "A - P Z P*")
        out = out + Wn.conj().T @ r @ Wn
    return MatPoint.from_flat(nd.out_spec, out)


def herglotz_from_nevanlinna(A: np.ndarray, W: np.ndarray, C: np.ndarray, in_spec: AlgebraSpec,
                             out_spec: AlgebraSpec, Q: np.ndarray | None = None) -> HerglotzData:
    """Herglotz data whose extraction yields ``(A, W, C)`` up to a change of basis.

    ``Q`` is an isometry ``C^c -> C^{d'}`` placing the compressed space; by
    default ``d' = c`` and ``Q = I`` (so ``in_spec`` must then divide ``c``).
    ``L = Q L0 Q* + (I - Q Q*)`` with ``L0 = (A - i)(A + i)^-1``.
    """
    A = hermitize(A, "A")
    c = A.shape[0]
    Q = np.eye(c, dtype=complex) if Q is None else np.asarray(Q, dtype=complex)
    dp = Q.shape[0]
    L0 = (A - 1j * np.eye(c)) @ np.linalg.inv(A + 1j * np.eye(c))
    L = Q @ L0 @ Q.conj().T + np.eye(dp) - Q @ Q.conj().T
    V0 = 0.5 * (np.eye(c) - L0.conj().T) @ np.asarray(W, dtype=complex)
    T = np.asarray(C, dtype=complex) + V0.conj().T @ A @ V0
    return HerglotzData(T, L, Q @ V0, in_spec, out_spec)


def herglotz_from_classical(atoms, weights, extra_kernel: int = 0, seed=0) -> HerglotzData:
    """Herglotz data of ``z -> sum w_i / (t_i - z)`` over ``B = C``.

    ``extra_kernel`` adds that many eigenvalue-1 directions to ``L`` (in a
    randomly rotated basis) which the extraction must strip again.
    """
    t = np.asarray(atoms, dtype=float)
    w = np.asarray(weights, dtype=float)
    k = t.size
    rng = np.random.default_rng(seed)
    U = _random_unitary(k + extra_kernel, rng)
    Q = U[:, :k]
    B = AlgebraSpec((1,))
    return herglotz_from_nevanlinna(np.diag(t), np.sqrt(w)[:, None], np.zeros((1, 1)), B, B, Q)


_IN_BLOCKS = [(1,), (2,), (1, 1), (3,), (1, 2), (1, 1, 1)]
_OUT_BLOCKS = [(1,), (2,), (1, 1), (1, 2), (3,)]


def random_herglotz_data(seed=0, max_dim: int = 8, overlap: bool = False) -> HerglotzData:
    """Random Herglotz data with ``d' <= max_dim`` and ``range V`` orthogonal to ``ker(1 - L)``.

    The ambient space ``C^{d'} = C^d (x) C^q`` is cut into one
    ``kron(b, I)``-invariant piece per output block; ``L`` and the matching
    column block of ``V`` live on that piece, so ``V* x V`` lands in the
    output algebra for every ``x`` generated by ``L`` and the embedded input
    algebra.  With ``overlap=True`` one column of ``V`` receives a component
    inside ``ker(1 - L)`` (a kernel direction is then forced to exist).
    """
    rng = np.random.default_rng(seed)
    while True:
        bin_ = _IN_BLOCKS[int(rng.integers(len(_IN_BLOCKS)))]
        bout = _OUT_BLOCKS[int(rng.integers(len(_OUT_BLOCKS)))]
        d = sum(bin_)
        if d * len(bout) <= max_dim:
            break
    in_spec, out_spec = AlgebraSpec(bin_), AlgebraSpec(bout)
    nblk = len(bout)
    qs = [1] * nblk
    while d * (sum(qs) + 1) <= max_dim and rng.uniform() < 0.6:
        qs[int(rng.integers(nblk))] += 1
    q = sum(qs)
    dp = d * q
    L = np.zeros((dp, dp), dtype=complex)
    V = np.zeros((dp, out_spec.total_dim), dtype=complex)
    betas = np.cumsum([0] + qs)
    col = np.cumsum((0,) + bout)
    forced = int(rng.integers(nblk)) if overlap else -1
    for j in range(nblk):
        idx = np.array([a * q + b for a in range(d) for b in range(betas[j], betas[j + 1])])
        m = idx.size
        kdim = int(rng.integers(0, min(2, m - 1) + 1)) if m > 1 else 0
        if j == forced:
            kdim = max(kdim, 1)
        phases = rng.uniform(0.15, 2 * np.pi - 0.15, m)
        lam = np.exp(1j * phases)
        lam[:kdim] = 1.0
        U = _random_unitary(m, rng)
        L[np.ix_(idx, idx)] = U @ np.diag(lam) @ U.conj().T
        r = bout[j]
        g = rng.standard_normal((m - kdim, r)) + 1j * rng.standard_normal((m - kdim, r))
        vj = U[:, kdim:] @ g / np.sqrt(2 * m)
        if j == forced:
            vj[:, 0] += U[:, 0] * (0.5 + rng.uniform())
        V[np.ix_(idx, np.arange(col[j], col[j + 1]))] = vj
    T = out_spec.random_element(rng, hermitian=True).data
    return HerglotzData(T, L, V, in_spec, out_spec)


def remove_overlap(data: HerglotzData, tol_ker: float = TOL_KER) -> HerglotzData:
    """Project the columns of ``V`` off ``ker(1 - L)``."""
    split = kernel_split(data.L, tol_ker)
    return HerglotzData(data.T, data.L, split.projection @ data.V, data.in_spec, data.out_spec)
