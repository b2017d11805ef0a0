"""Noncommutative Cauchy transforms ``Z -> (E (x) id)[(A (x) I - (psi (x) id)(Z))^-1]``.

A :class:`CauchyModel` bundles a Hermitian ``A`` in an algebra ``M``, a
unital completely positive ``E: M -> B`` and a completely positive
``psi: B -> M`` with ``E o psi = id``.  When ``E`` is multiplicative on the
algebra generated by the range of ``psi`` the model is *homomorphic* and the
transform satisfies ``s f(sZ) -> -Z^-1``.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.polynomial import chebyshev
from scipy.stats import qmc

from .algebra import (AlgebraSpec, AlgElement, MatPoint, TOL_PSD, checked_inverse, classify_region,
                      hermitize, opnorm, _random_unitary)
from .cpmaps import (LinMap, MapFlags, apply_flat, check_dilation_pair, is_completely_positive,
                     is_homomorphic_on, is_unital, range_generators)
from .errors import DomainError, IllConditionedFit, InputError, SingularResolvent, SpecMismatch

log = logging.getLogger(__name__)

#: Noncommutative rational expressions for the two components of the
#: counterexample transform over ``C^2`` (variables are the two coordinates).
COUNTEREXAMPLE_EXPRESSIONS = ("-inv(Z1)", "-inv(Z2)*inv(1 - 2*inv(Z1+Z2)*inv(Z2))")


class ModelError(InputError):
    """The data do not form a valid Cauchy model."""


@dataclass(frozen=True, eq=False)
class CauchyModel:
    """Representation data ``(B, M, A, E, psi)``.

    Use :meth:`build` to validate and certify; the raw constructor trusts its
    inputs (this is how deliberately broken models are loaded for negative
    tests).
    """

    A: AlgElement
    E: LinMap
    psi: LinMap
    homomorphic_certified: bool = False

    @property
    def B(self) -> AlgebraSpec:
        return self.E.cod

    @property
    def M(self) -> AlgebraSpec:
        return self.E.dom

    @classmethod
    def build(cls, A, E: LinMap, psi: LinMap, *, tol: float = 1e-10, certify: bool = True) -> "CauchyModel":
        """Validate ``(A, E, psi)`` and certify homomorphy of ``E`` on ``alg(range psi)``.

        ``psi`` must be completely positive but need not be unital; a
        non-unital ``psi`` is exactly how a model can satisfy ``E o psi = id``
        without ``E`` being multiplicative on the range of ``psi``.
        """
        if E.dom != psi.cod or E.cod != psi.dom:
            raise ModelError("E must map M -> B and psi must map B -> M")
        a = A.data if isinstance(A, AlgElement) else np.asarray(A, dtype=complex)
        A = AlgElement(E.dom, hermitize(a, "A"))
        if not (is_completely_positive(E, 1e-9) and is_unital(E, tol)):
            raise ModelError("E must be completely positive and unital")
        if not is_completely_positive(psi, 1e-9):
            raise ModelError("psi must be completely positive")
        if not check_dilation_pair(E, psi, tol):
            raise ModelError("E o psi is not the identity")
        hom = False
        gens = range_generators(psi)
        if certify:
            hom = is_homomorphic_on(E, gens, depth=4, tol=1e-9)
        E = E.with_flags(unital=True, cp_verified=True,
                         homomorphic_on=tuple(gens) if hom else None)
        psi = psi.with_flags(unital=is_unital(psi, tol), cp_verified=True)
        return cls(A, E, psi, hom)

    @property
    def psi_unital(self) -> bool:
        return is_unital(self.psi, 1e-10)


def _resolvent_flat(model: CauchyModel, zflat: np.ndarray, what="A (x) I - psi(Z)") -> np.ndarray:
    n = zflat.shape[0] // model.B.total_dim
    k = np.kron(np.eye(n), model.A.data) - apply_flat(model.psi, zflat)
    return checked_inverse(k, what)


def evaluate(model: CauchyModel, Z: MatPoint, tol: float = TOL_PSD) -> MatPoint:
    """Value of the Cauchy transform at a point of the open upper half plane."""
    if Z.spec != model.B:
        raise SpecMismatch(f"point lives over {Z.spec.blocks}, model base is {model.B.blocks}")
    reg = classify_region(Z, tol)
    if not reg.in_open_uhp:
        raise DomainError(f"Im Z is not strictly positive (min eigenvalue {reg.min_im_eigenvalue:.3e})")
    r = _resolvent_flat(model, np.asarray(Z.flat))
    return MatPoint.from_flat(model.B, apply_flat(model.E, r))


@dataclass
class AsymptoticReport:
    s_grid: list
    residuals: list
    slope: float
    verdict: str
    floor: float = 0.0

    def rows(self):
        return list(zip(self.s_grid, self.residuals))


def asymptotic_residual(model: CauchyModel, Z: MatPoint, s_min: float = 1e2, s_max: float = 1e6,
                        points: int = 9) -> AsymptoticReport:
    """Measure ``r(s) = ||s f(sZ) + Z^-1||`` on a geometric grid.

    The verdict is ``cauchy_like`` when the log-log slope is at most ``-0.7``
    and ``r`` drops by a decade across the grid, or when every residual sits
    at the round-off floor (the limit is attained exactly, e.g. a point mass
    at zero).
    """
    if s_min < 10 or points < 5 or not s_max > s_min:
        raise InputError("need s_min >= 10, s_max > s_min and at least 5 points")
    s_grid = np.geomspace(s_min, s_max, points)
    zinv = Z.inverse()
    res = []
    for s in s_grid:
        fs = evaluate(model, s * Z)
        res.append((s * fs + zinv).norm())
    res = np.array(res)
    floor = 64 * np.finfo(float).eps * max(zinv.norm(), 1.0) * max(1.0, opnorm(model.A.data))
    logr = np.log(np.maximum(res, floor))
    slope = float(np.polyfit(np.log(s_grid), logr, 1)[0])
    exact = bool(np.all(res <= floor))
    decays = slope <= -0.7 and res[-1] <= res[0] / 10
    verdict = "cauchy_like" if (exact or decays) else "fails"
    return AsymptoticReport([float(s) for s in s_grid], [float(r) for r in res], slope, verdict, float(floor))


@dataclass
class MomentResult:
    value: MatPoint
    residual: float


def moment(model: CauchyModel, H_list: Sequence[MatPoint]) -> MomentResult:
    """``E(psi(H_1) ... psi(H_k))`` via the block-superdiagonal trick.

    Builds the level ``n(k+1)`` point ``H`` with ``H_1..H_k`` on the block
    superdiagonal, takes ``(E (x) id)[(psi (x) id)(H)^k]`` and reads its
    block ``(1, k+1)``.  The residual is measured against ``H_1 ... H_k``.
    """
    k = len(H_list)
    if k < 1:
        raise InputError("need at least one point")
    n = H_list[0].level
    for h in H_list:
        if h.spec != model.B or h.level != n:
            raise SpecMismatch("moment points must share level and base algebra")
    nd = n * model.B.total_dim
    big = np.zeros(((k + 1) * nd,) * 2, dtype=complex)
    for i, h in enumerate(H_list):
        big[i * nd:(i + 1) * nd, (i + 1) * nd:(i + 2) * nd] = h.flat
    p = apply_flat(model.psi, big)
    pk = np.linalg.matrix_power(p, k)
    e = apply_flat(model.E, pk)
    corner = e[:nd, k * nd:(k + 1) * nd]
    prod = H_list[0].flat
    for h in H_list[1:]:
        prod = prod @ h.flat
    value = MatPoint.from_flat(model.B, corner)
    return MomentResult(value, opnorm(corner - prod))


def classical_model(atoms: Sequence[float], weights: Sequence[float]) -> CauchyModel:
    """Discrete measure ``sum w_i delta_{t_i}`` as a model over ``B = C``.

    ``evaluate`` at level 1 is ``sum w_i / (t_i - z)``.
    """
    t = np.asarray(atoms, dtype=float)
    w = np.asarray(weights, dtype=float)
    if t.ndim != 1 or t.shape != w.shape or t.size == 0:
        raise InputError("atoms and weights must be equal-length non-empty lists")
    if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
        raise InputError("weights must be positive and sum to 1")
    k = t.size
    B, M = AlgebraSpec((1,)), AlgebraSpec((1,) * k)
    psi = LinMap.from_function(B, M, lambda x: x[0, 0] * np.eye(k))
    E = LinMap.from_function(M, B, lambda x: np.array([[w @ np.diag(x)]]))
    return CauchyModel.build(M.diag(t), E, psi)


def counterexample_model() -> CauchyModel:
    """The model over ``B = C^2`` with ``M = M_3``.

    ``psi(z1, z2) = diag(z1, z2, (z1+z2)/2)``, ``E(m) = (m11, m22)`` and ``A``
    annihilates ``e1`` and swaps ``e2 <-> e3``.
    """
    B, M = AlgebraSpec((1, 1)), AlgebraSpec((3,))
    A = np.array([[0, 0, 0], [0, 0, 1], [0, 1, 0]], dtype=complex)
    psi = LinMap.from_function(B, M, lambda x: np.diag([x[0, 0], x[1, 1], (x[0, 0] + x[1, 1]) / 2]))
    E = LinMap.from_function(M, B, lambda x: np.diag([x[0, 0], x[1, 1]]))
    return CauchyModel.build(AlgElement(M, A), E, psi)


def non_homomorphic_model() -> CauchyModel:
    """Negative fixture: ``E o psi = id`` with ``E`` not multiplicative on ``alg(range psi)``.

    ``B = C``, ``M = C^2``, ``psi(z) = (3z/2, z/2)`` (completely positive, not
    unital) and ``E(w) = (w1 + w2)/2``.  Here ``s f(sZ) -> -(4/3) Z^-1``.
    """
    B, M = AlgebraSpec((1,)), AlgebraSpec((1, 1))
    psi = LinMap.from_function(B, M, lambda x: np.diag([1.5 * x[0, 0], 0.5 * x[0, 0]]))
    E = LinMap.from_function(M, B, lambda x: np.array([[(x[0, 0] + x[1, 1]) / 2]]))
    return CauchyModel.build(M.diag([0.5, -1.0]), E, psi)


def counterexample_closed_form(z1: complex, z2: complex) -> tuple[complex, complex]:
    """Scalar values of the counterexample transform.

    ``(-1/z1, -1/(z2 - 2/(z1+z2)))``; the second entry is the ``(1,1)``
    entry of ``[[-z2, 1], [1, -(z1+z2)/2]]^-1``, equivalently
    ``-z2^-1 (1 - 2 (z1+z2)^-1 z2^-1)^-1``.
    """
    if not (np.imag(z1) > 0 and np.imag(z2) > 0):
        raise DomainError("both coordinates must lie in the open upper half plane")
    return -1 / z1, -1 / (z2 - 2 / (z1 + z2))


_BLOCK_CHOICES = {1: [(1,)], 2: [(2,), (1, 1)], 3: [(3,), (1, 2), (2, 1), (1, 1, 1)]}


def random_homomorphic_model(seed=0, max_dim: int = 3) -> CauchyModel:
    """Random homomorphic model with ``dim B <= max_dim``.

    ``psi(b) = U (b + Phi(b)) U*`` for a random unital CP ``Phi`` into
    ``M_r`` and a random unitary ``U`` on ``C^{d+r}``; ``E`` compresses to
    the first ``d`` coordinates after undoing ``U`` and pinches onto ``B``.
    ``A`` is a random Hermitian matrix, so ``E(A) != 0`` generically.
    """
    rng = np.random.default_rng(seed)
    d = int(rng.integers(1, max_dim + 1))
    choices = _BLOCK_CHOICES.get(d, [(d,)])
    B = AlgebraSpec(choices[int(rng.integers(len(choices)))])
    r = int(rng.integers(1, 3))
    m = d + r
    M = AlgebraSpec((m,))
    s = 2
    K = _random_unitary(d * s, rng)[:, :r]
    U = _random_unitary(m, rng)

    def psi_fn(b):
        out = np.zeros((m, m), dtype=complex)
        out[:d, :d] = b
        out[d:, d:] = K.conj().T @ np.kron(b, np.eye(s)) @ K
        return U @ out @ U.conj().T

    def e_fn(x):
        y = (U.conj().T @ x @ U)[:d, :d]
        return np.where(B.mask, y, 0)

    psi = LinMap.from_function(B, M, psi_fn)
    E = LinMap.from_function(M, B, e_fn)
    a = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    return CauchyModel.build(AlgElement(M, (a + a.conj().T) / 2), E, psi)


def _cheb_to_power(degree: int) -> np.ndarray:
    conv = np.zeros((degree + 1, degree + 1))
    for k in range(degree + 1):
        col = chebyshev.cheb2poly(np.eye(degree + 1)[k])
        conv[:col.size, k] = col
    return conv


def _homogeneous_batch(model: CauchyModel, zflats: np.ndarray, degrees: Sequence[int],
                       nodes: int, fit_degree: int) -> np.ndarray:
    S, D = zflats.shape[0], zflats.shape[-1]
    n = D // model.B.total_dim
    pz = apply_flat(model.psi, zflats)                                   # (S, Dm, Dm)
    an = np.kron(np.eye(n), model.A.data)
    mu = np.abs(np.linalg.eigvals(np.linalg.solve(pz, np.broadcast_to(an, pz.shape)))).max(axis=-1)
    tau = np.where(mu > 1e-12, 0.25 / np.maximum(mu, 1e-300), 1.0)      # (S,)
    x = np.cos(np.pi * (np.arange(nodes) + 0.5) / nodes)
    t = tau[:, None] * x[None, :]                                        # (S, nodes)
    k = t[..., None, None] * an - pz[:, None]
    sv = np.linalg.svd(k, compute_uv=False)
    if np.any(sv[..., -1] < 1e-12 * sv[..., 0]):
        raise SingularResolvent("t A - psi(Z) is numerically singular inside the scaling window")
    vals = t[..., None, None] * apply_flat(model.E, np.linalg.inv(k))     # (S, nodes, D, D)
    vals = np.moveaxis(vals.reshape(S, nodes, D * D), 1, 0).reshape(nodes, S * D * D)
    cheb = chebyshev.chebfit(x, vals, fit_degree)
    power = (_cheb_to_power(fit_degree) @ cheb).reshape(fit_degree + 1, S, D, D)
    out = np.zeros((len(degrees), S, D, D), dtype=complex)
    for i, m in enumerate(degrees):
        if m <= fit_degree:
            out[i] = power[m] / (tau ** m)[:, None, None]
    return out


def homogeneous_parts(model: CauchyModel, Z, degrees: Sequence[int],
                      nodes: int = 48, fit_degree: int = 32) -> np.ndarray:
    """Degree-``m`` parts of the expansion ``f(Z/t) = sum_m t^m f_m(Z)`` near ``t = 0``.

    ``f(Z/t) = t E[(tA - psi(Z))^-1]`` is analytic for ``|t|`` below the
    reciprocal spectral radius of ``psi(Z)^-1 A``.  It is sampled at
    Chebyshev nodes on a quarter of that radius (both signs of ``t``),
    fitted by a Chebyshev series and converted to power coefficients.

    ``Z`` is a point or a sequence of points of one level; the result has
    shape ``(len(degrees), [batch,] nd, nd)`` holding flat matrices.
    """
    single = isinstance(Z, MatPoint)
    pts = [Z] if single else list(Z)
    for p in pts:
        if p.spec != model.B or p.level != pts[0].level:
            raise SpecMismatch("points must share the base algebra and level")
    out = _homogeneous_batch(model, np.array([p.flat for p in pts]), list(degrees), nodes, fit_degree)
    return out[:, 0] if single else out


def _sample_c2_points(samples: int, seed) -> np.ndarray:
    """Low-discrepancy points of the upper half plane of C^2, normalized to unit length.

    Arguments lie in ``[0.1 pi, 0.9 pi]`` and the modulus ratio is
    log-uniform in ``[1/2, 2]``.
    """
    u = qmc.Halton(d=3, scramble=True, seed=seed).random(samples)
    th = np.pi * (0.1 + 0.8 * u[:, :2])
    ratio = 2.0 ** (2 * u[:, 2] - 1)
    z = np.stack([ratio * np.exp(1j * th[:, 0]), np.exp(1j * th[:, 1])], axis=1)
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def nonpolynomial_witness(degree: int = 3, samples: int = 256, seed=0, component: int = 1,
                          model: CauchyModel | None = None, max_condition: float = 1e10) -> float:
    """Relative residual of fitting a homogeneous part by monomials in ``z1^-1, z2^-1``.

    The degree-``degree`` part of coordinate ``component`` of the transform
    over ``C^2`` (the counterexample by default) is extracted at ``samples``
    quasi-random points by :func:`homogeneous_parts` and least-squares fitted
    against ``z1^-a z2^-b`` with ``a + b = degree``.  A residual near zero
    means the part is such a polynomial; a part that vanishes identically
    counts as one and gives ``0.0``.
    """
    model = model or counterexample_model()
    if model.B != AlgebraSpec((1, 1)):
        raise SpecMismatch("the witness works with transforms over C^2")
    if degree < 1 or samples < 4 * degree:
        raise InputError("need degree >= 1 and samples >= 4*degree")
    pts = _sample_c2_points(samples, seed)
    Zs = [MatPoint.from_flat(model.B, np.diag(z)) for z in pts]
    parts = homogeneous_parts(model, Zs, [1, degree])
    h = parts[1][:, component, component]
    ref = np.linalg.norm(parts[0][:, component, component]) + np.linalg.norm(h)
    if np.linalg.norm(h) <= 1e-9 * ref:
        return 0.0
    design = np.array([[z1 ** -a * z2 ** -(degree - a) for a in range(degree + 1)] for z1, z2 in pts])
    design = design / np.linalg.norm(design, axis=0)
    cond = float(np.linalg.cond(design))
    if cond > max_condition:
        raise IllConditionedFit(f"monomial design matrix is ill-conditioned ({cond:.3e})", cond)
    coef, *_ = np.linalg.lstsq(design, h, rcond=None)
    resid = float(np.linalg.norm(h - design @ coef) / np.linalg.norm(h))
    log.debug("witness degree=%d component=%d cond=%.3e residual=%.3e", degree, component, cond, resid)
    return resid
