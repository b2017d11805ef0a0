import numpy as np
import pytest
from hypothesis import given, strategies as st

from freepick import cauchy, herglotz
from freepick.algebra import AlgebraSpec, MatPoint, imaginary_part, sample_ball, sample_uhp
from freepick.errors import DomainError, InputError, RangeNotPerpendicular, SpecMismatch
from freepick.herglotz import HerglotzData

C1 = AlgebraSpec((1,))
seeds = st.integers(0, 10**6)


def scalar(z):
    return MatPoint.from_flat(C1, np.array([[z]], dtype=complex))


def test_scalar_cayley_values():
    assert herglotz.cayley(scalar(1j)).flat[0, 0] == 0
    assert herglotz.inverse_cayley(scalar(0)).flat[0, 0] == pytest.approx(1j)
    with pytest.raises(DomainError):
        herglotz.cayley(scalar(1.0))
    with pytest.raises(DomainError):
        herglotz.inverse_cayley(scalar(1.0))


@given(seeds, st.integers(1, 3))
def test_cayley_round_trip(seed, n):
    spec = AlgebraSpec((1, 2))
    Z = sample_uhp(spec, n, seed=seed)
    lam = herglotz.cayley(Z)
    assert lam.norm() < 1
    assert (herglotz.inverse_cayley(lam) - Z).norm() <= 1e-10 * max(1.0, Z.norm())


@given(seeds)
def test_inverse_cayley_lands_in_uhp(seed):
    lam = sample_ball(AlgebraSpec((2,)), 2, radius=0.9, seed=seed)
    Z = herglotz.inverse_cayley(lam)
    assert np.linalg.eigvalsh(imaginary_part(Z).flat)[0] > 0
    assert (herglotz.cayley(Z) - lam).norm() <= 1e-10


def test_scalar_minus_one_data_give_minus_inverse():
    # L = -1, V = 1, T = 0 gives f(z) = -1/z; its extraction has A = 0, W = 1
    data = HerglotzData(np.zeros((1, 1)), -np.eye(1), np.eye(1), C1, C1)
    assert herglotz.herglotz_eval(data, scalar(0)).flat[0, 0] == pytest.approx(1)
    z = 0.3 + 1.1j
    assert herglotz.pick_value(data, scalar(z)).flat[0, 0] == pytest.approx(-1 / z)
    nd = herglotz.extract(data)
    assert nd.A[0, 0] == pytest.approx(0, abs=1e-15)
    assert abs(nd.W[0, 0]) == pytest.approx(1)
    assert nd.is_cauchy


def test_herglotz_values_have_positive_real_part():
    data = herglotz.random_herglotz_data(3)
    X = sample_ball(data.in_spec, 2, radius=0.9, seed=1)
    h = herglotz.herglotz_eval(data, X).flat
    assert np.linalg.eigvalsh((h + h.conj().T) / 2)[0] >= -1e-10


@pytest.mark.parametrize("seed", range(10))
def test_random_data_respect_output_algebra(seed):
    data = herglotz.random_herglotz_data(seed)
    assert data.range_defect() <= 1e-10


@given(seeds)
def test_extraction_round_trip(seed):
    data = herglotz.random_herglotz_data(seed)
    nd = herglotz.extract(data)
    for t in range(3):
        Z = sample_uhp(data.in_spec, 1 + t, seed=[seed, t])
        diff = herglotz.nev_eval(nd, Z) - herglotz.pick_value(data, Z)
        assert diff.norm() <= 1e-8
    assert np.allclose(nd.A, nd.A.conj().T)


@given(seeds)
def test_overlap_detected_and_removable(seed):
    data = herglotz.random_herglotz_data(seed, overlap=True)
    with pytest.raises(RangeNotPerpendicular, match="liminf"):
        herglotz.extract(data)
    herglotz.extract(herglotz.remove_overlap(data))


def test_classical_extraction_recovers_atoms():
    atoms, weights = [-1.0, 0.5, 2.0], [0.3, 0.3, 0.4]
    data = herglotz.herglotz_from_classical(atoms, weights, extra_kernel=2, seed=4)
    nd = herglotz.extract(data)
    assert nd.is_cauchy
    assert nd.A.shape == (3, 3)
    assert np.allclose(np.sort(np.linalg.eigvalsh(nd.A)), atoms)
    m = cauchy.classical_model(atoms, weights)
    z = -0.2 + 0.6j
    assert herglotz.nev_eval(nd, scalar(z)).flat[0, 0] == pytest.approx(
        cauchy.evaluate(m, scalar(z)).flat[0, 0], rel=1e-12)


def test_constant_shift_is_not_cauchy():
    base = herglotz.herglotz_from_classical([0.0, 1.0], [0.5, 0.5])
    shifted = HerglotzData(base.T + 0.7, base.L, base.V, C1, C1)
    nd = herglotz.extract(shifted)
    assert not nd.is_cauchy
    assert nd.C[0, 0] == pytest.approx(0.7)


def test_pure_constant_data():
    # L = 1 and V = 0: everything sits in the kernel and f is the constant T
    data = HerglotzData(np.array([[2.0]]), np.eye(2), np.zeros((2, 1)), C1, C1)
    nd = herglotz.extract(data)
    assert nd.A.shape == (0, 0)
    assert herglotz.nev_eval(nd, scalar(1j)).flat[0, 0] == pytest.approx(2.0)


def test_herglotz_data_validation():
    with pytest.raises(InputError):
        HerglotzData(np.zeros((1, 1)), 2 * np.eye(1), np.eye(1), C1, C1)
    with pytest.raises(InputError):
        HerglotzData(np.zeros((1, 1)), np.eye(2), np.eye(1), C1, C1)
    with pytest.raises(InputError):
        HerglotzData(np.zeros((1, 1)), np.eye(3), np.ones((3, 1)), AlgebraSpec((2,)), C1)
    data = herglotz.random_herglotz_data(0)
    with pytest.raises(SpecMismatch):
        herglotz.nev_eval(herglotz.extract(data), sample_uhp(AlgebraSpec((5,)), 1))


def test_kernel_split_dimensions():
    L = np.diag([1.0, -1.0, 1j, 1.0])
    split = herglotz.kernel_split(L)
    assert split.kernel_dim == 2
    assert split.coisometry.shape == (2, 4)
    assert np.allclose(split.P @ split.P, split.P)


@given(seeds)
def test_nevanlinna_to_herglotz_round_trip(seed):
    rng = np.random.default_rng(seed)
    c = 3
    a = rng.standard_normal((c, c)) + 1j * rng.standard_normal((c, c))
    A = (a + a.conj().T) / 2
    W = rng.standard_normal((c, 1)) + 1j * rng.standard_normal((c, 1))
    data = herglotz.herglotz_from_nevanlinna(A, W, np.array([[0.25]]), C1, AlgebraSpec((1,)))
    nd = herglotz.extract(data)
    z = complex(rng.standard_normal(), rng.uniform(0.1, 2))
    want = 0.25 + (W.conj().T @ np.linalg.solve(A - z * np.eye(c), W))[0, 0]
    assert herglotz.nev_eval(nd, scalar(z)).flat[0, 0] == pytest.approx(want, rel=1e-9)
