import numpy as np
import pytest
from hypothesis import given, strategies as st

from freepick.algebra import (AlgebraSpec, AlgElement, MatPoint, amplify, classify_region, components,
                              direct_sum, from_components, identity, imaginary_part, intertwining_residual,
                              make_intertwiner_cases, opnorm, sample_ball, sample_uhp, scalar_action)
from freepick.errors import InputError, SingularResolvent, SpecMismatch

SPECS = [AlgebraSpec(b) for b in [(1,), (2,), (1, 1), (1, 2), (2, 1), (1, 1, 1), (3,)]]
spec_st = st.sampled_from(SPECS)
level_st = st.integers(1, 3)
seed_st = st.integers(0, 2**32 - 1)


def test_spec_dimensions():
    s = AlgebraSpec((1, 2))
    assert s.total_dim == 3
    assert s.dim == 5
    assert not s.is_diagonal
    assert AlgebraSpec((1, 1, 1)).is_diagonal
    assert len(s.basis()) == 5


@pytest.mark.parametrize("blocks", [(), (0,), (2, -1)])
def test_spec_rejects_bad_blocks(blocks):
    with pytest.raises(InputError):
        AlgebraSpec(blocks)


def test_element_block_check():
    s = AlgebraSpec((1, 1))
    with pytest.raises(SpecMismatch):
        AlgElement(s, np.array([[1, 1], [0, 1]]))
    with pytest.raises(InputError):
        AlgElement(s, np.eye(3))
    e = AlgElement(s, np.array([[1, 1e-14], [0, 2]]))
    assert e.data[0, 1] == 0


def test_element_arithmetic():
    s = AlgebraSpec((2,))
    a = AlgElement(s, np.array([[1, 2j], [0, 1]]))
    b = s.unit()
    assert np.allclose((a + b).data, a.data + np.eye(2))
    assert np.allclose((a @ a.adjoint()).data, a.data @ a.data.conj().T)
    assert np.isclose(a.norm(), opnorm(a.data))
    with pytest.raises(SpecMismatch):
        a + AlgebraSpec((1, 1)).unit()


def test_flat_layout_matches_kron():
    s = AlgebraSpec((2,))
    b = np.array([[1, 2], [3, 4]], dtype=complex)
    X = amplify(AlgElement(s, b), 3)
    assert np.allclose(X.flat, np.kron(np.eye(3), b))
    g = np.arange(4).reshape(2, 2) + 1.0
    assert np.allclose(scalar_action(g, 2), np.kron(g, np.eye(2)))


@given(spec_st, level_st, seed_st)
def test_flat_round_trip(spec, n, seed):
    X = sample_uhp(spec, n, seed=seed)
    Y = MatPoint.from_flat(spec, X.flat)
    assert np.array_equal(X.grid, Y.grid)
    i, j = n - 1, 0
    assert np.array_equal(X.entry(i, j).data, X.flat[i * spec.total_dim:(i + 1) * spec.total_dim,
                                                      j * spec.total_dim:(j + 1) * spec.total_dim])


@given(spec_st, level_st, seed_st, st.floats(0.01, 2.0))
def test_sampled_points_are_in_uhp(spec, n, seed, margin):
    X = sample_uhp(spec, n, margin=margin, seed=seed)
    rep = classify_region(X)
    assert rep.in_open_uhp
    assert rep.min_im_eigenvalue >= margin * (1 - 1e-9)


@given(spec_st, level_st, seed_st)
def test_sampled_ball_points(spec, n, seed):
    X = sample_ball(spec, n, radius=0.9, seed=seed)
    assert X.norm() <= 0.9 + 1e-12
    assert classify_region(X).in_ball


def test_classify_region_boundaries():
    s = AlgebraSpec((1,))
    real = MatPoint.from_flat(s, np.array([[2.0]]))
    rep = classify_region(real)
    assert not rep.in_open_uhp and rep.in_closed_uhp
    unit = MatPoint.from_flat(s, np.array([[1.0]]))
    assert not classify_region(unit).in_ball
    with pytest.raises(InputError):
        classify_region(real, tol=-1)


@given(spec_st, level_st, level_st, seed_st)
def test_direct_sum_imaginary_part(spec, n, m, seed):
    X, Y = sample_uhp(spec, n, seed=seed), sample_uhp(spec, m, seed=seed + 1)
    S = direct_sum(X, Y)
    assert S.level == n + m
    assert np.allclose(imaginary_part(S).flat[: n * spec.total_dim, : n * spec.total_dim],
                       imaginary_part(X).flat)


@given(spec_st, level_st, seed_st)
def test_intertwiner_cases_hold(spec, n, seed):
    X = sample_uhp(spec, n, seed=seed)
    for Xc, Y, G in make_intertwiner_cases(X, seed=seed):
        assert intertwining_residual(G, Xc, Y) <= 1e-9 * (1 + X.norm()) * (1 + opnorm(G)) ** 2


def test_inverse_and_singular():
    s = AlgebraSpec((1, 1))
    X = sample_uhp(s, 2, seed=1)
    assert np.allclose((X @ X.inverse()).flat, np.eye(4))
    Z = MatPoint.from_flat(s, np.zeros((4, 4)))
    with pytest.raises(SingularResolvent):
        Z.inverse()


def test_components_round_trip():
    s = AlgebraSpec((1, 1, 1))
    X = sample_uhp(s, 2, seed=4)
    assert np.array_equal(from_components(components(X)).grid, X.grid)
    with pytest.raises(SpecMismatch):
        components(sample_uhp(AlgebraSpec((2,)), 1))


def test_identity_and_amplify():
    s = AlgebraSpec((1, 2))
    assert np.array_equal(identity(s, 2).flat, np.eye(6))
    with pytest.raises(InputError):
        amplify(s.unit(), 0)
