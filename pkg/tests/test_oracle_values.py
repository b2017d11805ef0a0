"""Hand-checkable values of the two-coordinate counterexample."""
import json

import numpy as np
import pytest

from freepick import cauchy, ncrat
from freepick.algebra import AlgElement, MatPoint
from freepick.cli import main
from freepick.cpmaps import check_dilation_pair, generated_span, is_unital, range_generators


@pytest.fixture(scope="module")
def model():
    return cauchy.counterexample_model()


def test_expectation_keeps_first_two_coordinates(model):
    assert np.array_equal(model.E(model.M.diag([3, 4, 5])).data, np.diag([3, 4]))


def test_dilation_values(model):
    assert np.allclose(model.psi(model.B.diag([1, 2])).data, np.diag([1, 2, 1.5]))
    assert np.allclose(model.psi(model.B.diag([1, 1])).data, np.eye(3))
    assert is_unital(model.psi)
    assert check_dilation_pair(model.E, model.psi)


def test_range_algebra_is_three_dimensional_diagonal(model):
    basis = generated_span([g.data for g in range_generators(model.psi)], depth=3)
    assert basis.shape[0] == 3
    assert all(np.allclose(b, np.diag(np.diag(b))) for b in basis)


def test_a_swaps_last_two_coordinates(model):
    w = np.array([1.0, 2.0, 3.0])
    assert np.array_equal(model.A.data @ w, [0, 3, 2])


def test_first_component_at_i_i(model):
    f = cauchy.evaluate(model, MatPoint.from_flat(model.B, np.diag([1j, 1j])))
    assert f.flat[0, 0] == pytest.approx(1j)


def test_first_component_expression():
    assert ncrat.evaluate(ncrat.parse("-inv(Z1)"), [[[1j]]])[0, 0] == pytest.approx(1j)


def test_first_component_via_cli(capsys):
    assert main(["ncrat", "--expr", "-inv(Z1)", "--vars", "[[[[0, 1]]]]"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["result"] == [[[0.0, 1.0]]]


def test_series_in_second_component(model):
    # -z2^-1 sum_k [2 (z1+z2)^-1 z2^-1]^k converges when |2/((z1+z2) z2)| < 1
    z1, z2 = 1 + 2j, -0.5 + 3j
    r = 2 / ((z1 + z2) * z2)
    assert abs(r) < 1
    series = -sum(r ** k for k in range(200)) / z2
    assert series == pytest.approx(cauchy.counterexample_closed_form(z1, z2)[1], rel=1e-13)
