import json

import numpy as np
import pytest

from freepick import cauchy, herglotz, io
from freepick.algebra import AlgebraSpec, sample_uhp
from freepick.errors import InputError


def test_matrix_round_trip_is_exact(rng):
    m = rng.standard_normal((3, 2)) + 1j * rng.standard_normal((3, 2))
    back = io.decode_matrix(json.loads(io.dumps(io.encode_matrix(m))))
    assert np.array_equal(back, m)


@pytest.mark.parametrize("bad", ["x", [[1, 2]], [[[1, 2, 3]]], [[[float("nan"), 0]]]])
def test_matrix_rejects_malformed(bad):
    with pytest.raises(InputError):
        io.decode_matrix(bad)


def test_point_round_trip():
    X = sample_uhp(AlgebraSpec((1, 2)), 2, seed=3)
    Y = io.decode_point(json.loads(io.dumps(io.encode_point(X))))
    assert np.array_equal(X.grid, Y.grid)
    with pytest.raises(InputError):
        io.decode_point(io.encode_point(X), AlgebraSpec((3,)))


@pytest.mark.parametrize("make", [cauchy.counterexample_model, cauchy.non_homomorphic_model,
                                  lambda: cauchy.random_homomorphic_model(7)])
def test_model_round_trip(make):
    m = make()
    back = io.decode_model(json.loads(io.dumps(io.encode_model(m))))
    Z = sample_uhp(m.B, 2, seed=1)
    assert np.array_equal(cauchy.evaluate(m, Z).flat, cauchy.evaluate(back, Z).flat)
    assert back.homomorphic_certified == m.homomorphic_certified


def test_unvalidated_model_keeps_non_hermitian_a():
    obj = io.encode_model(cauchy.classical_model([-1.0, 1.0], [0.5, 0.5]))
    obj["A"][0][0] = [-1.0, 100.0]
    with pytest.raises(InputError):
        io.decode_model(obj)
    m = io.decode_model(obj, validate=False)
    assert m.A.data[0, 0] == -1 + 100j


def test_model_missing_key():
    obj = io.encode_model(cauchy.counterexample_model())
    del obj["psi"]
    with pytest.raises(InputError, match="psi"):
        io.decode_model(obj)


def test_herglotz_and_nevanlinna_round_trip():
    data = herglotz.random_herglotz_data(5)
    back = io.decode_herglotz(json.loads(io.dumps(io.encode_herglotz(data))))
    assert np.array_equal(back.L, data.L) and back.in_spec == data.in_spec
    nd = herglotz.extract(data)
    nd2 = io.decode_nevanlinna(json.loads(io.dumps(io.encode_nevanlinna(nd))))
    Z = sample_uhp(data.in_spec, 1, seed=0)
    assert np.array_equal(herglotz.nev_eval(nd, Z).flat, herglotz.nev_eval(nd2, Z).flat)


def test_empty_nevanlinna_round_trip():
    C1 = AlgebraSpec((1,))
    nd = herglotz.extract(herglotz.HerglotzData(np.ones((1, 1)), np.eye(1), np.zeros((1, 1)), C1, C1))
    nd2 = io.decode_nevanlinna(io.encode_nevanlinna(nd))
    assert nd2.A.shape == (0, 0)
    assert herglotz.nev_eval(nd2, sample_uhp(C1, 1)).flat[0, 0] == 1


def test_load_json_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{not json")
    with pytest.raises(InputError, match="malformed"):
        io.load_json(p)
    with pytest.raises(InputError):
        io.load_json(tmp_path / "missing.json")
