"""JSON encoding of algebras, points, maps, models and extraction data.

Complex scalars are ``[re, im]`` pairs of doubles and matrices are row-major
nested lists of such pairs.  Python's float repr round-trips exactly.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

import numpy as np

from .algebra import AlgebraSpec, AlgElement, MatPoint
from .cauchy import CauchyModel
from .cpmaps import LinMap, MapFlags
from .errors import InputError
from .herglotz import HerglotzData, NevanlinnaData


def encode_matrix(m) -> list:
    m = np.atleast_2d(np.asarray(m, dtype=complex))
    return [[[float(z.real) + 0.0, float(z.imag) + 0.0] for z in row] for row in m]


def decode_matrix(obj, what: str = "matrix") -> np.ndarray:
    try:
        a = np.asarray(obj, dtype=float)
    except (TypeError, ValueError) as exc:
        raise InputError(f"{what}: not a nested list of [re, im] pairs") from exc
    if a.size == 0 and a.ndim <= 2:
        return np.zeros((0, 0), dtype=complex)
    if a.ndim != 3 or a.shape[-1] != 2:
        raise InputError(f"{what}: expected rows of [re, im] pairs, got array of shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InputError(f"{what}: non-finite entries")
    return a[..., 0] + 1j * a[..., 1]


def encode_spec(spec: AlgebraSpec) -> dict:
    return {"blocks": list(spec.blocks)}


def decode_spec(obj) -> AlgebraSpec:
    if not isinstance(obj, dict) or "blocks" not in obj:
        raise InputError("algebra spec must be an object with 'blocks'")
    blocks = obj["blocks"]
    if not isinstance(blocks, list) or not all(isinstance(b, int) and not isinstance(b, bool) for b in blocks):
        raise InputError("'blocks' must be a list of integers")
    return AlgebraSpec(tuple(blocks))


def encode_point(X: MatPoint) -> dict:
    n = X.level
    return {"spec": encode_spec(X.spec), "level": n,
            "grid": [[encode_matrix(X.grid[i, j]) for j in range(n)] for i in range(n)]}


def decode_point(obj, spec: AlgebraSpec | None = None) -> MatPoint:
    if not isinstance(obj, dict) or "grid" not in obj:
        raise InputError("point must be an object with 'grid'")
    if "spec" in obj:
        s = decode_spec(obj["spec"])
        if spec is not None and s != spec:
            raise InputError(f"point is over {s.blocks}, expected {spec.blocks}")
        spec = s
    if spec is None:
        raise InputError("point has no 'spec' and none was supplied")
    grid = obj["grid"]
    if not isinstance(grid, list) or not grid or not all(isinstance(r, list) and len(r) == len(grid) for r in grid):
        raise InputError("'grid' must be a square nested list")
    entries = [[decode_matrix(e, "grid entry") for e in row] for row in grid]
    if "level" in obj and obj["level"] != len(grid):
        raise InputError("'level' disagrees with the grid size")
    try:
        return MatPoint(spec, np.array(entries))
    except ValueError as exc:
        raise InputError(str(exc)) from exc


def encode_map(m: LinMap) -> dict:
    hom = m.flags.homomorphic_on
    return {"dom": encode_spec(m.dom), "cod": encode_spec(m.cod), "matrix": encode_matrix(m.matrix),
            "flags": {"unital": m.flags.unital, "cp_verified": m.flags.cp_verified,
                      "homomorphic_on": None if hom is None else [encode_matrix(g.data) for g in hom]}}


def decode_map(obj) -> LinMap:
    if not isinstance(obj, dict):
        raise InputError("map must be an object")
    try:
        dom, cod = decode_spec(obj["dom"]), decode_spec(obj["cod"])
        mat = decode_matrix(obj["matrix"], "map matrix")
    except KeyError as exc:
        raise InputError(f"map is missing {exc}") from exc
    f = obj.get("flags") or {}
    hom = f.get("homomorphic_on")
    flags = MapFlags(bool(f.get("unital", False)), bool(f.get("cp_verified", False)),
                     None if hom is None else tuple(AlgElement(dom, decode_matrix(g)) for g in hom))
    return LinMap(dom, cod, mat, flags)


def encode_model(model: CauchyModel) -> dict:
    return {"B": encode_spec(model.B), "M": encode_spec(model.M), "A": encode_matrix(model.A.data),
            "E": encode_map(model.E), "psi": encode_map(model.psi)}


def decode_model(obj, validate: bool = True) -> CauchyModel:
    """Decode a model; with ``validate=False`` the data are taken as given."""
    if not isinstance(obj, dict):
        raise InputError("model must be an object")
    try:
        B, M = decode_spec(obj["B"]), decode_spec(obj["M"])
        E, psi = decode_map(obj["E"]), decode_map(obj["psi"])
        A = decode_matrix(obj["A"], "A")
    except KeyError as exc:
        raise InputError(f"model is missing {exc}") from exc
    if E.dom != M or E.cod != B or psi.dom != B or psi.cod != M:
        raise InputError("E and psi do not match the declared algebras")
    if validate:
        return CauchyModel.build(A, E, psi)
    return CauchyModel(AlgElement(M, A), E, psi, False)


def encode_herglotz(h: HerglotzData) -> dict:
    return {"in_spec": encode_spec(h.in_spec), "out_spec": encode_spec(h.out_spec),
            "T": encode_matrix(h.T), "L": encode_matrix(h.L), "V": encode_matrix(h.V)}


def decode_herglotz(obj) -> HerglotzData:
    if not isinstance(obj, dict):
        raise InputError("Herglotz data must be an object")
    try:
        T, L, V = (decode_matrix(obj[k], k) for k in ("T", "L", "V"))
    except KeyError as exc:
        raise InputError(f"Herglotz data is missing {exc}") from exc
    default = {"blocks": [1]}
    in_spec = decode_spec(obj.get("in_spec", default))
    out_spec = decode_spec(obj.get("out_spec", obj.get("in_spec", default)))
    return HerglotzData(T, L, V, in_spec, out_spec)


def encode_nevanlinna(nd: NevanlinnaData) -> dict:
    return {"in_spec": encode_spec(nd.in_spec), "out_spec": encode_spec(nd.out_spec),
            "A": encode_matrix(nd.A) if nd.A.size else [], "P": encode_matrix(nd.P) if nd.P.size else [],
            "W": encode_matrix(nd.W) if nd.W.size else [], "C": encode_matrix(nd.C),
            "is_cauchy": nd.is_cauchy}


def decode_nevanlinna(obj) -> NevanlinnaData:
    if not isinstance(obj, dict):
        raise InputError("Nevanlinna data must be an object")
    try:
        in_spec, out_spec = decode_spec(obj["in_spec"]), decode_spec(obj["out_spec"])
        A, P, W, C = (decode_matrix(obj[k], k) for k in ("A", "P", "W", "C"))
        is_cauchy = bool(obj["is_cauchy"])
    except KeyError as exc:
        raise InputError(f"Nevanlinna data is missing {exc}") from exc
    c = A.shape[0]
    if c == 0:
        d_in = in_spec.total_dim
        P = np.zeros((0, P.shape[1] if P.ndim == 2 and P.size else d_in), dtype=complex)
        W = np.zeros((0, out_spec.total_dim), dtype=complex)
    return NevanlinnaData(A, P, W, C, is_cauchy, in_spec, out_spec)


def dumps(obj: Any) -> str:
    return json.dumps(obj, indent=1)


def load_json(path) -> Any:
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from exc
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc


def write_json(path, obj: Any) -> None:
    Path(path).write_text(dumps(obj) + "\n")
