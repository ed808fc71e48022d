"""JSON problem files.

A problem file is an object with keys

* ``"barrier"``: a barrier spec, an object with exactly one family key
  (``polyhedron``, ``spectrahedron``, ``exp_epigraph``, ``power_epigraph``,
  ``product``, ``section``, ``projective_image``) and optionally ``"gamma"`` to
  override the declared parameter;
* ``"objective"``: the vector ``c`` (required for solving);
* ``"x0"``: an optional interior starting point.

Errors are reported as :class:`ProblemFileError` naming the offending field
path, e.g. ``barrier.product[1].polyhedron.A[2]``.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Any, Optional

import numpy as np

from . import barriers as bar
from .core import Barrier, BarrierParams
from .errors import ProjbarError
from .ipm import ProblemInstance

FAMILIES = ("polyhedron", "spectrahedron", "exp_epigraph", "power_epigraph", "product",
            "section", "projective_image")


class ProblemFileError(ProjbarError, ValueError):
    """Malformed or inconsistent problem file."""


@dataclass
class ProblemFile:
    barrier: Barrier
    objective: Optional[np.ndarray] = None
    x0: Optional[np.ndarray] = None
    source: str = ""

    def instance(self) -> ProblemInstance:
        if self.objective is None:
            raise ProblemFileError("objective: required for solving")
        return ProblemInstance(barrier=self.barrier, c=self.objective, x0=self.x0, name=self.source)


def _fail(path: str, msg: str):
    raise ProblemFileError(f"{path}: {msg}")


def _number(v: Any, path: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
        _fail(path, f"expected a finite number, got {json.dumps(v)}")
    return float(v)


def _vector(v: Any, path: str, length: Optional[int] = None) -> np.ndarray:
    if not isinstance(v, list) or not v:
        _fail(path, "expected a non-empty list of numbers")
    out = np.array([_number(x, f"{path}[{i}]") for i, x in enumerate(v)])
    if length is not None and out.shape[0] != length:
        _fail(path, f"expected {length} entries, got {out.shape[0]}")
    return out


def _matrix(v: Any, path: str, rows: Optional[int] = None, cols: Optional[int] = None) -> np.ndarray:
    if not isinstance(v, list) or not v:
        _fail(path, "expected a non-empty list of rows")
    if rows is not None and len(v) != rows:
        _fail(path, f"expected {rows} rows, got {len(v)}")
    first = cols
    out = []
    for i, row in enumerate(v):
        r = _vector(row, f"{path}[{i}]", first)
        first = r.shape[0]
        out.append(r)
    return np.array(out)


def _object(v: Any, path: str) -> dict:
    if not isinstance(v, dict):
        _fail(path, "expected an object")
    return v


def _keys(obj: dict, path: str, required=(), optional=()):
    for k in required:
        if k not in obj:
            _fail(f"{path}.{k}", "missing")
    for k in obj:
        if k not in required and k not in optional:
            _fail(f"{path}.{k}", "unknown field")


def _build(spec: dict, path: str, gamma: Optional[float]) -> Barrier:
    (family, body), = spec.items()
    p = f"{path}.{family}"
    if family == "polyhedron":
        body = _object(body, p)
        _keys(body, p, ("A", "b"), ("witness",))
        A = _matrix(body["A"], f"{p}.A")
        b = _vector(body["b"], f"{p}.b", A.shape[0])
        w = _vector(body["witness"], f"{p}.witness", A.shape[1]) if "witness" in body else None
        return bar.polyhedral(A, b, witness=w, gamma=gamma)
    if family == "spectrahedron":
        body = _object(body, p)
        _keys(body, p, ("mats",), ("witness",))
        mats = body["mats"]
        if not isinstance(mats, list) or len(mats) < 2:
            _fail(f"{p}.mats", "expected a list of at least two square matrices")
        first = _matrix(mats[0], f"{p}.mats[0]")
        m = first.shape[0]
        ms = [first] + [_matrix(M, f"{p}.mats[{i}]", m, m) for i, M in enumerate(mats[1:], 1)]
        for i, M in enumerate(ms):
            if M.shape != (m, m):
                _fail(f"{p}.mats[{i}]", f"expected a {m}x{m} matrix")
            if not np.allclose(M, M.T, rtol=0.0, atol=1e-12):
                _fail(f"{p}.mats[{i}]", "matrix is not symmetric")
        w = _vector(body["witness"], f"{p}.witness", len(ms) - 1) if "witness" in body else None
        return bar.spectrahedral(ms, witness=w, gamma=gamma)
    if family == "exp_epigraph":
        _keys(_object(body, p), p)
        return bar.exp_epigraph(gamma=gamma)
    if family == "power_epigraph":
        body = _object(body, p)
        _keys(body, p, ("p",))
        pw = _number(body["p"], f"{p}.p")
        if not pw > 1.0:
            _fail(f"{p}.p", "must be greater than 1")
        return bar.power_epigraph(pw, gamma=gamma)
    if family == "product":
        if not isinstance(body, list) or len(body) != 2:
            _fail(p, "expected a list of two barrier specs")
        parts = [parse_barrier(s, f"{p}[{i}]") for i, s in enumerate(body)]
        return bar.direct_product(parts[0], parts[1], gamma=gamma)
    if family == "section":
        body = _object(body, p)
        _keys(body, p, ("base", "x0", "M"), ("witness",))
        base = parse_barrier(body["base"], f"{p}.base")
        x0 = _vector(body["x0"], f"{p}.x0", base.dim)
        M = _matrix(body["M"], f"{p}.M", base.dim)
        w = _vector(body["witness"], f"{p}.witness", M.shape[1]) if "witness" in body else None
        params = BarrierParams.from_gamma(gamma) if gamma is not None else None
        return bar.AffineSection(base, x0, M, witness=w, params=params)
    if family == "projective_image":
        body = _object(body, p)
        _keys(body, p, ("base", "L", "a", "l", "q0"), ("witness",))
        base = parse_barrier(body["base"], f"{p}.base")
        n = base.dim
        L = _matrix(body["L"], f"{p}.L", n, n)
        a = _vector(body["a"], f"{p}.a", n)
        l = _vector(body["l"], f"{p}.l", n)
        q0 = _number(body["q0"], f"{p}.q0")
        w = _vector(body["witness"], f"{p}.witness", n) if "witness" in body else None
        img = bar.projective_image(base, L, a, l, q0, witness=w)
        return _declared(img, gamma)
    raise AssertionError(family)


def _declared(b: Barrier, gamma: Optional[float]) -> Barrier:
    if gamma is None:
        return b
    eye = np.eye(b.dim)
    return bar.AffineSection(b, np.zeros(b.dim), eye, witness=b.witness,
                             params=BarrierParams.from_gamma(gamma))


def parse_barrier(spec: Any, path: str = "barrier") -> Barrier:
    spec = _object(spec, path)
    gamma = None
    if "gamma" in spec:
        gamma = _number(spec["gamma"], f"{path}.gamma")
        if gamma < 0.0:
            _fail(f"{path}.gamma", "must be nonnegative")
    families = [k for k in spec if k != "gamma"]
    unknown = [k for k in families if k not in FAMILIES]
    if unknown:
        _fail(f"{path}.{unknown[0]}", f"unknown barrier family (expected one of {', '.join(FAMILIES)})")
    if len(families) != 1:
        _fail(path, "expected exactly one barrier family key")
    try:
        return _build({families[0]: spec[families[0]]}, path, gamma)
    except ProblemFileError:
        raise
    except (ProjbarError, ValueError) as exc:
        raise ProblemFileError(f"{path}.{families[0]}: {exc}") from None


def parse_problem(data: Any, source: str = "") -> ProblemFile:
    data = _object(data, "<root>")
    _keys(data, "<root>", ("barrier",), ("objective", "x0"))
    b = parse_barrier(data["barrier"])
    c = _vector(data["objective"], "objective", b.dim) if "objective" in data else None
    x0 = None
    if "x0" in data:
        x0 = _vector(data["x0"], "x0", b.dim)
        if not b.contains(x0):
            _fail("x0", "point is not interior to the barrier domain")
    return ProblemFile(barrier=b, objective=c, x0=x0, source=source)


def loads(text: str, source: str = "<string>") -> ProblemFile:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProblemFileError(f"{source}: invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    return parse_problem(data, source)


def load(path: str) -> ProblemFile:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ProblemFileError(f"{path}: {exc.strerror}") from None
    return loads(text, path)


def dumps_polyhedron(A, b, objective=None, x0=None) -> str:
    """Serialize a polyhedral problem (convenience for building files)."""
    data: dict = {"barrier": {"polyhedron": {"A": np.asarray(A, float).tolist(), "b": np.asarray(b, float).tolist()}}}
    if objective is not None:
        data["objective"] = np.asarray(objective, float).tolist()
    if x0 is not None:
        data["x0"] = np.asarray(x0, float).tolist()
    return json.dumps(data)
