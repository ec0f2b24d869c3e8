"""JSON encoding of elements, Wiener elements and reports.

Element documents::

    {"instance": "germs", "params": {...}, "shape": [9],
     "coefficients": {"3": [re, im], ...}, "tail_bounds": {"0.5": 1e-9} | null}

Coefficient keys are ``"i,j"`` (matrix), ``"k"`` (germs) or the multi-index
``"g1,...,gK"`` (Kondratiev); only nonzero entries are written.  Wiener
documents carry ``"half_width"`` and a map from the Fourier index to such an
element coefficient map.  Floats use ``repr`` so payloads round-trip exactly;
infinite tails are omitted (a missing grade means an unknown tail).
"""

from __future__ import annotations

import hashlib
import json
import math

import numpy as np

from .core import Element, KondratievAlgebra, MatrixAlgebra, instance_from_spec, instance_spec
from .errors import GradeError, SchemaError
from .wiener import WienerElement


def _grade_key(g) -> str:
    return repr(g) if isinstance(g, float) else str(g)


def _tail_to_json(alg, tail):
    if tail is None:
        return None
    return {_grade_key(g): float(v) for g, v in sorted(tail.items()) if math.isfinite(v)}


def _tail_from_json(alg, doc):
    if doc is None:
        return None
    try:
        return {alg.check_grade(float(k)): float(v) for k, v in doc.items()}
    except (TypeError, ValueError) as exc:
        raise SchemaError(f"bad tail_bounds: {exc}") from None


def _index_keys(alg, shape):
    if isinstance(alg, MatrixAlgebra):
        return [f"{i},{j}" for i in range(shape[0]) for j in range(shape[1])]
    if isinstance(alg, KondratievAlgebra):
        return [",".join(map(str, g)) for g in alg.indices]
    return [str(k) for k in range(shape[0])]


def _data_to_json(alg, data):
    keys = _index_keys(alg, data.shape)
    flat = np.asarray(data).reshape(-1)
    return {k: [float(z.real), float(z.imag)] for k, z in zip(keys, flat) if z != 0}


def _data_from_json(alg, doc, shape):
    keys = _index_keys(alg, shape)
    pos = {k: i for i, k in enumerate(keys)}
    flat = np.zeros(int(np.prod(shape)), dtype=complex)
    for k, v in doc.items():
        if k not in pos:
            raise SchemaError(f"unknown coefficient index {k!r} for {alg.kind}")
        if not (isinstance(v, list) and len(v) == 2):
            raise SchemaError(f"coefficient {k!r} must be [re, im]")
        flat[pos[k]] = complex(float(v[0]), float(v[1]))
    return flat.reshape(shape)


def _instance(doc):
    try:
        return instance_from_spec({"kind": doc["instance"], **doc.get("params", {})})
    except (KeyError, TypeError, GradeError) as exc:
        raise SchemaError(f"bad instance description: {exc}") from None


def _header(alg):
    spec = instance_spec(alg)
    kind = spec.pop("kind")
    return {"instance": kind, "params": spec}


def element_to_json(x: Element) -> dict:
    doc = _header(x.algebra)
    doc["shape"] = list(x.data.shape)
    doc["coefficients"] = _data_to_json(x.algebra, x.data)
    doc["tail_bounds"] = _tail_to_json(x.algebra, x.tail)
    return doc


def element_from_json(doc: dict) -> Element:
    alg = _instance(doc)
    shape = tuple(doc.get("shape", alg.coef_shape))
    try:
        data = _data_from_json(alg, doc["coefficients"], shape)
    except KeyError:
        raise SchemaError("element document needs 'coefficients'") from None
    return Element(alg, data, _tail_from_json(alg, doc.get("tail_bounds")))


def wiener_to_json(a: WienerElement) -> dict:
    doc = _header(a.algebra)
    doc["shape"] = list(a.coeffs.shape[1:])
    doc["half_width"] = a.half_width
    doc["coefficients"] = {
        str(int(n)): _data_to_json(a.algebra, c)
        for n, c in zip(a.indices(), a.coeffs)
        if np.any(c != 0)
    }
    doc["tail_bounds"] = _tail_to_json(a.algebra, a.tail)
    return doc


def wiener_from_json(doc: dict) -> WienerElement:
    alg = _instance(doc)
    shape = tuple(doc.get("shape", alg.coef_shape))
    try:
        coeffs = {int(n): _data_from_json(alg, c, shape) for n, c in doc["coefficients"].items()}
    except (KeyError, ValueError) as exc:
        raise SchemaError(f"bad Wiener element document: {exc}") from None
    N = int(doc.get("half_width", max((abs(n) for n in coeffs), default=0)))
    if any(abs(n) > N for n in coeffs):
        raise SchemaError("coefficient index exceeds half_width")
    out = np.zeros((2 * N + 1,) + shape, dtype=complex)
    for n, c in coeffs.items():
        out[n + N] = c
    return WienerElement(alg, out, _tail_from_json(alg, doc.get("tail_bounds")))


def to_jsonable(obj):
    """Recursively convert numpy scalars, enums and non-finite floats."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, Element):
        return element_to_json(obj)
    if isinstance(obj, WienerElement):
        return wiener_to_json(obj)
    if isinstance(obj, np.generic):
        obj = obj.item()
    if isinstance(obj, complex):
        return [to_jsonable(obj.real), to_jsonable(obj.imag)]
    if isinstance(obj, float) and not math.isfinite(obj):
        return "inf" if obj > 0 else ("-inf" if obj < 0 else "nan")
    return obj


def dumps(doc) -> str:
    return json.dumps(to_jsonable(doc), sort_keys=True, indent=2) + "\n"


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()
