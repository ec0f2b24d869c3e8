import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strongalg.core import Element, GermsAlgebra, KondratievAlgebra, MatrixAlgebra
from strongalg.errors import SchemaError
from strongalg.serialization import (
    dumps,
    element_from_json,
    element_to_json,
    wiener_from_json,
    wiener_to_json,
)
from strongalg.wiener import WienerElement

INSTANCES = [MatrixAlgebra(2), GermsAlgebra(degree=4), KondratievAlgebra(variables=3, degree=2)]


def through_text(doc):
    return json.loads(json.dumps(doc))


@pytest.mark.parametrize("alg", INSTANCES, ids=lambda a: a.kind)
def test_element_round_trip(alg):
    x = alg.random(np.random.default_rng(0))
    tail = {alg.tracked_grades[0]: 1.25e-9}
    y = element_from_json(through_text(element_to_json(x.with_tail(tail))))
    assert y.algebra == alg
    assert np.array_equal(y.data, x.data)
    assert y.tail == tail


@pytest.mark.parametrize("alg", INSTANCES, ids=lambda a: a.kind)
def test_wiener_round_trip(alg):
    a = WienerElement.random(alg, np.random.default_rng(1), 5)
    b = wiener_from_json(through_text(wiener_to_json(a)))
    assert np.array_equal(a.coeffs, b.coeffs)
    assert b.exact


def test_index_keys():
    k = KondratievAlgebra(variables=2, degree=2)
    data = np.zeros(k.coef_shape)
    data[k.indices.index((1, 1))] = 2.0
    doc = element_to_json(Element(k, data))
    assert doc["coefficients"] == {"1,1": [2.0, 0.0]}
    m = element_to_json(Element(MatrixAlgebra(2), [[0, 1j], [0, 0]]))
    assert m["coefficients"] == {"0,1": [0.0, 1.0]}


def test_rectangular_matrix_round_trip():
    x = Element(MatrixAlgebra(2), [[1.0, 2.0, 3.0]])
    y = element_from_json(element_to_json(x))
    assert y.data.shape == (1, 3) and np.array_equal(y.data, x.data)


def test_infinite_tail_is_omitted():
    alg = GermsAlgebra(degree=2, tracked=(1.0, 0.5))
    x = alg.one().with_tail({0.5: 1e-3})
    doc = element_to_json(x)
    assert doc["tail_bounds"] == {"0.5": 1e-3}
    y = element_from_json(doc)
    assert y.tail_bound(1.0) == float("inf")


def test_bad_documents():
    with pytest.raises(SchemaError):
        element_from_json({"instance": "nope", "coefficients": {}})
    doc = element_to_json(GermsAlgebra(degree=2).one())
    doc["coefficients"]["7"] = [1.0, 0.0]
    with pytest.raises(SchemaError):
        element_from_json(doc)
    w = wiener_to_json(WienerElement.constant(MatrixAlgebra(1).one()))
    w["coefficients"]["3"] = {"0,0": [1.0, 0.0]}
    with pytest.raises(SchemaError):
        wiener_from_json(w)


def test_dumps_handles_infinities_and_numpy():
    text = dumps({"x": np.float64(1.5), "y": float("inf"), "z": (1, 2)})
    assert json.loads(text) == {"x": 1.5, "y": "inf", "z": [1, 2]}


finite = st.floats(allow_nan=False, allow_infinity=False, width=64)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.tuples(finite, finite), min_size=5, max_size=5))
def test_germs_payload_lossless(values):
    alg = GermsAlgebra(degree=4)
    x = Element(alg, [complex(r, i) for r, i in values])
    y = element_from_json(through_text(element_to_json(x)))
    assert np.array_equal(x.data, y.data)
