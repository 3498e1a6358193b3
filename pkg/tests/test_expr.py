import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ffxnls.expr import (OFFSET, SCALE, BaseFunction, FeatureIndexOutOfRange, FuncKind, Model,
                         SchemaViolation, complexity, deserialize, dumps, evaluate, loads, serialize,
                         to_text)


def log_b(feature=0, b=3.0, p=1.0):
    return BaseFunction(FuncKind.LOG, p, feature, ((OFFSET, b),))


def exp_a(feature=0, a=0.7, p=1.0):
    return BaseFunction(FuncKind.EXP, p, feature, ((SCALE, a),))


def test_constant_model_predicts_intercept():
    X = np.random.default_rng(0).normal(size=(5, 3))
    np.testing.assert_array_equal(evaluate(Model(2.0), X), np.full(5, 2.0))


def test_hand_evaluated_log_model():
    m = Model(1.0, ((2.0, log_b(0, 3.0)),))
    out = evaluate(m, np.array([[math.e - 3]]))
    assert out[0] == pytest.approx(3.0, abs=1e-15)


def test_feature_out_of_range():
    m = Model(0.0, ((1.0, BaseFunction(FuncKind.IDENTITY, 1, 5)),))
    with pytest.raises(FeatureIndexOutOfRange):
        evaluate(m, np.ones((2, 2)))


def test_domain_violation_gives_nonfinite_rows_only():
    m = Model(0.0, ((1.0, log_b(0, 0.0)),))
    out = evaluate(m, np.array([[1.0], [-1.0], [0.0], [math.e]]))
    assert out[0] == 0.0 and out[3] == pytest.approx(1.0)
    assert not np.isfinite(out[1]) and not np.isfinite(out[2])


def test_bivariate_product_and_gradient():
    b = log_b(0, 2.0).__class__(FuncKind.LOG, 1.0, 0, ((OFFSET, 2.0),), partner=exp_a(1, 0.5))
    X = np.array([[1.0, 2.0], [3.0, -1.0]])
    v, g = b.value_and_grad(X)
    np.testing.assert_allclose(v, np.log(X[:, 0] + 2) * np.exp(0.5 * X[:, 1]))
    np.testing.assert_allclose(g[0], np.exp(0.5 * X[:, 1]) / (X[:, 0] + 2))
    np.testing.assert_allclose(g[1], np.log(X[:, 0] + 2) * X[:, 1] * np.exp(0.5 * X[:, 1]))
    assert b.n_slots == 2 and b.slot_roles() == (OFFSET, SCALE)


def test_nested_bivariate_rejected():
    prod = BaseFunction(FuncKind.IDENTITY, 1, 0, partner=BaseFunction(FuncKind.IDENTITY, 1, 1))
    with pytest.raises(ValueError):
        BaseFunction(FuncKind.IDENTITY, 1, 2, partner=prod)


# complexity: + c0 log + x1 c2 -> 6 nodes, the weight-free example
def test_complexity_unweighted_log_term():
    assert complexity(Model(0.3, ((1.0, log_b(0, 0.2)),))) == 6


def test_complexity_constant():
    assert complexity(Model(4.2)) == 1


def test_complexity_weighted_exp():
    # c0, +, c1, *, exp, *, a, x1
    assert complexity(Model(0.3, ((1.7, exp_a(0, 0.7)),))) == 8


def test_complexity_power_and_product():
    sq = BaseFunction(FuncKind.IDENTITY, 2, 0)
    # c0 + c1*x1^2 -> c0 + c1 * (pow x1 2) = 7
    assert complexity(Model(1.0, ((2.0, sq),))) == 7
    prod = BaseFunction(FuncKind.IDENTITY, 1, 0, partner=BaseFunction(FuncKind.IDENTITY, 1, 1))
    # c0 + c1 * (x1 * x2) = 7
    assert complexity(Model(1.0, ((2.0, prod),))) == 7


def test_to_text_formatting():
    m = Model(1.0, ((2.0, BaseFunction(FuncKind.IDENTITY, 2, 0)),))
    assert to_text(m) == "1 + 2*x1^2"
    m2 = Model(-0.5, ((-3.0, log_b(1, -2.0)), (1.0, exp_a(0, 0.123456789123))))
    assert to_text(m2) == "-0.5 - 3*log(x2 - 2) + exp(0.123456789*x1)"
    assert to_text(m2, ["u", "v"]) == "-0.5 - 3*log(v - 2) + exp(0.123456789*u)"


finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@st.composite
def univariate(draw):
    kind = draw(st.sampled_from(list(FuncKind)))
    p = draw(st.sampled_from([0.5, 1.0, 2.0]))
    roles = {FuncKind.LOG: (OFFSET,), FuncKind.SQRT: (OFFSET,), FuncKind.EXP: (SCALE,)}.get(kind, ())
    return BaseFunction(kind, p, draw(st.integers(0, 3)), tuple((r, draw(finite)) for r in roles))


@st.composite
def models(draw):
    terms = []
    for _ in range(draw(st.integers(0, 5))):
        b = draw(univariate())
        if draw(st.booleans()):
            b = BaseFunction(b.kind, b.exponent, b.feature, b.nl_params, partner=draw(univariate()))
        terms.append((draw(finite), b))
    return Model(draw(finite), tuple(terms), draw(st.none() | st.just(("a", "b", "c", "d"))))


@given(models())
def test_serialize_round_trip(m):
    back = loads(dumps(m))
    assert back == m
    assert deserialize(json.loads(json.dumps(serialize(m)))) == m


@given(models(), st.randoms())
def test_complexity_invariant_under_reordering(m, r):
    terms = list(m.terms)
    r.shuffle(terms)
    assert complexity(Model(m.intercept, tuple(terms))) == complexity(m)


@given(models(), st.integers(0, 2**32 - 1))
def test_evaluate_is_rowwise(m, seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0.1, 2.0, size=(8, 4))
    perm = rng.permutation(8)
    a = evaluate(m, X)[perm]
    b = evaluate(m, X[perm])
    np.testing.assert_array_equal(a, b)


def test_deserialize_missing_intercept():
    doc = serialize(Model(1.0, ((2.0, log_b()),)))
    del doc["intercept"]
    with pytest.raises(SchemaViolation):
        deserialize(doc)


@pytest.mark.parametrize("mutate", [
    lambda d: d.update(format_version=99),
    lambda d: d["terms"][0]["base"].update(kind="sin"),
    lambda d: d["terms"][0]["base"]["params"][0].update(role="gain"),
    lambda d: d["terms"][0].pop("weight"),
])
def test_deserialize_rejects_malformed(mutate):
    doc = serialize(Model(1.0, ((2.0, log_b()),)))
    mutate(doc)
    with pytest.raises(SchemaViolation):
        deserialize(doc)


def test_loads_rejects_non_json():
    with pytest.raises(SchemaViolation):
        loads("{not json")


def test_serialize_rejects_nonfinite():
    with pytest.raises(ValueError):
        serialize(Model(float("nan")))
