"""Base functions, fitted models, evaluation, text rendering, JSON documents and
symbol-count complexity.

A univariate base function has the shape ``func(a * x**p + b)``.  Which of the
two scalings ``a`` (scale) and ``b`` (offset) are free parameters depends on
``func``; a missing scale is 1 and a missing offset is 0.  A bivariate base is
the product of two univariate ones (``partner`` holds the second factor).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

import jsonschema
import numpy as np

FORMAT_VERSION = 1

SCALE = "scale_a"
OFFSET = "offset_b"


class FuncKind(str, Enum):
    IDENTITY = "id"
    ABS = "abs"
    LOG = "log"
    EXP = "exp"
    SQRT = "sqrt"


KIND_ORDER = {k: i for i, k in enumerate(FuncKind)}


class FeatureIndexOutOfRange(IndexError):
    pass


class SchemaViolation(ValueError):
    pass


def _fmt(v: float) -> str:
    return f"{v:.9g}"


def _power(x: np.ndarray, p: float) -> np.ndarray:
    if p == 1:
        return x
    if p == 2:
        return x * x
    if p == 0.5:
        return np.sqrt(x)
    return np.power(x, p)


@dataclass(frozen=True)
class BaseFunction:
    kind: FuncKind
    exponent: float
    feature: int
    nl_params: tuple[tuple[str, float], ...] = ()
    partner: "BaseFunction | None" = None

    def __post_init__(self):
        object.__setattr__(self, "kind", FuncKind(self.kind))
        object.__setattr__(self, "exponent", float(self.exponent))
        object.__setattr__(self, "feature", int(self.feature))
        object.__setattr__(
            self, "nl_params", tuple((str(r), float(v)) for r, v in self.nl_params)
        )
        roles = [r for r, _ in self.nl_params]
        if any(r not in (SCALE, OFFSET) for r in roles) or len(set(roles)) != len(roles):
            raise ValueError(f"bad parameter roles {roles}")
        if self.partner is not None and self.partner.partner is not None:
            raise ValueError("bivariate bases cannot nest")

    # -- parameters --------------------------------------------------------
    def _param(self, role: str, default: float) -> float:
        for r, v in self.nl_params:
            if r == role:
                return v
        return default

    @property
    def scale(self) -> float:
        return self._param(SCALE, 1.0)

    @property
    def offset(self) -> float:
        return self._param(OFFSET, 0.0)

    @property
    def is_bivariate(self) -> bool:
        return self.partner is not None

    @property
    def n_slots(self) -> int:
        return len(self.nl_params) + (self.partner.n_slots if self.partner else 0)

    def slot_values(self) -> tuple[float, ...]:
        own = tuple(v for _, v in self.nl_params)
        return own + (self.partner.slot_values() if self.partner else ())

    def slot_roles(self) -> tuple[str, ...]:
        own = tuple(r for r, _ in self.nl_params)
        return own + (self.partner.slot_roles() if self.partner else ())

    def with_slots(self, values: Sequence[float]) -> "BaseFunction":
        values = [float(v) for v in values]
        if len(values) != self.n_slots:
            raise ValueError(f"expected {self.n_slots} values, got {len(values)}")
        n = len(self.nl_params)
        own = tuple((r, v) for (r, _), v in zip(self.nl_params, values[:n]))
        partner = self.partner.with_slots(values[n:]) if self.partner else None
        return replace(self, nl_params=own, partner=partner)

    def descriptor(self) -> tuple:
        """Identity of the base ignoring parameter values."""
        own = (KIND_ORDER[self.kind], self.exponent, self.feature, tuple(r for r, _ in self.nl_params))
        return own + ((self.partner.descriptor(),) if self.partner else ())

    def features(self) -> set[int]:
        f = {self.feature}
        if self.partner:
            f |= self.partner.features()
        return f

    # -- numerics ----------------------------------------------------------
    def _arg(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        u = _power(X[:, self.feature], self.exponent)
        return u, self.scale * u + self.offset

    def _outer(self, arg: np.ndarray) -> np.ndarray:
        k = self.kind
        if k is FuncKind.IDENTITY:
            return arg
        if k is FuncKind.ABS:
            return np.abs(arg)
        if k is FuncKind.LOG:
            return np.log(arg)
        if k is FuncKind.EXP:
            return np.exp(arg)
        return np.sqrt(arg)

    def _outer_deriv(self, arg: np.ndarray, value: np.ndarray) -> np.ndarray:
        k = self.kind
        if k is FuncKind.IDENTITY:
            return np.ones_like(arg)
        if k is FuncKind.ABS:
            return np.sign(arg)
        if k is FuncKind.LOG:
            return 1.0 / arg
        if k is FuncKind.EXP:
            return value
        return 0.5 / value

    def _univariate(self, X: np.ndarray) -> np.ndarray:
        with np.errstate(all="ignore"):
            return self._outer(self._arg(X)[1])

    def evaluate(self, X: np.ndarray) -> np.ndarray:
        """Column of base values; out-of-domain rows come back non-finite."""
        v = self._univariate(X)
        if self.partner is not None:
            with np.errstate(all="ignore"):
                v = v * self.partner._univariate(X)
        return v

    def _univariate_with_grad(self, X: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        with np.errstate(all="ignore"):
            u, arg = self._arg(X)
            v = self._outer(arg)
            if not self.nl_params:
                return v, []
            d = self._outer_deriv(arg, v)
            grads = [d * u if role == SCALE else d for role, _ in self.nl_params]
        return v, grads

    def value_and_grad(self, X: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
        """Base values and partial derivatives w.r.t. each slot (slot order)."""
        v, g = self._univariate_with_grad(X)
        if self.partner is None:
            return v, g
        w, h = self.partner._univariate_with_grad(X)
        with np.errstate(all="ignore"):
            return v * w, [gi * w for gi in g] + [hi * v for hi in h]

    def arguments_positive(self, X: np.ndarray) -> bool:
        """True when every log/sqrt argument is strictly positive on X."""
        if self.kind in (FuncKind.LOG, FuncKind.SQRT):
            with np.errstate(all="ignore"):
                arg = self._arg(X)[1]
            if not np.all(arg > 0):
                return False
        return self.partner is None or self.partner.arguments_positive(X)

    # -- text and size -----------------------------------------------------
    def _var_text(self, names: Sequence[str]) -> str:
        name = names[self.feature]
        if self.exponent == 1:
            return name
        return f"{name}^{self.exponent:g}"

    def _univariate_text(self, names: Sequence[str]) -> str:
        s = self._var_text(names)
        params = dict(self.nl_params)
        if SCALE in params:
            s = f"{_fmt(params[SCALE])}*{s}"
        if OFFSET in params:
            b = params[OFFSET]
            s = f"{s} - {_fmt(-b)}" if b < 0 else f"{s} + {_fmt(b)}"
        if self.kind is FuncKind.IDENTITY:
            return f"({s})" if params else s
        return f"{self.kind.value}({s})"

    def to_text(self, names: Sequence[str]) -> str:
        s = self._univariate_text(names)
        if self.partner is not None:
            s = f"{s}*{self.partner._univariate_text(names)}"
        return s

    def _univariate_size(self) -> int:
        n = 1 if self.exponent == 1 else 3
        n += 2 * len(self.nl_params)
        if self.kind is not FuncKind.IDENTITY:
            n += 1
        return n

    def complexity(self) -> int:
        n = self._univariate_size()
        if self.partner is not None:
            n += 1 + self.partner._univariate_size()
        return n

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "exponent": self.exponent,
            "feature": self.feature,
            "params": [{"role": r, "value": v} for r, v in self.nl_params],
            "partner": self.partner.to_dict() if self.partner else None,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BaseFunction":
        partner = doc.get("partner")
        return cls(
            kind=FuncKind(doc["kind"]),
            exponent=doc["exponent"],
            feature=doc["feature"],
            nl_params=tuple((p["role"], p["value"]) for p in doc["params"]),
            partner=cls.from_dict(partner) if partner else None,
        )


@dataclass(frozen=True)
class Model:
    intercept: float
    terms: tuple[tuple[float, BaseFunction], ...] = ()
    feature_names: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "intercept", float(self.intercept))
        object.__setattr__(self, "terms", tuple((float(w), b) for w, b in self.terms))
        if self.feature_names is not None:
            object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def bases(self) -> list[BaseFunction]:
        return [b for _, b in self.terms]

    def max_feature(self) -> int:
        return max((max(b.features()) for _, b in self.terms), default=-1)

    def names(self, n: int | None = None) -> list[str]:
        n = self.max_feature() + 1 if n is None else n
        if self.feature_names is not None and len(self.feature_names) >= n:
            return list(self.feature_names)
        return [f"x{i + 1}" for i in range(n)]

    def __str__(self) -> str:
        return to_text(self)


def evaluate(m: Model, X) -> np.ndarray:
    """Predictions for each row of X; domain violations give non-finite rows."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("X must be 2-d")
    if m.max_feature() >= X.shape[1]:
        raise FeatureIndexOutOfRange(
            f"model uses feature index {m.max_feature()} but X has {X.shape[1]} columns"
        )
    out = np.full(X.shape[0], m.intercept)
    with np.errstate(all="ignore"):
        for w, b in m.terms:
            out = out + w * b.evaluate(X)
    return out


def complexity(m: Model) -> int:
    """Number of nodes in the model's expression tree.

    Every constant, variable, function and binary operator is one node.
    ``x^p`` with ``p != 1`` is three nodes, a weight of exactly 1 is left
    implicit (no constant, no multiplication), and each term adds one ``+``.
    """
    n = 1
    for w, b in m.terms:
        n += 1 + b.complexity() + (0 if w == 1.0 else 2)
    return n


def to_text(m: Model, names: Sequence[str] | None = None) -> str:
    names = list(names) if names is not None else m.names()
    s = _fmt(m.intercept)
    for w, b in m.terms:
        body = b.to_text(names)
        if w == 1.0:
            s += f" + {body}"
        elif w == -1.0:
            s += f" - {body}"
        else:
            s += f" {'-' if w < 0 else '+'} {_fmt(abs(w))}*{body}"
    return s


# -- documents ---------------------------------------------------------------

_BASE_SCHEMA = {
    "type": "object",
    "required": ["kind", "exponent", "feature", "params"],
    "additionalProperties": False,
    "properties": {
        "kind": {"enum": [k.value for k in FuncKind]},
        "exponent": {"type": "number"},
        "feature": {"type": "integer", "minimum": 0},
        "params": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["role", "value"],
                "additionalProperties": False,
                "properties": {"role": {"enum": [SCALE, OFFSET]}, "value": {"type": "number"}},
            },
        },
        "partner": {"anyOf": [{"type": "null"}, {"$ref": "#/$defs/base"}]},
    },
}

MODEL_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["format_version", "intercept", "terms"],
    "properties": {
        "format_version": {"const": FORMAT_VERSION},
        "intercept": {"type": "number"},
        "feature_names": {"anyOf": [{"type": "null"}, {"type": "array", "items": {"type": "string"}}]},
        "terms": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["weight", "base"],
                "additionalProperties": False,
                "properties": {"weight": {"type": "number"}, "base": {"$ref": "#/$defs/base"}},
            },
        },
    },
    "$defs": {"base": _BASE_SCHEMA},
}


def _all_values(m: Model) -> Iterable[float]:
    yield m.intercept
    for w, b in m.terms:
        yield w
        yield from b.slot_values()


def serialize(m: Model) -> dict:
    if not all(math.isfinite(v) for v in _all_values(m)):
        raise ValueError("cannot serialize a model with non-finite parameters")
    return {
        "format_version": FORMAT_VERSION,
        "intercept": m.intercept,
        "feature_names": list(m.feature_names) if m.feature_names is not None else None,
        "terms": [{"weight": w, "base": b.to_dict()} for w, b in m.terms],
        "text": to_text(m),
    }


def deserialize(doc: dict) -> Model:
    try:
        jsonschema.validate(doc, MODEL_SCHEMA)
    except jsonschema.ValidationError as e:
        raise SchemaViolation(e.message) from None
    try:
        m = Model(
            intercept=doc["intercept"],
            terms=tuple((t["weight"], BaseFunction.from_dict(t["base"])) for t in doc["terms"]),
            feature_names=doc.get("feature_names"),
        )
    except ValueError as e:
        raise SchemaViolation(str(e)) from None
    if not all(math.isfinite(v) for v in _all_values(m)):
        raise SchemaViolation("non-finite parameter value")
    return m


def dumps(m: Model) -> str:
    return json.dumps(serialize(m), indent=2)


def loads(text: str) -> Model:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaViolation(f"not JSON: {e}") from None
    return deserialize(doc)
