"""Strong algebras: graded ladders, computable instances and their elements.

Three instances are shipped:

``MatrixAlgebra``
    Dense complex n x n matrices with the spectral norm.  One grade (0),
    ``h = id`` and ``A = 1``: the Banach-algebra case.
``GermsAlgebra``
    Truncated power series ``f_0 + f_1 z + ... + f_D z^D`` with the
    weighted l1 norms ``||f||_r = sum |f_n| r^n``.  Grades are radii,
    ordered by ``alpha <= beta`` iff ``r_alpha >= r_beta``.
``KondratievAlgebra``
    Coefficients over multi-indices in the first K variables, total
    degree <= D, Wick (Cauchy) product and the weighted l2 norms
    ``||a||_p^2 = sum |a_g|^2 (2N)^(-p g)``.  ``h(p) = p + 2``.

Elements carry a truncated representation plus an optional per-grade tail
bound.  ``Element.norm`` is the exact norm of the truncated data;
``Element.norm_bound`` adds the tail and is what certificates use.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from numbers import Number
from typing import Callable, Mapping, NamedTuple, Optional

import numpy as np
import scipy.sparse
import scipy.special

from .errors import (
    DivergenceError,
    GradeError,
    InstanceMismatchError,
    LadderError,
)

COMPARISON_SLACK = 1e-10


def _mul0(x, y):
    """Product with 0 * inf = 0 (an exact zero kills an unknown bound)."""
    if x == 0 or y == 0:
        return 0.0
    return x * y


class StrongAlgebra:
    """Base class of the computable instances.

    Subclasses describe the grade ladder (``h``, ``constant``), the norms and
    the product on raw coefficient arrays.  All data methods accept arbitrary
    leading batch axes.
    """

    kind = "abstract"
    norm_kind = "l1"

    # -- ladder ---------------------------------------------------------
    def check_grade(self, g):
        raise NotImplementedError

    def le(self, a, b) -> bool:
        raise NotImplementedError

    def h(self, g):
        raise NotImplementedError

    def admissible(self, alpha, beta) -> bool:
        alpha, beta = self.check_grade(alpha), self.check_grade(beta)
        return self.le(self.h(alpha), beta)

    def constant(self, beta, alpha) -> float:
        raise NotImplementedError

    def grades_above(self, alpha) -> list:
        """Admissible targets beta >= h(alpha), nearest first."""
        raise NotImplementedError

    def grades_below(self, beta) -> list:
        """Admissible sources alpha with beta >= h(alpha), nearest first."""
        raise NotImplementedError

    @property
    def tracked_grades(self) -> tuple:
        raise NotImplementedError

    @property
    def home_grade(self):
        return self.tracked_grades[0]

    def _require(self, alpha, beta):
        if not self.admissible(alpha, beta):
            raise LadderError(
                f"{self.kind}: grade {beta!r} is not >= h({alpha!r}) = {self.h(alpha)!r}"
            )

    # -- data -------------------------------------------------------------
    coef_shape: tuple = ()

    def norm_data(self, data, g):
        raise NotImplementedError

    def mul_data(self, x, y):
        """Return ``(kept, discarded)``; ``discarded`` is None if exact."""
        raise NotImplementedError

    def disc_norm(self, disc, g):
        raise NotImplementedError

    def combine_norms(self, kept, disc):
        if self.norm_kind == "l2":
            return np.hypot(kept, disc)
        return kept + disc

    def unit_data(self, like=None):
        raise NotImplementedError

    def zero_data(self):
        return np.zeros(self.coef_shape, dtype=complex)

    def random_data(self, rng, size=()):
        """Coefficients i.i.d. uniform on the complex unit disk."""
        shape = tuple(np.atleast_1d(size)) if size != () else ()
        shape = shape + self.coef_shape
        r = np.sqrt(rng.random(shape))
        phase = np.exp(2j * np.pi * rng.random(shape))
        return r * phase

    def params(self) -> dict:
        raise NotImplementedError

    # -- elements -----------------------------------------------------
    def element(self, data, tail=None) -> "Element":
        return Element(self, data, tail)

    def one(self) -> "Element":
        return Element(self, self.unit_data())

    def zero(self) -> "Element":
        return Element(self, self.zero_data())

    def random(self, rng, scale=1.0) -> "Element":
        return Element(self, scale * self.random_data(rng))


# ---------------------------------------------------------------------------
# Matrix instance
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MatrixAlgebra(StrongAlgebra):
    """n x n complex matrices; n = 1 is the scalar instance.

    Rectangular arrays are accepted wherever the product is defined (used for
    one-sided inverses); ``unit_data(like)`` then returns the identity of the
    matching row dimension.
    """

    n: int = 1
    kind = "matrix"
    norm_kind = "spectral"

    @property
    def coef_shape(self):
        return (self.n, self.n)

    def check_grade(self, g):
        if g is None or g != 0:
            raise GradeError(f"matrix instance has the single grade 0, got {g!r}")
        return 0

    def le(self, a, b):
        return True

    def h(self, g):
        return 0

    def constant(self, beta, alpha):
        self._require(alpha, beta)
        return 1.0

    def grades_above(self, alpha):
        self.check_grade(alpha)
        return [0]

    def grades_below(self, beta):
        self.check_grade(beta)
        return [0]

    @property
    def tracked_grades(self):
        return (0,)

    def norm_data(self, data, g):
        self.check_grade(g)
        data = np.asarray(data)
        if data.shape[-2:] == (1, 1):
            return np.abs(data[..., 0, 0])
        if 2 in data.shape[-2:]:
            # largest eigenvalue of the 2x2 Gram matrix in closed form
            gram = data.conj().swapaxes(-1, -2) @ data if data.shape[-1] == 2 else data @ data.conj().swapaxes(-1, -2)
            g11, g22 = gram[..., 0, 0].real, gram[..., 1, 1].real
            disc = np.sqrt((g11 - g22) ** 2 + 4 * np.abs(gram[..., 0, 1]) ** 2)
            return np.sqrt(np.maximum((g11 + g22 + disc) / 2, 0.0))
        return np.linalg.norm(data, ord=2, axis=(-2, -1))

    def mul_data(self, x, y):
        return np.matmul(x, y), None

    def disc_norm(self, disc, g):
        return np.zeros(np.shape(disc)[:-2])

    def combine_norms(self, kept, disc):
        return kept + disc

    def unit_data(self, like=None):
        m = self.n if like is None else np.shape(like)[-2]
        return np.eye(m, dtype=complex)

    def params(self):
        return {"n": self.n}


def scalar(z) -> "Element":
    """A scalar as an element of the 1 x 1 matrix instance."""
    return Element(MatrixAlgebra(1), np.array([[z]], dtype=complex))


# ---------------------------------------------------------------------------
# Germs of holomorphic functions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GermsAlgebra(StrongAlgebra):
    degree: int = 8
    tracked: tuple = (1.0, 0.5, 0.25)
    kind = "germs"
    norm_kind = "l1"

    def __post_init__(self):
        tracked = tuple(sorted({float(r) for r in self.tracked}, reverse=True))
        if not tracked or tracked[-1] <= 0:
            raise GradeError("germs grades are radii r > 0")
        object.__setattr__(self, "tracked", tracked)

    @property
    def coef_shape(self):
        return (self.degree + 1,)

    def check_grade(self, g):
        try:
            r = float(g)
        except (TypeError, ValueError):
            raise GradeError(f"germs grade must be a radius, got {g!r}") from None
        if not (r > 0 and math.isfinite(r)):
            raise GradeError(f"germs grade must be a radius r > 0, got {g!r}")
        return r

    def le(self, a, b):
        # smaller radius = larger space
        return a >= b

    def h(self, g):
        return self.check_grade(g)

    def constant(self, beta, alpha):
        self._require(alpha, beta)
        return 1.0

    def grades_above(self, alpha):
        r = self.check_grade(alpha)
        return [r] + [t for t in self.tracked if t < r]

    def grades_below(self, beta):
        r = self.check_grade(beta)
        return [r] + [t for t in reversed(self.tracked) if t > r]

    @property
    def tracked_grades(self):
        return self.tracked

    def _weights(self, r, start, count):
        return r ** np.arange(start, start + count, dtype=float)

    def norm_data(self, data, g):
        r = self.check_grade(g)
        data = np.asarray(data)
        return np.abs(data) @ self._weights(r, 0, data.shape[-1])

    def mul_data(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x), np.asarray(y))
        d = self.degree
        full = np.zeros(x.shape[:-1] + (2 * d + 1,), dtype=complex)
        for k in range(d + 1):
            full[..., k : k + d + 1] += x[..., k : k + 1] * y
        return full[..., : d + 1], full[..., d + 1 :]

    def disc_norm(self, disc, g):
        r = self.check_grade(g)
        disc = np.asarray(disc)
        return np.abs(disc) @ self._weights(r, self.degree + 1, disc.shape[-1])

    def unit_data(self, like=None):
        e = np.zeros(self.coef_shape, dtype=complex)
        e[0] = 1.0
        return e

    def params(self):
        return {"degree": self.degree, "tracked": list(self.tracked)}


# ---------------------------------------------------------------------------
# Kondratiev-type instance
# ---------------------------------------------------------------------------


def multi_indices(variables: int, degree: int) -> list[tuple[int, ...]]:
    """Multi-indices in ``variables`` slots with total degree <= ``degree``.

    Graded order: by total degree, then reverse-lexicographic within a degree
    so that (1, 0) precedes (0, 1).
    """

    def compositions(total, slots):
        if slots == 1:
            yield (total,)
            return
        for first in range(total, -1, -1):
            for rest in compositions(total - first, slots - 1):
                yield (first,) + rest

    out = []
    for deg in range(degree + 1):
        out.extend(compositions(deg, variables))
    return out


class VageConstant(NamedTuple):
    truncated: Optional[float]
    limit: float


def vage_constant(p, q, truncation: Optional[tuple[int, int]] = None) -> VageConstant:
    """``(sum_g (2N)^(-(q-p) g))^(1/2)`` and its infinite-product limit.

    ``truncation = (K, D)`` restricts the sum to the first K variables and total
    degree <= D.  The limit is ``prod_k (1 - (2k)^-(q-p))^(-1/2)``, evaluated via
    ``log = 1/2 sum_m 2^(-rm) zeta(rm) / m``.
    """
    r = float(q) - float(p)
    if r < 2:
        raise DivergenceError(
            f"Wick-product constant requires q >= p + 2 (q - p = {r:g} diverges or is not admitted)"
        )
    log_sq = 0.0
    m = 1
    while True:
        term = 2.0 ** (-r * m) * scipy.special.zeta(r * m) / m
        log_sq += term
        if term < 1e-18:
            break
        m += 1
    limit = math.exp(0.5 * log_sq)

    truncated = None
    if truncation is not None:
        K, D = truncation
        poly = np.zeros(D + 1)
        poly[0] = 1.0
        for k in range(1, K + 1):
            w = (2.0 * k) ** (-r)
            factor = w ** np.arange(D + 1)
            poly = np.convolve(poly, factor)[: D + 1]
        truncated = math.sqrt(poly.sum())
    return VageConstant(truncated, limit)


@dataclass(frozen=True)
class KondratievAlgebra(StrongAlgebra):
    variables: int = 2
    degree: int = 3
    tracked: tuple = (0, 1, 2, 3, 4, 5, 6)
    max_grade: int = 16
    kind = "kondratiev"
    norm_kind = "l2"

    def __post_init__(self):
        tracked = tuple(sorted({self.check_grade(p) for p in self.tracked}))
        object.__setattr__(self, "tracked", tracked)

    @cached_property
    def indices(self):
        return multi_indices(self.variables, self.degree)

    @cached_property
    def _ext_indices(self):
        return multi_indices(self.variables, 2 * self.degree)

    @cached_property
    def _log_weights(self):
        # log (2N)^g for every extended multi-index
        logs = np.log(2.0 * np.arange(1, self.variables + 1))
        return np.array([np.dot(g, logs) for g in self._ext_indices])

    @cached_property
    def _product_map(self):
        pos = {g: i for i, g in enumerate(self._ext_indices)}
        m = len(self.indices)
        rows, cols = [], []
        for i, gi in enumerate(self.indices):
            for j, gj in enumerate(self.indices):
                rows.append(i * m + j)
                cols.append(pos[tuple(a + b for a, b in zip(gi, gj))])
        data = np.ones(len(rows))
        return scipy.sparse.csr_matrix(
            (data, (rows, cols)), shape=(m * m, len(self._ext_indices))
        )

    @property
    def coef_shape(self):
        return (len(self.indices),)

    def check_grade(self, g):
        try:
            p = int(g)
        except (TypeError, ValueError):
            raise GradeError(f"Kondratiev grade must be an integer, got {g!r}") from None
        if p != g or p < 0:
            raise GradeError(f"Kondratiev grade must be an integer p >= 0, got {g!r}")
        return p

    def le(self, a, b):
        return a <= b

    def h(self, g):
        return self.check_grade(g) + 2

    def constant(self, beta, alpha):
        self._require(alpha, beta)
        return vage_constant(alpha, beta).limit

    def grades_above(self, alpha):
        p = self.check_grade(alpha)
        return list(range(p + 2, max(p + 2, self.max_grade) + 1))

    def grades_below(self, beta):
        q = self.check_grade(beta)
        return list(range(q - 2, -1, -1))

    @property
    def tracked_grades(self):
        return self.tracked

    def _weights(self, p, start, count):
        return np.exp(-p * self._log_weights[start : start + count])

    def norm_data(self, data, g):
        p = self.check_grade(g)
        data = np.asarray(data)
        return np.sqrt(np.abs(data) ** 2 @ self._weights(p, 0, data.shape[-1]))

    def mul_data(self, x, y):
        x, y = np.broadcast_arrays(np.asarray(x), np.asarray(y))
        m = x.shape[-1]
        batch = x.shape[:-1]
        outer = (x[..., :, None] * y[..., None, :]).reshape(-1, m * m)
        full = (self._product_map.T @ outer.T).T.reshape(batch + (-1,))
        return full[..., :m], full[..., m:]

    def disc_norm(self, disc, g):
        p = self.check_grade(g)
        disc = np.asarray(disc)
        w = self._weights(p, len(self.indices), disc.shape[-1])
        return np.sqrt(np.abs(disc) ** 2 @ w)

    def unit_data(self, like=None):
        e = np.zeros(self.coef_shape, dtype=complex)
        e[0] = 1.0
        return e

    def params(self):
        return {
            "variables": self.variables,
            "degree": self.degree,
            "tracked": list(self.tracked),
            "max_grade": self.max_grade,
        }


INSTANCES = {
    "matrix": MatrixAlgebra,
    "germs": GermsAlgebra,
    "kondratiev": KondratievAlgebra,
}


def instance_from_spec(spec: Mapping) -> StrongAlgebra:
    """Build an instance from ``{"kind": ..., **params}``."""
    spec = dict(spec)
    kind = spec.pop("kind", None)
    if kind not in INSTANCES:
        raise GradeError(f"unknown instance kind {kind!r}")
    if "tracked" in spec:
        spec["tracked"] = tuple(spec["tracked"])
    return INSTANCES[kind](**spec)


def instance_spec(alg: StrongAlgebra) -> dict:
    return {"kind": alg.kind, **alg.params()}


# ---------------------------------------------------------------------------
# Tail bookkeeping
# ---------------------------------------------------------------------------


def best_constant_norm(alg, beta, norm_at: Callable) -> float:
    """min over admissible alpha of ``A_{beta,alpha} * norm_at(alpha)``."""
    best = math.inf
    for alpha in alg.grades_below(beta):
        v = norm_at(alpha)
        if math.isfinite(v):
            best = min(best, alg.constant(beta, alpha) * v)
    return best


def product_tail(alg, a, b, discarded: Optional[Mapping] = None):
    """Tail bound of ``a * b`` at every tracked grade.

    ``a`` and ``b`` are anything with ``norm(g)``, ``tail_bound(g)`` and
    ``exact``.  The truncation error of the product splits as
    ``a_t tb + ta b_t + ta tb``; each term is bounded by the graded inequality
    with the cheapest admissible lower grade.
    """
    if a.exact and b.exact and not discarded:
        return None
    out = {}
    for beta in alg.tracked_grades:
        t = 0.0 if discarded is None else float(discarded.get(beta, 0.0))
        if not b.exact:
            t += _mul0(best_constant_norm(alg, beta, a.norm), b.tail_bound(beta))
        if not a.exact:
            t += _mul0(best_constant_norm(alg, beta, b.norm), a.tail_bound(beta))
        if not a.exact and not b.exact:
            t += _mul0(best_constant_norm(alg, beta, a.tail_bound), b.tail_bound(beta))
        out[beta] = t
    return out


def sum_tail(a, b):
    if a.exact and b.exact:
        return None
    grades = set(a.tail or {}) | set(b.tail or {})
    return {g: a.tail_bound(g) + b.tail_bound(g) for g in grades}


def _check_same(a, b):
    if a.algebra != b.algebra:
        raise InstanceMismatchError(
            f"instance mismatch: {instance_spec(a.algebra)} vs {instance_spec(b.algebra)}"
        )


# ---------------------------------------------------------------------------
# Elements
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Element:
    """A truncated element with an optional per-grade tail bound.

    ``tail=None`` means the representation is exact.  Otherwise grades missing
    from ``tail`` have an unknown (infinite) tail.
    """

    algebra: StrongAlgebra
    data: np.ndarray
    tail: Optional[Mapping] = field(default=None)

    def __post_init__(self):
        object.__setattr__(self, "data", np.array(self.data, dtype=complex))
        if self.tail is not None:
            tail = {self.algebra.check_grade(g): float(v) for g, v in self.tail.items()}
            object.__setattr__(self, "tail", tail)

    @property
    def exact(self) -> bool:
        return self.tail is None

    def norm(self, g) -> float:
        return float(self.algebra.norm_data(self.data, g))

    def tail_bound(self, g) -> float:
        g = self.algebra.check_grade(g)
        if self.tail is None:
            return 0.0
        return self.tail.get(g, math.inf)

    def norm_bound(self, g) -> float:
        return self.norm(g) + self.tail_bound(g)

    def one_like(self) -> "Element":
        return Element(self.algebra, self.algebra.unit_data(self.data))

    def zero_like(self) -> "Element":
        return Element(self.algebra, np.zeros_like(self.data))

    def with_tail(self, tail) -> "Element":
        return Element(self.algebra, self.data, tail)

    def __add__(self, other):
        if isinstance(other, Number):
            other = other * self.one_like()
        if not isinstance(other, Element):
            return NotImplemented
        _check_same(self, other)
        return Element(self.algebra, self.data + other.data, sum_tail(self, other))

    __radd__ = __add__

    def __neg__(self):
        return Element(self.algebra, -self.data, self.tail)

    def __sub__(self, other):
        if not isinstance(other, (Element, Number)):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Number):
            tail = None if self.tail is None else {g: abs(other) * v for g, v in self.tail.items()}
            return Element(self.algebra, other * self.data, tail)
        if not isinstance(other, Element):
            return NotImplemented
        return multiply(self, other)

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self * other
        return NotImplemented

    def allclose(self, other, atol=1e-12) -> bool:
        return np.allclose(self.data, other.data, rtol=0, atol=atol)

    def __repr__(self):
        return f"Element({self.algebra.kind}, shape={self.data.shape}, exact={self.exact})"


def norm(e: Element, alpha) -> float:
    """Exact norm of the truncated representation at grade ``alpha``."""
    return e.norm(alpha)


def multiply(a: Element, b: Element) -> Element:
    """Product of truncated representations, re-truncated to the instance degree.

    Discarded mass and the inputs' tails are folded into the tail bound at every
    tracked grade.
    """
    _check_same(a, b)
    alg = a.algebra
    kept, disc = alg.mul_data(a.data, b.data)
    discarded = None
    if disc is not None and np.any(disc != 0):
        discarded = {g: float(alg.disc_norm(disc, g)) for g in alg.tracked_grades}
    return Element(alg, kept, product_tail(alg, a, b, discarded))


def product_norm(alg: StrongAlgebra, x, y, g):
    """Norm of the untruncated product of two data arrays (batched)."""
    kept, disc = alg.mul_data(x, y)
    n = alg.norm_data(kept, g)
    if disc is None:
        return n
    return alg.combine_norms(n, alg.disc_norm(disc, g))


# ---------------------------------------------------------------------------
# Validation of the graded inequality
# ---------------------------------------------------------------------------


@dataclass
class ValidationReport:
    instance: dict
    alpha: object
    beta: object
    constant: float
    samples: int
    seed: int
    worst_ratio: float
    passed: bool

    def to_dict(self):
        return dict(self.__dict__)


def random_batch(alg: StrongAlgebra, rng, count: int, spread: float = 2.0):
    """``count`` random data arrays, each rescaled by 10**U(-spread, spread)."""
    data = alg.random_data(rng, count)
    scale = 10.0 ** rng.uniform(-spread, spread, size=count)
    return data * scale.reshape((count,) + (1,) * len(alg.coef_shape))


def validate_strong_inequality(
    alg: StrongAlgebra, alpha, beta, sample_count: int = 100, seed: int = 0
) -> ValidationReport:
    """Worst ratio ``max(||ab||_b, ||ba||_b) / (||a||_a ||b||_b)`` over random pairs.

    Products are measured untruncated, so the check covers the full product
    of the truncated representations.
    """
    const = alg.constant(beta, alpha)
    rng = np.random.default_rng(seed)
    a = random_batch(alg, rng, sample_count)
    b = random_batch(alg, rng, sample_count)
    ab = product_norm(alg, a, b, beta)
    ba = product_norm(alg, b, a, beta)
    denom = alg.norm_data(a, alpha) * alg.norm_data(b, beta)
    ratios = np.maximum(ab, ba) / denom
    worst = float(np.max(ratios)) if sample_count else 0.0
    return ValidationReport(
        instance=instance_spec(alg),
        alpha=alg.check_grade(alpha),
        beta=alg.check_grade(beta),
        constant=const,
        samples=int(sample_count),
        seed=int(seed),
        worst_ratio=worst,
        passed=bool(worst <= const * (1 + COMPARISON_SLACK)),
    )
