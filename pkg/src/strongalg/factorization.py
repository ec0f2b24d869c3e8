"""Canonical factorization ``a = a_minus a_plus`` in a decomposing Wiener algebra.

The splitting is by the sign of the Fourier index: ``P`` keeps ``n < 0`` and
``Q = I - P`` keeps ``n >= 0`` (so the constant term belongs to ``Q``).  With
``T_a(x) = P(ax) + Q(x)`` and ``R_a(x) = P(x) + Q(xa)`` the factors are
``a_plus = x^{-1}`` and ``a_minus = y^{-1}`` where ``T_a x = 1`` and
``R_a y = 1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import calculus
from .core import _check_same
from .errors import ContractionError, NumericalFailure, PreconditionError
from .wiener import WienerElement, wiener_invertibility_scan, wiener_multiply

MAX_ITERATIONS = 100_000
MAX_WORK_HALF_WIDTH = 4096


def _mask(x: WienerElement, keep) -> WienerElement:
    n = x.indices()
    coeffs = x.coeffs * keep(n).reshape((-1,) + (1,) * (x.coeffs.ndim - 1))
    # an l1 tail splits over the two index sets, so each part keeps the bound
    return WienerElement(x.algebra, coeffs, None if x.exact else dict(x.tail), x.max_half_width)


def P(x: WienerElement) -> WienerElement:
    """Projection onto ``n < 0``."""
    return _mask(x, lambda n: n < 0)


def Q(x: WienerElement) -> WienerElement:
    """Projection onto ``n >= 0``."""
    return _mask(x, lambda n: n >= 0)


@dataclass(frozen=True)
class Decomposition:
    """The index-sign splitting; both projections have norm 1 at every grade."""

    plus_name: str = "U+ (n < 0)"
    minus_name: str = "U-0 (n >= 0)"

    def P(self, x):
        return P(x)

    def Q(self, x):
        return Q(x)

    def norm_P(self, beta=None) -> float:
        return 1.0

    def norm_Q(self, beta=None) -> float:
        return 1.0


def apply_T(a: WienerElement, x: WienerElement) -> WienerElement:
    """``T_a(x) = P(ax) + Q(x)``."""
    _check_same(a, x)
    return P(wiener_multiply(a, x)) + Q(x)


def apply_R(a: WienerElement, x: WienerElement) -> WienerElement:
    """``R_a(x) = P(x) + Q(xa)``."""
    _check_same(a, x)
    return P(x) + Q(wiener_multiply(x, a))


def _working_half_width(a, ratio, tol, cap):
    Na = max(a.half_width, 1)
    if ratio <= 0:
        return Na
    steps = math.ceil(math.log(tol * (1 - ratio) / 4) / math.log(ratio))
    return int(min(cap, Na * max(steps, 1) + Na))


def _contraction(a: WienerElement, alpha, beta):
    alg = a.algebra
    alg._require(alpha, beta)
    q = alg.constant(beta, alpha) * a.norm_bound(alpha)
    if not q < 1:
        raise ContractionError("pair equations need A_{beta,alpha} ||a||_alpha max(||P||, ||Q||) < 1", q)
    return q


@dataclass
class IterationLog:
    ratio: float
    increments: list = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.increments)

    def observed_rate(self) -> float:
        """Least-squares slope of log(increment), as a ratio."""
        inc = np.array([v for v in self.increments if v > 0])
        if inc.size < 3:
            return 0.0
        k = np.arange(inc.size)
        return float(np.exp(np.polyfit(k, np.log(inc), 1)[0]))

    def to_dict(self):
        return {
            "ratio": self.ratio,
            "iterations": self.iterations,
            "increments": list(self.increments),
            "observed_rate": self.observed_rate(),
        }


def _iterate(step, seed, ratio, beta, tol, max_iter):
    log = IterationLog(ratio)
    x = seed
    for _ in range(max_iter):
        nxt = step(x)
        inc = (nxt - x).norm(beta)
        log.increments.append(inc)
        x = nxt
        if inc * ratio / (1 - ratio) < tol or inc == 0:
            return x, log, inc * ratio / (1 - ratio)
    raise NumericalFailure(f"pair iteration did not reach tol {tol:.3g} in {max_iter} steps")


def solve_pair_equations(a, f, g, alpha=None, beta=None, tol=None, max_iter=MAX_ITERATIONS, half_width=None):
    """Solve ``x - P(ax) = f`` and ``y - Q(ya) = g`` by fixed-point iteration.

    Needs ``A_{beta,alpha} ||a||_alpha < 1``.  Returns ``(x, y, logs)``; iterates
    are truncated to a working half-width sized from the contraction ratio.
    """
    _check_same(a, f)
    _check_same(a, g)
    alg = a.algebra
    alpha = alg.home_grade if alpha is None else alg.check_grade(alpha)
    beta = alg.grades_above(alpha)[0] if beta is None else alg.check_grade(beta)
    tol = calculus.default_tol(alg) if tol is None else tol
    q = _contraction(a, alpha, beta)
    K = half_width or max(_working_half_width(a, q, tol, MAX_WORK_HALF_WIDTH), f.half_width, g.half_width)
    cap = WienerElement(alg, a.coeffs, a.tail, K)

    def step_x(x):
        return f + P(wiener_multiply(cap, x, max_half_width=K))

    def step_y(y):
        return g + Q(wiener_multiply(y, cap, max_half_width=K))

    x, log_x, stop_x = _iterate(step_x, f, q, beta, tol, max_iter)
    y, log_y, stop_y = _iterate(step_y, g, q, beta, tol, max_iter)
    x = calculus._add_tail(x, beta, stop_x)
    y = calculus._add_tail(y, beta, stop_y)
    return x, y, {"x": log_x, "y": log_y}


def _series_inverse(x: WienerElement, sign: int, length: int) -> WienerElement:
    """Inverse of ``x`` supported on ``sign * n >= 0`` as a formal power series.

    ``w_0 = x_0^{-1}``, ``w_k = -x_0^{-1} sum_{j>=1} x_j w_{k-j}`` (indices
    along ``sign * n``), so ``x w = 1`` up to order ``length``.
    """
    alg = x.algebra
    N = x.half_width
    X = [x.coeffs[N + sign * j] for j in range(min(N, length) + 1)]
    inv0 = calculus.left_inverse(x.coefficient(0)).element.data
    W = [inv0]
    for k in range(1, length + 1):
        acc = np.zeros_like(inv0)
        for j in range(1, min(k, len(X) - 1) + 1):
            acc = acc + alg.mul_data(X[j][None], W[k - j][None])[0][0]
        W.append(-alg.mul_data(inv0[None], acc[None])[0][0])
    out = np.zeros((2 * length + 1,) + inv0.shape, dtype=complex)
    for k, w in enumerate(W):
        out[length + sign * k] = w
    return WienerElement(alg, out, None, x.max_half_width)


def invert_in_subalgebra(x: WienerElement, side: str, beta, tol, length=None):
    """Two-sided inverse of ``x`` with ``x - 1`` in the ``side`` subalgebra.

    Uses the certified Neumann series when ``A ||1 - x|| < 1``; otherwise the
    power-series recurrence.  Both keep the support in the same index set.
    """
    alg = x.algebra
    one = x.one_like()
    d = one - x
    gamma = alg.grades_above(beta)[0]
    if alg.constant(gamma, beta) * d.norm_bound(beta) < 1:
        try:
            res = calculus.neumann_inverse(d, beta, gamma, tol=tol)
            return res.inverse, "neumann"
        except (ContractionError, NumericalFailure):
            pass
    sign = -1 if side == "plus" else 1
    length = length or x.half_width
    w = _series_inverse(x, sign, length)
    while True:
        r = (wiener_multiply(x, w) - one).norm(beta) + (wiener_multiply(w, x) - one).norm(beta)
        if r <= tol or length >= MAX_WORK_HALF_WIDTH:
            break
        length *= 2
        w = _series_inverse(x, sign, length)
    if r > tol:
        raise NumericalFailure(f"inner inversion residual {r:.3g} > {tol:.3g}")
    return w, "series"


def _outside(x: WienerElement, allowed) -> float:
    """Largest coefficient magnitude at indices outside ``allowed``."""
    n = x.indices()
    bad = ~allowed(n)
    if not np.any(bad):
        return 0.0
    return float(np.max(np.abs(x.coeffs[bad])))


def membership_report(a_minus, a_plus, a_minus_inv, a_plus_inv):
    plus = lambda n: n < 0  # noqa: E731
    minus = lambda n: n >= 0  # noqa: E731
    items = {
        "a_plus - 1": (a_plus - 1, plus),
        "a_plus_inv - 1": (a_plus_inv - 1, plus),
        "a_minus - 1": (a_minus - 1, minus),
        "a_minus_inv - 1": (a_minus_inv - 1, minus),
    }
    out = {}
    for name, (x, allowed) in items.items():
        s = x.support()
        out[name] = {
            "support": None if s is None else list(s),
            "subalgebra": "U+ (n < 0)" if allowed is plus else "U-0 (n >= 0)",
            "outside_max": _outside(x, allowed),
        }
    out["exact"] = all(v["outside_max"] == 0.0 for v in out.values() if isinstance(v, dict))
    return out


@dataclass
class FactorizationResult:
    a_minus: WienerElement
    a_plus: WienerElement
    a_minus_inv: WienerElement
    a_plus_inv: WienerElement
    grade: object
    residual: float
    fixed_point_residuals: dict
    membership: dict
    iteration_log: dict
    inversion_methods: dict

    def to_dict(self):
        return {
            "grade": self.grade,
            "residual": self.residual,
            "fixed_point_residuals": self.fixed_point_residuals,
            "membership": self.membership,
            "iteration_log": {k: v.to_dict() for k, v in self.iteration_log.items()},
            "inversion_methods": self.inversion_methods,
        }


def solve_canonical_factorization(a: WienerElement, alpha=None, beta=None, tol=None, max_iter=MAX_ITERATIONS):
    """Canonical factorization under ``A_{beta,alpha} ||1 - a||_alpha < 1``."""
    alg = a.algebra
    alpha = alg.home_grade if alpha is None else alg.check_grade(alpha)
    beta = alg.grades_above(alpha)[0] if beta is None else alg.check_grade(beta)
    tol = calculus.default_tol(alg) if tol is None else tol
    d = a.one_like() - a
    one = a.one_like()
    x, y, logs = solve_pair_equations(d, one, one, alpha, beta, tol=tol / 10, max_iter=max_iter)

    fp_x = (x - P(wiener_multiply(d, x)) - one).norm(beta)
    fp_y = (y - Q(wiener_multiply(y, d)) - one).norm(beta)

    for name, z in (("x", x), ("y", y)):
        scan = wiener_invertibility_scan(z, 2 * z.half_width + 1)
        if not scan.all_invertible:
            raise NumericalFailure(f"{name} is not pointwise invertible (min sigma {scan.min_sigma:.3g})")

    a_plus, m_plus = invert_in_subalgebra(x, "plus", beta, tol / 10)
    a_minus, m_minus = invert_in_subalgebra(y, "minus", beta, tol / 10)
    prod = wiener_multiply(a_minus, a_plus)
    residual = (a - prod).norm(beta)
    membership = membership_report(a_minus, a_plus, y, x)
    result = FactorizationResult(
        a_minus=a_minus,
        a_plus=a_plus,
        a_minus_inv=y,
        a_plus_inv=x,
        grade=beta,
        residual=float(residual),
        fixed_point_residuals={"x": float(fp_x), "y": float(fp_y)},
        membership=membership,
        iteration_log=logs,
        inversion_methods={"a_plus": m_plus, "a_minus": m_minus},
    )
    if not membership["exact"]:
        raise NumericalFailure("factor supports leave their subalgebras")
    if residual > tol:
        raise NumericalFailure(f"factorization residual {residual:.3g} > {tol:.3g}")
    return result


@dataclass
class VerificationReport:
    grid_size: int
    pointwise_error: float
    residual_minus_plus: float
    residual_plus_minus: float
    membership: dict
    tol: float

    @property
    def minus_plus_ok(self) -> bool:
        return self.residual_minus_plus <= self.tol

    @property
    def plus_minus_ok(self) -> bool:
        return self.residual_plus_minus <= self.tol

    @property
    def passed(self) -> bool:
        return self.minus_plus_ok and self.pointwise_error <= self.tol and self.membership["exact"]

    def to_dict(self):
        return {
            "grid_size": self.grid_size,
            "pointwise_error": self.pointwise_error,
            "residual_minus_plus": self.residual_minus_plus,
            "residual_plus_minus": self.residual_plus_minus,
            "minus_plus_ok": self.minus_plus_ok,
            "plus_minus_ok": self.plus_minus_ok,
            "membership": self.membership,
            "passed": self.passed,
        }


def verify_factorization(a, result, grid_size=256, tol=1e-8, grade=None) -> VerificationReport:
    alg = a.algebra
    grade = alg.home_grade if grade is None else grade
    ts = -np.pi + 2 * np.pi * np.arange(grid_size) / grid_size
    pm = alg.mul_data(result.a_minus.evaluate_data(ts), result.a_plus.evaluate_data(ts))[0]
    pointwise = float(np.max(alg.norm_data(a.evaluate_data(ts) - pm, grade)))
    r_mp = (a - wiener_multiply(result.a_minus, result.a_plus)).norm(grade)
    r_pm = (a - wiener_multiply(result.a_plus, result.a_minus)).norm(grade)
    membership = membership_report(result.a_minus, result.a_plus, result.a_minus_inv, result.a_plus_inv)
    return VerificationReport(int(grid_size), pointwise, float(r_mp), float(r_pm), membership, tol)
