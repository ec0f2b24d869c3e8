"""Power series, certified Neumann inversion and admissible operators.

The functions here only rely on the element protocol shared by
:class:`~strongalg.core.Element` and :class:`~strongalg.wiener.WienerElement`
(``algebra``, ``norm``, ``norm_bound``, ``one_like``, ring operators), so
the same code certifies inverses in an instance and in its Wiener algebra.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

from .core import Element, MatrixAlgebra, StrongAlgebra
from .errors import (
    ContractionError,
    LadderError,
    NotInvertibleError,
    NumericalFailure,
)

TERM_BUDGET = 10**6


class Formula(str, enum.Enum):
    POWER = "prop-power"
    INVERT = "prop-invert"
    LEFT_INVERT = "prop-left-invert"
    INVSO = "prop-invso"


@dataclass
class NormCertificate:
    """``bound`` is a proven upper bound on a norm at ``grade``."""

    grade: object
    bound: float
    formula: Formula
    inputs: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "grade": self.grade,
            "bound": self.bound,
            "formula": self.formula.value,
            "inputs": self.inputs,
        }


def default_tol(alg: StrongAlgebra) -> float:
    return 1e-10 if isinstance(alg, MatrixAlgebra) else 1e-8


def _term_budget(x, max_terms):
    if max_terms is not None:
        return int(max_terms)
    return max(1, TERM_BUDGET // max(1, x.data.size if hasattr(x, "data") else x.coeffs.size))


def _is_zero(x) -> bool:
    arr = x.data if isinstance(x, Element) else x.coeffs
    return x.exact and not np.any(arr)


def _add_tail(x, grade, extra):
    """Widen the tail of ``x`` by an error ``extra`` known at ``grade``.

    The bound transfers to every coarser grade (all shipped instances embed
    with constant 1); tails at finer grades become unknown.
    """
    if extra == 0:
        return x
    alg = x.algebra
    g0 = alg.check_grade(grade)
    grades = set(alg.tracked_grades) | {g0} | set(x.tail or {})
    tail = {}
    for g in grades:
        if alg.le(g0, g):
            tail[g] = x.tail_bound(g) + extra
    return x.with_tail(tail)


# ---------------------------------------------------------------------------
# Power series
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerSeries:
    """Scalar power series with a majorant usable for certified tails.

    ``majorant(q) = sum |c_n| q^n`` and ``tail(N, q) = sum_{n>N} |c_n| q^n``.
    """

    coefficient: Callable[[int], complex]
    radius: float
    majorant: Callable[[float], float]
    tail: Callable[[int, float], float]
    length: Optional[int] = None
    name: str = "series"


def geometric() -> PowerSeries:
    return PowerSeries(
        coefficient=lambda n: 1.0,
        radius=1.0,
        majorant=lambda q: 1.0 / (1.0 - q),
        tail=lambda N, q: q ** (N + 1) / (1.0 - q),
        name="geometric",
    )


def exponential() -> PowerSeries:
    def tail(N, q):
        if q >= N + 2:
            return math.inf
        return q ** (N + 1) / math.factorial(N + 1) / (1.0 - q / (N + 2))

    return PowerSeries(
        coefficient=lambda n: 1.0 / math.factorial(n),
        radius=math.inf,
        majorant=math.exp,
        tail=tail,
        name="exp",
    )


def polynomial(coeffs: Sequence[complex]) -> PowerSeries:
    c = [complex(v) for v in coeffs]

    def tail(N, q):
        return sum(abs(v) * q**n for n, v in enumerate(c) if n > N)

    return PowerSeries(
        coefficient=lambda n: c[n] if n < len(c) else 0.0,
        radius=math.inf,
        majorant=lambda q: sum(abs(v) * q**n for n, v in enumerate(c)),
        tail=tail,
        length=len(c),
        name="polynomial",
    )


def eval_power_series(series, a, alpha, beta, tol=None, max_terms=None):
    """Evaluate ``sum c_n a^n`` with a certified bound on its norm at ``beta``.

    Summation stops at the first N whose geometric tail
    ``sum_{n>N} |c_n| (A ||a||_alpha)^n ||1||_beta`` is below ``tol``; that
    tail is added to the result's tail bound at ``beta``.
    """
    if not isinstance(series, PowerSeries):
        series = polynomial(series)
    alg = a.algebra
    alg._require(alpha, beta)
    tol = default_tol(alg) if tol is None else tol
    A = alg.constant(beta, alpha)
    q = A * a.norm_bound(alpha)
    if not q < series.radius:
        raise ContractionError(
            f"power series needs A*||a|| < R = {series.radius}", q / series.radius
        )
    one = a.one_like()
    one_norm = one.norm(beta)
    budget = _term_budget(a, max_terms)

    result = series.coefficient(0) * one
    power = one
    n = 0
    while series.tail(n, q) * one_norm >= tol:
        if series.length is not None and n + 1 >= series.length:
            break
        n += 1
        if n > budget:
            raise NumericalFailure(f"power series needs more than {budget} terms")
        power = power * a
        c = series.coefficient(n)
        if c != 0:
            result = result + c * power
    stop = series.tail(n, q) * one_norm
    result = _add_tail(result, beta, stop)
    cert = NormCertificate(
        grade=alg.check_grade(beta),
        bound=series.majorant(q) * one_norm,
        formula=Formula.POWER,
        inputs={
            "alpha": alg.check_grade(alpha),
            "beta": alg.check_grade(beta),
            "constant": A,
            "ratio": q,
            "unit_norm": one_norm,
            "terms": n + 1,
            "series": series.name,
        },
    )
    return result, cert


# ---------------------------------------------------------------------------
# Neumann inversion
# ---------------------------------------------------------------------------


class NeumannResult(NamedTuple):
    inverse: object
    bound: NormCertificate
    distance: NormCertificate


def _geometric_sum(u, ratio, scale, tol, budget):
    """``sum_{n<=N} u^n`` with ``ratio^(N+1) scale / (1 - ratio) < tol``.

    Returns the partial sum, the number of terms and the stopping bound.
    """
    one = u.one_like()
    total, power, n = one, one, 0
    if _is_zero(u):
        return total, 1, 0.0
    while ratio ** (n + 1) * scale / (1.0 - ratio) >= tol:
        n += 1
        if n > budget:
            raise NumericalFailure(f"Neumann series needs more than {budget} terms")
        power = power * u
        total = total + power
    return total, n + 1, ratio ** (n + 1) * scale / (1.0 - ratio)


def neumann_inverse(a, alpha, beta, tol=None, max_terms=None) -> NeumannResult:
    """Certified ``(1 - a)^{-1} = sum a^n`` under ``A_{beta,alpha} ||a||_alpha < 1``.

    Certificates: ``||x||_beta <= ||1||_beta / (1 - q)`` and
    ``||1 - x||_beta <= q ||1||_beta / (1 - q)`` with ``q = A ||a||_alpha``.
    Both one-sided residuals are checked against ``tol``.
    """
    alg = a.algebra
    alg._require(alpha, beta)
    tol = default_tol(alg) if tol is None else tol
    A = alg.constant(beta, alpha)
    q = A * a.norm_bound(alpha)
    if not q < 1:
        raise ContractionError("Neumann inversion needs A_{beta,alpha} ||a||_alpha < 1", q)
    one = a.one_like()
    one_norm = one.norm(beta)
    x, terms, stop = _geometric_sum(a, q, one_norm, tol, _term_budget(a, max_terms))

    d = one - a
    res_left = ((d * x) - one).norm(beta)
    res_right = ((x * d) - one).norm(beta)
    if max(res_left, res_right) > tol:
        raise NumericalFailure(
            f"Neumann residuals {res_left:.3g}, {res_right:.3g} exceed tol {tol:.3g}"
        )
    x = _add_tail(x, beta, stop)
    inputs = {
        "alpha": alg.check_grade(alpha),
        "beta": alg.check_grade(beta),
        "constant": A,
        "norm_a": a.norm_bound(alpha),
        "ratio": q,
        "unit_norm": one_norm,
        "terms": terms,
        "residual_left": res_left,
        "residual_right": res_right,
    }
    g = alg.check_grade(beta)
    return NeumannResult(
        x,
        NormCertificate(g, one_norm / (1 - q), Formula.INVERT, inputs),
        NormCertificate(g, q * one_norm / (1 - q), Formula.INVERT, dict(inputs)),
    )


def perturb_left_inverse(a, a_li, b, grades, tol=None, max_terms=None):
    """Left inverse of ``a - b`` from a left inverse ``a_li`` of ``a``.

    Returns ``(a_li sum (b a_li)^n, cert)`` where ``cert`` bounds
    ``||(a-b)' - a_li||_gamma`` by
    ``A_{g,a} ||a_li||_a k ||1||_g / (1 - k)``, ``k = A_{g,b} A_{b,a} ||a_li||_a ||b||_b``.
    """
    alpha, beta, gamma = grades
    alg = a.algebra
    alg._require(alpha, beta)
    alg._require(beta, gamma)
    if not alg.admissible(alpha, gamma):
        raise LadderError(f"grade {gamma!r} is not >= h({alpha!r})")
    tol = default_tol(alg) if tol is None else tol

    li_res = ((a_li * a) - (a_li * a).one_like()).norm(gamma)
    if li_res > tol:
        raise NotInvertibleError(f"a_li is not a left inverse of a (residual {li_res:.3g})")

    A_gb = alg.constant(gamma, beta)
    A_ba = alg.constant(beta, alpha)
    A_ga = alg.constant(gamma, alpha)
    li_norm = a_li.norm_bound(alpha)
    kappa = A_gb * A_ba * li_norm * b.norm_bound(beta)
    if not kappa < 1:
        raise ContractionError("left-inverse perturbation needs A A ||a'|| ||b|| < 1", kappa)

    inputs = {
        "alpha": alg.check_grade(alpha),
        "beta": alg.check_grade(beta),
        "gamma": alg.check_grade(gamma),
        "constants": [A_gb, A_ba, A_ga],
        "norm_left_inverse": li_norm,
        "norm_b": b.norm_bound(beta),
        "ratio": kappa,
    }
    if _is_zero(b):
        inputs["terms"] = 0
        return a_li, NormCertificate(alg.check_grade(gamma), 0.0, Formula.LEFT_INVERT, inputs)

    u = b * a_li
    one = u.one_like()
    one_norm = one.norm(gamma)
    diff = a - b
    # residual = a_li (y_N - y) (a - b); shrink the summation target accordingly
    amplification = max(1.0, A_ga * li_norm * diff.norm_bound(gamma) * A_gb)
    y, terms, stop = _geometric_sum(
        u, kappa, one_norm, tol / (2 * amplification), _term_budget(u, max_terms)
    )
    result = a_li * y
    residual = ((result * diff) - (result * diff).one_like()).norm(gamma)
    if residual > tol:
        raise NumericalFailure(f"perturbed left inverse residual {residual:.3g} > {tol:.3g}")
    result = _add_tail(result, gamma, A_ga * li_norm * stop)
    inputs.update(terms=terms, residual=residual, unit_norm=one_norm)
    bound = A_ga * li_norm * kappa * one_norm / (1 - kappa)
    return result, NormCertificate(alg.check_grade(gamma), bound, Formula.LEFT_INVERT, inputs)


# ---------------------------------------------------------------------------
# Pointwise left inverses and ladder search
# ---------------------------------------------------------------------------


class LeftInverse(NamedTuple):
    element: Element
    grade: object
    condition: float


def find_grade(alg: StrongAlgebra, alpha, value: Callable[[object], float]):
    """First ``beta >= h(alpha)`` on the ladder with ``value(beta) < 1``.

    Returns ``(beta, value)``; raises :class:`ContractionError` with the best
    value seen otherwise.
    """
    best = math.inf
    for beta in alg.grades_above(alpha):
        v = value(beta)
        if v < 1:
            return beta, v
        best = min(best, v)
    raise ContractionError(f"no admissible grade above {alpha!r}", best)


def left_inverse(x: Element, rcond: float = 1e-12, tol=None) -> LeftInverse:
    """A left inverse of ``x``.

    Matrix instance: Moore-Penrose left inverse when ``x`` has full column
    rank (``condition`` is ``sigma_min / sigma_max``).  Series instances:
    ``x = c (1 - d)`` with ``c`` the unit coefficient, inverted by a Neumann
    series at the first (alpha, beta) pair where ``A ||d||_alpha < 1``
    (``condition`` is that ratio).
    """
    alg = x.algebra
    if isinstance(alg, MatrixAlgebra):
        m, n = x.data.shape
        if m < n:
            raise NotInvertibleError(f"{m}x{n} matrix has no left inverse")
        s = np.linalg.svd(x.data, compute_uv=False)
        if s[0] == 0 or s[-1] <= rcond * s[0]:
            raise NotInvertibleError(f"matrix is rank deficient (sigma_min = {s[-1]:.3g})")
        if m == n:
            inv = np.linalg.inv(x.data)
        else:
            inv = np.linalg.pinv(x.data)
        return LeftInverse(Element(alg, inv), 0, float(s[-1] / s[0]))

    c0 = complex(x.data.flat[0])
    if abs(c0) <= rcond * max(1.0, float(np.max(np.abs(x.data)))):
        raise NotInvertibleError("unit coefficient vanishes")
    d = x.one_like() - (1.0 / c0) * x
    best = (math.inf, None)
    for alpha in alg.tracked_grades:
        nd = d.norm_bound(alpha)
        for beta in alg.grades_above(alpha):
            q = alg.constant(beta, alpha) * nd
            if q < best[0]:
                best = (q, (alpha, beta))
    q, pair = best
    if not q < 1:
        raise NotInvertibleError(f"no grade pair with A ||d|| < 1 (best {q:.3g})")
    inv = neumann_inverse(d, *pair, tol=tol).inverse
    return LeftInverse((1.0 / c0) * inv, pair[1], q)


# ---------------------------------------------------------------------------
# Admissible operators
# ---------------------------------------------------------------------------


@dataclass
class AdmissibleOperator:
    """A linear map acting on the flattened coefficient data of an instance.

    ``grade_map(alpha)`` is the smallest grade the operator is known to map
    ``X_alpha`` into (identity by default).  ``norm_bound`` optionally records
    a certified bound ``||T||^alpha_alpha`` (set by :func:`operator_neumann`).
    """

    algebra: StrongAlgebra
    matrix: np.ndarray
    grade_map: Optional[Callable] = None
    norm_bound: Optional[float] = None
    certificate: Optional[NormCertificate] = None

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=complex)
        size = int(np.prod(self.algebra.coef_shape))
        if self.matrix.shape != (size, size):
            raise ValueError(f"operator must be {size}x{size}, got {self.matrix.shape}")

    @classmethod
    def identity(cls, alg):
        return cls(alg, np.eye(int(np.prod(alg.coef_shape))))

    @classmethod
    def scaling(cls, alg, lam):
        return cls(alg, lam * np.eye(int(np.prod(alg.coef_shape))))

    def maps_into(self, alpha, beta) -> bool:
        target = alpha if self.grade_map is None else self.grade_map(alpha)
        return self.algebra.le(self.algebra.check_grade(target), self.algebra.check_grade(beta))

    def apply(self, x: Element) -> Element:
        flat = self.matrix @ x.data.reshape(-1)
        return Element(self.algebra, flat.reshape(x.data.shape))

    def __matmul__(self, other: "AdmissibleOperator") -> "AdmissibleOperator":
        return AdmissibleOperator(self.algebra, self.matrix @ other.matrix)


def _power_sigma_max(B, tol=1e-8, max_iter=10_000):
    """Largest singular value of B by power iteration on B^H B."""
    n = B.shape[1]
    if not np.any(B):
        return 0.0
    v = np.ones(n, dtype=complex) + 0.1j * np.arange(n) / max(n, 1)
    v /= np.linalg.norm(v)
    sigma = 0.0
    for _ in range(max_iter):
        w = B.conj().T @ (B @ v)
        nw = np.linalg.norm(w)
        if nw == 0:
            return 0.0
        new = math.sqrt(nw)
        v = w / nw
        if abs(new - sigma) <= tol * max(new, 1e-300):
            return new
        sigma = new
    return sigma


def _spectral_induced_norm(M, n, tol=1e-8, max_iter=1000):
    """Norm of ``X -> M vec(X)`` on (n x n, spectral norm).

    Generalized power method: alternate the subgradient of the spectral norm
    of ``T(X)`` (a rank-one ``u v^H``) and the polar factor of ``T^*`` of it.
    Several deterministic starts; the estimate is nondecreasing per start.
    """
    T = lambda X: (M @ X.reshape(-1)).reshape(n, n)
    Tadj = lambda Y: (M.conj().T @ Y.reshape(-1)).reshape(n, n)
    starts = [np.eye(n, dtype=complex)]
    rng = np.random.default_rng(0)
    for _ in range(4):
        z = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        q, _ = np.linalg.qr(z)
        starts.append(q)
    best = 0.0
    for X in starts:
        est = 0.0
        for _ in range(max_iter):
            Y = T(X)
            u, s, vh = np.linalg.svd(Y)
            val = s[0]
            if val == 0:
                break
            Z = np.outer(u[:, 0], vh[0])
            W = Tadj(Z)
            uu, _, vvh = np.linalg.svd(W)
            X = uu @ vvh
            if abs(val - est) <= tol * val:
                est = val
                break
            est = max(est, val)
        best = max(best, est)
    return best


def operator_norm(T: AdmissibleOperator, alpha, beta) -> float:
    """``||T||^alpha_beta`` on the truncated coefficient space, or inf."""
    alg = T.algebra
    alpha, beta = alg.check_grade(alpha), alg.check_grade(beta)
    if not T.maps_into(alpha, beta):
        return math.inf
    M = T.matrix
    if isinstance(alg, MatrixAlgebra):
        if alg.n == 1:
            return float(abs(M[0, 0]))
        return _spectral_induced_norm(M, alg.n)
    size = M.shape[0]
    unit_basis = np.eye(size)
    w_a = alg.norm_data(unit_basis, alpha)
    w_b = alg.norm_data(unit_basis, beta)
    if alg.norm_kind == "l1":
        # exact: induced weighted l1 norm is the max weighted column sum
        return float(np.max((np.abs(M) * w_b[:, None]).sum(axis=0) / w_a))
    B = (w_b[:, None] * M) / w_a[None, :]
    return _power_sigma_max(B)


def operator_neumann(T: AdmissibleOperator, alpha, tol=1e-10, max_terms=None):
    """``(I - T)^{-1} = sum T^n`` under ``||T||^alpha_alpha < 1``."""
    k = operator_norm(T, alpha, alpha)
    if not k < 1:
        raise ContractionError("operator Neumann series needs ||T||^alpha_alpha < 1", k)
    size = T.matrix.shape[0]
    budget = TERM_BUDGET // max(1, size) if max_terms is None else max_terms
    S = np.eye(size, dtype=complex)
    P = np.eye(size, dtype=complex)
    n = 0
    if np.any(T.matrix):
        while k ** (n + 1) / (1 - k) >= tol:
            n += 1
            if n > budget:
                raise NumericalFailure(f"operator Neumann series needs more than {budget} terms")
            P = T.matrix @ P
            S = S + P
    I = np.eye(size)
    residual_op = AdmissibleOperator(T.algebra, (I - T.matrix) @ S - I)
    residual = operator_norm(residual_op, alpha, alpha)
    if residual > max(tol, 1e-13):
        raise NumericalFailure(f"operator Neumann residual {residual:.3g} > {tol:.3g}")
    bound = 1.0 / (1.0 - k)
    cert = NormCertificate(
        T.algebra.check_grade(alpha),
        bound,
        Formula.INVSO,
        {"operator_norm": k, "terms": n + 1, "residual": residual},
    )
    return AdmissibleOperator(T.algebra, S, T.grade_map, bound, cert)
