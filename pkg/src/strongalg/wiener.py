"""The Wiener algebra of an instance and the constructive Wiener theorem.

A :class:`WienerElement` stores the Fourier coefficients ``a_n`` for
``|n| <= N`` of ``a(t) = sum a_n e^{int}`` (each an instance element) and an
l1 tail bound per grade.  Left inverses are built in three stages:

1. :func:`choose_localization` replaces ``a`` near ``t0`` by
   ``b = w_eps a + (1 - w_eps) a(t0)`` (``w_eps`` the trapezoid cutoff) with
   ``eps`` halved until the off-diagonal mass of ``b`` is a contraction;
2. :func:`local_left_inverse` inverts ``b`` by a Neumann series around its
   zeroth coefficient;
3. :func:`patch_global_inverse` glues the local inverses with a piecewise
   linear partition of unity whose Fourier coefficients are exact.

:func:`wiener_left_inverse` runs the whole pipeline with a greedy sweep of
centres over the circle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from numbers import Number
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import calculus
from .core import (
    Element,
    MatrixAlgebra,
    StrongAlgebra,
    _check_same,
    _mul0,
    instance_spec,
    product_tail,
    sum_tail,
)
from .errors import (
    ContractionError,
    CoverError,
    NoCertificateError,
    NotInvertibleError,
    NumericalFailure,
    PreconditionError,
)

DEFAULT_MAX_HALF_WIDTH = 4096
_DIRECT_LIMIT = 64


def _wrap(t):
    """Map angles into [-pi, pi)."""
    return (np.asarray(t, dtype=float) + np.pi) % (2 * np.pi) - np.pi


@dataclass(eq=False)
class WienerElement:
    """Truncated Fourier series with coefficients in an instance.

    ``coeffs[k]`` holds ``a_{k-N}``.  ``tail=None`` means exact; otherwise
    missing grades have an unknown tail.  Products are re-truncated to
    ``max_half_width``.
    """

    algebra: StrongAlgebra
    coeffs: np.ndarray
    tail: Optional[dict] = None
    max_half_width: int = DEFAULT_MAX_HALF_WIDTH

    def __post_init__(self):
        self.coeffs = np.array(self.coeffs, dtype=complex)
        if self.coeffs.ndim == 0 or self.coeffs.shape[0] % 2 != 1:
            raise ValueError("coefficient array must have odd length 2N+1 along axis 0")
        if self.tail is not None:
            self.tail = {self.algebra.check_grade(g): float(v) for g, v in self.tail.items()}

    # -- construction -----------------------------------------------------
    @classmethod
    def from_coefficients(cls, alg, coefficients: dict, half_width=None, **kw):
        """From ``{n: data}``; missing indices are zero."""
        N = max((abs(n) for n in coefficients), default=0) if half_width is None else half_width
        coeffs = np.zeros((2 * N + 1,) + tuple(np.shape(next(iter(coefficients.values()))) if coefficients else alg.coef_shape), dtype=complex)
        for n, c in coefficients.items():
            coeffs[n + N] = c
        return cls(alg, coeffs, **kw)

    @classmethod
    def constant(cls, x: Element, half_width=0, **kw):
        coeffs = np.zeros((2 * half_width + 1,) + x.data.shape, dtype=complex)
        coeffs[half_width] = x.data
        return cls(x.algebra, coeffs, None if x.exact else dict(x.tail), **kw)

    @classmethod
    def monomial(cls, alg, n, data=None, **kw):
        """``data * e^{int}`` (unit by default)."""
        data = alg.unit_data() if data is None else data
        return cls.from_coefficients(alg, {n: data}, **kw)

    @classmethod
    def random(cls, alg, rng, half_width, scale=1.0, **kw):
        coeffs = alg.random_data(rng, 2 * half_width + 1)
        total = np.sum(alg.norm_data(coeffs, alg.home_grade))
        return cls(alg, scale * coeffs / total, **kw)

    # -- basic accessors --------------------------------------------------
    @property
    def half_width(self) -> int:
        return (self.coeffs.shape[0] - 1) // 2

    N = half_width

    @property
    def exact(self) -> bool:
        return self.tail is None

    def coefficient(self, n) -> Element:
        N = self.half_width
        if abs(n) > N:
            return Element(self.algebra, np.zeros(self.coeffs.shape[1:]))
        return Element(self.algebra, self.coeffs[n + N])

    def indices(self):
        N = self.half_width
        return np.arange(-N, N + 1)

    def support(self):
        """(first, last) index with a nonzero coefficient, or None."""
        nz = np.flatnonzero(np.any(self.coeffs.reshape(self.coeffs.shape[0], -1) != 0, axis=1))
        if nz.size == 0:
            return None
        N = self.half_width
        return int(nz[0] - N), int(nz[-1] - N)

    def norm(self, g) -> float:
        """Graded l1 norm of the stored coefficients."""
        return float(np.sum(self.algebra.norm_data(self.coeffs, g)))

    def tail_bound(self, g) -> float:
        g = self.algebra.check_grade(g)
        if self.tail is None:
            return 0.0
        return self.tail.get(g, math.inf)

    def norm_bound(self, g) -> float:
        return self.norm(g) + self.tail_bound(g)

    def _like(self, coeffs, tail):
        return WienerElement(self.algebra, coeffs, tail, self.max_half_width)

    def with_tail(self, tail):
        return self._like(self.coeffs, tail)

    def one_like(self):
        return WienerElement(
            self.algebra,
            self.algebra.unit_data(self.coeffs[0])[None],
            None,
            self.max_half_width,
        )

    def zero_like(self):
        return self._like(np.zeros_like(self.coeffs[:1]), None)

    def padded(self, N) -> "WienerElement":
        M = self.half_width
        if N <= M:
            return self
        out = np.zeros((2 * N + 1,) + self.coeffs.shape[1:], dtype=complex)
        out[N - M : N + M + 1] = self.coeffs
        return self._like(out, self.tail)

    def truncated(self, K) -> "WienerElement":
        """Keep ``|n| <= K``; the dropped l1 mass moves into the tail."""
        N = self.half_width
        if K >= N:
            return self
        alg = self.algebra
        dropped = np.concatenate([self.coeffs[: N - K], self.coeffs[N + K + 1 :]])
        tail = None
        if np.any(dropped != 0) or not self.exact:
            tail = {
                g: self.tail_bound(g) + float(np.sum(alg.norm_data(dropped, g)))
                for g in set(alg.tracked_grades) | set(self.tail or {})
            }
        return self._like(self.coeffs[N - K : N + K + 1].copy(), tail)

    def rotate(self, t0) -> "WienerElement":
        """The element ``t -> a(t + t0)``."""
        phase = np.exp(1j * self.indices() * t0)
        return self._like(self.coeffs * phase.reshape((-1,) + (1,) * (self.coeffs.ndim - 1)), self.tail)

    def evaluate_data(self, t):
        t = np.atleast_1d(np.asarray(t, dtype=float))
        phases = np.exp(1j * np.outer(t, self.indices()))
        return np.tensordot(phases, self.coeffs, axes=(1, 0))

    def evaluate(self, t) -> Element:
        return evaluate(self, t)

    # -- arithmetic -------------------------------------------------------
    def _coerce(self, other):
        if isinstance(other, Number):
            return float(other) * self.one_like() if other.imag == 0 else complex(other) * self.one_like()
        if isinstance(other, Element):
            return WienerElement.constant(other, max_half_width=self.max_half_width)
        return other

    def __add__(self, other):
        if isinstance(other, Number):
            other = other * self.one_like()
        else:
            other = self._coerce(other)
        if not isinstance(other, WienerElement):
            return NotImplemented
        _check_same(self, other)
        N = max(self.half_width, other.half_width)
        a, b = self.padded(N), other.padded(N)
        return WienerElement(
            self.algebra,
            a.coeffs + b.coeffs,
            sum_tail(self, other),
            min(self.max_half_width, other.max_half_width),
        )

    __radd__ = __add__

    def __neg__(self):
        return self._like(-self.coeffs, self.tail)

    def __sub__(self, other):
        other = self._coerce(other)
        if not isinstance(other, WienerElement):
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + self._coerce(other)

    def __mul__(self, other):
        if isinstance(other, Number):
            tail = None if self.tail is None else {g: abs(other) * v for g, v in self.tail.items()}
            return self._like(other * self.coeffs, tail)
        other = self._coerce(other)
        if not isinstance(other, WienerElement):
            return NotImplemented
        return wiener_multiply(self, other)

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self * other
        if isinstance(other, Element):
            return wiener_multiply(self._coerce(other), self)
        return NotImplemented

    def allclose(self, other, atol=1e-12) -> bool:
        N = max(self.half_width, other.half_width)
        return np.allclose(self.padded(N).coeffs, other.padded(N).coeffs, rtol=0, atol=atol)

    def __repr__(self):
        return (
            f"WienerElement({self.algebra.kind}, N={self.half_width}, "
            f"coef_shape={self.coeffs.shape[1:]}, exact={self.exact})"
        )


# ---------------------------------------------------------------------------
# Arithmetic
# ---------------------------------------------------------------------------


def _convolve(alg, x, y, product):
    """Linear convolution along axis 0 with a bilinear pointwise ``product``.

    Returns ``(kept, discarded)`` like ``alg.mul_data``.  Short inputs use the
    direct sum (exact zeros stay zero); longer ones an FFT of padded length.
    """
    lx, ly = x.shape[0], y.shape[0]
    lo = lx + ly - 1
    if min(lx, ly) <= _DIRECT_LIMIT:
        swap = lx > ly
        if swap:
            # iterate over the shorter operand, keeping the order of factors
            kept = disc = None
            for j in range(ly):
                k, d = product(x, y[j][None])
                if kept is None:
                    kept = np.zeros((lo,) + k.shape[1:], dtype=complex)
                    disc = None if d is None else np.zeros((lo,) + d.shape[1:], dtype=complex)
                kept[j : j + lx] += k
                if d is not None:
                    disc[j : j + lx] += d
            return kept, disc
        kept = disc = None
        for i in range(lx):
            k, d = product(x[i][None], y)
            if kept is None:
                kept = np.zeros((lo,) + k.shape[1:], dtype=complex)
                disc = None if d is None else np.zeros((lo,) + d.shape[1:], dtype=complex)
            kept[i : i + ly] += k
            if d is not None:
                disc[i : i + ly] += d
        return kept, disc
    L = 1 << (lo - 1).bit_length()
    fx = np.fft.fft(x, n=L, axis=0)
    fy = np.fft.fft(y, n=L, axis=0)
    k, d = product(fx, fy)
    kept = np.fft.ifft(k, axis=0)[:lo]
    disc = None if d is None else np.fft.ifft(d, axis=0)[:lo]
    return kept, disc


def wiener_multiply(a: WienerElement, b: WienerElement, max_half_width=None) -> WienerElement:
    """Cauchy product ``(ab)_n = sum_m a_m b_{n-m}``.

    The output half-width is ``N_a + N_b`` capped at ``max_half_width``
    (default: the smaller cap of the operands).  Dropped coefficients and
    coefficient-level truncation go into the tail bound.
    """
    _check_same(a, b)
    alg = a.algebra
    cap = min(a.max_half_width, b.max_half_width) if max_half_width is None else max_half_width
    Nout = min(a.half_width + b.half_width, cap)
    sa, sb = a.support(), b.support()
    out_shape = np.broadcast_shapes(
        alg.mul_data(a.coeffs[:1], b.coeffs[:1])[0].shape[1:], ()
    )
    out = np.zeros((2 * Nout + 1,) + out_shape, dtype=complex)
    discarded = {}
    if sa is not None and sb is not None:
        xa = a.coeffs[sa[0] + a.half_width : sa[1] + a.half_width + 1]
        xb = b.coeffs[sb[0] + b.half_width : sb[1] + b.half_width + 1]
        kept, disc = _convolve(alg, xa, xb, alg.mul_data)
        first = sa[0] + sb[0]
        idx = np.arange(first, first + kept.shape[0])
        inside = np.abs(idx) <= Nout
        out[idx[inside] + Nout] = kept[inside]
        drop = kept[~inside]
        for g in alg.tracked_grades:
            mass = 0.0
            if drop.size:
                dn = alg.norm_data(drop, g)
                if disc is not None:
                    dn = alg.combine_norms(dn, alg.disc_norm(disc[~inside], g))
                mass += float(np.sum(dn))
            if disc is not None:
                mass += float(np.sum(alg.disc_norm(disc[inside], g)))
            if mass:
                discarded[g] = mass
    tail = product_tail(alg, a, b, discarded or None)
    return WienerElement(alg, out, tail, cap)


def wiener_norm(a: WienerElement, alpha) -> float:
    return a.norm(alpha)


def evaluate(a: WienerElement, t) -> Element:
    """``a(t) = sum a_n e^{int}``; the Wiener tail becomes the element tail."""
    data = a.evaluate_data(float(t))[0]
    return Element(a.algebra, data, None if a.exact else dict(a.tail))


def scalar_convolve(phi: np.ndarray, x: WienerElement, half_width: int, phi_tail=0.0):
    """Product of a scalar Fourier series (``phi``, centred) with ``x``.

    Truncated to ``half_width``.  ``phi_tail`` is the l1 mass of the scalar
    series beyond its stored coefficients.
    """
    alg = x.algebra
    P = (len(phi) - 1) // 2
    N = x.half_width
    flat = x.coeffs.reshape(x.coeffs.shape[0], -1)
    lo = len(phi) + flat.shape[0] - 1
    L = 1 << (lo - 1).bit_length()
    full = np.fft.ifft(np.fft.fft(phi, n=L)[:, None] * np.fft.fft(flat, n=L, axis=0), axis=0)[:lo]
    full = full.reshape((lo,) + x.coeffs.shape[1:])
    idx = np.arange(-(P + N), P + N + 1)
    inside = np.abs(idx) <= half_width
    out = np.zeros((2 * half_width + 1,) + x.coeffs.shape[1:], dtype=complex)
    out[idx[inside] + half_width] = full[inside]
    phi_l1 = float(np.sum(np.abs(phi))) + phi_tail
    tail = {}
    dropped = full[~inside]
    for g in set(alg.tracked_grades) | set(x.tail or {}):
        t = 0.0
        if dropped.size:
            t += float(np.sum(alg.norm_data(dropped, g)))
        t += _mul0(phi_tail, x.norm(g))
        t += _mul0(phi_l1, x.tail_bound(g))
        tail[g] = t
    if x.exact and not any(tail.values()):
        tail = None
    return WienerElement(alg, out, tail, x.max_half_width)


# ---------------------------------------------------------------------------
# Cutoffs and partitions of unity
# ---------------------------------------------------------------------------


def _check_eps(eps):
    if not (0 < eps < np.pi / 2):
        raise PreconditionError(f"eps must lie in (0, pi/2), got {eps!r}")


def cutoff_omega(eps, t):
    """Trapezoid cutoff: 1 on |t| < eps, linear down to 0 at |t| = 2 eps."""
    _check_eps(eps)
    s = np.abs(_wrap(t))
    out = np.clip(2.0 - s / eps, 0.0, 1.0)
    return float(out) if np.ndim(out) == 0 else out


class FourierSeries(NamedTuple):
    """Centred coefficients ``c[-M..M]`` and the l1 mass beyond ``M``."""

    coeffs: np.ndarray
    tail: float


def piecewise_linear_coefficients(knots, slope_jumps, mean, M) -> FourierSeries:
    """Fourier coefficients of a continuous periodic piecewise-linear function.

    With slope jumps ``s_k`` at ``t_k``: ``c_n = -(1/(2 pi n^2)) sum_k s_k e^{-i n t_k}``
    and ``c_0 = mean``.  The tail uses ``sum_{n>M} n^-2 < 1/M``.
    """
    knots = np.asarray(knots, dtype=float)
    jumps = np.asarray(slope_jumps, dtype=float)
    n = np.arange(-M, M + 1)
    c = np.zeros(2 * M + 1, dtype=complex)
    nz = n != 0
    nn = n[nz].astype(float)
    c[nz] = -(np.exp(-1j * np.outer(nn, knots)) @ jumps) / (2 * np.pi * nn**2)
    c[M] = mean
    tail = float(np.sum(np.abs(jumps))) / np.pi / max(M, 1)
    return FourierSeries(c, tail)


def trapezoid_coefficients(a, b, c, d, M) -> FourierSeries:
    """Periodic trapezoid: 0 before a, up to 1 at b, flat to c, down to 0 at d."""
    if not (a < b <= c < d and d - a < 2 * np.pi + 1e-15):
        raise PreconditionError(f"bad trapezoid knots {(a, b, c, d)}")
    up, down = 1.0 / (b - a), 1.0 / (d - c)
    mean = ((d - a) + (c - b)) / 2 / (2 * np.pi)
    return piecewise_linear_coefficients([a, b, c, d], [up, -up, -down, down], mean, M)


def trapezoid_values(a, b, c, d, t):
    """Pointwise values of the periodic trapezoid (for checks)."""
    t = np.asarray(t, dtype=float)
    # bring t into [a, a + 2 pi)
    s = a + (t - a) % (2 * np.pi)
    return np.clip(np.minimum((s - a) / (b - a), (d - s) / (d - c)), 0.0, 1.0)


def omega_coefficients(eps, M) -> FourierSeries:
    """Coefficients of the cutoff: ``(cos eps n - cos 2 eps n)/(pi n^2 eps)``, ``c_0 = 3 eps/(2 pi)``."""
    _check_eps(eps)
    return trapezoid_coefficients(-2 * eps, -eps, eps, 2 * eps, M)


def default_work_half_width(eps, N, cap=DEFAULT_MAX_HALF_WIDTH):
    target = max(2 * N + 1, int(math.ceil(1024.0 / eps)))
    return min(cap, 1 << (target - 1).bit_length())


# ---------------------------------------------------------------------------
# Localization
# ---------------------------------------------------------------------------


def localize(a: WienerElement, eps, half_width=None) -> WienerElement:
    """``b = w_eps a + (1 - w_eps) a(0)`` truncated to ``half_width``."""
    _check_eps(eps)
    M = default_work_half_width(eps, a.half_width) if half_width is None else half_width
    M = max(M, a.half_width)
    omega = omega_coefficients(eps, M)
    a0 = a.evaluate_data(0.0)[0]
    centred = a.padded(max(a.half_width, 0))
    diff = centred.coeffs.copy()
    diff[centred.half_width] -= a0
    x = WienerElement(a.algebra, diff, a.tail, a.max_half_width)
    b = scalar_convolve(omega.coeffs, x, M, omega.tail)
    b.coeffs[M] += a0
    if not a.exact:
        # a(0) carries the Wiener tail of a once more
        b.tail = {g: b.tail_bound(g) + a.tail_bound(g) for g in b.tail}
    b.max_half_width = max(M, a.max_half_width)
    return b


def b0_of_epsilon(a: WienerElement, eps) -> Element:
    """Zeroth coefficient of the localized element in closed form."""
    _check_eps(eps)
    N = a.half_width
    out = a.coeffs[N].copy()
    for n in range(1, N + 1):
        factor = 1 + (math.cos(eps * n) - math.cos(2 * eps * n)) / (math.pi * n * n * eps) - 3 * eps / (2 * math.pi)
        out = out + (a.coeffs[N + n] + a.coeffs[N - n]) * factor
    return Element(a.algebra, out)


def amplification_factors(eps, ns, M) -> list:
    """Diagnostic ``A_n(eps) = sum_{k != 0} |w_{k-n} - w_k|``: the off-diagonal
    mass of the localization of ``e^{int}``."""
    omega = omega_coefficients(eps, M + max(abs(n) for n in ns)).coeffs
    W = (len(omega) - 1) // 2
    k = np.arange(-M, M + 1)
    k = k[k != 0]
    out = []
    for n in ns:
        out.append(float(np.sum(np.abs(omega[k - n + W] - omega[k + W]))))
    return out


@dataclass
class LocalizationCertificate:
    """Contraction certificate for a localized element.

    ``contraction = A_{gamma,beta} A_{beta,alpha} offdiag_mass ||b0'||_beta < 1``.
    ``decay`` holds the diagnostic ``A_n(eps)`` values (never used as bounds).
    """

    t0: float
    eps: float
    alpha: object
    beta: object
    gamma: object
    contraction: float
    offdiag_mass: float
    b0: Element
    b0_left_inverse: Element
    halvings: int
    half_width: int
    decay: list = field(default_factory=list)

    @property
    def arc(self):
        return (self.t0 - self.eps, self.t0 + self.eps)

    def to_dict(self):
        return {
            "t0": self.t0,
            "eps": self.eps,
            "alpha": self.alpha,
            "beta": self.beta,
            "gamma": self.gamma,
            "contraction": self.contraction,
            "offdiag_mass": self.offdiag_mass,
            "halvings": self.halvings,
            "half_width": self.half_width,
            "decay": self.decay,
        }


def _unit_residual(x: Element, grade) -> float:
    return (x - x.one_like()).norm(grade)


def choose_localization(
    a: WienerElement,
    t0,
    left_inv_a_t0: Element,
    alpha=None,
    tol=1e-8,
    max_halvings=40,
    half_width=None,
    target_contraction=1.0,
):
    """Localize ``a`` at ``t0`` with a contraction certificate.

    ``eps`` is halved from ``pi/4`` until the perturbed left inverse of the
    zeroth coefficient exists and the contraction value drops below
    ``target_contraction`` (at most 1).  Returns ``(b, certificate)`` with ``b``
    in the original frame, so ``b(t) = a(t)`` for ``|t - t0| < eps``.
    """
    alg = a.algebra
    alpha = alg.home_grade if alpha is None else alg.check_grade(alpha)
    t0 = float(t0)
    at0 = evaluate(a, t0)
    li_grade = alg.grades_above(alpha)[0]
    li_res = _unit_residual(left_inv_a_t0 * at0, li_grade)
    if li_res > tol:
        raise NotInvertibleError(f"given element is not a left inverse of a({t0:g}) (residual {li_res:.3g})")
    rotated = a.rotate(t0)
    target = min(1.0, target_contraction)
    beta1 = alg.grades_above(alpha)[0]
    gamma1 = alg.grades_above(beta1)[0]
    at0 = evaluate(rotated, 0.0)
    eps = np.pi / 4
    best = math.inf
    for halvings in range(max_halvings + 1):
        M = default_work_half_width(eps, a.half_width) if half_width is None else half_width
        b = localize(rotated, eps, M)
        b0 = b.coefficient(0)
        try:
            b0_li, _ = calculus.perturb_left_inverse(
                at0, left_inv_a_t0, at0 - b0, (alpha, beta1, gamma1), tol=max(tol * 1e-2, 1e-13)
            )
        except (ContractionError, NumericalFailure):
            eps /= 2
            continue
        off = b.norm_bound(alpha) - b0.norm(alpha)
        found = None
        for beta in alg.grades_above(alpha)[:4]:
            nb = b0_li.norm_bound(beta)
            if not math.isfinite(nb):
                continue
            for gamma in alg.grades_above(beta)[:4]:
                k = alg.constant(gamma, beta) * alg.constant(beta, alpha) * off * nb
                if found is None or k < found[0]:
                    found = (k, beta, gamma)
        if found is not None:
            best = min(best, found[0])
        if found is not None and found[0] < target:
            k, beta, gamma = found
            cert = LocalizationCertificate(
                t0=t0,
                eps=float(eps),
                alpha=alpha,
                beta=beta,
                gamma=gamma,
                contraction=float(k),
                offdiag_mass=float(off),
                b0=b0,
                b0_left_inverse=b0_li,
                halvings=halvings,
                half_width=M,
                decay=amplification_factors(eps, range(1, min(a.half_width, 8) + 1), M)
                if a.half_width
                else [],
            )
            return b.rotate(-t0), cert
        eps /= 2
    raise NoCertificateError(
        f"no localization certificate at t0={t0:g} after {max_halvings} halvings (best contraction {best:.3g})"
    )


def local_left_inverse(b: WienerElement, cert: LocalizationCertificate, tol=1e-12, residual_tol=None, max_terms=None):
    """``b' = b0' sum_n (-c b0')^n`` with ``c = b - b0``, so that ``b' b = 1``.

    The residual ``||b' b - 1||_gamma`` is measured on the working window
    ``|n| <= half_width`` (beyond it the slowly decaying cutoff coefficients
    are not represented).
    """
    alg = b.algebra
    M = b.half_width
    b0 = b.coefficient(0)
    if not b0.allclose(cert.b0, atol=1e-9 * max(1.0, b0.norm(cert.alpha))):
        raise PreconditionError("certificate does not belong to this element")
    li = cert.b0_left_inverse
    c = b - WienerElement.constant(Element(alg, b0.data), max_half_width=M)
    c.max_half_width = M
    u = -(c * WienerElement.constant(li, max_half_width=M))
    u.max_half_width = M
    kappa = cert.contraction
    li_norm = li.norm_bound(cert.beta)
    one_norm = u.one_like().norm(cert.gamma)
    budget = calculus._term_budget(u, max_terms)
    total, terms, stop = calculus._geometric_sum(u, kappa, one_norm, tol / max(1.0, li_norm), budget)
    result = WienerElement.constant(li, max_half_width=M) * total
    result = result.truncated(M)
    result.max_half_width = M
    prod = wiener_multiply(result, b, max_half_width=2 * M)
    resid = prod - prod.one_like()
    window = resid.truncated(M)
    residual = float(np.sum(alg.norm_data(window.coeffs, cert.gamma)))
    if residual_tol is not None and residual > residual_tol:
        raise NumericalFailure(f"local left inverse residual {residual:.3g} > {residual_tol:.3g}")
    result = calculus._add_tail(result, cert.gamma, stop * li_norm)
    result.residual = residual
    result.terms = terms
    return result


# ---------------------------------------------------------------------------
# Patching
# ---------------------------------------------------------------------------


def uncovered_arcs(arcs):
    """Gaps of a family of open arcs ``(lo, hi)`` on the circle [-pi, pi)."""
    ivs = []
    for lo, hi in arcs:
        if hi - lo >= 2 * np.pi:
            ivs.append((-np.inf, np.inf))
            continue
        s = float(_wrap(lo))
        e = s + (hi - lo)
        ivs.append((s, e))
        ivs.append((s - 2 * np.pi, e - 2 * np.pi))
    gaps = []
    pos = -np.pi
    while pos < np.pi:
        reach = max((e for s, e in ivs if s < pos < e), default=None)
        if reach is not None:
            pos = reach
            continue
        nxt = min((s for s, e in ivs if s >= pos), default=np.pi)
        gaps.append((pos, min(nxt, np.pi)))
        if nxt >= np.pi:
            break
        reach = max((e for s, e in ivs if s <= nxt < e), default=nxt)
        pos = reach
    return gaps


def check_cover(arcs):
    """Raise :class:`CoverError` listing the uncovered arcs, if any."""
    gaps = uncovered_arcs(arcs)
    if gaps:
        raise CoverError(gaps)


def partition_of_unity(arcs, M):
    """Piecewise-linear partition of unity subordinate to a cover by open arcs.

    Returns ``{index: (knots, FourierSeries)}`` for the arcs kept (arcs
    contained in another arc get no weight).  Each weight is a trapezoid whose
    support lies inside its arc; adjacent ramps coincide, so the weights sum
    to exactly 1.
    """
    check_cover(arcs)
    full = [i for i, (lo, hi) in enumerate(arcs) if hi - lo >= 2 * np.pi]
    if full:
        one = np.zeros(2 * M + 1, dtype=complex)
        one[M] = 1.0
        return {full[0]: (None, FourierSeries(one, 0.0))}

    items = []
    for i, (lo, hi) in enumerate(arcs):
        L = float(_wrap(lo))
        items.append((L, L + (hi - lo), i))
    items.sort()

    def contains(outer, inner):
        for shift in (-2 * np.pi, 0.0, 2 * np.pi):
            if outer[0] <= inner[0] + shift and inner[1] + shift <= outer[1]:
                return True
        return False

    keep = []
    for j, it in enumerate(items):
        dominated = False
        for k, other in enumerate(items):
            if k == j:
                continue
            if contains(other, it) and not (contains(it, other) and k > j):
                dominated = True
                break
        if not dominated:
            keep.append(it)
    if len(keep) == 1:
        raise CoverError(uncovered_arcs([(keep[0][0], keep[0][1])]))
    m = len(keep)
    # overlap of arc j with its successor
    mids, widths = [], []
    for j in range(m):
        L_next = keep[(j + 1) % m][0] + (2 * np.pi if j == m - 1 else 0.0)
        R = keep[j][1]
        mids.append((L_next + R) / 2)
        widths.append(R - L_next)
    ramps = []
    for j in range(m):
        prev_mid = mids[j - 1] - (2 * np.pi if j == 0 else 0.0)
        next_mid = mids[(j + 1) % m] + (2 * np.pi if j == m - 1 else 0.0)
        w = 0.45 * min(widths[j], mids[j] - prev_mid, next_mid - mids[j])
        if w <= 0:
            raise CoverError([(keep[j][1], keep[(j + 1) % m][0])])
        ramps.append((mids[j] - w, mids[j] + w))
    out = {}
    for j in range(m):
        rise = ramps[j - 1]
        if j == 0:
            rise = (rise[0] - 2 * np.pi, rise[1] - 2 * np.pi)
        fall = ramps[j]
        knots = (rise[0], rise[1], fall[0], fall[1])
        out[keep[j][2]] = (knots, trapezoid_coefficients(*knots, M))
    return out


class PatchResult(NamedTuple):
    inverse: WienerElement
    residual: float
    half_width: int
    weights: dict
    local_errors: list


def patch_global_inverse(a: WienerElement, locals_, tol=1e-6, grade=None, local_tol=1e-3, half_width=None):
    """Glue local left inverses ``(t_i, eps_i, b_i')`` into ``a'`` with ``a' a = 1``.

    ``a' = sum phi_i b_i'`` over a piecewise-linear partition of unity
    subordinate to the arcs ``(t_i - eps_i, t_i + eps_i)``.  The result is
    trimmed to the smallest half-width (doubling) with
    ``||a' a - 1||_grade <= tol``.
    """
    alg = a.algebra
    grade = alg.home_grade if grade is None else alg.check_grade(grade)
    arcs = [(t - e, t + e) for t, e, _ in locals_]
    M = max(b.half_width for _, _, b in locals_) if half_width is None else half_width
    weights = partition_of_unity(arcs, M)

    local_errors = []
    total = None
    for i, (knots, series) in weights.items():
        t_i, e_i, b_i = locals_[i]
        if knots is not None:
            ts = np.linspace(knots[0], knots[3], 17)
        else:
            ts = np.linspace(-np.pi, np.pi, 65)[:-1]
        vals = alg.mul_data(b_i.evaluate_data(ts), a.evaluate_data(ts))[0]
        err = float(np.max(alg.norm_data(vals - alg.unit_data(vals[0]), grade)))
        local_errors.append({"index": i, "t": t_i, "eps": e_i, "max_error": err})
        if err > local_tol:
            raise PreconditionError(f"local inverse {i} fails on its arc (error {err:.3g})")
        piece = scalar_convolve(series.coeffs, b_i, M, series.tail)
        total = piece if total is None else total + piece

    K = 1
    while True:
        K = min(K, M)
        trial = total.truncated(K)
        prod = wiener_multiply(trial, a, max_half_width=K + a.half_width)
        residual = float(np.sum(alg.norm_data((prod - prod.one_like()).coeffs, grade)))
        if residual <= tol or K >= M:
            break
        K *= 2
    if residual > tol:
        raise NumericalFailure(f"patched inverse residual {residual:.3g} > {tol:.3g}")
    trial.max_half_width = max(K, a.max_half_width)
    return PatchResult(trial, residual, K, {i: w[0] for i, w in weights.items()}, local_errors)


# ---------------------------------------------------------------------------
# Scans and the full pipeline
# ---------------------------------------------------------------------------


@dataclass
class ScanReport:
    grid_size: int
    points: list
    all_invertible: bool
    min_sigma: float
    argmin_t: float

    @property
    def singular_points(self):
        return [p["t"] for p in self.points if not p["invertible"]]

    def to_dict(self):
        return {
            "grid_size": self.grid_size,
            "all_invertible": self.all_invertible,
            "min_sigma": self.min_sigma,
            "argmin_t": self.argmin_t,
            "singular_points": self.singular_points,
            "points": self.points,
        }


def wiener_invertibility_scan(a: WienerElement, grid_size: int, rcond=1e-12) -> ScanReport:
    """Pointwise left-invertibility of ``a(t)`` on a uniform grid of [-pi, pi)."""
    if grid_size < 2 * a.half_width + 1:
        raise PreconditionError(f"grid_size must be >= 2N+1 = {2 * a.half_width + 1}")
    alg = a.algebra
    ts = -np.pi + 2 * np.pi * np.arange(grid_size) / grid_size
    values = a.evaluate_data(ts)
    scale = a.norm_bound(alg.home_grade)
    points = []
    for t, v in zip(ts, values):
        x = Element(alg, v)
        if isinstance(alg, MatrixAlgebra):
            s = np.linalg.svd(v, compute_uv=False) if v.shape[0] >= v.shape[1] else np.zeros(1)
            sigma = float(s[-1])
        else:
            sigma = float(abs(v.flat[0]))
        try:
            if sigma <= rcond * scale:
                raise NotInvertibleError("negligible relative to the symbol norm")
            li = calculus.left_inverse(x, rcond=rcond)
            ok, cond = True, li.condition
        except NotInvertibleError:
            ok, cond = False, 0.0
        points.append({"t": float(t), "invertible": ok, "sigma": sigma, "condition": float(cond)})
    sig = [p["sigma"] for p in points]
    j = int(np.argmin(sig))
    return ScanReport(
        grid_size=int(grid_size),
        points=points,
        all_invertible=all(p["invertible"] for p in points),
        min_sigma=float(sig[j]),
        argmin_t=float(ts[j]),
    )


class WienerInverse(NamedTuple):
    inverse: WienerElement
    residual: float
    certificates: list
    scan: ScanReport
    patch: PatchResult


def wiener_left_inverse(
    a: WienerElement,
    tol=1e-6,
    alpha=None,
    grid_size=None,
    local_tol=1e-12,
    target_contraction=0.5,
    max_centres=4096,
    max_halvings=40,
):
    """Left inverse in the Wiener algebra by localization and patching.

    Centres are placed by a greedy sweep from ``-pi``: each accepted centre
    ``t_i`` with certified ``eps_i`` is followed by ``t_i + eps_i``, until the
    last arc overlaps the first.
    """
    alg = a.algebra
    alpha = alg.home_grade if alpha is None else alpha
    grid = grid_size or max(64, 4 * (2 * a.half_width + 1))
    scan = wiener_invertibility_scan(a, grid)
    if not scan.all_invertible:
        raise NotInvertibleError(f"a(t) is not left invertible at t = {scan.singular_points[:5]}")
    certs, locals_ = [], []
    t = -np.pi
    while True:
        li = calculus.left_inverse(evaluate(a, t)).element
        b, cert = choose_localization(
            a, t, li, alpha=alpha, target_contraction=target_contraction, max_halvings=max_halvings
        )
        b_inv = local_left_inverse(b, cert, tol=local_tol)
        certs.append(cert)
        locals_.append((t, cert.eps, b_inv))
        first = certs[0]
        if t + cert.eps > first.t0 - first.eps + 2 * np.pi and len(certs) > 1:
            break
        if len(certs) >= max_centres:
            raise NoCertificateError(f"more than {max_centres} centres needed")
        t = t + cert.eps
    patch = patch_global_inverse(a, locals_, tol=tol, grade=alpha)
    return WienerInverse(patch.inverse, patch.residual, certs, scan, patch)


def _transpose(a: WienerElement) -> WienerElement:
    return WienerElement(a.algebra, np.swapaxes(a.coeffs, -1, -2), a.tail, a.max_half_width)


def wiener_right_inverse(a: WienerElement, **kw):
    """Right inverse of a matrix-valued symbol via the transposed left problem."""
    if not isinstance(a.algebra, MatrixAlgebra):
        raise PreconditionError("right inverses by transposition need the matrix instance")
    res = wiener_left_inverse(_transpose(a), **kw)
    return res._replace(inverse=_transpose(res.inverse))
