"""Brute-force reference computations for tests.

Dense linear algebra and grid transforms only; nothing here calls the
solvers in ``calculus``, ``wiener`` or ``factorization``.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .core import MatrixAlgebra
from .errors import NotInvertibleError, PreconditionError, WindingError
from .wiener import WienerElement


def _require_matrix(a):
    if not isinstance(a.algebra, MatrixAlgebra):
        raise PreconditionError(f"oracle supports the matrix instance only, got {a.algebra.kind}")


def _block(a: WienerElement, n):
    N = a.half_width
    if abs(n) > N:
        return np.zeros(a.coeffs.shape[1:], dtype=complex)
    return a.coeffs[n + N]


def toeplitz_matrix(a: WienerElement, rows, cols) -> np.ndarray:
    """Dense block Toeplitz matrix with block ``(j, k) = a_{j-k}``.

    ``rows`` and ``cols`` are index ranges (arrays of Fourier indices).
    """
    _require_matrix(a)
    p, q = a.coeffs.shape[1:]
    T = np.zeros((len(rows) * p, len(cols) * q), dtype=complex)
    for r, j in enumerate(rows):
        for c, k in enumerate(cols):
            T[r * p : (r + 1) * p, c * q : (c + 1) * q] = _block(a, j - k)
    return T


def toeplitz_apply(a: WienerElement, x: WienerElement) -> WienerElement:
    """``a x`` as a dense block Toeplitz matrix-vector product (no truncation)."""
    _require_matrix(a)
    _require_matrix(x)
    Na, Nx = a.half_width, x.half_width
    N = Na + Nx
    rows = np.arange(-N, N + 1)
    cols = np.arange(-Nx, Nx + 1)
    T = toeplitz_matrix(a, rows, cols)
    p = a.coeffs.shape[1]
    q, m = x.coeffs.shape[1:]
    X = x.coeffs.reshape(-1, m)
    Y = T @ X
    return WienerElement(a.algebra, Y.reshape(2 * N + 1, p, m), None, max(a.max_half_width, N))


def finite_section_solve(a: WienerElement, f: WienerElement, half_width: int) -> WienerElement:
    """Solve ``x - P(ax) = f`` on ``|n| <= half_width`` (``P`` keeps ``n < 0``)."""
    _require_matrix(a)
    K = half_width
    idx = np.arange(-K, K + 1)
    d = a.coeffs.shape[1]
    T = toeplitz_matrix(a, idx, idx)
    keep = np.repeat(idx < 0, d).astype(float)
    A = np.eye(len(idx) * d) - keep[:, None] * T
    F = f.padded(K).coeffs
    if f.half_width > K:
        raise PreconditionError("right-hand side wider than the section")
    m = F.shape[-1]
    X = np.linalg.solve(A, F.reshape(-1, m))
    return WienerElement(a.algebra, X.reshape(2 * K + 1, d, m))


def finite_section_solve_right(a: WienerElement, g: WienerElement, half_width: int) -> WienerElement:
    """Solve ``y - Q(ya) = g`` on ``|n| <= half_width`` (``Q`` keeps ``n >= 0``)."""
    _require_matrix(a)
    K = half_width
    idx = np.arange(-K, K + 1)
    d = a.coeffs.shape[1]
    # (ya)_j = sum_k y_k a_{j-k}; transpose blocks so y acts as a column vector
    at = WienerElement(a.algebra, np.swapaxes(a.coeffs, -1, -2))
    T = toeplitz_matrix(at, idx, idx)
    keep = np.repeat(idx >= 0, d).astype(float)
    A = np.eye(len(idx) * d) - keep[:, None] * T
    G = np.swapaxes(g.padded(K).coeffs, -1, -2)
    m = G.shape[-1]
    Y = np.linalg.solve(A, G.reshape(-1, m))
    return WienerElement(a.algebra, np.swapaxes(Y.reshape(2 * K + 1, d, m), -1, -2))


def default_grid(a: WienerElement) -> int:
    n = 4 * (2 * a.half_width + 1)
    return 1 << (n - 1).bit_length()


class PointwiseInverse(NamedTuple):
    inverse: WienerElement
    decay: list  # l1 mass of |n| > m for m = 0, 1, 2, 4, ...
    min_sigma: float


def _grid_coefficients(values, half_width):
    G = values.shape[0]
    c = np.fft.fft(values, axis=0) / G
    # grid point t_j = 2 pi j / G, so c[n] is the coefficient of e^{int}
    idx = np.arange(-half_width, half_width + 1)
    return c[idx % G]


def pointwise_inverse_oracle(a: WienerElement, grid_size=None, half_width=None) -> PointwiseInverse:
    """Invert ``a(t)`` on a uniform grid and transform back."""
    _require_matrix(a)
    G = grid_size or default_grid(a)
    ts = 2 * np.pi * np.arange(G) / G
    vals = np.tensordot(np.exp(1j * np.outer(ts, np.arange(-a.half_width, a.half_width + 1))), a.coeffs, axes=(1, 0))
    sig = np.linalg.svd(vals, compute_uv=False)[:, -1]
    bad = np.flatnonzero(sig < 1e-13 * max(1.0, float(np.max(sig))))
    if bad.size:
        raise NotInvertibleError(f"a(t) is singular at t = {ts[bad[0]]:.6g}")
    if vals.shape[1] == vals.shape[2]:
        inv = np.linalg.inv(vals)
    else:
        inv = np.linalg.pinv(vals)
    K = G // 2 - 1 if half_width is None else half_width
    coeffs = _grid_coefficients(inv, K)
    mags = np.linalg.norm(coeffs, ord=2, axis=(-2, -1))
    n = np.abs(np.arange(-K, K + 1))
    decay, m = [], 0
    while m <= K:
        decay.append(float(np.sum(mags[n > m])))
        m = 1 if m == 0 else 2 * m
    return PointwiseInverse(WienerElement(a.algebra, coeffs), decay, float(np.min(sig)))


def winding_number(a: WienerElement, grid_size=None) -> int:
    _require_matrix(a)
    if a.coeffs.shape[1:] != (1, 1):
        raise PreconditionError("winding number needs a scalar symbol")
    G = grid_size or default_grid(a)
    ts = 2 * np.pi * np.arange(G + 1) / G
    vals = np.exp(1j * np.outer(ts, np.arange(-a.half_width, a.half_width + 1))) @ a.coeffs[:, 0, 0]
    if np.min(np.abs(vals)) == 0:
        raise NotInvertibleError("symbol vanishes on the grid")
    phase = np.unwrap(np.angle(vals))
    return int(round((phase[-1] - phase[0]) / (2 * np.pi)))


def scalar_wiener_hopf_oracle(a: WienerElement, grid_size=None, half_width=None):
    """Classical factors ``(a_minus, a_plus)`` from the split of ``log a``.

    ``a_plus = exp(P log a)`` (indices ``n < 0``, constant term 1) and
    ``a_minus = exp(Q log a)`` (indices ``n >= 0``).
    """
    _require_matrix(a)
    if a.coeffs.shape[1:] != (1, 1):
        raise PreconditionError("log-split oracle needs a scalar symbol")
    G = grid_size or max(4096, default_grid(a))
    w = winding_number(a, G)
    if w != 0:
        raise WindingError(w)
    ts = 2 * np.pi * np.arange(G) / G
    vals = np.exp(1j * np.outer(ts, np.arange(-a.half_width, a.half_width + 1))) @ a.coeffs[:, 0, 0]
    logs = np.log(np.abs(vals)) + 1j * np.unwrap(np.angle(vals))
    L = np.fft.fft(logs) / G
    n = np.fft.fftfreq(G, 1.0 / G).astype(int)
    Lp = np.where(n < 0, L, 0)
    Lm = np.where(n >= 0, L, 0)
    plus_vals = np.exp(np.fft.ifft(Lp) * G)
    minus_vals = np.exp(np.fft.ifft(Lm) * G)
    K = G // 2 - 1 if half_width is None else half_width
    ap = _grid_coefficients(plus_vals, K)
    am = _grid_coefficients(minus_vals, K)
    alg = a.algebra
    return WienerElement(alg, am.reshape(-1, 1, 1)), WienerElement(alg, ap.reshape(-1, 1, 1))
