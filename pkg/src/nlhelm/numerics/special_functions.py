"""Bessel functions of the second kind and the real Helmholtz kernel.

Only the orders nu = (N-2)/2 occur, i.e. integers and half-integers.

* Integer orders: Neumann series over Bessel J values (Miller's backward
  recurrence) for x <= ASYMPTOTIC_SWITCH, Hankel asymptotic expansion above,
  then upward recurrence from Y_0 and Y_1.
* Half-integer orders: trigonometric closed forms for Y_{-1/2}, Y_{1/2} and
  upward recurrence.

All functions are pure and accept scalars or arrays.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import bisect

from nlhelm.errors import DomainError

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

EULER_GAMMA = 0.57721566490153286061

# The Hankel series reaches ~1e-17 here; at x = 8 it stalls near 1e-7.
ASYMPTOTIC_SWITCH = 25.0

MAX_INTEGER_ORDER = 11
MAX_HALF_INTEGER_ORDER = 10.5

ZERO_SCAN_START = 1e-3
ZERO_SCAN_STEP = 0.1
ZERO_SCAN_STOP = 100.0
ZERO_XTOL = 1e-14

_RESCALE_THRESHOLD = 1e200
_RESCALE_FACTOR = 1e-200
_HANKEL_MAX_TERMS = 80


@dataclass(frozen=True)
class BesselOrder:
    """Order nu = (N-2)/2 of the Bessel function attached to dimension N."""

    nu: float

    def __post_init__(self) -> None:
        nu = float(self.nu)
        twice = round(2.0 * nu)
        if nu < 0 or not math.isclose(2.0 * nu, twice, abs_tol=1e-12):
            raise DomainError(f"Bessel order must be a nonnegative multiple of 1/2, got {self.nu}")
        object.__setattr__(self, "nu", twice / 2.0)

    @classmethod
    def for_dimension(cls, N: int) -> "BesselOrder":
        if N < 2:
            raise DomainError(f"dimension must be >= 2, got {N}")
        return cls((N - 2) / 2.0)

    @property
    def is_integer(self) -> bool:
        return float(self.nu).is_integer()


def _as_order(nu: float | BesselOrder) -> BesselOrder:
    return nu if isinstance(nu, BesselOrder) else BesselOrder(nu)


def _positive_argument(x: ArrayLike, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(arr > 0):
        raise DomainError(f"{name} must be > 0 (got min {np.min(arr) if arr.size else 'empty'})")
    return arr


# ---------------------------------------------------------------------------
# Integer orders
# ---------------------------------------------------------------------------
def _bessel_j_table(x: FloatArray) -> FloatArray:
    """J_0..J_m at every x by Miller's backward recurrence, row k holding J_k."""
    start = 2 * ((int(np.max(x)) + 40) // 2) + 2
    table = np.zeros((start + 2, x.size))
    table[start] = 1.0
    for k in range(start, 0, -1):
        table[k - 1] = (2.0 * k / x) * table[k] - table[k + 1]
        big = np.abs(table[k - 1]) > _RESCALE_THRESHOLD
        if np.any(big):
            table[k - 1:, big] *= _RESCALE_FACTOR
    # J_0 + 2 * sum J_2k = 1
    norm = table[0] + 2.0 * np.sum(table[2:start + 1:2], axis=0)
    return table[:start + 1] / norm


def _y01_neumann(x: FloatArray) -> tuple[FloatArray, FloatArray]:
    j = _bessel_j_table(x)
    m = j.shape[0] - 1
    log_term = np.log(x / 2.0) + EULER_GAMMA

    k = np.arange(1, m // 2 + 1)
    even = np.sum(((-1.0) ** k / k)[:, None] * j[2 * k], axis=0)
    y0 = (2.0 / np.pi) * log_term * j[0] - (4.0 / np.pi) * even

    k = np.arange(1, (m - 1) // 2 + 1)
    coeff = (-1.0) ** k * (2 * k + 1) / (k * (k + 1.0))
    odd = np.sum(coeff[:, None] * j[2 * k + 1], axis=0)
    y1 = (
        -2.0 * j[0] / (np.pi * x)
        + (2.0 / np.pi) * (log_term - 1.0) * j[1]
        - (2.0 / np.pi) * odd
    )
    return y0, y1


def _y_hankel(nu: float, x: FloatArray) -> FloatArray:
    """Hankel asymptotic expansion, summed until terms stop decreasing."""
    mu = 4.0 * nu * nu
    p = np.ones_like(x)
    q = np.zeros_like(x)
    term = np.ones_like(x)
    previous = np.full_like(x, np.inf)
    active = np.ones(x.shape, dtype=bool)
    for k in range(1, _HANKEL_MAX_TERMS):
        term = term * (mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        magnitude = np.abs(term)
        active &= magnitude < previous
        contribution = np.where(active, term, 0.0)
        sign = -1.0 if (k // 2) % 2 else 1.0
        if k % 2 == 0:
            p += sign * contribution
        else:
            q += sign * contribution
        previous = np.where(active, magnitude, previous)
        active &= magnitude > 1e-17
        if not np.any(active):
            break
    chi = x - (nu / 2.0 + 0.25) * np.pi
    return np.sqrt(2.0 / (np.pi * x)) * (p * np.sin(chi) + q * np.cos(chi))


def _recur_upward(y_lo: FloatArray, y_hi: FloatArray, nu_lo: float, steps: int, x: FloatArray) -> FloatArray:
    """Y_{nu_lo + steps} from Y_{nu_lo} and Y_{nu_lo + 1}."""
    if steps == 0:
        return y_lo
    for k in range(1, steps):
        nu = nu_lo + k
        y_lo, y_hi = y_hi, (2.0 * nu / x) * y_hi - y_lo
    return y_hi


def _y_integer(n: int, x: FloatArray) -> FloatArray:
    if n > MAX_INTEGER_ORDER:
        raise DomainError(f"integer order {n} exceeds supported maximum {MAX_INTEGER_ORDER}")
    y0 = np.empty_like(x)
    y1 = np.empty_like(x)
    small = x <= ASYMPTOTIC_SWITCH
    if np.any(small):
        y0[small], y1[small] = _y01_neumann(x[small])
    large = ~small
    if np.any(large):
        y0[large] = _y_hankel(0.0, x[large])
        y1[large] = _y_hankel(1.0, x[large])
    return _recur_upward(y0, y1, 0.0, n, x)


# ---------------------------------------------------------------------------
# Half-integer orders
# ---------------------------------------------------------------------------
def _y_half_integer(nu: float, x: FloatArray) -> FloatArray:
    if nu > MAX_HALF_INTEGER_ORDER:
        raise DomainError(f"half-integer order {nu} exceeds supported maximum {MAX_HALF_INTEGER_ORDER}")
    root = np.sqrt(2.0 / (np.pi * x))
    y_minus_half = root * np.sin(x)
    y_half = -root * np.cos(x)
    return _recur_upward(y_minus_half, y_half, -0.5, int(round(nu + 0.5)), x)


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------
def bessel_y(nu: float | BesselOrder, x: ArrayLike) -> float | FloatArray:
    """Bessel function of the second kind Y_nu(x) for x > 0.

    Parameters
    ----------
    nu : float or BesselOrder
        Integer or half-integer order.
    x : float or array_like
        Positive arguments.

    Returns
    -------
    float or ndarray
        Same shape as ``x``.
    """
    order = _as_order(nu)
    arr = _positive_argument(x, "x")
    flat = np.atleast_1d(arr).ravel()
    if order.is_integer:
        out = _y_integer(int(order.nu), flat)
    else:
        out = _y_half_integer(order.nu, flat)
    if arr.ndim == 0:
        return float(out[0])
    return out.reshape(arr.shape)


@lru_cache(maxsize=None)
def _first_zero(nu: float) -> float:
    order = BesselOrder(nu)
    count = int(round((ZERO_SCAN_STOP - ZERO_SCAN_START) / ZERO_SCAN_STEP)) + 1
    xs = ZERO_SCAN_START + ZERO_SCAN_STEP * np.arange(count)
    ys = bessel_y(order, xs)
    change = np.nonzero(np.sign(ys[:-1]) * np.sign(ys[1:]) <= 0)[0]
    if change.size == 0:
        raise DomainError(f"no zero of Y_{nu} found below {ZERO_SCAN_STOP}")
    i = int(change[0])
    if ys[i] == 0.0:
        return float(xs[i])
    root = bisect(lambda t: bessel_y(order, t), xs[i], xs[i + 1], xtol=ZERO_XTOL, maxiter=200)
    logger.debug("first zero of Y_%s bracketed in [%.3f, %.3f]: %.15f", nu, xs[i], xs[i + 1], root)
    return float(root)


def first_positive_zero_y(nu: float | BesselOrder) -> float:
    """Smallest x > 0 with Y_nu(x) = 0 (sign-change scan, then bisection)."""
    return _first_zero(_as_order(nu).nu)


def psi_kernel(r: ArrayLike, N: int) -> float | FloatArray:
    """Real Helmholtz kernel Psi(r) = -(1/4) (2 pi r)^((2-N)/2) Y_{(N-2)/2}(r)."""
    order = BesselOrder.for_dimension(N)
    arr = _positive_argument(r, "r")
    values = -0.25 * (2.0 * np.pi * arr) ** ((2.0 - N) / 2.0) * np.asarray(bessel_y(order, arr))
    if arr.ndim == 0:
        return float(values)
    return values
