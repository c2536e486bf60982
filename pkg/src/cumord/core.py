"""Quadratics, factorial powers, forward differences and exact summation."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import WindowTooSmallError

INF = math.inf
EPS = 2.0**-53


def fsum(values) -> float:
    """Correctly rounded sum of an iterable or array of floats."""
    return math.fsum(np.asarray(values, dtype=float).ravel().tolist())


@dataclass(frozen=True)
class Quadratic:
    """q(j) = delta*j^2 + beta*j + gamma."""

    delta: float
    beta: float
    gamma: float

    def __post_init__(self):
        for name in ("delta", "beta", "gamma"):
            v = float(getattr(self, name))
            if not math.isfinite(v):
                raise ValueError(f"{name} must be finite, got {v}")
            object.__setattr__(self, name, v)

    def __call__(self, j):
        return eval_quadratic(self, j)

    def degree(self) -> int:
        if self.delta != 0.0:
            return 2
        if self.beta != 0.0:
            return 1
        return 0

    def is_zero(self) -> bool:
        return self.delta == 0.0 and self.beta == 0.0 and self.gamma == 0.0

    def lower(self, mu: float) -> "Quadratic":
        """The companion quadratic q(j) + j - mu."""
        return Quadratic(self.delta, self.beta + 1.0, self.gamma - mu)

    def shifted(self, r: float) -> "Quadratic":
        """j -> q(j - r)."""
        d, b, c = self.delta, self.beta, self.gamma
        return Quadratic(d, b - 2.0 * d * r, d * r * r - b * r + c)

    def scaled(self, s: float) -> "Quadratic":
        return Quadratic(self.delta * s, self.beta * s, self.gamma * s)

    def roots(self) -> list[complex]:
        """Roots of q (empty for a constant)."""
        d, b, c = self.delta, self.beta, self.gamma
        if d != 0.0:
            disc = b * b - 4.0 * d * c
            if abs(disc) <= 8.0 * EPS * (b * b + abs(4.0 * d * c)):
                disc = 0.0  # rounding level: a double root, not a split pair
            if disc >= 0.0:
                s = math.sqrt(disc)
                # stable pairing to avoid cancellation
                t = -0.5 * (b + math.copysign(s, b))
                if t == 0.0:
                    return [0.0, 0.0]
                r1, r2 = t / d, c / t
                return sorted([r1, r2])
            s = math.sqrt(-disc)
            return [complex(-b / (2 * d), -s / (2 * d)), complex(-b / (2 * d), s / (2 * d))]
        if b != 0.0:
            return [-c / b]
        return []

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.delta, self.beta, self.gamma)


def eval_quadratic(q: Quadratic, j):
    """Evaluate q at a scalar or array argument."""
    if isinstance(j, np.ndarray):
        j = j.astype(float)
    return (q.delta * j + q.beta) * j + q.gamma


def ascending_power(q: Quadratic, k: int, j):
    """q(j) q(j+1) ... q(j+k-1); the empty product is 1."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    j = np.asarray(j, dtype=float)
    out = np.ones_like(j)
    for i in range(k):
        out = out * eval_quadratic(q, j + i)
    return out if out.ndim else float(out)


def factorial_power(x, k: int, mode: str = "descending"):
    """Ascending x(x+1)...(x+k-1) or descending x(x-1)...(x-k+1)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if mode not in ("ascending", "descending"):
        raise ValueError(f"unknown mode {mode!r}")
    step = 1.0 if mode == "ascending" else -1.0
    x = np.asarray(x, dtype=float)
    out = np.ones_like(x)
    for i in range(k):
        out = out * (x + step * i)
    return out if out.ndim else float(out)


def descending(x, k: int):
    return factorial_power(x, k, "descending")


def ascending(x, k: int):
    return factorial_power(x, k, "ascending")


def forward_difference(values, k: int) -> np.ndarray:
    """k-th forward difference of a table on consecutive integers."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    v = np.asarray(values, dtype=float)
    if v.size < k + 1:
        raise WindowTooSmallError(f"table of length {v.size} too short for order {k}")
    if k == 0:
        return v.copy()
    return np.diff(v, n=k)


def one_minus_product(delta: float, lo: int, hi: int) -> float:
    """prod_{j=lo}^{hi} (1 - j*delta); empty product when hi < lo."""
    out = 1.0
    for j in range(lo, hi + 1):
        out *= 1.0 - j * delta
    return out


def snap_integer(x: float, tol: float = 1e-9):
    """Return the integer n with |x - n| <= tol*max(1,|x|), else None."""
    n = round(x)
    if abs(x - n) <= tol * max(1.0, abs(x)):
        return int(n)
    return None
