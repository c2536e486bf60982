"""Variance, the norm constants A_k and factorial-moment recurrences."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

from .core import descending, eval_quadratic
from .errors import DegenerateRecurrenceError, MomentBudgetError
from .family import OrdModel

DEGENERATE_TOL = 1e-14


@dataclass(frozen=True)
class MomentTable:
    descending: list[float]
    ascending: list[float]
    raw: list[float]
    R: int

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["order", "descending", "ascending", "raw"])
        for r in range(self.R + 1):
            w.writerow([r, fmt(self.descending[r]), fmt(self.ascending[r]), fmt(self.raw[r])])
        return buf.getvalue()


def fmt(x: float) -> str:
    return format(float(x) + 0.0, ".17g")  # + 0.0 folds -0 into 0


def variance(model: OrdModel) -> float:
    """Var X = q(mu) / (1 - delta)."""
    model.moment_budget.require(2, "variance")
    return float(eval_quadratic(model.q, model.mu)) / (1.0 - model.delta)


def derived_variance(model: OrdModel, i: int) -> float:
    """Var X_i in closed form, without building X_i."""
    model.moment_budget.require(2 * i + 2, f"Var X_{i}")
    d, b, mu = model.q.delta, model.q.beta, model.mu
    x = (-d * i * i + (b + 1.0) * i + mu) / (1.0 - 2.0 * i * d)
    return float(eval_quadratic(model.q, x)) / (1.0 - (2 * i + 1) * d)


def norm_constant_A(model: OrdModel, k: int) -> float:
    """A_k = E q^[k](X) as a closed product over t = 0..k-1."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k > model.max_order:
        raise MomentBudgetError(f"A_{k} needs k <= M = {model.max_order}")
    model.moment_budget.require(2 * k, f"A_{k}")
    d, b, mu = model.q.delta, model.q.beta, model.mu
    out = 1.0
    for t in range(k):
        s = 1.0 - 2.0 * t * d
        x = (-d * t * t + (b + 1.0) * t + mu) / s
        out *= s * float(eval_quadratic(model.q, x)) / (1.0 - (2 * t + 1) * d)
    return out


def _check_order(model: OrdModel, R: int) -> None:
    if R < 0:
        raise ValueError("R must be nonnegative")
    model.moment_budget.require(R, f"moments up to order {R}")


def _lead(d: float, r: int) -> float:
    c = 1.0 - (r - 1) * d
    if abs(c) <= DEGENERATE_TOL:
        raise DegenerateRecurrenceError(f"1 - (r-1)delta vanishes at r={r}")
    return c


def descending_factorial_moments(model: OrdModel, R: int) -> list[float]:
    """mu_(r) = E (X)_r by the forward recurrence."""
    _check_order(model, R)
    d, b, g, mu = model.q.delta, model.q.beta, model.q.gamma, model.mu
    out = [1.0, mu][: R + 1]
    for r in range(2, R + 1):
        a = mu + (r - 1) * (b + (2 * r - 3) * d - 1.0)
        c = (r - 1) * (g + (r - 2) * (b + (r - 2) * d))
        out.append((a * out[r - 1] + c * out[r - 2]) / _lead(d, r))
    return out


def ascending_factorial_moments(model: OrdModel, R: int) -> list[float]:
    """mu_[r] = E [X]_r by the forward recurrence with the full sum term."""
    _check_order(model, R)
    d, b, g, mu = model.q.delta, model.q.beta, model.q.gamma, model.mu
    out = [1.0, mu][: R + 1]
    for r in range(2, R + 1):
        a = mu + (r - 1) * (1.0 + b - (r - 1) * d)
        tail = math.fsum(descending(r - 1, r - 1 - k) * out[k] for k in range(r - 1))
        out.append((a * out[r - 1] + g * tail) / _lead(d, r))
    return out


def stirling2(n: int) -> list[list[int]]:
    """Table S[i][k] of Stirling numbers of the second kind, 0 <= k <= i <= n."""
    s = [[0] * (n + 1) for _ in range(n + 1)]
    s[0][0] = 1
    for i in range(1, n + 1):
        for k in range(1, i + 1):
            s[i][k] = k * s[i - 1][k] + s[i - 1][k - 1]
    return s


def raw_from_descending(desc: list[float]) -> list[float]:
    """E X^n = sum_k S(n,k) mu_(k)."""
    n = len(desc) - 1
    s = stirling2(n)
    return [math.fsum(s[i][k] * desc[k] for k in range(i + 1)) for i in range(n + 1)]


def moment_table(model: OrdModel, R: int) -> MomentTable:
    desc = descending_factorial_moments(model, R)
    asc = ascending_factorial_moments(model, R)
    return MomentTable(desc, asc, raw_from_descending(desc), R)


# names used by the command line and docs
descending_moments = moment_table
ascending_moments = moment_table
