"""Brute-force reference computations: direct sums and Gram-Schmidt."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .core import fsum
from .errors import CumOrdError, RankDeficiencyError
from .family import OrdModel

OVERFLOW_GUARD = 1e280


@dataclass(frozen=True)
class OracleResult:
    value: float
    terms_summed: int
    tail_estimate: float
    inconclusive: bool = False


def _weighted(model: OrdModel, f: Callable) -> tuple[np.ndarray, np.ndarray]:
    js = model.js
    vals = np.asarray(f(js), dtype=float) * np.ones(js.shape)
    if not np.all(np.isfinite(vals)) or np.any(np.abs(vals) > OVERFLOW_GUARD):
        raise CumOrdError("overflow guard tripped while evaluating f on the window")
    return vals, vals * model.p


def brute_expectation(model: OrdModel, f: Callable, tol: float = 1e-9) -> OracleResult:
    """E f(X) as an exactly rounded sum over the pmf window."""
    vals, terms = _weighted(model, f)
    pmf = model.pmf
    tail = pmf.tail_mass_lo * abs(vals[0]) + pmf.tail_mass_hi * abs(vals[-1])
    value = fsum(terms)
    return OracleResult(value, int(terms.size), tail, tail >= tol * max(1.0, abs(value)))


def brute_variance(model: OrdModel, g: Callable, tol: float = 1e-9) -> OracleResult:
    """Var g(X) by the two-pass centred sum."""
    mean = brute_expectation(model, g, tol)
    vals, _ = _weighted(model, g)
    centred = (vals - mean.value) ** 2
    pmf = model.pmf
    tail = pmf.tail_mass_lo * centred[0] + pmf.tail_mass_hi * centred[-1]
    value = fsum(centred * model.p)
    return OracleResult(value, int(vals.size), tail, tail >= tol * max(1.0, value))


def brute_factorial_moment(model: OrdModel, r: int, mode: str = "descending") -> float:
    from .core import factorial_power

    return brute_expectation(model, lambda j: factorial_power(j, r, mode)).value


def gram_schmidt_basis(model: OrdModel, n: int) -> list[np.ndarray]:
    """Orthonormal polynomials phi_0..phi_n as monomial coefficient arrays.

    Modified Gram-Schmidt on 1, t, ..., t^n with t = (x - c)/s and one
    reorthogonalization pass; coefficients are mapped back to powers of x.
    """
    if n > model.max_order:
        raise RankDeficiencyError(f"n={n} exceeds M={model.max_order}")
    model.moment_budget.require(2 * n, "Gram-Schmidt basis")
    js = model.js.astype(float)
    w = model.p
    c = fsum(js * w)
    s = max(1.0, float(np.sqrt(fsum((js - c) ** 2 * w))))
    t = (js - c) / s

    def ip(a, b):
        return fsum(a * b * w)

    vecs: list[np.ndarray] = []
    coefs: list[np.ndarray] = []  # coefficients in powers of t
    for k in range(n + 1):
        v = t**k
        cf = np.zeros(n + 1)
        cf[k] = 1.0
        norm0 = np.sqrt(ip(v, v))
        for _ in range(2):
            for u, cu in zip(vecs, coefs):
                h = ip(u, v)
                v = v - h * u
                cf = cf - h * cu
        nv = np.sqrt(ip(v, v))
        if not nv > 1e-12 * norm0:
            raise RankDeficiencyError(f"monomial {k} is numerically dependent")
        v, cf = v / nv, cf / nv
        if cf[k] < 0:
            v, cf = -v, -cf
        vecs.append(v)
        coefs.append(cf)
    return [_t_to_x(cf[: k + 1], c, s) for k, cf in enumerate(coefs)]


def _t_to_x(cf: np.ndarray, c: float, s: float) -> np.ndarray:
    """Re-express sum cf_i ((x-c)/s)^i in powers of x."""
    P = np.polynomial.polynomial
    base = np.array([-c / s, 1.0 / s])
    out = np.zeros(1)
    power = np.ones(1)
    for a in cf:
        out = P.polyadd(out, a * power)
        power = P.polymul(power, base)
    return out
