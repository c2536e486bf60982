"""The two-parameter variance bounds S_{m,n}(g), residuals, caps and comparison factors."""

from __future__ import annotations

import csv
import io
import functools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import INF, descending, one_minus_product
from .errors import ClassCError, InputError, OrderError
from .family import OrdModel
from .fourier import (
    DEFAULT_K,
    FourierSpectrum,
    TestFunction,
    difference_alphas,
    direct_energy,
    direct_moment_energy,
    energy_weight,
    spectrum,
)
from .moments import fmt, norm_constant_A
from .polynomials import lead_coefficient

SLACK = 1e-9
EQUALITY_TOL = 1e-8
REMAINDER_GATE = 1e-10
# the residual series is extended by the difference route up to this order
SERIES_MAX = 400


@dataclass(frozen=True)
class BoundConstants:
    m: int
    n: int
    kappas: list[float]
    nus: list[float]


def _gate(model: OrdModel, m: int, n: int) -> None:
    if not model.in_class_C:
        raise ClassCError("variance bounds need a model in class C (delta <= 0 or finite support)")
    if m < 0 or n < 0:
        raise InputError("m and n must be nonnegative")
    if m + n > model.max_order:
        raise InputError(f"m + n = {m + n} exceeds M = {model.max_order}")


def bound_constants(model: OrdModel, m: int, n: int) -> BoundConstants:
    _gate(model, m, n)
    d = model.delta
    base = one_minus_product(d, m, m + n - 1)
    kappas = []
    for i in range(1, m + 1):
        num = math.comb(m, i) * one_minus_product(d, m + i, m + n + i - 1)
        den = descending(m + n, i) * norm_constant_A(model, i) * lead_coefficient(d, i) * base
        kappas.append(num / den)
    nus = [math.comb(n, i) / (descending(m + n, i) * one_minus_product(d, m, m + i - 1)) for i in range(1, n + 1)]
    return BoundConstants(m, n, kappas, nus)


def variance_bound(model: OrdModel, g: TestFunction, m: int, n: int) -> float:
    """S_{m,n}(g); +inf / -inf when the order-n energy diverges (upper / lower bound)."""
    bc = bound_constants(model, m, n)
    energies = [direct_energy(model, g, i) for i in range(1, n + 1)]
    if any(e == INF for e in energies):
        return INF if n % 2 else -INF
    first = math.fsum(bc.kappas[i - 1] * direct_moment_energy(model, g, i) ** 2 for i in range(1, m + 1))
    second = math.fsum((-1) ** (i - 1) * bc.nus[i - 1] * energies[i - 1] for i in range(1, n + 1))
    return first + second


def residual_weight(delta: float, k: int, m: int, n: int) -> float:
    """r_{k;m,n}."""
    num = descending(k - m - 1, n) * one_minus_product(delta, m + k, m + n + k - 1)
    return num / (descending(m + n, n) * one_minus_product(delta, m, m + n - 1))


def residual_series(
    model: OrdModel, g: TestFunction, m: int, n: int, K: Optional[int] = None, spec: Optional[FourierSpectrum] = None
) -> float:
    """sum_{k=m+n+1}^{K} r_{k;m,n} alpha_k^2."""
    _gate(model, m, n)
    sp = spec if spec is not None else spectrum(model, g, K)
    return math.fsum(residual_weight(model.delta, k, m, n) * sp.alphas[k] ** 2 for k in range(m + n + 1, sp.K + 1))


def cap_weight(delta: float, m: int, n: int, tau: int) -> float:
    """u_tau."""
    num = one_minus_product(delta, 2 * m + n + 1, 2 * m + 2 * n)
    den = math.comb(m + n, n) * descending(m + n + 1, tau) * one_minus_product(delta, m, m + n + tau - 1)
    return num / den


CAP_SCAN = 20000


@functools.lru_cache(maxsize=None)
def corrected_cap_weight(delta: float, m: int, n: int, tau: int, M: float) -> float:
    """sup_{k>m+n} r_{k;m,n} / pi_k, with pi_k the order-tau energy weight.

    With this constant the cap dominates the residual for every g; the
    displayed u_tau equals the k = m+n+1 term and can fall short of the sup.
    """
    hi = int(M) if M != INF else m + n + 1 + CAP_SCAN
    k = np.arange(m + n + 1, hi + 1, dtype=float)
    if k.size == 0:
        return 0.0
    num = np.ones_like(k)
    for t in range(n):  # (k-m-1)_n (1-(m+k+t) delta) / ((m+n)_n prod (1-(m+t) delta))
        num *= (k - m - 1 - t) * (1 - (m + k + t) * delta) / ((m + n - t) * (1 - (m + t) * delta))
    den = np.ones_like(k)
    for t in range(tau):  # k!/(k-tau)! prod_{j=k-1}^{k+tau-2} (1-j delta)
        den *= (k - t) * (1 - (k - 1 + t) * delta)
    best = float(np.max(num / den))
    if M == INF and tau == n and delta == 0.0:
        # r/pi increases to its limit 1/(m+n)_n
        best = max(best, 1.0 / descending(m + n, n))
    return best


def residual_cap(model: OrdModel, g: TestFunction, m: int, n: int, tau: int) -> float:
    _gate(model, m, n)
    if n < 1:
        raise InputError("residual caps need n >= 1")
    if m + n >= model.max_order:
        raise InputError("residual caps need m + n < M")
    if not n <= tau <= m + n + 1:
        raise OrderError(f"tau={tau} outside [{n}, {m + n + 1}]")
    return cap_weight(model.delta, m, n, tau) * direct_energy(model, g, tau)


def comparison_factor(model: OrdModel, m1: int, m2: int, n: int) -> float:
    """zeta_{m1,m2,n}; +inf when m2 + n = M (then S_{m2,n} = Var)."""
    if not 0 <= m1 < m2:
        raise OrderError("need 0 <= m1 < m2")
    if n < 1:
        raise OrderError("need n >= 1")
    M = model.max_order
    if m2 + n > M:
        raise OrderError(f"m2 + n = {m2 + n} exceeds M = {M}")
    d = model.delta
    num = descending(m2 + n, n) * one_minus_product(d, m2, m2 + n - 1)
    den = descending(m1 + n, n) * one_minus_product(d, m1, m1 + n - 1)
    if M != INF:
        M = int(M)
        num *= descending(M - m1 - 1, n) * one_minus_product(d, m1 + M, m1 + n + M - 1)
        den *= descending(M - m2 - 1, n) * one_minus_product(d, m2 + M, m2 + n + M - 1)
        if den == 0.0:
            return INF
    return num / den


def zeta_lower_bound(m1: int, m2: int, n: int) -> float:
    """(m2+n)_n / (m1+n)_n, the value zeta is compared against."""
    return descending(m2 + n, n) / descending(m1 + n, n)


# ---------------------------------------------------------------------------


@dataclass
class BoundCell:
    m: int
    n: int
    S: float
    residual: float  # (-1)^n (Var - S)
    residual_series: float
    remainder: float  # estimate of the series tail beyond K
    caps: dict = field(default_factory=dict)  # tau -> cap with the displayed u_tau
    corrected_caps: dict = field(default_factory=dict)  # tau -> cap with the sup constant
    equality: bool = False

    @property
    def cap(self) -> float:
        return min(self.caps.values()) if self.caps else math.nan


@dataclass
class BoundReport:
    model: OrdModel
    g: TestFunction
    var_direct: float
    spectrum: FourierSpectrum
    cells: dict  # (m, n) -> BoundCell
    zetas: dict  # (m1, m2, n) -> zeta
    zeta_equality_cases: list
    detected_degree: Optional[int]
    failures: list = field(default_factory=list)
    cap_shortfalls: list = field(default_factory=list)  # (m, n, tau, cap, residual) with cap < R

    @property
    def passed(self) -> bool:
        return not self.failures

    def S(self, m: int, n: int) -> float:
        return self.cells[(m, n)].S

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["m", "n", "S", "residual", "cap", "corrected_cap", "equality_flag"])
        for (m, n), c in sorted(self.cells.items()):
            cap = "" if not c.caps else fmt(c.cap)
            ccap = "" if not c.corrected_caps else fmt(min(c.corrected_caps.values()))
            w.writerow([m, n, fmt(c.S), fmt(c.residual), cap, ccap, int(c.equality)])
        return buf.getvalue()

    def to_json(self) -> dict:
        return {
            "model": self.model.to_json(),
            "g": {"name": self.g.name, "source": self.g.source, "params": self.g.params},
            "var_direct": self.var_direct,
            "K": self.spectrum.K,
            "alphas": self.spectrum.alphas.tolist(),
            "spectrum_remainder": self.spectrum.remainder_estimate,
            "detected_degree": self.detected_degree,
            "cells": [
                {
                    "m": c.m,
                    "n": c.n,
                    "S": _num(c.S),
                    "residual": _num(c.residual),
                    "residual_series": _num(c.residual_series),
                    "remainder_estimate": _num(c.remainder),
                    "caps": {str(t): _num(v) for t, v in c.caps.items()},
                    "corrected_caps": {str(t): _num(v) for t, v in c.corrected_caps.items()},
                    "equality_flag": c.equality,
                }
                for _, c in sorted(self.cells.items())
            ],
            "zetas": [
                {"m1": a, "m2": b, "n": n, "zeta": _num(z), "lower": zeta_lower_bound(a, b, n)}
                for (a, b, n), z in sorted(self.zetas.items())
            ],
            "zeta_equality_cases": [list(t) for t in self.zeta_equality_cases],
            "failures": self.failures,
            "cap_shortfalls": [list(t) for t in self.cap_shortfalls],
        }


def _num(x: float):
    if x == INF:
        return "inf"
    if x == -INF:
        return "-inf"
    return float(x)


def detect_degree(sp: FourierSpectrum, tol: float = 1e-10) -> Optional[int]:
    """Largest k with a non-negligible alpha_k, or None when the spectrum is not exhausted."""
    scale = math.sqrt(max(sp.var_direct, 0.0)) + abs(sp.alphas[0])
    big = [k for k in range(1, sp.K + 1) if abs(sp.alphas[k]) > tol * max(1.0, scale)]
    d = max(big, default=0)
    if d < sp.K:
        return d
    return None


def _weighted_sum(delta: float, alphas: np.ndarray, m: int, n: int) -> float:
    return math.fsum(residual_weight(delta, k, m, n) * alphas[k] ** 2 for k in range(m + n + 1, alphas.size))


def _series_tail_bound(model: OrdModel, alphas: np.ndarray, energies: dict, m: int, n: int, var: float) -> float:
    """Bound on sum_{k>K} r_k alpha_k^2 from the unexplained order-n energy.

    Parseval for X_n gives sum_k pi_k alpha_k^2 = E q^[n] (Delta^n g)^2, and
    r_k <= sup(r/pi) pi_k, the corrected cap constant.
    """
    K = alphas.size - 1
    if K >= model.max_order:
        return 0.0
    if n == 0:
        unexplained = max(0.0, var - math.fsum(alphas[1:] ** 2))
    else:
        e = energies.get(n, INF)
        if e == INF:
            return INF
        seen = math.fsum(energy_weight(model.delta, k, n) * alphas[k] ** 2 for k in range(n, K + 1))
        unexplained = max(0.0, e - seen)
    return corrected_cap_weight(model.delta, m, n, n, model.max_order) * unexplained


def _series_alphas(model: OrdModel, g: TestFunction, m_max: int, n_max: int, var: float, scale: float):
    """Difference-route alphas, extended until every cell's tail bound is below the gate."""
    M = model.max_order
    energies = {i: direct_energy(model, g, i) for i in range(1, int(min(n_max, M)) + 1)}
    K = int(min(M, max(DEFAULT_K, m_max + n_max + 1)))
    while True:
        alphas = difference_alphas(model, g, K)
        exhausted = alphas.size < K + 1  # rounding cut the series short
        worst = max(
            _series_tail_bound(model, alphas, energies, m, n, var)
            for m in range(m_max + 1)
            for n in range(n_max + 1)
            if m + n <= M
        )
        if worst <= REMAINDER_GATE * scale or K >= min(M, SERIES_MAX) or worst == INF or exhausted:
            return alphas, energies
        K = int(min(M, SERIES_MAX, 2 * K))


def bound_report(
    model: OrdModel, g: TestFunction, m_max: int, n_max: int, K: Optional[int] = None
) -> BoundReport:
    if not model.in_class_C:
        raise ClassCError("variance bounds need a model in class C (delta <= 0 or finite support)")
    if m_max < 0 or n_max < 0:
        raise InputError("m_max and n_max must be nonnegative")
    M = model.max_order
    sp = spectrum(model, g, K)
    var = sp.var_direct
    scale = max(1.0, var)
    deg = detect_degree(sp)
    alphas, energies = _series_alphas(model, g, m_max, n_max, var, scale)
    cells = {}
    failures = []
    shortfalls = []
    for m in range(m_max + 1):
        for n in range(n_max + 1):
            if m + n > M:
                continue
            S = variance_bound(model, g, m, n)
            resid = (-1) ** n * (var - S)
            series = _weighted_sum(model.delta, alphas, m, n)
            rem = _series_tail_bound(model, alphas, energies, m, n, var)
            cell = BoundCell(m, n, S, resid, series, rem, equality=abs(var - S) < EQUALITY_TOL * scale)
            if n >= 1 and m + n < M:
                for tau in range(n, m + n + 2):
                    if tau <= M and model.moment_budget.allows(2 * tau):
                        cell.caps[tau] = residual_cap(model, g, m, n, tau)
                        u = corrected_cap_weight(model.delta, m, n, tau, M)
                        cell.corrected_caps[tau] = u * direct_energy(model, g, tau)
            cells[(m, n)] = cell
    # per-cell invariants
    for (m, n), c in cells.items():
        if not c.residual >= -SLACK * scale:
            failures.append(f"sign: (-1)^n(Var-S) < 0 at (m,n)=({m},{n}): {c.residual:.3e}")
        if c.remainder <= REMAINDER_GATE * scale and abs(c.residual) != INF:
            if abs(c.residual_series - c.residual) > EQUALITY_TOL * scale:
                failures.append(
                    f"residual routes disagree at ({m},{n}): series {c.residual_series:.12g} vs direct {c.residual:.12g}"
                )
        for tau, cap in c.caps.items():
            if not c.residual <= cap + SLACK * scale:
                shortfalls.append((m, n, tau, cap, c.residual))
        for tau, cap in c.corrected_caps.items():
            if not c.residual <= cap + SLACK * scale:
                failures.append(f"corrected cap below residual at ({m},{n}), tau={tau}: {cap:.12g} < {c.residual:.12g}")
        if m + n == M and not c.equality:
            failures.append(f"m+n=M cell ({m},{n}) is not an equality")
        if deg is not None and m + n >= max(deg, 1) and not c.equality:
            failures.append(f"degree-{deg} g should give equality at ({m},{n})")
    # monotone improvement in m and the sandwich ordering
    for n in range(n_max + 1):
        ms = sorted(m for (m, nn) in cells if nn == n)
        for a, b in zip(ms, ms[1:]):
            ga, gb = abs(var - cells[(a, n)].S), abs(var - cells[(b, n)].S)
            if gb > ga + SLACK * scale:
                failures.append(f"|Var-S| increases from m={a} to m={b} at n={n}")
            sa, sb = cells[(a, n)].S, cells[(b, n)].S
            if n % 2 == 0 and sa > sb + SLACK * scale:
                failures.append(f"lower bounds out of order: S_{{{a},{n}}} > S_{{{b},{n}}}")
            if n % 2 == 1 and sa < sb - SLACK * scale:
                failures.append(f"upper bounds out of order: S_{{{a},{n}}} < S_{{{b},{n}}}")
    # comparison factors
    zetas = {}
    eq_cases = []
    for n in range(1, n_max + 1):
        for m1 in range(m_max + 1):
            for m2 in range(m1 + 1, m_max + 1):
                if (m2, n) not in cells:
                    continue
                z = comparison_factor(model, m1, m2, n)
                zetas[(m1, m2, n)] = z
                g1 = abs(var - cells[(m1, n)].S)
                g2 = abs(var - cells[(m2, n)].S)
                if z == INF:
                    if g2 > EQUALITY_TOL * scale:
                        failures.append(f"zeta infinite but S_{{{m2},{n}}} != Var")
                    continue
                if not g1 >= z * g2 - SLACK * scale:
                    failures.append(f"zeta comparison fails for ({m1},{m2},{n}): {g1:.12g} < {z:.6g}*{g2:.12g}")
                lower = zeta_lower_bound(m1, m2, n)
                if z < lower * (1 - 1e-12):
                    failures.append(f"zeta_{{{m1},{m2},{n}}} = {z} below (m2+n)_n/(m1+n)_n = {lower}")
                if abs(z - lower) <= 1e-12 * lower:
                    eq_cases.append((m1, m2, n))
    return BoundReport(model, g, var, sp, cells, zetas, eq_cases, deg, failures, shortfalls)
