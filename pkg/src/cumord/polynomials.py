"""Rodrigues-type orthogonal polynomials and their structural identities."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .core import INF, descending, fsum, one_minus_product
from .errors import DegenerateRecurrenceError, InputError, MomentBudgetError, WindowTooSmallError
from .family import OrdModel, derive_distribution
from .moments import fmt, norm_constant_A

def lead_coefficient(delta: float, k: int) -> float:
    """c_k(delta) = prod_{j=k-1}^{2k-2} (1 - j delta)."""
    return one_minus_product(delta, k - 1, 2 * k - 2)


def horner(coeffs, x):
    """Evaluate sum coeffs[i] x^i."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    for c in coeffs[::-1]:
        out = out * x + c
    return out


def difference_coeffs(coeffs, m: int = 1) -> np.ndarray:
    """Monomial coefficients of Delta^m applied to a polynomial."""
    c = np.asarray(coeffs, dtype=float)
    for _ in range(m):
        n = c.size - 1
        out = np.zeros(max(n, 1))
        # (x+1)^i - x^i = sum_{l<i} C(i,l) x^l
        for i in range(1, n + 1):
            for l in range(i):
                out[l] += c[i] * math.comb(i, l)
        c = out
    return c


def fit_coefficients(values, x0: int = 0) -> np.ndarray:
    """Monomial coefficients of the interpolant through (x0+i, values[i]).

    Newton forward differences at consecutive integer nodes.
    """
    v = np.asarray(values, dtype=float)
    if v.size < 1:
        raise WindowTooSmallError("need at least one node")
    if not np.all(np.isfinite(v)):
        raise InputError("node values must be finite")
    P = np.polynomial.polynomial
    k = v.size - 1
    diffs = [v[0]]
    cur = v
    for _ in range(k):
        cur = np.diff(cur)
        diffs.append(cur[0])
    out = np.zeros(k + 1)
    basis = np.ones(1)
    fact = 1.0
    for m, dm in enumerate(diffs):
        if m:
            basis = P.polymul(basis, [-(x0 + m - 1), 1.0])
            fact *= m
        out[: basis.size] += (dm / fact) * basis
    return out


@dataclass(frozen=True)
class OrthoPolynomial:
    k: int
    js: np.ndarray
    values: np.ndarray
    coeffs: np.ndarray  # monomial coefficients in x
    lead: float
    norm_sq: float
    non_dense: bool = False
    centre: int = 0
    centred_coeffs: np.ndarray = field(default_factory=lambda: np.zeros(0))  # in t = x - centre

    @property
    def scale(self) -> float:
        return 1.0 / math.sqrt(self.norm_sq)

    @property
    def standardized_values(self) -> np.ndarray:
        return self.values * self.scale

    @property
    def standardized_coeffs(self) -> np.ndarray:
        return self.coeffs * self.scale

    @property
    def d_k(self) -> float:
        return self.lead * self.scale

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.centred_coeffs.size:
            return horner(self.centred_coeffs, x - self.centre)
        return horner(self.coeffs, x)

    def phi(self, x):
        return self(x) * self.scale


def _check_degree(model: OrdModel, k: int, budget_order: float | None = None) -> None:
    if k < 0:
        raise InputError("degree must be nonnegative")
    if k > model.max_order:
        raise MomentBudgetError(f"degree {k} exceeds M = {model.max_order}")
    model.moment_budget.require(2 * k if budget_order is None else budget_order, f"P_{k}")


def rodrigues_raw(model: OrdModel, k: int, js=None, magnitude: bool = False) -> np.ndarray:
    """The literal Rodrigues sum at js (window by default), without range checks.

    With magnitude=True, the sum of absolute terms instead: the scale against
    which the cancelling sum is accurate.
    """
    js = model.js if js is None else np.asarray(js, dtype=np.int64)
    acc = np.zeros(js.shape)
    terms = []
    for i in range(k + 1):
        sign = -1.0 if (k - i) % 2 else 1.0
        terms.append(sign * math.comb(k, i) * model.q_rising(k, js - i) * model.p_at(js - i))
    if magnitude:
        terms = [np.abs(t) for t in terms]
    acc = np.sum(terms, axis=0) if terms else acc
    p = model.p_at(js)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(p > 0, acc / np.where(p > 0, p, 1.0), np.nan)


def _pmul(a: list, b: list) -> list:
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return out


def _quad_in_t(d: Fraction, b: Fraction, g: Fraction, shift: Fraction) -> list:
    """Coefficients in t of d (t+shift)^2 + b (t+shift) + g."""
    return [d * shift * shift + b * shift + g, 2 * d * shift + b, d]


def rodrigues_expansion(model: OrdModel, k: int, centre: int = 0) -> list:
    """Exact coefficients of P_k(centre + t) in t.

    p(j-i)/p(j) telescopes through the ratio recurrence, so each Rodrigues
    term is the polynomial q^[k-i](j) prod_{l<i} q_(j-l); summing them in
    rational arithmetic removes the tail cancellation of the literal sum.
    """
    d, b, g = (Fraction(v) for v in model.q.as_tuple())
    mu = Fraction(model.mu)
    c = Fraction(centre)
    up = [_quad_in_t(d, b, g, c + l) for l in range(k)]  # q(j+l)
    lo = [_quad_in_t(d, b + 1, g - mu, c - l) for l in range(k)]  # q_(j-l)
    total = [Fraction(0)] * (2 * k + 1)
    for i in range(k + 1):
        term = [Fraction((-1) ** (k - i) * math.comb(k, i))]
        for l in range(k - i):
            term = _pmul(term, up[l])
        for l in range(i):
            term = _pmul(term, lo[l])
        for n, v in enumerate(term):
            total[n] += v
    if any(total[k + 1 :]):
        raise DegenerateRecurrenceError(f"P_{k} expansion has degree above {k}")
    return total[: k + 1]


def _recentre(coeffs: list, centre: int) -> list:
    """Monomial coefficients in x of sum coeffs[i] (x - centre)^i."""
    out = [Fraction(0)] * len(coeffs)
    for i, a in enumerate(coeffs):
        for l in range(i + 1):
            out[l] += a * math.comb(i, l) * Fraction(-centre) ** (i - l)
    return out


def _centre(model: OrdModel) -> int:
    return int(model.js[int(np.argmax(model.p))])


def rodrigues_values(model: OrdModel, k: int) -> np.ndarray:
    """P_k on the pmf window."""
    return rodrigues_polynomial(model, k).values


def rodrigues_polynomial(model: OrdModel, k: int) -> OrthoPolynomial:
    _check_degree(model, k)
    key = ("P", k)
    if key in model._cache:
        return model._cache[key]
    js = model.js
    centre = _centre(model)
    exact = rodrigues_expansion(model, k, centre)
    centred = np.array([float(v) for v in exact])
    coeffs = np.array([float(v) for v in _recentre(exact, centre)])
    values = horner(centred, (js - centre).astype(float))
    lead = lead_coefficient(model.delta, k)
    norm_sq = math.factorial(k) * lead * norm_constant_A(model, k)
    poly = OrthoPolynomial(k, js, values, coeffs, lead, norm_sq, not model.in_class_C, centre, centred)
    model._cache[key] = poly
    return poly


def orthonormal_basis(model: OrdModel, n: int) -> list[OrthoPolynomial]:
    """phi_0..phi_n (use .phi / standardized_* for the normalized versions)."""
    _check_degree(model, n)
    return [rodrigues_polynomial(model, k) for k in range(n + 1)]


@dataclass(frozen=True)
class TransferConstants:
    v: np.ndarray  # v[m, k] = v^{(m)}_{k-m} for m <= k, nan elsewhere
    lam: np.ndarray  # lambda_k(delta)

    def get(self, m: int, k: int) -> float:
        return float(self.v[m, k])


def transfer_constants(model: OrdModel, n: int) -> TransferConstants:
    _check_degree(model, n)
    d = model.delta
    v = np.full((n + 1, n + 1), np.nan)
    for m in range(n + 1):
        a_m = norm_constant_A(model, m)
        for k in range(m, n + 1):
            num = math.factorial(k) * one_minus_product(d, k - 1, k + m - 2)
            v[m, k] = math.sqrt(num / (math.factorial(k - m) * a_m))
    lam = np.array([k * (1.0 - (k - 1) * d) for k in range(n + 1)])
    return TransferConstants(v, lam)


@dataclass
class IdentityReport:
    name: str
    tol: float
    entries: list = field(default_factory=list)  # (label, discrepancy)
    notes: list = field(default_factory=list)

    @property
    def max_discrepancy(self) -> float:
        return max((e[1] for e in self.entries), default=0.0)

    @property
    def passed(self) -> bool:
        return all(np.isfinite(e[1]) and e[1] < self.tol for e in self.entries)


def verify_difference_transfer(model: OrdModel, n: int, tol: float = 1e-8) -> IdentityReport:
    """Delta^m phi_k against v^{(m)}_{k-m} phi_{k-m,m} on the window of X_m.

    The discrepancy is scaled by max(1, sup |Delta^m phi_k|) on that window.
    """
    rep = IdentityReport("difference_transfer", tol)
    n = int(min(n, model.max_order))
    if n < 1:
        rep.notes.append("vacuous: M < 1")
        return rep
    basis = orthonormal_basis(model, n)
    tc = transfer_constants(model, n)
    for m in range(1, n + 1):
        if not model.moment_budget.allows(2 * m + 1):
            rep.notes.append(f"m={m} skipped: moment budget")
            continue
        xm = derive_distribution(model, m)
        js = xm.js
        for k in range(m, n + 1):
            pk = basis[k]
            lhs = horner(difference_coeffs(pk.centred_coeffs * pk.scale, m), js - pk.centre)
            rhs = tc.get(m, k) * rodrigues_polynomial(xm, k - m).phi(js)
            err = float(np.max(np.abs(lhs - rhs)))
            scale = max(1.0, float(np.max(np.abs(lhs))))
            rep.entries.append(((m, k), err / scale))
    return rep


def _tail_sums(t: np.ndarray, p: np.ndarray) -> np.ndarray:
    """sum_{i>j} t_i on the window, switching to -sum_{i<=j} left of the mode."""
    pre = np.cumsum(t)
    suf = np.concatenate((np.cumsum(t[::-1])[::-1][1:], [0.0]))
    mode = int(np.argmax(p))
    idx = np.arange(t.size)
    return np.where(idx >= mode, suf, -pre)


def verify_extended_identity(model: OrdModel, k: int, tol: float = 1e-9) -> IdentityReport:
    """q p Delta P_k = lambda_k sum_{i>j} P_k p, relative to the largest term."""
    rep = IdentityReport("extended_identity", tol)
    if model.max_order < 1 or k > model.max_order:
        rep.notes.append("vacuous: k exceeds M")
        return rep
    _check_degree(model, k, 2 * k - 1)
    poly = rodrigues_polynomial(model, k)
    js, p = model.js, model.p
    lam = k * (1.0 - (k - 1) * model.delta)
    lhs = model.q_at(js) * p * (poly(js + 1) - poly(js))
    rhs = lam * _tail_sums(poly.values * p, p)
    scale = float(np.max(np.abs(lhs)))
    rep.entries.append((k, float(np.max(np.abs(lhs - rhs))) / scale if scale > 0 else 0.0))
    return rep


MAX_INVERSION_POINTS = 3000


def verify_inversion_formula(model: OrdModel, k: int, tol: float = 1e-9) -> IdentityReport:
    """q^[k] p = (1/(k-1)!) sum_{i>j} (i-j-1)_{k-1} P_k(i) p(i), relative to the largest term."""
    rep = IdentityReport("inversion_formula", tol)
    if model.max_order < 1 or k > model.max_order:
        rep.notes.append("vacuous: k exceeds M")
        return rep
    _check_degree(model, k, 2 * k - 1)
    poly = rodrigues_polynomial(model, k)
    js, p = model.js, model.p
    t = poly.values * p
    sel = np.arange(js.size)
    if js.size > MAX_INVERSION_POINTS:
        sel = np.unique(np.linspace(0, js.size - 1, MAX_INVERSION_POINTS).astype(int))
        rep.notes.append(f"checked on {sel.size} of {js.size} window points")
    lhs = model.q_rising(k, js[sel]) * p[sel]
    rhs = np.empty(sel.size)
    fk = math.factorial(k - 1)
    for n, idx in enumerate(sel):
        i = js[idx + 1 :]
        w = descending((i - js[idx] - 1).astype(float), k - 1)
        rhs[n] = fsum(w * t[idx + 1 :]) / fk
    scale = float(np.max(np.abs(lhs)))
    rep.entries.append((k, float(np.max(np.abs(lhs - rhs))) / scale if scale > 0 else 0.0))
    return rep


def polys_csv(basis: list[OrthoPolynomial]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k", "j", "P_k", "phi_k"])
    for poly in basis:
        for j, v, s in zip(poly.js, poly.values, poly.standardized_values):
            w.writerow([poly.k, int(j), fmt(v), fmt(s)])
    return buf.getvalue()


def coeffs_csv(basis: list[OrthoPolynomial]) -> str:
    n = max(p.k for p in basis)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["k"] + [f"c{i}" for i in range(n + 1)])
    for poly in basis:
        row = [fmt(c) for c in poly.coeffs] + [""] * (n - poly.k)
        w.writerow([poly.k] + row)
    return buf.getvalue()


__all__ = [
    "INF",
    "OrthoPolynomial",
    "TransferConstants",
    "IdentityReport",
    "lead_coefficient",
    "fit_coefficients",
    "rodrigues_values",
    "rodrigues_polynomial",
    "orthonormal_basis",
    "transfer_constants",
    "verify_difference_transfer",
    "verify_extended_identity",
    "verify_inversion_formula",
]
