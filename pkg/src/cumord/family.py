"""Admissibility, support, classification and pmf construction for CO(mu; q)."""

from __future__ import annotations

import cmath
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import INF, Quadratic, eval_quadratic, fsum, snap_integer
from .errors import (
    InputError,
    MomentBudgetError,
    NotAdmissibleError,
    UnreachableBranchError,
)

log = logging.getLogger(__name__)

DEFAULT_TAIL_TOL = 1e-12
SNAP_TOL = 1e-9
# hard cap on the number of tabulated points per tail
MAX_TAIL_POINTS = 3_000_000
# weight exponent for light-tailed truncation: the clipped tail of |x|^30 p(x)
# must also fall below tail_tol, so moments used downstream are not biased
LIGHT_TAIL_GUARD = 30

TAGS = (
    "PoissonType",
    "BinomialType",
    "NegativeBinomialType",
    "NegativeHypergeometricType",
    "HypergeometricType",
    "InversePolyaType",
    "DiscreteStudentType",
    "PointMass",
)

TYPE_ALIASES = {
    "poisson": "PoissonType",
    "binomial": "BinomialType",
    "negbin": "NegativeBinomialType",
    "negative_binomial": "NegativeBinomialType",
    "neghypergeometric": "NegativeHypergeometricType",
    "negative_hypergeometric": "NegativeHypergeometricType",
    "hypergeometric": "HypergeometricType",
    "inverse_polya": "InversePolyaType",
    "inversepolya": "InversePolyaType",
    "discrete_student": "DiscreteStudentType",
    "student": "DiscreteStudentType",
    "point_mass": "PointMass",
}


# ---------------------------------------------------------------------------
# small types


@dataclass(frozen=True)
class IntegerWindow:
    lo: int
    hi: int
    lo_truncated: bool = False
    hi_truncated: bool = False

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"empty window [{self.lo}, {self.hi}]")

    def __len__(self):
        return self.hi - self.lo + 1

    def points(self) -> np.ndarray:
        return np.arange(self.lo, self.hi + 1, dtype=np.int64)


@dataclass(frozen=True)
class MomentBudget:
    """Moments of order theta exist iff theta < max_finite_order."""

    max_finite_order: float = INF

    def allows(self, order: float) -> bool:
        return order < self.max_finite_order

    def require(self, order: float, what: str = "moment") -> None:
        if not self.allows(order):
            raise MomentBudgetError(
                f"{what} needs E|X|^{order:g}, but only orders < {self.max_finite_order:g} are finite"
            )


@dataclass(frozen=True)
class AdmissibilityReport:
    admissible: bool
    alpha: float
    omega: float
    failure_reason: str = ""


@dataclass(frozen=True)
class DistributionKind:
    """Table-2 type with canonical parameters.

    orientation describes X in terms of the canonical variable Y:
    identity X = Y, shifted X = Y + offset, reflected X = offset - Y.
    """

    tag: str
    params: dict
    orientation: str = "identity"
    offset: int = 0

    def to_json(self) -> dict:
        return {
            "tag": self.tag,
            "params": {k: _json_number(v) for k, v in self.params.items()},
            "orientation": self.orientation,
            "offset": self.offset,
        }


def _json_number(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return v


@dataclass(frozen=True)
class TabulatedPmf:
    window: IntegerWindow
    probs: np.ndarray
    norm_constant: float
    tail_mass_lo: float
    tail_mass_hi: float
    tail_tol: float
    converged: bool = True

    def total(self) -> float:
        return fsum(self.probs) + self.tail_mass_lo + self.tail_mass_hi


# ---------------------------------------------------------------------------
# support and admissibility


def _integer_roots(f: Quadratic) -> list[int]:
    out = []
    for r in f.roots():
        n = None if isinstance(r, complex) else snap_integer(r, SNAP_TOL)
        if n is None:
            # a double root splits by ~sqrt(eps) under rounding, possibly into a
            # complex pair; accept the nearest integer when f vanishes there
            c = round(complex(r).real)
            scale = abs(f.delta) * c * c + abs(f.beta) * abs(c) + abs(f.gamma)
            if abs(f.delta) > 0 and abs(eval_quadratic(f, c)) <= SNAP_TOL * 1e-3 * max(scale, 1e-300):
                n = int(c)
        if n is not None:
            out.append(n)
    return out


def _snap_or(x: float, fn):
    n = snap_integer(x, SNAP_TOL)
    return n if n is not None else int(fn(x))


def determine_support(mu: float, q: Quadratic) -> tuple[float, float]:
    """Endpoints (alpha, omega) from the integer zeros of q_ and q."""
    ql = q.lower(mu)
    slack = SNAP_TOL * max(1.0, abs(mu))
    if ql.is_zero():
        alpha = _snap_or(mu, math.floor)
    else:
        cands = [n for n in _integer_roots(ql) if n <= mu + slack]
        alpha = max(cands) if cands else -INF
    if q.is_zero():
        omega = _snap_or(mu, math.ceil)
    else:
        cands = [n for n in _integer_roots(q) if n >= mu - slack]
        omega = min(cands) if cands else INF
    return alpha, omega


def _nonpositive_set(f: Quadratic) -> list[tuple[float, float]]:
    """Closed intervals where f <= 0."""
    d, b, c = f.as_tuple()
    if d == 0.0 and b == 0.0:
        return [(-INF, INF)] if c <= 0.0 else []
    if d == 0.0:
        r = -c / b
        return [(-INF, r)] if b > 0.0 else [(r, INF)]
    roots = f.roots()
    if isinstance(roots[0], complex):
        return [] if d > 0.0 else [(-INF, INF)]
    r1, r2 = roots
    if d > 0.0:
        return [(r1, r2)]
    return [(-INF, r1), (r2, INF)]


def positive_on(f: Quadratic, a: float, b: float) -> bool:
    """True when f(j) > 0 for all integers a <= j <= b (a, b may be infinite)."""
    if a > b:
        return True
    for lo, hi in _nonpositive_set(f):
        lo_int = -INF if lo == -INF else math.ceil(lo - SNAP_TOL * max(1.0, abs(lo)))
        hi_int = INF if hi == INF else math.floor(hi + SNAP_TOL * max(1.0, abs(hi)))
        if max(lo_int, a) <= min(hi_int, b):
            return False
    return True


def check_admissible(mu: float, q: Quadratic) -> AdmissibilityReport:
    mu = float(mu)
    if not math.isfinite(mu):
        return AdmissibilityReport(False, -INF, INF, "mu is not finite")
    alpha, omega = determine_support(mu, q)
    if alpha > omega:
        return AdmissibilityReport(False, alpha, omega, "empty support")
    if not positive_on(q, alpha, omega - 1):
        return AdmissibilityReport(False, alpha, omega, "q<0 on S°" if _some_negative(q, alpha, omega - 1) else "q=0 on S°")
    if not positive_on(q.lower(mu), alpha + 1, omega):
        return AdmissibilityReport(False, alpha, omega, "q_<=0 on S∘")
    return AdmissibilityReport(True, alpha, omega)


def _some_negative(f: Quadratic, a: float, b: float) -> bool:
    """Whether f is strictly negative at some integer of [a, b]; snapped roots count as zeros."""
    if a > b:
        return False
    for lo, hi in _nonpositive_set(f):
        if lo == -INF:
            lo_int = -INF
        else:
            lo_int = math.ceil(lo)
            if snap_integer(lo, SNAP_TOL) == lo_int:
                lo_int += 1
        if hi == INF:
            hi_int = INF
        else:
            hi_int = math.floor(hi)
            if snap_integer(hi, SNAP_TOL) == hi_int:
                hi_int -= 1
        if lo == -INF and hi == INF:
            d, bb, c = f.as_tuple()
            if d == 0.0 and bb == 0.0 and c == 0.0:
                return False  # identically zero
        if max(lo_int, a) <= min(hi_int, b):
            return True
    return False


# ---------------------------------------------------------------------------
# pmf construction


def _default_guard(delta: float, finite: bool) -> int:
    if finite:
        return 0
    if delta <= 0.0:
        return LIGHT_TAIL_GUARD
    return int(max(0, min(LIGHT_TAIL_GUARD, math.floor(1.0 / delta) - 10)))


def _extend(mu, q, ql, anchor, end, direction, tail_tol, guard, max_points):
    """Walk the ratio recurrence from anchor towards end (+1 up, -1 down).

    Returns (log_u, last_j, log_tail_mass, truncated, converged) with log_u the
    log of the unnormalized pmf (anchor has log_u = 0, not included).
    """
    logs = []
    last = 0.0
    log_running = 0.0  # log of sum of u seen so far, anchor included
    j = anchor
    size = 256
    count = 0
    log_tol = math.log(tail_tol)
    while True:
        if direction > 0:
            stop = j + size if end == INF else min(j + size, end)
            js = np.arange(j + 1, stop + 1, dtype=float)
        else:
            stop = j - size if end == -INF else max(j - size, end)
            js = np.arange(j - 1, stop - 1, -1, dtype=float)
        if js.size == 0:
            return np.array(logs), j, -INF, False, True
        if direction > 0:
            lr = np.log(eval_quadratic(q, js - 1)) - np.log(eval_quadratic(ql, js))
        else:
            lr = np.log(eval_quadratic(ql, js + 1)) - np.log(eval_quadratic(q, js))
        lu = last + np.cumsum(lr)
        if abs(end) != INF:
            logs.extend(lu.tolist())
            j = int(js[-1])
            last = lu[-1]
            if j == end:
                return np.array(logs), j, -INF, False, True
            size *= 2
            continue
        # infinite side: rigorous tail mass bound from the defining identity
        if direction > 0:
            gap = js + 1.0 - mu
            lq = np.log(eval_quadratic(q, js))
        else:
            gap = mu - js + 1.0
            lq = np.log(eval_quadratic(ql, js))
        valid = gap > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            log_mass = np.where(valid, lq + lu - np.log(np.where(valid, gap, 1.0)), INF)
        log_weighted = log_mass + guard * np.log(np.maximum(1.0, np.abs(js)))
        log_sum = np.logaddexp.accumulate(np.concatenate(([log_running], lu)))[1:]
        ok = np.nonzero(valid & (log_weighted < log_tol + log_sum) & (log_mass < log_tol + log_sum))[0]
        if ok.size:
            i = int(ok[0])
            logs.extend(lu[: i + 1].tolist())
            return np.array(logs), int(js[i]), float(log_mass[i]), True, True
        logs.extend(lu.tolist())
        count += js.size
        j = int(js[-1])
        last = lu[-1]
        log_running = log_sum[-1]
        if count >= max_points:
            lm = float(log_mass[-1]) if valid[-1] else INF
            log.warning("tail truncation did not converge within %d points", max_points)
            return np.array(logs), j, lm, True, False
        size = min(size * 2, 1 << 18)


def build_pmf(
    mu: float,
    q: Quadratic,
    tail_tol: float = DEFAULT_TAIL_TOL,
    *,
    moment_guard: Optional[int] = None,
    max_points: int = MAX_TAIL_POINTS,
) -> TabulatedPmf:
    """Tabulate the pmf of CO(mu; q) on a window via the ratio recurrence."""
    if not (tail_tol > 0.0):
        raise InputError("tail_tol must be positive")
    rep = check_admissible(mu, q)
    if not rep.admissible:
        raise NotAdmissibleError(rep.failure_reason)
    alpha, omega = rep.alpha, rep.omega
    if alpha == omega:
        w = IntegerWindow(int(alpha), int(alpha))
        return TabulatedPmf(w, np.array([1.0]), 1.0, 0.0, 0.0, tail_tol)
    finite = alpha != -INF and omega != INF
    guard = _default_guard(q.delta, finite) if moment_guard is None else int(moment_guard)
    ql = q.lower(mu)
    anchor = int(min(max(round(mu), alpha), omega))
    up, hi, log_t_hi, hi_trunc, ok_hi = _extend(mu, q, ql, anchor, omega, +1, tail_tol, guard, max_points)
    down, lo, log_t_lo, lo_trunc, ok_lo = _extend(mu, q, ql, anchor, alpha, -1, tail_tol, guard, max_points)
    logu = np.concatenate((down[::-1], [0.0], up))
    shift = float(np.max(logu))
    u = np.exp(logu - shift)
    t_lo = math.exp(log_t_lo - shift) if log_t_lo != -INF else 0.0
    t_hi = math.exp(log_t_hi - shift) if log_t_hi != -INF else 0.0
    total = fsum(u) + t_lo + t_hi
    probs = u / total
    window = IntegerWindow(int(lo), int(hi), lo_trunc, hi_trunc)
    # reference point of the normalizing constant: alpha, else omega, else 0
    ref = alpha if alpha != -INF else (omega if omega != INF else 0)
    ref = int(ref)
    if lo <= ref <= hi:
        c = float(probs[ref - lo])
    else:
        c = _outside_prob(q, ql, ref, lo, hi, logu, shift, total)
    return TabulatedPmf(window, probs, c, t_lo / total, t_hi / total, tail_tol, ok_hi and ok_lo)


def _outside_prob(q, ql, ref, lo, hi, logu, shift, total):
    if ref > hi:
        js = np.arange(hi + 1, ref + 1, dtype=float)
        lr = np.log(eval_quadratic(q, js - 1)) - np.log(eval_quadratic(ql, js))
        lp = logu[-1] + lr.sum()
    else:
        js = np.arange(lo - 1, ref - 1, -1, dtype=float)
        lr = np.log(eval_quadratic(ql, js + 1)) - np.log(eval_quadratic(q, js))
        lp = logu[0] + lr.sum()
    return math.exp(lp - shift) / total


# ---------------------------------------------------------------------------
# canonical parameterizations (Table 2)


def _close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


def in_frak_c2(r, s) -> bool:
    """Conjugate non-real pair, or both in (0, inf), or both in one (-n-1, -n)."""
    r, s = complex(r), complex(s)
    if abs(r.imag) > 0.0 or abs(s.imag) > 0.0:
        return r.imag != 0.0 and _close(r.real, s.real) and _close(r.imag, -s.imag)
    x, y = r.real, s.real
    if x > 0 and y > 0:
        return True
    if x < 0 and y < 0 and x != math.floor(x) and y != math.floor(y):
        return math.floor(x) == math.floor(y)
    return False


def in_frak_c2_tilde(r, s) -> bool:
    """Conjugate non-real pair, or both real in one open unit interval (n, n+1)."""
    r, s = complex(r), complex(s)
    if abs(r.imag) > 0.0 or abs(s.imag) > 0.0:
        return r.imag != 0.0 and _close(r.real, s.real) and _close(r.imag, -s.imag)
    x, y = r.real, s.real
    if x == math.floor(x) or y == math.floor(y):
        return False
    return math.floor(x) == math.floor(y)


def _pair(a, b):
    """Order a root pair: conjugates with positive imaginary part first, reals ascending."""
    a, b = complex(a), complex(b)
    if a.imag != 0.0 or b.imag != 0.0:
        z = a if a.imag > 0 else b
        return complex(z.real, abs(z.imag)), complex(z.real, -abs(z.imag))
    x, y = sorted((a.real, b.real))
    return x, y


def canonical_pair(tag: str, **params) -> tuple[float, Quadratic]:
    """(mu; q) of a Table-2 type on its canonical support."""
    tag = TYPE_ALIASES.get(tag, tag)
    try:
        if tag == "PoissonType":
            lam = float(params["lam"])
            if not lam > 0:
                raise InputError("lambda must be positive")
            return lam, Quadratic(0.0, 0.0, lam)
        if tag == "BinomialType":
            n, p = _int_param(params["N"]), float(params["p"])
            if n < 1 or not 0 < p < 1:
                raise InputError("binomial needs N >= 1 and 0 < p < 1")
            return n * p, Quadratic(0.0, -p, p * n)
        if tag == "NegativeBinomialType":
            r, p = float(params["r"]), float(params["p"])
            if not r > 0 or not 0 < p < 1:
                raise InputError("negative binomial needs r > 0 and 0 < p < 1")
            c = (1.0 - p) / p
            return r * c, Quadratic(0.0, c, c * r)
        if tag == "NegativeHypergeometricType":
            n, r, s = _int_param(params["N"]), float(params["r"]), float(params["s"])
            if n < 1 or not r > 0 or not s > 0:
                raise InputError("negative hypergeometric needs N >= 1 and r, s > 0")
            t = r + s
            return n * r / t, Quadratic(-1.0 / t, (n - r) / t, r * n / t)
        if tag == "HypergeometricType":
            n, r, s = _int_param(params["N"]), float(params["r"]), float(params["s"])
            if n < 1 or not r > n - 1 or not s > n - 1:
                raise InputError("hypergeometric needs N >= 1 and r, s > N - 1")
            t = r + s
            return n * r / t, Quadratic(1.0 / t, -(r + n) / t, r * n / t)
        if tag == "InversePolyaType":
            rho = float(params["rho"])
            r, s = complex(params["r"]), complex(params["s"])
            if not in_frak_c2(r, s):
                raise InputError("inverse Polya root pair must lie in c2")
            rs, tot = (r * s).real, (r + s).real
            if not rho > max(0.0, tot + 1.0):
                raise InputError("inverse Polya needs rho > max(0, r + s + 1)")
            d = rho - tot - 1.0
            return rs / d, Quadratic(1.0 / d, tot / d, rs / d)
        if tag == "DiscreteStudentType":
            z1, z2 = complex(params["z1"]), complex(params["z2"])
            w1, w2 = complex(params["w1"]), complex(params["w2"])
            if not (in_frak_c2_tilde(z1, z2) and in_frak_c2_tilde(w1, w2)):
                raise InputError("discrete Student root pairs must lie in c2-tilde")
            d = (w1 + w2 - z1 - z2).real
            if not d > 0:
                raise InputError("discrete Student needs w1 + w2 > z1 + z2")
            zz, ww = (z1 * z2).real, (w1 * w2).real
            return (zz - ww) / d, Quadratic(1.0 / d, (z1 + z2).real / d, zz / d)
        if tag == "PointMass":
            v = _int_param(params["value"])
            return float(v), Quadratic(0.0, -1.0, float(v))
    except KeyError as e:
        raise InputError(f"missing parameter {e.args[0]!r} for {tag}") from None
    raise InputError(f"unknown distribution type {tag!r}")


def _int_param(v) -> int:
    f = float(v)
    if f != math.floor(f):
        raise InputError(f"expected an integer, got {v!r}")
    return int(f)


def _reflected_pair(mu, q):
    """(mu_W; q_W) of W = -X."""
    return -mu, Quadratic(q.delta, -q.beta - 1.0, q.gamma - mu)


def classify(mu: float, q: Quadratic) -> DistributionKind:
    rep = check_admissible(mu, q)
    if not rep.admissible:
        raise NotAdmissibleError(rep.failure_reason)
    a, w = rep.alpha, rep.omega
    if a == w:
        return DistributionKind("PointMass", {"value": int(a)})
    if a != -INF and w != INF and w - a == 1:
        # two-point laws coincide across types; report as Bernoulli
        return _oriented("BinomialType", {"N": 1, "p": mu - a}, int(a))
    d, b = q.delta, q.beta
    if d == 0.0:
        if b == 0.0:
            return _oriented("PoissonType", {"lam": mu - a}, int(a))
        if b > 0.0:
            m = mu - a
            return _oriented("NegativeBinomialType", {"r": m / b, "p": 1.0 / (1.0 + b)}, int(a))
        if b > -1.0:
            n = int(w - a)
            return _oriented("BinomialType", {"N": n, "p": (mu - a) / n}, int(a))
        mw, qw = _reflected_pair(mu, q)
        inner = classify(mw, qw)
        return _reflect_kind(inner)
    if d < 0.0:
        n = int(w - a)
        m = mu - a
        return _oriented(
            "NegativeHypergeometricType",
            {"N": n, "r": -m / (n * d), "s": (m - n) / (n * d)},
            int(a),
        )
    if a != -INF and w != INF:
        n = int(w - a)
        m = mu - a
        return _oriented("HypergeometricType", {"N": n, "r": m / (n * d), "s": (n - m) / (n * d)}, int(a))
    if a != -INF:
        qs = q.shifted(-a)
        z1, z2 = _pair(*[-r for r in qs.roots()])
        rho = (qs.beta + d + 1.0) / d
        return _oriented("InversePolyaType", {"rho": rho, "r": _real_if(z1), "s": _real_if(z2)}, int(a))
    if w != INF:
        mw, qw = _reflected_pair(mu, q)
        return _reflect_kind(classify(mw, qw))
    if a == -INF and w == INF:
        z1, z2 = _pair(*[-r for r in q.roots()])
        w1, w2 = _pair(*[-r for r in q.lower(mu).roots()])
        return DistributionKind(
            "DiscreteStudentType",
            {"z1": _real_if(z1), "z2": _real_if(z2), "w1": _real_if(w1), "w2": _real_if(w2)},
        )
    raise UnreachableBranchError(f"no classification case for mu={mu}, q={q}")


def _real_if(z):
    z = complex(z)
    return z.real if z.imag == 0.0 else z


def _oriented(tag, params, offset):
    if offset == 0:
        return DistributionKind(tag, params)
    return DistributionKind(tag, params, "shifted", offset)


def _reflect_kind(inner: DistributionKind) -> DistributionKind:
    # W = -X and W = Y + c  =>  X = -c - Y
    c = inner.offset if inner.orientation == "shifted" else 0
    return DistributionKind(inner.tag, inner.params, "reflected", -c)


# ---------------------------------------------------------------------------
# the model


@dataclass(frozen=True)
class OrdModel:
    mu: float
    q: Quadratic
    alpha: float
    omega: float
    kind: DistributionKind
    pmf: TabulatedPmf
    tail_tol: float = DEFAULT_TAIL_TOL
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    # construction -----------------------------------------------------------
    @classmethod
    def build(cls, mu: float, q: Quadratic, tail_tol: float = DEFAULT_TAIL_TOL, **kw) -> "OrdModel":
        mu = float(mu)
        pmf = build_pmf(mu, q, tail_tol, **kw)
        alpha, omega = determine_support(mu, q)
        kind = classify(mu, q)
        return cls(mu, q, alpha, omega, kind, pmf, tail_tol)

    @classmethod
    def from_type(cls, tag: str, tail_tol: float = DEFAULT_TAIL_TOL, **params) -> "OrdModel":
        mu, q = canonical_pair(tag, **params)
        return cls.build(mu, q, tail_tol)

    # derived attributes -----------------------------------------------------
    @property
    def window(self) -> IntegerWindow:
        return self.pmf.window

    @property
    def js(self) -> np.ndarray:
        return self.pmf.window.points()

    @property
    def p(self) -> np.ndarray:
        return self.pmf.probs

    @property
    def delta(self) -> float:
        return self.q.delta

    @property
    def support_size(self) -> float:
        if self.alpha == -INF or self.omega == INF:
            return INF
        return int(self.omega - self.alpha) + 1

    @property
    def max_order(self) -> float:
        """M = |S| - 1."""
        s = self.support_size
        return s - 1 if s != INF else INF

    @property
    def moment_budget(self) -> MomentBudget:
        if self.delta > 0.0 and self.support_size == INF:
            return MomentBudget(1.0 + 1.0 / self.delta)
        return MomentBudget(INF)

    @property
    def in_class_C(self) -> bool:
        return self.delta <= 0.0 or self.support_size != INF

    @property
    def is_point_mass(self) -> bool:
        return self.alpha == self.omega

    # evaluation helpers -----------------------------------------------------
    def q_at(self, j) -> np.ndarray:
        """q on integer points, exactly zero at a finite omega."""
        j = np.asarray(j)
        v = np.asarray(eval_quadratic(self.q, j.astype(float)), dtype=float)
        if self.omega != INF:
            v = np.where(j == self.omega, 0.0, v)
        return v

    def q_lower_at(self, j) -> np.ndarray:
        """q_ on integer points, exactly zero at a finite alpha."""
        j = np.asarray(j)
        v = np.asarray(eval_quadratic(self.q.lower(self.mu), j.astype(float)), dtype=float)
        if self.alpha != -INF:
            v = np.where(j == self.alpha, 0.0, v)
        return v

    def q_rising(self, k: int, j) -> np.ndarray:
        """q^[k](j) on integer points with exact zeros past omega - k."""
        j = np.asarray(j)
        out = np.ones(j.shape, dtype=float)
        for i in range(k):
            out = out * self.q_at(j + i)
        return out

    def p_at(self, j) -> np.ndarray:
        """pmf on arbitrary integers; beyond a truncated edge it continues the recurrence."""
        j = np.asarray(j, dtype=np.int64)
        lo, hi, probs = self._extended_table(j)
        inside = (j >= lo) & (j <= hi)
        out = np.zeros(j.shape, dtype=float)
        out[inside] = probs[j[inside] - lo]
        return out

    def _extended_table(self, j: np.ndarray):
        w = self.window
        lo, hi, probs = w.lo, w.hi, self.pmf.probs
        if j.size == 0:
            return lo, hi, probs
        need_lo = max(int(j.min()), self.alpha) if w.lo_truncated else lo
        need_hi = min(int(j.max()), self.omega) if w.hi_truncated else hi
        if need_lo >= lo and need_hi <= hi:
            return lo, hi, probs
        key = ("ext", int(min(need_lo, lo)), int(max(need_hi, hi)))
        if key not in self._cache:
            ql = self.q.lower(self.mu)
            parts = [probs]
            new_lo, new_hi = lo, hi
            if need_lo < lo:
                js = np.arange(lo - 1, need_lo - 1, -1, dtype=float)
                lr = np.log(eval_quadratic(ql, js + 1)) - np.log(eval_quadratic(self.q, js))
                parts.insert(0, (probs[0] * np.exp(np.cumsum(lr)))[::-1])
                new_lo = int(need_lo)
            if need_hi > hi:
                js = np.arange(hi + 1, need_hi + 1, dtype=float)
                lr = np.log(eval_quadratic(self.q, js - 1)) - np.log(eval_quadratic(ql, js))
                parts.append(probs[-1] * np.exp(np.cumsum(lr)))
                new_hi = int(need_hi)
            self._cache[key] = (new_lo, new_hi, np.concatenate(parts))
        return self._cache[key]

    # serialization -----------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "mu": self.mu,
            "delta": self.q.delta,
            "beta": self.q.beta,
            "gamma": self.q.gamma,
            "alpha": _json_end(self.alpha),
            "omega": _json_end(self.omega),
            "kind": self.kind.tag,
            "params": self.kind.to_json()["params"],
            "orientation": self.kind.orientation,
            "offset": self.kind.offset,
            "tail_tol": self.tail_tol,
            "window": [self.window.lo, self.window.hi],
            "norm_constant": self.pmf.norm_constant,
        }

    @classmethod
    def from_json(cls, rec: dict) -> "OrdModel":
        try:
            q = Quadratic(rec["delta"], rec["beta"], rec["gamma"])
            return cls.build(rec["mu"], q, float(rec.get("tail_tol", DEFAULT_TAIL_TOL)))
        except KeyError as e:
            raise InputError(f"model record lacks field {e.args[0]!r}") from None


def _json_end(x):
    if x == INF:
        return "inf"
    if x == -INF:
        return "-inf"
    return int(x)


# ---------------------------------------------------------------------------
# transforms and derived distributions


def transform(model: OrdModel, action: str, r: int = 0) -> OrdModel:
    """Shift X -> X + r, or reflect X -> -X; the table is relocated, not rebuilt."""
    pmf = model.pmf
    w = pmf.window
    if action == "shift":
        if int(r) != r:
            raise InputError("shift must be an integer")
        r = int(r)
        mu, q = model.mu + r, model.q.shifted(r)
        window = IntegerWindow(w.lo + r, w.hi + r, w.lo_truncated, w.hi_truncated)
        probs = pmf.probs.copy()
        t_lo, t_hi = pmf.tail_mass_lo, pmf.tail_mass_hi
        alpha, omega = model.alpha + r, model.omega + r
    elif action == "reflect":
        mu, q = _reflected_pair(model.mu, model.q)
        window = IntegerWindow(-w.hi, -w.lo, w.hi_truncated, w.lo_truncated)
        probs = pmf.probs[::-1].copy()
        t_lo, t_hi = pmf.tail_mass_hi, pmf.tail_mass_lo
        alpha, omega = -model.omega, -model.alpha
    else:
        raise InputError(f"unknown transform {action!r}")
    ref = alpha if alpha != -INF else (omega if omega != INF else 0)
    ref = int(ref)
    if window.lo <= ref <= window.hi:
        c = float(probs[ref - window.lo])
    else:
        c = build_pmf(mu, q, model.tail_tol).norm_constant
    new_pmf = TabulatedPmf(window, probs, c, t_lo, t_hi, pmf.tail_tol, pmf.converged)
    return OrdModel(mu, q, alpha, omega, classify(mu, q), new_pmf, model.tail_tol)


def derived_parameters(model: OrdModel, i: int) -> tuple[float, Quadratic]:
    """(mu_i; q_i) of the derived distribution X_i."""
    d, b = model.q.delta, model.q.beta
    s = 1.0 - 2.0 * i * d
    mu_i = (d * i * i + b * i + model.mu) / s
    return mu_i, model.q.shifted(-i).scaled(1.0 / s)


def derive_distribution(model: OrdModel, i: int) -> OrdModel:
    """X_i with pmf proportional to q^[i] p, built through its own recurrence."""
    if i < 0 or int(i) != i:
        raise InputError("i must be a nonnegative integer")
    i = int(i)
    if i == 0:
        return model
    if i > model.max_order:
        raise MomentBudgetError(f"derived order {i} exceeds M = {model.max_order}")
    model.moment_budget.require(2 * i + 1, f"derived distribution X_{i}")
    key = ("derived", i)
    if key not in model._cache:
        mu_i, q_i = derived_parameters(model, i)
        model._cache[key] = OrdModel.build(mu_i, q_i, model.tail_tol)
    return model._cache[key]
