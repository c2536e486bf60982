"""Fourier coefficients of test functions and weighted difference energies."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .core import EPS, INF, forward_difference, fsum, one_minus_product
from .errors import ClassCError, InputError, MomentBudgetError, WindowTooSmallError
from .expr import compile_expression
from .family import OrdModel
from .moments import fmt, norm_constant_A
from .polynomials import lead_coefficient, rodrigues_polynomial

OVERFLOW_GUARD = 1e280
DEFAULT_K = 12
DIFF_ALPHA_TOL = 1e-12
BUILTINS = ("x", "x2", "x3", "abs", "exp", "indicator")


@dataclass(frozen=True)
class TestFunction:
    """A real function g on the integers, evaluated on numpy arrays."""

    __test__ = False  # not a pytest class

    name: str
    source: str  # builtin | expression | table
    evaluator: Callable
    degree: Optional[int] = None  # polynomial degree when known
    params: dict = field(default_factory=dict)

    def __call__(self, j):
        return np.asarray(self.evaluator(np.asarray(j)), dtype=float)

    def on_window(self, model: OrdModel, extra: int = 0) -> tuple[np.ndarray, np.ndarray]:
        """g on the window extended by `extra` points above."""
        js = np.arange(model.window.lo, model.window.hi + extra + 1, dtype=np.int64)
        return js, self(js)


def _upper_ratio_limit(model: OrdModel) -> float:
    """lim p(j+1)/p(j) as j -> inf (for an infinite upper tail)."""
    d, b = model.q.delta, model.q.beta
    if d != 0.0:
        return 1.0
    return b / (b + 1.0) if b > 0 else 0.0


def builtin(name: str, model: OrdModel, **params) -> TestFunction:
    """Builtin suite: x, x2, x3, abs (|x-mu|), exp (exp(x/c)), indicator (x >= t)."""
    if name == "x":
        return TestFunction("x", "builtin", lambda j: j.astype(float), 1)
    if name == "x2":
        return TestFunction("x2", "builtin", lambda j: j.astype(float) ** 2, 2)
    if name == "x3":
        return TestFunction("x3", "builtin", lambda j: j.astype(float) ** 3, 3)
    if name == "abs":
        mu = model.mu
        return TestFunction("abs", "builtin", lambda j: np.abs(j - mu), None, {"mu": mu})
    if name == "exp":
        if model.omega == INF:
            rho = _upper_ratio_limit(model)
            if rho >= 1.0:
                raise InputError("exp(x/c) has no finite moments on a polynomially decaying upper tail")
            default_c = 4.0 if rho == 0.0 else max(4.0, 4.0 / -math.log(rho))
        else:
            default_c = 4.0
        c = float(params.get("c", default_c))
        return TestFunction("exp", "builtin", lambda j: np.exp(j / c), None, {"c": c})
    if name == "indicator":
        t = float(params.get("t", math.ceil(model.mu)))
        return TestFunction("indicator", "builtin", lambda j: (j >= t).astype(float), None, {"t": t})
    raise InputError(f"unknown builtin {name!r}; choose from {', '.join(BUILTINS)}")


def builtin_suite(model: OrdModel) -> list[TestFunction]:
    out = []
    for name in BUILTINS:
        try:
            out.append(builtin(name, model))
        except InputError:
            pass
    return out


def from_expression(text: str) -> TestFunction:
    return TestFunction(text, "expression", compile_expression(text))


def from_table(values: dict[int, float], name: str = "table") -> TestFunction:
    table = {int(k): float(v) for k, v in values.items()}

    def f(j):
        j = np.asarray(j, dtype=np.int64)
        missing = [int(v) for v in np.unique(j) if int(v) not in table]
        if missing:
            raise WindowTooSmallError(
                f"table g lacks values at {missing[:5]}{'...' if len(missing) > 5 else ''}"
            )
        return np.array([table[int(v)] for v in j.ravel()], dtype=float).reshape(j.shape)

    return TestFunction(name, "table", f)


def load_table(path: str | Path) -> TestFunction:
    """Read (j, value) pairs from CSV with a header row, or from JSON."""
    path = Path(path)
    text = path.read_text()
    if path.suffix.lower() == ".json":
        data = json.loads(text)
        if isinstance(data, dict):
            values = data
        else:
            values = {row[0]: row[1] for row in data}
    else:
        rows = list(csv.reader(io.StringIO(text)))
        values = {}
        for row in rows:
            if not row:
                continue
            try:
                values[int(float(row[0]))] = float(row[1])
            except ValueError:
                continue  # header
    return from_table(values, path.name)


def resolve(spec: str, model: OrdModel) -> TestFunction:
    """builtin name, path to a table file, or an expression in x."""
    if spec in BUILTINS:
        return builtin(spec, model)
    if Path(spec).is_file():
        return load_table(spec)
    return from_expression(spec)


# ---------------------------------------------------------------------------


def _check(model: OrdModel, k: int):
    if k < 0:
        raise InputError("k must be nonnegative")
    if k > model.max_order:
        raise MomentBudgetError(f"k={k} exceeds M = {model.max_order}")
    model.moment_budget.require(2 * k, f"Fourier coefficient {k}")


def rising_difference_terms(model: OrdModel, g: TestFunction, k: int) -> np.ndarray:
    """q^[k](j) Delta^k g(j) p(j) on the window."""
    _, gv = g.on_window(model, k)
    dk = forward_difference(gv, k)
    js = model.js
    return model.q_rising(k, js) * dk * model.p


def norm_sq(model: OrdModel, k: int) -> float:
    return math.factorial(k) * lead_coefficient(model.delta, k) * norm_constant_A(model, k)


def fourier_coefficient(model: OrdModel, g: TestFunction, k: int, route: str = "difference-identity") -> float:
    _check(model, k)
    if route == "difference-identity":
        return fsum(rising_difference_terms(model, g, k)) / math.sqrt(norm_sq(model, k))
    if route == "direct-projection":
        poly = rodrigues_polynomial(model, k)
        return fsum(poly.standardized_values * g(model.js) * model.p)
    raise InputError(f"unknown route {route!r}")


@dataclass(frozen=True)
class FourierSpectrum:
    alphas: np.ndarray
    alphas_direct: np.ndarray
    K: int
    partial_parseval: np.ndarray  # cumulative sum_{k=1}^{K'} alpha_k^2, K' = 1..K
    var_direct: float
    route: str = "difference-identity"
    non_dense: bool = False

    @property
    def discrepancy(self) -> np.ndarray:
        return np.abs(self.alphas - self.alphas_direct)

    @property
    def max_discrepancy(self) -> float:
        return float(np.max(self.discrepancy))

    @property
    def remainder_estimate(self) -> float:
        """Var g - sum_{k<=K} alpha_k^2, the mass not yet captured."""
        captured = self.partial_parseval[-1] if self.K >= 1 else 0.0
        return max(0.0, self.var_direct - captured)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["k", "alpha_k", "alpha_k_direct", "discrepancy"])
        for k in range(self.K + 1):
            w.writerow([k, fmt(self.alphas[k]), fmt(self.alphas_direct[k]), fmt(self.discrepancy[k])])
        return buf.getvalue()


def default_K(model: OrdModel) -> int:
    k = min(DEFAULT_K, model.max_order)
    budget = model.moment_budget.max_finite_order
    while k > 0 and not 2 * k < budget:
        k -= 1
    return int(k)


def _exact_samples(gv: np.ndarray) -> tuple[np.ndarray, int]:
    """Float samples as Python ints over a common power of two: gv = ints * 2**e exactly."""
    parts = [math.frexp(float(v)) for v in gv]
    e = min((ex - 53 for v, (_, ex) in zip(gv, parts) if v != 0.0), default=0)
    ints = np.empty(gv.size, dtype=object)
    for i, (mant, ex) in enumerate(parts):
        ints[i] = int(math.ldexp(mant, 53)) << (ex - 53 - e) if mant else 0
    return ints, e


def _to_float(n: int, e: int) -> float:
    bits = abs(n).bit_length()
    if bits > 64:
        # keep 64 significant bits; the 53-bit rounding after that is the only loss
        return math.ldexp(float(n >> (bits - 64)), e + bits - 64)
    return math.ldexp(float(n), e)


def difference_alphas(model: OrdModel, g: TestFunction, K: int) -> np.ndarray:
    """alpha_0..alpha_k by the difference identity alone, for k past the polynomial range.

    q^[k](j) / ||P_k|| is carried in log space through the ratio
    ||P_k||^2 / ||P_{k-1}||^2 = k (c_k / c_{k-1}) (1 - 2(k-1) delta) Var X_{k-1},
    so large k neither overflows nor needs the polynomials themselves.

    Floating k-th differences would lose about k bits, so the samples of g
    are differenced exactly as integers over a common power of two; the
    coefficients are then those of the sampled g, the same function the
    direct routes see. The result stops (shorter than K + 1) at the first
    order whose weighted sum is no longer accurate to DIFF_ALPHA_TOL * ||g||.
    """
    K = int(min(K, model.max_order))
    model.moment_budget.require(2 * K, f"Fourier coefficient {K}")
    from .moments import derived_variance

    js = model.js
    _, gv = g.on_window(model, K)
    if not np.all(np.isfinite(gv)):
        raise InputError(f"{g.name} is not finite on the truncation window")
    with np.errstate(divide="ignore"):
        logt = np.log(model.p)
    d, e = _exact_samples(gv)
    tol = DIFF_ALPHA_TOL * max(1.0, math.sqrt(fsum(gv[: js.size] ** 2 * model.p)))
    out = [fsum(gv[: js.size] * model.p)]
    for k in range(1, K + 1):
        ratio = k * lead_coefficient(model.delta, k) / lead_coefficient(model.delta, k - 1)
        ratio *= (1.0 - 2.0 * (k - 1) * model.delta) * derived_variance(model, k - 1)
        qv = model.q_at(js + k - 1)
        with np.errstate(divide="ignore"):
            # q^[k](j) = 0 once the factors reach omega; the -inf then persists
            logt = logt + np.where(qv > 0, np.log(np.where(qv > 0, qv, 1.0)), -np.inf) - 0.5 * math.log(ratio)
        d = d[1:] - d[:-1]
        t = np.exp(logt)
        live = t > 0
        dk = np.array([_to_float(int(v), e) if w else 0.0 for v, w in zip(d[: js.size], live)])
        terms = t * dk
        if 4 * EPS * fsum(np.abs(terms)) > tol:
            break
        out.append(fsum(terms))
    return np.array(out)


def spectrum(model: OrdModel, g: TestFunction, K: Optional[int] = None) -> FourierSpectrum:
    K = default_K(model) if K is None else int(K)
    _check(model, K)
    a = np.array([fourier_coefficient(model, g, k) for k in range(K + 1)])
    b = np.array([fourier_coefficient(model, g, k, "direct-projection") for k in range(K + 1)])
    from .oracle import brute_variance

    var = brute_variance(model, g).value
    pp = np.cumsum(a[1:] ** 2)
    return FourierSpectrum(a, b, K, pp, var, non_dense=not model.in_class_C)


def energy_weight(delta: float, k: int, i: int) -> float:
    """(k!/(k-i)!) prod_{j=k-1}^{k+i-2} (1 - j delta)."""
    return math.perm(k, i) * one_minus_product(delta, k - 1, k + i - 2)


def direct_energy(model: OrdModel, g: TestFunction, i: int) -> float:
    """E q^[i](X) (Delta^i g(X))^2 by direct summation; +inf past the overflow guard."""
    _, gv = g.on_window(model, i)
    with np.errstate(over="ignore", invalid="ignore"):
        dk = forward_difference(gv, i)
        terms = model.q_rising(i, model.js) * dk * dk * model.p
    if not np.all(np.isfinite(terms)) or np.any(np.abs(terms) > OVERFLOW_GUARD):
        return INF
    v = fsum(terms)
    return v if v <= OVERFLOW_GUARD else INF


def direct_moment_energy(model: OrdModel, g: TestFunction, i: int) -> float:
    """E q^[i](X) Delta^i g(X) by direct summation."""
    return fsum(rising_difference_terms(model, g, i))


@dataclass(frozen=True)
class EnergyResult:
    direct: float
    series: float
    K: int
    remainder: float


def difference_energy(model: OrdModel, g: TestFunction, i: int, K: Optional[int] = None) -> EnergyResult:
    if not model.in_class_C:
        raise ClassCError("the series form needs a model in class C")
    if i > model.max_order:
        raise MomentBudgetError(f"i={i} exceeds M = {model.max_order}")
    sp = spectrum(model, g, K)
    direct = direct_energy(model, g, i)
    series = math.fsum(energy_weight(model.delta, k, i) * sp.alphas[k] ** 2 for k in range(i, sp.K + 1))
    return EnergyResult(direct, series, sp.K, direct - series)
