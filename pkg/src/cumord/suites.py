"""Registry of desk-scale models and the property suites run by `verify`."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Optional

import numpy as np

from .bounds import bound_report
from .core import INF, factorial_power, fsum
from .family import (
    OrdModel,
    canonical_pair,
    check_admissible,
    classify,
    derive_distribution,
)
from .fourier import (
    builtin_suite,
    default_K,
    direct_energy,
    energy_weight,
    fourier_coefficient,
    norm_sq,
    spectrum,
)
from .moments import (
    ascending_factorial_moments,
    derived_variance,
    descending_factorial_moments,
    norm_constant_A,
    variance,
)
from .oracle import brute_expectation, brute_factorial_moment, brute_variance, gram_schmidt_basis
from .polynomials import (
    orthonormal_basis,
    rodrigues_polynomial,
    rodrigues_raw,
    transfer_constants,
    verify_difference_transfer,
    verify_extended_identity,
    verify_inversion_formula,
)

REGISTRY: dict[str, tuple[str, dict]] = {
    "poisson": ("PoissonType", {"lam": 2.0}),
    "binomial": ("BinomialType", {"N": 4, "p": 0.5}),
    "negbin": ("NegativeBinomialType", {"r": 1.5, "p": 0.4}),
    "neghypergeometric": ("NegativeHypergeometricType", {"N": 6, "r": 2.0, "s": 3.0}),
    "hypergeometric": ("HypergeometricType", {"N": 4, "r": 5.0, "s": 6.0}),
    "inverse_polya": ("InversePolyaType", {"rho": 26.0, "r": 2.0, "s": 3.0}),
    "discrete_student": ("DiscreteStudentType", {"z1": 1 + 1j, "z2": 1 - 1j, "w1": 11 + 1j, "w2": 11 - 1j}),
}

SUITES = (
    "classification",
    "pmf",
    "moments",
    "orthogonality",
    "oracle",
    "transfer",
    "extended",
    "inversion",
    "fourier",
    "bounds",
)


def registry_models() -> dict[str, OrdModel]:
    return {name: OrdModel.from_type(tag, **params) for name, (tag, params) in REGISTRY.items()}


@dataclass(frozen=True)
class Check:
    suite: str
    model: str
    name: str
    value: float
    tol: float
    passed: bool
    note: str = ""


def _chk(suite, model, name, value, tol, note=""):
    ok = bool(np.isfinite(value) and value <= tol)
    return Check(suite, model, name, float(value), tol, ok, note)


def _rel(a, b, floor=1.0):
    return abs(a - b) / max(floor, abs(b))


# ---------------------------------------------------------------------------
# individual suites; each yields Check records


def suite_classification(name: str, model: OrdModel) -> Iterable[Check]:
    kind = classify(model.mu, model.q)
    if name in REGISTRY:
        tag, params = REGISTRY[name]
        yield _chk("classification", name, "tag", 0.0 if kind.tag == tag else 1.0, 0.5)
        for key, want in params.items():
            got = kind.params[key]
            yield _chk("classification", name, f"param {key}", abs(complex(got) - complex(want)) / max(1.0, abs(complex(want))), 1e-9)
        mu, q = canonical_pair(tag, **params)
        yield _chk("classification", name, "canonical mu", _rel(mu, model.mu), 1e-12)
    rep = check_admissible(model.mu, model.q)
    yield _chk("classification", name, "admissible", 0.0 if rep.admissible else 1.0, 0.5)


def suite_pmf(name: str, model: OrdModel) -> Iterable[Check]:
    pmf = model.pmf
    js, p = model.js, model.p
    yield _chk("pmf", name, "normalization", abs(pmf.total() - 1.0), 2 * pmf.tail_tol)
    # cumulative identity, left sums include the lower tail estimate
    left = np.cumsum((model.mu - js) * p)
    if pmf.window.lo_truncated:
        # bound on sum_{k<lo} (mu-k) p(k) is q(lo-1) p(lo-1) = q_(lo) p(lo)
        left = left + model.q_lower_at(js[0]) * p[0]
    rhs = model.q_at(js) * p
    err = np.abs(left - rhs) / np.maximum(1.0, np.abs(rhs))
    yield _chk("pmf", name, "cumulative identity", float(np.max(err)), 1e-9)
    if js.size > 2:
        ratio = p[1:] / p[:-1]
        want = model.q_at(js[:-1]) / model.q_lower_at(js[1:])
        ok = (p[1:] > 1e-290) & (p[:-1] > 1e-290)
        yield _chk("pmf", name, "ratio recurrence", float(np.max(np.abs(ratio[ok] / want[ok] - 1.0))), 1e-10)


def suite_moments(name: str, model: OrdModel) -> Iterable[Check]:
    R = 6
    if not model.moment_budget.allows(R):
        return
    d = descending_factorial_moments(model, R)
    a = ascending_factorial_moments(model, R)
    for r in range(R + 1):
        # relative to E|falling factorial|, which is the scale when the moment vanishes
        fl = brute_expectation(model, lambda j, r=r: np.abs(factorial_power(j.astype(float), r, "descending"))).value
        rs = brute_expectation(model, lambda j, r=r: np.abs(factorial_power(j.astype(float), r, "ascending"))).value
        yield _chk("moments", name, f"descending r={r}", abs(d[r] - brute_factorial_moment(model, r)) / (fl or 1.0), 1e-9)
        yield _chk("moments", name, f"ascending r={r}", abs(a[r] - brute_factorial_moment(model, r, "ascending")) / rs, 1e-9)
    var = brute_variance(model, lambda j: j.astype(float)).value
    yield _chk("moments", name, "variance", _rel(variance(model), var), 1e-10)
    for k in range(int(min(model.max_order, 4)) + 1):
        if not model.moment_budget.allows(2 * k):
            break
        direct = brute_expectation(model, lambda j, k=k: model.q_rising(k, j)).value
        yield _chk("moments", name, f"A_{k}", _rel(norm_constant_A(model, k), direct, 1e-300), 1e-9)
    for i in range(int(min(model.max_order, 3)) + 1):
        if not model.moment_budget.allows(2 * i + 3):
            break
        if i + 1 <= model.max_order:
            xi = derive_distribution(model, i)
            vi = derived_variance(model, i)
            yield _chk("moments", name, f"Var X_{i}", _rel(vi, variance(xi)), 1e-10)
            tele = norm_constant_A(model, i + 1) / norm_constant_A(model, i)
            yield _chk("moments", name, f"telescoping j={i}", _rel((1 - 2 * i * model.delta) * vi, tele), 1e-10)


def _n_basis(model: OrdModel, cap: int = 6) -> int:
    n = int(min(cap, model.max_order))
    while n > 0 and not model.moment_budget.allows(2 * n):
        n -= 1
    return n


def suite_orthogonality(name: str, model: OrdModel) -> Iterable[Check]:
    n = _n_basis(model)
    basis = orthonormal_basis(model, n)
    p = model.p
    G = np.array([[fsum(a.standardized_values * b.standardized_values * p) for b in basis] for a in basis])
    yield _chk("orthogonality", name, f"gram off-diagonal n={n}", float(np.max(np.abs(G - np.diag(np.diag(G))))), 1e-8)
    yield _chk("orthogonality", name, "gram diagonal", float(np.max(np.abs(np.diag(G) - 1.0))), 1e-8)
    for poly in basis:
        e = fsum(poly.values**2 * p)
        yield _chk("orthogonality", name, f"E P_{poly.k}^2", _rel(e, poly.norm_sq, 1e-300), 1e-8)
        yield _chk("orthogonality", name, f"lead c_{poly.k}", _rel(poly.coeffs[-1], poly.lead, 1e-300), 1e-8)
        # the literal sum cancels in the tails; judge it against its own term magnitude
        raw = rodrigues_raw(model, poly.k)
        mag = rodrigues_raw(model, poly.k, magnitude=True)
        ok = np.isfinite(raw) & (mag > 0)
        dev = float(np.max(np.abs(raw[ok] - poly.values[ok]) / mag[ok]))
        yield _chk("orthogonality", name, f"literal Rodrigues sum P_{poly.k}", dev, 1e-12)


def suite_oracle(name: str, model: OrdModel) -> Iterable[Check]:
    n = _n_basis(model, 4)
    gs = gram_schmidt_basis(model, n)
    basis = orthonormal_basis(model, n)
    for k in range(n + 1):
        mine = basis[k].standardized_coeffs
        err = np.max(np.abs(gs[k] - mine)) / max(1e-300, np.max(np.abs(mine)))
        yield _chk("oracle", name, f"Gram-Schmidt phi_{k}", float(err), 1e-7)


def suite_transfer(name: str, model: OrdModel) -> Iterable[Check]:
    n = int(min(4, model.max_order))
    while n > 0 and not model.moment_budget.allows(2 * n + 1):
        n -= 1
    rep = verify_difference_transfer(model, n)
    for (m, k), v in rep.entries:
        yield _chk("transfer", name, f"Delta^{m} phi_{k}", v, 1e-8)
    tc = transfer_constants(model, n) if n >= 1 else None
    if tc is not None:
        a1 = norm_constant_A(model, 1)
        for k in range(1, n + 1):
            want = math.sqrt(k * (1 - (k - 1) * model.delta) / a1)
            yield _chk("transfer", name, f"v^(1)_{k - 1}", _rel(tc.get(1, k), want), 1e-12)


def suite_extended(name: str, model: OrdModel) -> Iterable[Check]:
    for k in range(1, int(min(3, model.max_order)) + 1):
        if not model.moment_budget.allows(2 * k):
            break
        yield _chk("extended", name, f"k={k}", verify_extended_identity(model, k).max_discrepancy, 1e-9)


def suite_inversion(name: str, model: OrdModel) -> Iterable[Check]:
    for k in range(1, int(min(3, model.max_order)) + 1):
        if not model.moment_budget.allows(2 * k):
            break
        yield _chk("inversion", name, f"k={k}", verify_inversion_formula(model, k).max_discrepancy, 1e-9)


def suite_fourier(name: str, model: OrdModel) -> Iterable[Check]:
    for g in builtin_suite(model):
        K = default_K(model)
        sp = spectrum(model, g, K)
        for k in range(K + 1):
            # scale by E|phi_k g|, the conditioning of the direct sum
            phi = rodrigues_polynomial(model, k).standardized_values
            scale = max(1.0, fsum(np.abs(phi * g(model.js)) * model.p))
            yield _chk("fourier", name, f"covariance g={g.name} k={k}", abs(sp.alphas[k] - sp.alphas_direct[k]) / scale, 1e-8)
        if model.in_class_C and g.degree is not None:
            pp = math.fsum(sp.alphas[k] ** 2 for k in range(1, min(g.degree, K) + 1))
            yield _chk("fourier", name, f"Parseval g={g.name}", _rel(pp, sp.var_direct, 1e-300), 1e-8)
        # transfer of coefficients to the derived laws
        top = int(min(4, model.max_order, K))
        for i in range(1, top + 1):
            if not model.moment_budget.allows(2 * top + 1):
                break
            xi = derive_distribution(model, i)
            tc = transfer_constants(model, top)
            _, gv = g.on_window(xi, i)
            dg = np.diff(gv, n=i)
            for k in range(i, top + 1):
                phi = rodrigues_polynomial(xi, k - i).standardized_values
                lhs = fsum(phi * dg * xi.p)
                rhs = tc.get(i, k) * sp.alphas[k]
                yield _chk("fourier", name, f"coefficient transfer g={g.name} i={i} k={k}", abs(lhs - rhs) / (1 + abs(rhs)), 1e-8)
        if model.in_class_C:
            energies = []
            for i in range(int(min(3, model.max_order)) + 1):
                direct = direct_energy(model, g, i)
                energies.append(direct)
                if sp.remainder_estimate < 1e-10 or sp.K == model.max_order:
                    series = math.fsum(energy_weight(model.delta, k, i) * sp.alphas[k] ** 2 for k in range(i, sp.K + 1))
                    yield _chk("fourier", name, f"energy g={g.name} i={i}", _rel(series, direct), 1e-8)
            finite = [e != INF for e in energies]
            chain = all(finite[: i + 1] for i, f in enumerate(finite) if f)
            yield _chk("fourier", name, f"L2 chain g={g.name}", 0.0 if chain else 1.0, 0.5)


def suite_bounds(name: str, model: OrdModel) -> Iterable[Check]:
    if not model.in_class_C:
        yield Check("bounds", name, "class C gate", 0.0, 0.0, True, "skipped: outside class C")
        return
    M = model.max_order
    lim = int(min(3, M))
    for g in builtin_suite(model):
        rep = bound_report(model, g, lim, lim)
        note = f"{len(rep.cap_shortfalls)} displayed-u_tau caps below R" if rep.cap_shortfalls else ""
        yield Check("bounds", name, f"report g={g.name}", float(len(rep.failures)), 0.0, rep.passed, "; ".join(rep.failures[:3]) or note)


SUITE_FUNCS: dict[str, Callable] = {
    "classification": suite_classification,
    "pmf": suite_pmf,
    "moments": suite_moments,
    "orthogonality": suite_orthogonality,
    "oracle": suite_oracle,
    "transfer": suite_transfer,
    "extended": suite_extended,
    "inversion": suite_inversion,
    "fourier": suite_fourier,
    "bounds": suite_bounds,
}


@dataclass
class SuiteRun:
    checks: list[Check]
    seconds: float

    @property
    def failures(self) -> list[Check]:
        return [c for c in self.checks if not c.passed]


def run_suites(
    models: Optional[dict[str, OrdModel]] = None, only: Optional[Iterable[str]] = None
) -> SuiteRun:
    t0 = time.perf_counter()
    models = registry_models() if models is None else models
    names = list(only) if only else list(SUITES)
    checks: list[Check] = []
    for mname, model in models.items():
        for s in names:
            try:
                checks.extend(SUITE_FUNCS[s](mname, model))
            except Exception as e:  # a crash inside a suite is a failure, not an abort
                checks.append(Check(s, mname, "exception", math.nan, 0.0, False, f"{type(e).__name__}: {e}"))
    return SuiteRun(checks, time.perf_counter() - t0)


__all__ = ["REGISTRY", "SUITES", "Check", "SuiteRun", "registry_models", "run_suites"]
