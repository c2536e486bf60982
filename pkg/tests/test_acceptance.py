"""One test per acceptance criterion; each prints and records a PASS/FAIL line."""

import itertools
import math
import time

import numpy as np
import pytest
from hypothesis import given, settings

from conftest import ACCEPTANCE_LINES
from test_family import TYPE_STRATEGIES, _same, _same_pairs

from cumord.bounds import bound_report, comparison_factor, variance_bound
from cumord.core import INF, Quadratic, fsum
from cumord.family import OrdModel, canonical_pair, check_admissible, classify
from cumord.fourier import builtin, builtin_suite
from cumord.moments import ascending_factorial_moments, descending_factorial_moments, norm_constant_A
from cumord.oracle import brute_expectation, brute_factorial_moment, brute_variance
from cumord.core import factorial_power
from cumord.polynomials import (
    lead_coefficient,
    orthonormal_basis,
    verify_difference_transfer,
    verify_extended_identity,
    verify_inversion_formula,
)
from cumord.suites import run_suites

ORTHO_MODELS = ("poisson", "binomial", "negbin", "neghypergeometric", "hypergeometric")


def record(label: str, ok: bool, detail: str) -> None:
    line = f"criterion {label}: {'PASS' if ok else 'FAIL'} ({detail})"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def test_criterion_1_poisson_worked_example():
    t0 = time.perf_counter()
    m = OrdModel.from_type("poisson", lam=2.0)
    g = builtin("x2", m)
    rep = bound_report(m, g, 1, 1)
    secs = time.perf_counter() - t0
    var = brute_variance(m, g).value
    got = (var, rep.S(1, 0), rep.S(0, 1), rep.S(1, 1))
    want = (58.0, 50.0, 66.0, 58.0)
    err = max(abs(a - b) for a, b in zip(got, want))
    ok = err <= 1e-9 and rep.cells[(1, 1)].equality and secs < 1.0
    record("1", ok, f"Var, S10, S01, S11 = {', '.join(f'{x:.12g}' for x in got)}; max err {err:.1e}; {secs:.2f} s")


def test_criterion_2_orthogonality(registry):
    t0 = time.perf_counter()
    worst_off = worst_diag = worst_norm = 0.0
    for name in ORTHO_MODELS:
        m = registry[name]
        n = int(min(6, m.max_order))
        basis = orthonormal_basis(m, n)
        G = np.array([[fsum(a.standardized_values * b.standardized_values * m.p) for b in basis] for a in basis])
        worst_off = max(worst_off, float(np.max(np.abs(G - np.diag(np.diag(G))))))
        worst_diag = max(worst_diag, float(np.max(np.abs(np.diag(G) - 1.0))))
        for poly in basis:
            # E P_k^2 = k! c_k(delta) A_k, the norm carried by the polynomial record
            want = math.factorial(poly.k) * lead_coefficient(m.delta, poly.k) * norm_constant_A(m, poly.k)
            got = fsum(poly.values**2 * m.p)
            worst_norm = max(worst_norm, abs(got - want) / want)
    secs = time.perf_counter() - t0
    ok = worst_off < 1e-8 and worst_diag < 1e-8 and worst_norm < 1e-8 and secs < 10.0
    record("2", ok, f"off-diag {worst_off:.1e}, diag {worst_diag:.1e}, E P_k^2 rel {worst_norm:.1e}; {secs:.2f} s")


def test_criterion_3_difference_transfer(registry):
    worst, count = 0.0, 0
    for name, m in registry.items():
        n = int(min(4, m.max_order))
        while n > 0 and not m.moment_budget.allows(2 * n + 1):
            n -= 1
        rep = verify_difference_transfer(m, n)
        for _, v in rep.entries:
            worst, count = max(worst, v), count + 1
    record("3", worst < 1e-8 and count > 0, f"{count} (m,k) pairs, max pointwise gap {worst:.1e}")


def test_criterion_4_extended_and_inversion(registry):
    worst, count = 0.0, 0
    for name, m in registry.items():
        for k in range(1, int(min(3, m.max_order)) + 1):
            if not m.moment_budget.allows(2 * k):
                break
            for rep in (verify_extended_identity(m, k), verify_inversion_formula(m, k)):
                worst, count = max(worst, rep.max_discrepancy), count + 1
    record("4", worst < 1e-9 and count > 0, f"{count} identity checks, max relative gap {worst:.1e}")


def test_criterion_5_moment_recurrences(registry):
    worst, count = 0.0, 0
    for name, m in registry.items():
        R = 6
        while R > 0 and not m.moment_budget.allows(R):
            R -= 1
        d = descending_factorial_moments(m, R)
        a = ascending_factorial_moments(m, R)
        for r in range(R + 1):
            for got, mode in ((d[r], "descending"), (a[r], "ascending")):
                ref = brute_factorial_moment(m, r, mode)
                # relative to E|factorial power|, the scale when the moment itself vanishes
                scale = brute_expectation(m, lambda j: np.abs(factorial_power(j.astype(float), r, mode))).value
                worst, count = max(worst, abs(got - ref) / (scale or 1.0)), count + 1
    pois = descending_factorial_moments(OrdModel.from_type("poisson", lam=2.0), 6)
    perr = max(abs(pois[r] - 2.0**r) / 2.0**r for r in range(7))
    ok = worst < 1e-9 and perr < 1e-10
    record("5", ok, f"{count} moments, max relative gap {worst:.1e}; Poisson lambda^r gap {perr:.1e}")


def test_criterion_6_residual_two_routes(class_c):
    worst, cells = 0.0, 0
    for name, m in class_c.items():
        for g in builtin_suite(m):
            lim = int(min(3, m.max_order))
            rep = bound_report(m, g, lim, lim)
            scale = max(1.0, rep.var_direct)
            for c in rep.cells.values():
                worst, cells = max(worst, abs(c.residual_series - c.residual) / scale), cells + 1
    record("6", worst <= 1e-8 and cells > 0, f"{cells} cells, max |R_series - R| / max(1,Var) = {worst:.1e}")


def _reports(class_c):
    for name, m in class_c.items():
        lim = int(min(3, m.max_order))
        for g in builtin_suite(m):
            yield name, m, g, bound_report(m, g, lim, lim)


def test_criterion_7_ordering_zeta_and_corrected_caps(class_c):
    problems, triples, caps = [], 0, 0
    for name, m, g, rep in _reports(class_c):
        var = rep.var_direct
        for (a, n), c in rep.cells.items():
            sign = 1 if n % 2 else -1
            if sign * (c.S - var) < -1e-9:
                problems.append(f"sandwich {name} {g.name} ({a},{n})")
            for tau, cap in c.corrected_caps.items():
                caps += 1
                if c.residual > cap + 1e-9:
                    problems.append(f"corrected cap {name} {g.name} ({a},{n}) tau={tau}")
        for (m1, n), (m2, n2) in itertools.permutations(rep.cells, 2):
            if n != n2 or m1 >= m2 or n < 1:
                continue
            z = comparison_factor(m, m1, m2, n)
            triples += 1
            g1, g2 = abs(var - rep.S(m1, n)), abs(var - rep.S(m2, n))
            if z == INF:
                if g2 > 1e-9:
                    problems.append(f"zeta=inf {name} {g.name} ({m1},{m2},{n})")
            elif g1 < z * g2 - 1e-9:
                problems.append(f"zeta {name} {g.name} ({m1},{m2},{n})")
    detail = f"{triples} zeta triples, {caps} corrected caps; " + ("; ".join(problems[:3]) or "no violations")
    record("7 (ordering, zeta, corrected caps)", not problems, detail)


@pytest.mark.xfail(strict=True, reason="the displayed u_tau caps fall below R for non-polynomial g; see decisions ledger")
def test_criterion_7_displayed_caps(class_c):
    short = []
    for name, m, g, rep in _reports(class_c):
        short += [(name, g.name) + s[:3] for s in rep.cap_shortfalls]
    detail = f"{len(short)} (model, g, m, n, tau) cases with cap < R, e.g. {short[:2]}" if short else "all caps dominate"
    record("7 (displayed u_tau caps)", not short, detail)


def test_criterion_8_classification():
    notes = []
    rep = check_admissible(1.0, Quadratic(1, 0, 1))
    if not (rep.admissible and (rep.alpha, rep.omega) == (0, INF)):
        notes.append("(1;1,0,1) support")
    rep = check_admissible(0.0, Quadratic(1, 0, 1))
    if not (rep.admissible and (rep.alpha, rep.omega) == (-INF, INF)):
        notes.append("(0;1,0,1) support")
    # every type round-trips its parameters
    for tag, strategy in sorted(TYPE_STRATEGIES.items()):

        @settings(max_examples=30, deadline=None, database=None)
        @given(strategy)
        def check(params):
            kind = classify(*canonical_pair(tag, **params))
            assert kind.tag == tag
            pairs = {"InversePolyaType": [("r", "s")], "DiscreteStudentType": [("z1", "z2"), ("w1", "w2")]}.get(tag, [])
            paired = {k for p in pairs for k in p}
            for key, want in params.items():
                if key not in paired:
                    assert _same(kind.params[key], want), key
            for p in pairs:
                _same_pairs(kind.params, params, p)

        try:
            check()
        except AssertionError as e:
            notes.append(f"{tag} round trip: {e}")
    # the three fixtures
    rep = check_admissible(0.0, Quadratic(0, 0, -1))
    if rep.admissible or rep.failure_reason != "q<0 on S°":
        notes.append("q<0 fixture")
    pm = OrdModel.build(1.0, Quadratic(0, -1, 1))
    if pm.kind.tag != "PointMass" or list(pm.js) != [1]:
        notes.append("point mass fixture")
    rep = check_admissible(0.5, Quadratic(1, -1, 0))
    if rep.admissible or rep.failure_reason != "q=0 on S°":
        notes.append("q=0 fixture")
    record("8 (supports, round trips, fixtures)", not notes, "; ".join(notes) or f"{len(TYPE_STRATEGIES)} types, 3 fixtures")


@pytest.mark.xfail(strict=True, reason="the normalizing constant of CO(1;1,0,1) is 2 pi / sinh(pi); see decisions ledger")
def test_criterion_8_worked_constant():
    m = OrdModel.build(1.0, Quadratic(1, 0, 1))
    C = m.pmf.norm_constant
    want = math.pi / math.sinh(math.pi)
    record("8 (C = pi/sinh(pi))", abs(C - want) < 1e-9, f"C = {C:.12g} = 2 pi/sinh(pi); pi/sinh(pi) = {want:.12g} is p(1)")


def test_criterion_9_verify():
    run = run_suites()
    ok = run.seconds < 60.0 and not run.failures
    record("9", ok, f"{len(run.checks)} checks, {len(run.failures)} failures, {run.seconds:.1f} s")
