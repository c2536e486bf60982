import json
import math

import numpy as np
import pytest

from cumord.errors import ClassCError, InputError, MomentBudgetError, WindowTooSmallError
from cumord.family import OrdModel
from cumord.fourier import (
    builtin,
    builtin_suite,
    default_K,
    difference_alphas,
    difference_energy,
    direct_energy,
    energy_weight,
    fourier_coefficient,
    from_expression,
    from_table,
    load_table,
    resolve,
    spectrum,
)


class TestTestFunctions:
    def test_builtins(self, registry):
        m = registry["poisson"]
        j = np.arange(5)
        np.testing.assert_allclose(builtin("x3", m)(j), j**3)
        np.testing.assert_allclose(builtin("abs", m)(j), np.abs(j - 2.0))
        np.testing.assert_allclose(builtin("indicator", m)(j), (j >= 2).astype(float))
        np.testing.assert_allclose(builtin("exp", m, c=2.0)(j), np.exp(j / 2.0))

    def test_exp_refused_on_polynomial_tail(self, registry):
        with pytest.raises(InputError):
            builtin("exp", registry["inverse_polya"])
        names = [g.name for g in builtin_suite(registry["inverse_polya"])]
        assert "exp" not in names and "abs" in names

    def test_exp_scale_on_geometric_tail(self, registry):
        # exp(x/c) needs e^{1/c} times the tail ratio below 1
        m = registry["negbin"]
        c = builtin("exp", m).params["c"]
        assert math.exp(1 / c) * (m.q.beta / (m.q.beta + 1)) < 1

    def test_unknown_builtin(self, registry):
        with pytest.raises(InputError):
            builtin("sin", registry["poisson"])

    def test_tables(self, tmp_path, registry):
        m = registry["binomial"]
        csv_path = tmp_path / "g.csv"
        csv_path.write_text("j,value\n" + "\n".join(f"{j},{j * j}" for j in range(0, 12)) + "\n")
        g = load_table(csv_path)
        np.testing.assert_allclose(g(np.arange(5)), np.arange(5) ** 2)
        json_path = tmp_path / "g.json"
        json_path.write_text(json.dumps({str(j): j * j for j in range(12)}))
        assert resolve(str(json_path), m)(np.array([3]))[0] == 9.0
        short = from_table({0: 1.0, 1: 2.0})
        with pytest.raises(WindowTooSmallError):
            fourier_coefficient(m, short, 1)

    def test_resolve(self, registry):
        m = registry["poisson"]
        assert resolve("x2", m).degree == 2
        assert resolve("x^2 + 1", m).source == "expression"


class TestCoefficients:
    def test_routes_agree(self, registry):
        for name, m in registry.items():
            for g in builtin_suite(m):
                sp = spectrum(m, g, min(6, default_K(m)))
                assert sp.max_discrepancy < 1e-8 * max(1.0, math.sqrt(sp.var_direct)), (name, g.name)

    def test_polynomial_spectrum_terminates(self, registry):
        for name, m in registry.items():
            for g in (builtin("x", m), builtin("x2", m)):
                sp = spectrum(m, g)
                tail = np.abs(sp.alphas[g.degree + 1 :])
                assert np.all(tail < 1e-9 * max(1.0, math.sqrt(sp.var_direct))), (name, g.name)

    def test_parseval_for_polynomials(self, class_c):
        for name, m in class_c.items():
            g = builtin("x3", m)
            sp = spectrum(m, g)
            assert sp.partial_parseval[min(3, sp.K) - 1] == pytest.approx(sp.var_direct, rel=1e-8), name

    def test_identity_linear(self, registry):
        # alpha_1 of x is sqrt(Var X)
        for name, m in registry.items():
            a1 = fourier_coefficient(m, builtin("x", m), 1)
            assert a1 == pytest.approx(math.sqrt(np.sum((m.js - m.mu) ** 2 * m.p)), rel=1e-9), name

    def test_difference_alphas_extend_spectrum(self, class_c):
        for name, m in class_c.items():
            g = builtin("abs", m)
            sp = spectrum(m, g)
            np.testing.assert_allclose(difference_alphas(m, g, sp.K), sp.alphas, atol=1e-12, err_msg=name)

    def test_long_series_reaches_variance(self, registry):
        # exact differencing keeps slowly decaying spectra accurate far past k = 30
        for name in ("poisson", "negbin"):
            m = registry[name]
            for gname in ("abs", "indicator"):
                g = builtin(gname, m)
                a = difference_alphas(m, g, 200)
                assert a.size == 201
                var = spectrum(m, g).var_direct
                assert math.fsum(a[1:] ** 2) == pytest.approx(var, rel=1e-10), (name, gname)

    def test_series_stops_when_inaccurate(self, registry):
        m = registry["negbin"]
        a = difference_alphas(m, builtin("exp", m), 400)
        assert 12 < a.size < 401
        assert abs(a[-1]) < 1e-9

    def test_budget_and_route_checks(self, registry):
        with pytest.raises(MomentBudgetError):
            fourier_coefficient(registry["binomial"], builtin("x", registry["binomial"]), 5)
        with pytest.raises(InputError):
            fourier_coefficient(registry["poisson"], builtin("x", registry["poisson"]), 1, route="other")

    def test_csv(self, registry):
        sp = spectrum(registry["binomial"], builtin("x2", registry["binomial"]))
        rows = sp.to_csv().splitlines()
        assert rows[0] == "k,alpha_k,alpha_k_direct,discrepancy" and len(rows) == 6


class TestEnergy:
    def test_energy_identity(self, class_c):
        for name, m in class_c.items():
            for gname in ("x2", "exp"):
                g = builtin(gname, m)
                for i in range(int(min(3, m.max_order)) + 1):
                    K = int(min(m.max_order, 60))
                    a = difference_alphas(m, g, K)
                    series = math.fsum(energy_weight(m.delta, k, i) * a[k] ** 2 for k in range(i, a.size))
                    assert series == pytest.approx(direct_energy(m, g, i), rel=1e-8), (name, gname, i)

    def test_difference_energy_result(self, registry):
        r = difference_energy(registry["binomial"], builtin("x3", registry["binomial"]), 1)
        assert abs(r.remainder) < 1e-9 * r.direct

    def test_refused_outside_class_c(self, registry):
        m = registry["discrete_student"]
        with pytest.raises(ClassCError):
            difference_energy(m, builtin("x", m), 1)

    def test_divergent_energy_is_infinite(self):
        m = OrdModel.from_type("poisson", lam=2.0)
        assert direct_energy(m, from_expression("exp(x^2)"), 1) == math.inf
