"""Benchmark catalogue and the randomized metafunction generator."""

import math

import numpy as np
import pytest
from scipy.stats import chisquare

from entrosa import (ConfigurationError, MetaFunctionSpec, builtin,
                     builtin_names, build_metafunction, draw_metafunction,
                     evaluate_batch)


def test_every_builtin_constructs():
    for name in builtin_names():
        bench = builtin(name)
        assert bench.model.dim >= 1


def test_unknown_name_rejected():
    with pytest.raises(ConfigurationError):
        builtin("rosenbrock")


def test_mono4_analytic_record():
    bench = builtin("mono4", r=2.0)
    assert bench.analytic["h_total"].values == pytest.approx((-2.0, math.log(2) - 2))
    assert bench.analytic["h_total"].source == "closed-form"


def test_mono5_analytic_record():
    bench = builtin("mono5", a=(1.0, 2.0, 3.0))
    half = 0.5 * math.log(2 * math.pi * math.e)
    assert bench.analytic["l"].values == pytest.approx((0.0, math.log(2), math.log(3)))
    assert bench.analytic["h_total"].values == pytest.approx(
        tuple(half + v for v in (0.0, math.log(2), math.log(3))))
    assert bench.analytic["s_total"].values == pytest.approx((1 / 14, 4 / 14, 9 / 14))


def test_flood_inputs_match_reference_table():
    bench = builtin("flood")
    assert bench.var_names == ("Q", "Ks", "Zv", "Zm", "Dd", "Cb", "L", "B")
    widths = bench.analytic["exp_input_entropy"].values
    refs = (2051, 30, 1.65, 1.65, 2, 0.825, 16.5, 8.24)
    for got, ref in zip(widths, refs):
        assert got == pytest.approx(ref, rel=2e-3)
    assert bench.poincare_constants == (3.93e5, 5.77e1, 1.73e-1, 1.73e-1,
                                        4.05e-1, 4.32e-2, 1.73e1, 4.32e0)
    assert dict(bench.entropy_fix) == {3: 55.0, 5: 55.5, 6: 5000.0, 7: 300.0}


def test_gfunction9_cases_carry_groups():
    for case in (1, 2, 3):
        bench = builtin(f"gfunction9_case{case}")
        assert bench.model.dim == 9
        assert bench.groups == ((0, 1, 2), (3, 4, 5), (6, 7, 8))


def test_ratio_chi2_analytic_total_variance_shares():
    vals = builtin("ratio_chi2").analytic["s_total"].values
    assert vals[0] == pytest.approx(0.5449, abs=5e-4)
    assert vals[1] == pytest.approx(0.5461, abs=5e-4)


class TestMetafunction:
    def test_fixed_seed_reproduces_spec_and_outputs(self):
        spec1, model1 = draw_metafunction(np.random.default_rng(99), seed=99)
        spec2, model2 = draw_metafunction(np.random.default_rng(99), seed=99)
        assert spec1 == spec2
        probe = np.random.default_rng(0).random((256, 3))
        np.testing.assert_array_equal(evaluate_batch(model1, probe),
                                      evaluate_batch(model2, probe))

    def test_all_dummy_spec_is_identically_zero(self):
        spec = MetaFunctionSpec(u=(7, 7, 7), v=(1, 2), w=(1, 2, 3),
                                alpha=(1.0, 2.0, 3.0), beta=4.0, gamma=5.0)
        model = build_metafunction(spec)
        probe = np.random.default_rng(1).random((512, 3))
        np.testing.assert_array_equal(evaluate_batch(model, probe), np.zeros(512))

    def test_basis_ids_uniform_over_draws(self):
        rng = np.random.default_rng(2024)
        ids = np.concatenate([draw_metafunction(rng)[0].u for _ in range(1000)])
        counts = np.bincount(ids, minlength=10)[1:]
        assert chisquare(counts).pvalue > 0.01

    def test_interaction_indices_uniform_over_draws(self):
        rng = np.random.default_rng(2025)
        idx = np.concatenate([draw_metafunction(rng)[0].v + draw_metafunction(rng)[0].w
                              for _ in range(600)])
        counts = np.bincount(idx, minlength=4)[1:]
        assert chisquare(counts).pvalue > 0.01

    def test_coefficient_mixture_second_moment(self):
        # equal-weight mixture of variances 0.5 and 5 has variance 2.75
        rng = np.random.default_rng(2026)
        coefs = []
        for _ in range(4000):
            s = draw_metafunction(rng)[0]
            coefs.extend(s.alpha + (s.beta, s.gamma))
        coefs = np.array(coefs)
        assert abs(coefs.mean()) < 0.05
        assert np.var(coefs) == pytest.approx(2.75, rel=0.05)

    def test_spec_serialization_round_trip(self):
        spec, _ = draw_metafunction(np.random.default_rng(5), seed=5)
        again = MetaFunctionSpec.from_dict(spec.to_dict())
        assert again == spec
        probe = np.random.default_rng(6).random((64, 3))
        np.testing.assert_array_equal(
            evaluate_batch(build_metafunction(spec), probe),
            evaluate_batch(build_metafunction(again), probe))

    def test_bad_spec_rejected(self):
        with pytest.raises(ConfigurationError):
            MetaFunctionSpec(u=(0, 1, 2), v=(1, 1), w=(1, 1, 1),
                             alpha=(0.0, 0.0, 0.0), beta=0.0, gamma=0.0)
        with pytest.raises(ConfigurationError):
            MetaFunctionSpec(u=(1, 1, 1), v=(4, 1), w=(1, 1, 1),
                             alpha=(0.0, 0.0, 0.0), beta=0.0, gamma=0.0)

    def test_interaction_term_wiring(self):
        # u=(1,7,7): only x1 has a live basis; v=(1,1) squares it
        spec = MetaFunctionSpec(u=(1, 7, 7), v=(1, 1), w=(3, 3, 3),
                                alpha=(1.0, 1.0, 1.0), beta=2.0, gamma=5.0)
        model = build_metafunction(spec)
        probe = np.random.default_rng(7).random((128, 3))
        expected = probe[:, 0] + 2.0 * probe[:, 0] ** 2  # gamma term is zero
        np.testing.assert_allclose(evaluate_batch(model, probe), expected, rtol=1e-12)
