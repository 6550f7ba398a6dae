"""Fading trace statistics, cascaded channels, and model contracts."""

import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relaysim.channel import (
    CascadedStats,
    ChannelTrace,
    FadingSpec,
    ar1_step,
    cascade,
    double_rayleigh_envelope_pdf,
    generate_trace,
    jakes_autocorr,
    split_stream,
)
from relaysim.specialfn import bessel_j0, bessel_k0

from oracles import chi_square_gof, double_rayleigh_cdf, rayleigh_cdf

SPEC = FadingSpec(variance=1.0, normalized_doppler=0.01)


class TestFadingSpec:
    def test_rejects_bad_variance(self):
        with pytest.raises(ValueError):
            FadingSpec(variance=0.0, normalized_doppler=0.01)

    @pytest.mark.parametrize("f", [-0.01, 0.5, 0.7])
    def test_rejects_bad_doppler(self, f):
        with pytest.raises(ValueError):
            FadingSpec(variance=1.0, normalized_doppler=f)

    def test_rejects_small_sinusoid_count(self):
        with pytest.raises(ValueError):
            FadingSpec(variance=1.0, normalized_doppler=0.01,
                       sinusoid_count=7)

    def test_alpha_is_j0(self):
        spec = FadingSpec(variance=1.0, normalized_doppler=0.02,
                          lag_multiplier=3)
        assert spec.alpha == bessel_j0(2 * math.pi * 0.02 * 3)


class TestJakesAutocorr:
    def test_matches_bessel(self):
        spec = FadingSpec(variance=2.0, normalized_doppler=0.03)
        for lag in [0, 1, 5, 17]:
            want = 2.0 * bessel_j0(2 * math.pi * 0.03 * lag)
            assert jakes_autocorr(lag, spec) == pytest.approx(want, rel=1e-14)

    def test_lag_multiplier_scales_argument(self):
        fast = FadingSpec(variance=1.0, normalized_doppler=0.005,
                          lag_multiplier=4)
        slow = FadingSpec(variance=1.0, normalized_doppler=0.02)
        assert jakes_autocorr(3, fast) == pytest.approx(
            jakes_autocorr(3, slow), rel=1e-14)

    def test_rejects_negative_lag(self):
        with pytest.raises(ValueError):
            jakes_autocorr(-1, SPEC)


class TestGenerateTrace:
    def test_rejects_zero_length(self):
        with pytest.raises(ValueError):
            generate_trace(SPEC, 0, seed=1)

    def test_reproducible(self):
        a = generate_trace(SPEC, 500, seed=42).samples
        b = generate_trace(SPEC, 500, seed=42).samples
        assert np.array_equal(a, b)

    def test_seed_changes_trace(self):
        a = generate_trace(SPEC, 100, seed=1).samples
        b = generate_trace(SPEC, 100, seed=2).samples
        assert not np.allclose(a, b)

    def test_chunks_concatenate(self):
        whole = generate_trace(SPEC, 100, seed=9).samples
        parts = np.concatenate([
            generate_trace(SPEC, 60, seed=9, start=0).samples,
            generate_trace(SPEC, 40, seed=9, start=60).samples,
        ])
        assert np.array_equal(whole, parts)

    def test_sample_variance_converges(self):
        spec = FadingSpec(variance=2.5, normalized_doppler=0.05)
        h = generate_trace(spec, 200_000, seed=3).samples
        assert np.mean(np.abs(h) ** 2) == pytest.approx(2.5, rel=0.02)

    def test_variance_is_a_pure_scale(self):
        unit = generate_trace(SPEC, 64, seed=5).samples
        spec4 = FadingSpec(variance=4.0, normalized_doppler=0.01)
        assert np.allclose(generate_trace(spec4, 64, seed=5).samples,
                           2.0 * unit, rtol=1e-14)

    def test_empirical_autocorr_matches_jakes(self):
        spec = FadingSpec(variance=1.0, normalized_doppler=0.02)
        acc = 0.0
        n_seeds = 40
        for s in range(n_seeds):
            h = generate_trace(spec, 3000, seed=100 + s).samples
            acc += np.mean(np.conj(h[:-5]) * h[5:]).real
        assert acc / n_seeds == pytest.approx(jakes_autocorr(5, spec),
                                              abs=0.01)

    def test_envelope_is_rayleigh(self):
        # one sample per trace: independent draws of the marginal law
        spec = FadingSpec(variance=1.0, normalized_doppler=0.01,
                          sinusoid_count=64)
        env = np.abs([generate_trace(spec, 1, seed=s).samples[0]
                      for s in range(20_000)])
        stat, crit, _ = chi_square_gof(env, lambda r: rayleigh_cdf(r, 1.0))
        assert stat < crit, f"chi-square {stat:.1f} >= {crit:.1f}"


class TestCascade:
    def test_length_mismatch_rejected(self):
        h1 = generate_trace(SPEC, 10, seed=1)
        h2 = generate_trace(SPEC, 11, seed=2)
        with pytest.raises(ValueError):
            cascade(h1, h2)

    def test_samples_are_products(self):
        h1 = generate_trace(SPEC, 50, seed=1)
        h2 = generate_trace(SPEC, 50, seed=2)
        assert np.array_equal(cascade(h1, h2).samples,
                              h1.samples * h2.samples)

    def test_stats_factorize(self):
        s1 = FadingSpec(variance=1.0, normalized_doppler=0.01)
        s2 = FadingSpec(variance=2.0, normalized_doppler=0.02)
        c = cascade(generate_trace(s1, 10, seed=1),
                    generate_trace(s2, 10, seed=2))
        assert c.stats.alpha_equiv == pytest.approx(s1.alpha * s2.alpha,
                                                    rel=1e-14)
        assert c.stats.variance == pytest.approx(2.0, rel=1e-14)

    def test_envelope_is_double_rayleigh(self):
        spec = FadingSpec(variance=1.0, normalized_doppler=0.01,
                          sinusoid_count=64)
        env = np.abs([
            (generate_trace(spec, 1, seed=2 * s).samples
             * generate_trace(spec, 1, seed=2 * s + 1).samples)[0]
            for s in range(20_000)
        ])
        stat, crit, _ = chi_square_gof(env, double_rayleigh_cdf)
        assert stat < crit, f"chi-square {stat:.1f} >= {crit:.1f}"


class TestEnvelopePdf:
    def test_zero_at_origin(self):
        assert double_rayleigh_envelope_pdf(0.0, 1.0, 1.0) == 0.0

    def test_rejects_negative_envelope(self):
        with pytest.raises(ValueError):
            double_rayleigh_envelope_pdf(-0.5, 1.0, 1.0)

    def test_rejects_bad_variance(self):
        with pytest.raises(ValueError):
            double_rayleigh_envelope_pdf(1.0, 0.0, 1.0)

    def test_unit_variance_spot_value(self):
        want = 4.0 * bessel_k0(2.0)
        assert double_rayleigh_envelope_pdf(1.0, 1.0, 1.0) == pytest.approx(
            want, rel=1e-14)

    def test_integrates_to_one(self):
        from scipy.integrate import quad
        total, _ = quad(lambda l: double_rayleigh_envelope_pdf(l, 1.0, 2.0),
                        0, 60)
        assert total == pytest.approx(1.0, abs=1e-9)


class TestAr1Step:
    @pytest.mark.parametrize("alpha", [-0.1, 1.0001, 2.0])
    def test_rejects_alpha_outside_unit(self, alpha):
        with pytest.raises(ValueError):
            ar1_step(1.0 + 0j, alpha, 0j)

    def test_endpoints(self):
        assert ar1_step(2.0 + 1j, 1.0, 5j) == 2.0 + 1j
        assert ar1_step(2.0 + 1j, 0.0, 5j) == 5j

    def test_preserves_unit_variance(self):
        rng = np.random.default_rng(0)
        alpha = 0.95
        h = (rng.normal() + 1j * rng.normal()) / math.sqrt(2)
        samples = []
        for _ in range(50_000):
            e = (rng.normal() + 1j * rng.normal()) / math.sqrt(2)
            h = ar1_step(h, alpha, e)
            samples.append(h)
        assert np.mean(np.abs(samples) ** 2) == pytest.approx(1.0, rel=0.03)


class TestTraceCsv:
    def test_round_trip(self, tmp_path):
        tr = generate_trace(SPEC, 20, seed=11)
        path = tmp_path / "trace.csv"
        tr.to_csv(path)
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["index", "re", "im"]
        got = np.array([float(r[1]) + 1j * float(r[2]) for r in rows[1:]])
        assert np.array_equal(got, tr.samples)
        assert [int(r[0]) for r in rows[1:]] == list(range(20))


class TestSplitStream:
    def test_paths_are_independent_streams(self):
        a = split_stream(1, 0, 0).standard_normal(8)
        b = split_stream(1, 0, 1).standard_normal(8)
        assert not np.allclose(a, b)

    def test_same_path_reproduces(self):
        a = split_stream(1, 3, 4).standard_normal(8)
        b = split_stream(1, 3, 4).standard_normal(8)
        assert np.array_equal(a, b)


@given(st.integers(min_value=0, max_value=2**63),
       st.integers(min_value=1, max_value=64))
@settings(max_examples=25)
def test_trace_reproducibility_property(seed, length):
    a = generate_trace(SPEC, length, seed=seed).samples
    b = generate_trace(SPEC, length, seed=seed).samples
    assert np.array_equal(a, b)


@given(st.floats(min_value=0.01, max_value=0.4),
       st.floats(min_value=0.1, max_value=5.0))
@settings(max_examples=50)
def test_autocorr_bounded_by_variance(f, var):
    spec = FadingSpec(variance=var, normalized_doppler=f)
    for lag in range(8):
        assert abs(jakes_autocorr(lag, spec)) <= var * (1 + 1e-12)
    assert jakes_autocorr(0, spec) == pytest.approx(var, rel=1e-14)


@given(st.floats(min_value=1e-3, max_value=8.0))
@settings(max_examples=50)
def test_envelope_pdf_positive(lam):
    assert double_rayleigh_envelope_pdf(lam, 1.0, 1.0) > 0.0
