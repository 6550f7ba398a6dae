"""Receivers: combining rules, covariance models, sphere decoders."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from relaysim.channel import FadingSpec, generate_trace
from relaysim.modem import (
    PskConstellation,
    alamouti_codebook,
    diff_encode,
    diff_encode_matrix,
    min_distance_detect,
)
from relaysim.relaylink import LinkBudget, simulate_dualhop
from relaysim.detection import (
    CombinerWeights,
    CovarianceModel,
    DetectionWindow,
    ModelError,
    build_mcdsd_covariance,
    build_msdsd_covariance,
    cdd_detect,
    dbpsk_decision,
    dstc_two_codeword_detect,
    linear_combine,
    mcdsd_dstc,
    msdsd_dualhop,
    select_combine,
    select_combine_dbpsk,
    semi_mrc_weights,
    tvd_weights,
)

from oracles import exhaustive_mcdsd, exhaustive_msdsd, mcdsd_metric

BPSK = PskConstellation(2)
QPSK = PskConstellation(4)
UNIT_BUDGET = LinkBudget(source_power=1.0, relay_powers=(1.0,),
                         noise_density=1.0)


def static_spec(variance=1.0):
    return FadingSpec(variance=variance, normalized_doppler=0.0)


class TestCombinerWeights:
    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            CombinerWeights(b0=-0.1, b_i=(0.5,))

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            CombinerWeights(b0=float("nan"), b_i=())


class TestCddDetect:
    def test_sign_flip(self):
        assert cdd_detect(1.0, -1.0, BPSK) == -1.0

    def test_noiseless_static_channel(self):
        h = 0.8 - 0.3j
        for v in QPSK.points:
            assert cdd_detect(h, v * h, QPSK) == pytest.approx(v)

    def test_agrees_with_two_symbol_slicer(self):
        rng = np.random.default_rng(1)
        for _ in range(10_000):
            yp, yc = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            assert cdd_detect(yp, yc, QPSK) == min_distance_detect(
                np.conj(yp) * yc, QPSK)


class TestWeights:
    def test_semi_mrc_unit_example(self):
        w = semi_mrc_weights([1.0])
        assert w.b0 == pytest.approx(0.5)
        assert w.b_i[0] == pytest.approx(0.25)

    def test_semi_mrc_degenerate_relay(self):
        w = semi_mrc_weights([0.0])
        assert w.b_i[0] == pytest.approx(w.b0)

    def test_semi_mrc_symmetry(self):
        w = semi_mrc_weights([0.7, 0.7, 0.7])
        assert len(set(w.b_i)) == 1

    def test_tvd_reduces_to_semi_mrc_at_alpha_one(self):
        amps = [0.3, 1.1, 2.0]
        mrc = semi_mrc_weights(amps)
        tvd = tvd_weights(1.0, [1.0] * 3, amps, source_power=50.0)
        assert abs(tvd.b0 - mrc.b0) < 1e-12
        for a, b in zip(tvd.b_i, mrc.b_i):
            assert abs(a - b) < 1e-12

    def test_tvd_zero_alpha_discounts_link(self):
        w = tvd_weights(0.9, [0.0], [1.0], source_power=10.0)
        assert w.b_i[0] == 0.0

    def test_tvd_vanishes_at_high_power(self):
        w_lo = tvd_weights(0.9, [0.9], [1.0], source_power=10.0)
        w_hi = tvd_weights(0.9, [0.9], [1.0], source_power=1e9)
        assert w_hi.b_i[0] < 1e-8 < w_lo.b_i[0]

    def test_tvd_rejects_alpha_outside_unit(self):
        with pytest.raises(ValueError):
            tvd_weights(1.2, [0.9], [1.0], 10.0)


class TestCombining:
    def test_single_link_identity(self):
        w = CombinerWeights(b0=1.0, b_i=())
        assert linear_combine([0.3 + 0.1j], w) == 0.3 + 0.1j

    def test_zero_weights(self):
        w = CombinerWeights(b0=0.0, b_i=(0.0, 0.0))
        assert linear_combine([1j, 2j, 3j], w) == 0.0

    def test_length_mismatch(self):
        w = CombinerWeights(b0=0.5, b_i=(0.25,))
        with pytest.raises(ValueError):
            linear_combine([1.0], w)

    def test_select_larger_magnitude(self):
        assert select_combine(0.5, -2.0 + 0j) == -2.0
        assert select_combine(3j, 1.0) == 3j

    def test_select_tie_keeps_direct(self):
        assert select_combine(-1.0, 1.0) == -1.0

    def test_dbpsk_variant_uses_real_parts(self):
        assert select_combine_dbpsk(0.2 + 5j, -0.3 + 0.1j) == -0.3
        assert dbpsk_decision(-0.3) == -1.0
        assert dbpsk_decision(0.0) == 1.0


class TestCovarianceModel:
    def test_unit_static_example(self):
        cov = build_msdsd_covariance(static_spec(), static_spec(),
                                     UNIT_BUDGET, 2)
        a_sq = 0.5
        want = a_sq * np.ones((2, 2)) + (1 + a_sq) * np.eye(2)
        assert np.allclose(cov.matrix, want, atol=1e-12)

    def test_diagonal_entries(self):
        spec_sr = FadingSpec(variance=2.0, normalized_doppler=0.02)
        spec_rd = FadingSpec(variance=0.5, normalized_doppler=0.01)
        b = LinkBudget.split(10.0, 0.4, noise_density=0.3)
        cov = build_msdsd_covariance(spec_sr, spec_rd, b, 5)
        a_sq = b.relay_powers[0] / (b.source_power * 2.0 + 0.3)
        want = a_sq * b.source_power * 2.0 * 0.5 + (1 + a_sq * 0.5) * 0.3
        assert np.allclose(np.diag(cov.matrix), want, atol=1e-12)

    def test_factor_residual_random_parameters(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            spec_sr = FadingSpec(variance=rng.uniform(0.5, 2),
                                 normalized_doppler=rng.uniform(0, 0.05))
            spec_rd = FadingSpec(variance=rng.uniform(0.5, 2),
                                 normalized_doppler=rng.uniform(0, 0.05))
            b = LinkBudget.split(10 ** rng.uniform(0, 4),
                                 rng.uniform(0.2, 0.8))
            cov = build_msdsd_covariance(spec_sr, spec_rd, b, 10)
            u = cov.cholesky_upper
            residual = np.linalg.norm(
                u.conj().T @ u @ cov.matrix - np.eye(10))
            assert residual < 1e-8

    def test_rejects_non_positive_definite(self):
        with pytest.raises(ModelError):
            CovarianceModel.from_matrix(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_rejects_short_window(self):
        with pytest.raises(ValueError):
            build_msdsd_covariance(static_spec(), static_spec(),
                                   UNIT_BUDGET, 1)


class TestDetectionWindow:
    def test_rejects_size_mismatch(self):
        with pytest.raises(ValueError):
            DetectionWindow(np.zeros(3, dtype=complex), 4)

    def test_rejects_tiny_window(self):
        with pytest.raises(ValueError):
            DetectionWindow(np.zeros(1, dtype=complex), 1)


def _random_window(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


class TestMsdsd:
    @pytest.mark.parametrize("n,m", [(3, 2), (3, 4), (4, 2), (4, 4)])
    def test_matches_exhaustive_search(self, n, m):
        const = PskConstellation(m)
        cov = build_msdsd_covariance(
            FadingSpec(variance=1.0, normalized_doppler=0.02),
            FadingSpec(variance=1.0, normalized_doppler=0.01),
            LinkBudget.split(100.0, 0.5), n)
        rng = np.random.default_rng(n * 10 + m)
        for _ in range(500):
            y = _random_window(rng, n)
            got = msdsd_dualhop(DetectionWindow(y, n), cov, const)
            want = exhaustive_msdsd(y, cov.cholesky_upper, const.points)
            assert np.array_equal(got, want)

    def test_noiseless_static_recovery(self):
        const = QPSK
        spec = static_spec()
        budget = LinkBudget.split(1e6, 0.5)
        cov = build_msdsd_covariance(spec, spec, budget, 4)
        rng = np.random.default_rng(5)
        for t in range(50):
            v = const.points[rng.integers(0, 4, 3)]
            s = diff_encode(v, const)
            h1 = generate_trace(spec, 4, seed=t)
            h2 = generate_trace(spec, 4, seed=100 + t)
            y = simulate_dualhop(h1, h2, s, budget, noise_seed=t)
            got = msdsd_dualhop(DetectionWindow(y, 4), cov, const)
            assert np.allclose(got, v, atol=1e-6)

    def test_window_two_matches_cdd(self):
        spec = FadingSpec(variance=1.0, normalized_doppler=0.001)
        budget = LinkBudget.split(10 ** 3.5, 0.5)
        cov = build_msdsd_covariance(spec, spec, budget, 2)
        rng = np.random.default_rng(8)
        agree = 0
        n_trials = 2000
        for t in range(n_trials):
            v = BPSK.points[rng.integers(0, 2, 1)]
            s = diff_encode(v, BPSK)
            h1 = generate_trace(spec, 2, seed=t)
            h2 = generate_trace(spec, 2, seed=5000 + t)
            y = simulate_dualhop(h1, h2, s, budget, noise_seed=t)
            msd = msdsd_dualhop(DetectionWindow(y, 2), cov, BPSK)[0]
            agree += msd == cdd_detect(y[0], y[1], BPSK)
        assert agree / n_trials >= 0.99

    def test_phase_and_scale_invariance(self):
        cov = build_msdsd_covariance(
            FadingSpec(variance=1.0, normalized_doppler=0.02),
            FadingSpec(variance=1.0, normalized_doppler=0.01),
            LinkBudget.split(100.0, 0.5), 4)
        rng = np.random.default_rng(9)
        for _ in range(100):
            y = _random_window(rng, 4)
            base = msdsd_dualhop(DetectionWindow(y, 4), cov, QPSK)
            rot = np.exp(1j * rng.uniform(0, 2 * math.pi))
            scale = rng.uniform(0.1, 10.0)
            got = msdsd_dualhop(DetectionWindow(scale * rot * y, 4), cov,
                                QPSK)
            assert np.allclose(got, base)


class TestDstcDetectors:
    CB = alamouti_codebook(BPSK)

    def test_two_codeword_noiseless(self):
        rng = np.random.default_rng(2)
        for idx in range(4):
            v = self.CB.codewords[idx]
            h = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            y_prev = h / np.linalg.norm(h)
            assert dstc_two_codeword_detect(y_prev, v @ y_prev,
                                            self.CB) == idx

    def test_two_codeword_zero_prev_ties_to_first(self):
        y_curr = np.array([0.3 + 0.2j, -0.5j])
        assert dstc_two_codeword_detect(np.zeros(2), y_curr, self.CB) == 0

    @pytest.mark.parametrize("n", [3, 4])
    def test_mcdsd_matches_exhaustive(self, n):
        spec = FadingSpec(variance=1.0, normalized_doppler=0.012,
                          lag_multiplier=2)
        cov = build_mcdsd_covariance(spec, spec,
                                     LinkBudget.split(100.0, 0.5, 2), n, 2)
        rng = np.random.default_rng(n)
        for _ in range(200):
            y = rng.standard_normal((n, 2)) + 1j * rng.standard_normal(
                (n, 2))
            got = mcdsd_dstc(DetectionWindow(y, n), cov, self.CB)
            want = exhaustive_mcdsd(y, cov.cholesky_upper,
                                    self.CB.codewords)
            assert np.array_equal(got, want)

    def test_mcdsd_noiseless_recovery(self):
        from relaysim.relaylink import simulate_dstc

        combiners = [(np.eye(2), np.zeros((2, 2))),
                     (np.zeros((2, 2)), np.array([[0.0, -1.0], [1.0, 0.0]]))]
        spec = FadingSpec(variance=1.0, normalized_doppler=0.0,
                          lag_multiplier=2)
        budget = LinkBudget.split(1e6, 0.5, 2)
        cov = build_mcdsd_covariance(spec, spec, budget, 4, 2)
        rng = np.random.default_rng(4)
        for t in range(30):
            idx = rng.integers(0, 4, 3)
            s_vecs = diff_encode_matrix(
                [self.CB.codewords[i] for i in idx], 2)
            tr_sr = [generate_trace(spec, 4, seed=4 * t + i)
                     for i in range(2)]
            tr_rd = [generate_trace(spec, 4, seed=4 * t + 2 + i)
                     for i in range(2)]
            y = simulate_dstc(tr_sr, tr_rd, s_vecs, budget, combiners,
                              noise_seed=t)
            got = mcdsd_dstc(DetectionWindow(y, 4), cov, self.CB)
            assert np.array_equal(got, idx)

    def test_mcdsd_beats_random_rivals(self):
        spec = FadingSpec(variance=1.0, normalized_doppler=0.018,
                          lag_multiplier=2)
        cov = build_mcdsd_covariance(spec, spec,
                                     LinkBudget.split(50.0, 0.5, 2), 4, 2)
        rng = np.random.default_rng(6)
        for _ in range(20):
            y = rng.standard_normal((4, 2)) + 1j * rng.standard_normal(
                (4, 2))
            got = mcdsd_dstc(DetectionWindow(y, 4), cov, self.CB)
            best = mcdsd_metric(tuple(got), y, cov.cholesky_upper,
                                self.CB.codewords)
            for _ in range(100):
                rival = tuple(rng.integers(0, 4, 3))
                rv = mcdsd_metric(rival, y, cov.cholesky_upper,
                                  self.CB.codewords)
                assert best <= rv + 1e-12

    def test_phase_and_scale_invariance(self):
        spec = FadingSpec(variance=1.0, normalized_doppler=0.012,
                          lag_multiplier=2)
        cov = build_mcdsd_covariance(spec, spec,
                                     LinkBudget.split(100.0, 0.5, 2), 3, 2)
        rng = np.random.default_rng(7)
        for _ in range(50):
            y = rng.standard_normal((3, 2)) + 1j * rng.standard_normal(
                (3, 2))
            base = mcdsd_dstc(DetectionWindow(y, 3), cov, self.CB)
            rot = np.exp(1j * rng.uniform(0, 2 * math.pi))
            scale = rng.uniform(0.1, 10.0)
            got = mcdsd_dstc(DetectionWindow(scale * rot * y, 3), cov,
                             self.CB)
            assert np.array_equal(got, base)


@given(st.floats(min_value=0.01, max_value=100.0))
@settings(max_examples=40)
def test_common_weight_scale_preserves_decisions(scale):
    rng = np.random.default_rng(12)
    w = CombinerWeights(b0=0.5, b_i=(0.25,))
    ws = CombinerWeights(b0=0.5 * scale, b_i=(0.25 * scale,))
    for _ in range(50):
        dv = list(rng.standard_normal(2) + 1j * rng.standard_normal(2))
        a = min_distance_detect(linear_combine(dv, w), QPSK)
        b = min_distance_detect(linear_combine(dv, ws), QPSK)
        assert a == b
