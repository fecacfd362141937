"""Tests for the transmission loop, metrics, and experiment drivers."""

import math

import numpy as np
import pytest

from ltfeedback.codec import Encoder, InputBlock
from ltfeedback.degree import RsdParams, reduced_degree_dist, robust_soliton
from ltfeedback.feedback import DistributionMode, FeedbackPolicy
from ltfeedback.simulator import (
    RateDistortionModel,
    TrialConfig,
    distortion_of_trace,
    experiment_deadline_distortion,
    experiment_single_layer_feedback,
    experiment_two_layer_ack,
    format_value,
    run_trial,
    two_layer_config,
)

# frozen from the model geometry: 10^6 bits/s over 480*320*30 samples/s
FULL_RATE = 0.2170138888888889
D_FULL = 0.740192397133012
D_HALF = 0.8603443479985279


class TestRunTrial:
    def test_total_erasure_with_deadline_receives_nothing(self):
        trace = run_trial(TrialConfig(k=50, seed=0, ser=1.0, deadline=100))
        assert trace.received_total == 0
        assert trace.sent_total == 100
        assert not trace.completed
        assert trace.layers_decoded == 0

    def test_single_symbol_block_completes_immediately(self):
        trace = run_trial(TrialConfig(k=1, seed=1))
        assert trace.completed
        assert trace.completion_received == 1
        assert trace.overhead == 0.0

    def test_total_erasure_without_deadline_rejected(self):
        with pytest.raises(ValueError):
            TrialConfig(k=10, seed=0, ser=1.0)

    def test_overhead_never_negative(self):
        for seed in range(8):
            trace = run_trial(TrialConfig(k=60, seed=seed))
            assert trace.completed and trace.overhead >= 0.0

    def test_undecoded_counts_never_increase(self):
        trace = run_trial(TrialConfig(k=120, seed=3, ser=0.2))
        totals = trace.undecoded_total()
        assert (np.diff(totals) <= 0).all()
        assert totals[-1] == 0

    def test_payloads_always_verified(self):
        layers = two_layer_config(80, 0.5, 9.0)
        configs = [
            TrialConfig(k=80, seed=5),
            TrialConfig(k=80, seed=6, ser=0.4),
            TrialConfig(k=80, seed=7, layers=layers, policy=FeedbackPolicy.layer_ack()),
            TrialConfig(k=80, seed=8,
                        policy=FeedbackPolicy.per_symbol_ack(DistributionMode.ADAPTIVE)),
        ]
        for config in configs:
            assert run_trial(config).payload_errors == 0

    def test_deterministic_for_fixed_seed(self):
        config = TrialConfig(k=70, seed=11, ser=0.1)
        a, b = run_trial(config), run_trial(config)
        assert np.array_equal(a.sent, b.sent)
        assert np.array_equal(a.undecoded, b.undecoded)
        assert a.completion_received == b.completion_received

    def test_deadline_on_received_basis(self):
        config = TrialConfig(k=50, seed=12, ser=0.5, deadline=30,
                             deadline_basis="received")
        trace = run_trial(config)
        assert trace.received_total == 30
        assert trace.sent_total > 30

    def test_redundancy_matches_closed_form_at_frozen_state(self):
        # freeze a decoder state by hand, then measure how often fresh
        # encoder output carries no undecoded neighbor
        k, undecoded = 100, 35
        rng = np.random.default_rng(42)
        dist = robust_soliton(RsdParams(k, 0.1, 1.0))
        block = InputBlock.random(k, 8, rng)
        enc = Encoder(block, dist, rng)
        unknown = set(rng.choice(k, size=undecoded, replace=False).tolist())
        n_syms = 60_000
        redundant = sum(
            1 for _ in range(n_syms)
            if not (enc.encode_next().neighbors & unknown)
        )
        p = reduced_degree_dist(dist, undecoded).pmf[0]
        se = math.sqrt(p * (1 - p) / n_syms)
        assert abs(redundant / n_syms - p) <= 3 * se


class TestDistortion:
    def test_rate_constants(self):
        model = RateDistortionModel(alpha=0.5)
        assert model.full_rate == pytest.approx(FULL_RATE, abs=1e-12)
        r = model.rates(2)
        assert r[0] == 0.0
        assert r[1] == pytest.approx(FULL_RATE / 2, abs=1e-12)
        assert r[2] == pytest.approx(FULL_RATE, abs=1e-12)
        assert r[0] <= r[1] <= r[2]

    def test_nothing_decoded_gives_unit_distortion(self):
        trace = run_trial(TrialConfig(k=20, seed=0, ser=1.0, deadline=10))
        assert distortion_of_trace(trace, RateDistortionModel()) == 1.0

    def test_full_decode_distortion_value(self):
        layers = two_layer_config(40, 0.5, 9.0)
        trace = run_trial(TrialConfig(k=40, seed=1, layers=layers))
        assert trace.layers_decoded == 2
        d = distortion_of_trace(trace, RateDistortionModel(alpha=0.5))
        assert d == pytest.approx(D_FULL, abs=1e-12)

    def test_base_only_distortion_value(self):
        model = RateDistortionModel(alpha=0.5)
        assert 2.0 ** (-2 * model.rates(2)[1]) == pytest.approx(D_HALF, abs=1e-12)

    def test_single_layer_uses_full_rate(self):
        trace = run_trial(TrialConfig(k=30, seed=2))
        d = distortion_of_trace(trace, RateDistortionModel(alpha=0.5))
        assert d == pytest.approx(D_FULL, abs=1e-12)


class TestSingleLayerExperiment:
    def test_single_run_is_deterministic(self):
        a = experiment_single_layer_feedback(k=60, runs=1, seed=5)
        b = experiment_single_layer_feedback(k=60, runs=1, seed=5)
        for name in a.schemes:
            assert np.array_equal(a.schemes[name].mean_undecoded_frac,
                                  b.schemes[name].mean_undecoded_frac)

    def test_scheme_ordering_at_small_k(self):
        result = experiment_single_layer_feedback(k=100, runs=400, seed=9)
        none = result.schemes["no_feedback"].mean_overhead
        original = result.schemes["ack_original"].mean_overhead
        adaptive = result.schemes["ack_adaptive"].mean_overhead
        assert adaptive < none < original

    def test_curves_start_full_and_end_empty(self):
        result = experiment_single_layer_feedback(k=50, runs=3, seed=2)
        for stats in result.schemes.values():
            curve = stats.mean_undecoded_frac
            assert curve[0] == 1.0
            assert curve[-1] == 0.0
            assert (np.diff(curve) <= 1e-12).all()

    def test_avalanche_shape(self):
        # the drop from half decoded to nearly done is fast relative to the
        # long buildup that precedes it
        result = experiment_single_layer_feedback(k=300, runs=30, seed=3)
        curve = result.schemes["no_feedback"].mean_undecoded_frac
        r50 = int(np.argmax(curve < 0.5))
        r05 = int(np.argmax(curve < 0.05))
        assert 0 < r50 < r05
        assert (r05 - r50) < r50

    def test_parallel_equals_serial(self):
        a = experiment_single_layer_feedback(k=50, runs=6, seed=13, workers=1)
        b = experiment_single_layer_feedback(k=50, runs=6, seed=13, workers=2)
        for name in a.schemes:
            assert np.array_equal(a.schemes[name].overheads, b.schemes[name].overheads)
            assert np.array_equal(a.schemes[name].mean_undecoded_frac,
                                  b.schemes[name].mean_undecoded_frac)

    def test_trial_order_does_not_matter(self):
        config = lambda t: TrialConfig(k=40, seed=(21, 0, t))
        forward = [run_trial(config(t)) for t in range(5)]
        backward = [run_trial(config(t)) for t in reversed(range(5))][::-1]
        for a, b in zip(forward, backward):
            assert np.array_equal(a.undecoded, b.undecoded)


class TestTwoLayerExperiment:
    def test_uniform_weights_treat_layers_alike(self):
        result = experiment_two_layer_ack(
            k=200, alpha=0.5, beta=1.0, runs=80, seed=4,
            schemes=("two_layer_no_ack",),
        )
        curves = result.schemes["two_layer_no_ack"].mean_layer_undecoded_frac
        assert np.abs(curves[:, 0] - curves[:, 1]).max() < 0.1

    def test_weighted_layers_split_apart(self):
        result = experiment_two_layer_ack(
            k=200, alpha=0.5, beta=9.0, runs=40, seed=5,
            schemes=("two_layer_no_ack",),
        )
        stats = result.schemes["two_layer_no_ack"]
        curves = stats.mean_layer_undecoded_frac
        assert (curves[:, 1] - curves[:, 0]).max() > 0.3
        base_done = stats.layer_completion_received[:, 0]
        refine_done = stats.layer_completion_received[:, 1]
        assert (base_done < refine_done).all()

    def test_layer_ack_lowers_total_overhead(self):
        result = experiment_two_layer_ack(k=200, alpha=0.5, beta=9.0, runs=40, seed=6,
                                          schemes=("two_layer_no_ack",
                                                   "two_layer_layer_ack"))
        no_ack = result.schemes["two_layer_no_ack"].mean_overhead
        with_ack = result.schemes["two_layer_layer_ack"].mean_overhead
        assert with_ack < no_ack

    def test_invalid_alpha_rejected(self):
        with pytest.raises(ValueError):
            experiment_two_layer_ack(k=100, alpha=1.0, beta=9.0, runs=1, seed=0)


class TestDistortionExperiment:
    def test_full_erasure_gives_unit_distortion(self):
        result = experiment_deadline_distortion(
            k=40, alpha=0.5, beta=9.0, ser_grid=[1.0], seconds=5, seed=7)
        for name, means in result.mean_distortion.items():
            assert means[0] == 1.0

    def test_distortion_nondecreasing_in_erasure_rate(self):
        result = experiment_deadline_distortion(
            k=60, alpha=0.5, beta=9.0, ser_grid=[0.0, 0.3, 0.6, 0.9], seconds=50, seed=8)
        for name, trials in result.per_trial.items():
            means = trials.mean(axis=1)
            se = trials.std(axis=1, ddof=1) / math.sqrt(trials.shape[1])
            for i in range(len(means) - 1):
                gap_se = math.hypot(se[i], se[i + 1])
                assert means[i + 1] >= means[i] - 2 * gap_se

    def test_values_live_in_model_range(self):
        result = experiment_deadline_distortion(
            k=40, alpha=0.5, beta=9.0, ser_grid=[0.0, 0.5], seconds=10, seed=9)
        for means in result.mean_distortion.values():
            assert ((means >= D_FULL - 1e-12) & (means <= 1.0)).all()

    def test_acked_layered_code_beats_single_layer_in_mid_band(self):
        # the deadline falls after the base-layer avalanche but before the
        # single-layer one, so the acknowledged layered code wins clearly
        result = experiment_deadline_distortion(
            k=100, alpha=0.5, beta=9.0, ser_grid=[0.35, 0.45, 0.55],
            seconds=300, seed=10,
            schemes=("single_layer", "two_layer_layer_ack"),
        )
        single = result.mean_distortion["single_layer"]
        acked = result.mean_distortion["two_layer_layer_ack"]
        assert (acked < single - 0.01).all(), (acked, single)


class TestFormatting:
    def test_nine_significant_digits(self):
        assert format_value(0.15000000000000002) == "0.15"
        assert format_value(1 / 3) == "0.333333333"
        assert format_value(7) == "7"
        assert format_value(True) == "1"
