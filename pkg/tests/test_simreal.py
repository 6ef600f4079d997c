"""Synthetic data generators, oversampling, stream balancing, scenarios."""

import numpy as np
import pytest

from loopbench.forecasting import DemandSeries, forecast_croston
from loopbench.simreal import (
    Adjustment,
    BalancerConfig,
    LogoSceneParams,
    ScenarioSpec,
    StreamBalancer,
    generate_imu_sequence,
    generate_logo_sample,
    make_logo_dataset,
    oversample_minority,
    render_logo,
    simulate_scenario,
)
from loopbench.types import Provenance, Sample, SampleKind


def tab(features, sid, label):
    return Sample(id=sid, kind=SampleKind.TABULAR, payload_ref="", features=features,
                  provenance=Provenance.REAL, label=label)


class TestLogoRenderer:
    def test_same_seed_renders_identical_pixels(self):
        a = render_logo(LogoSceneParams(seed=11, noise_std=0.05))
        b = render_logo(LogoSceneParams(seed=11, noise_std=0.05))
        assert np.array_equal(a.pixels, b.pixels)

    def test_pixels_stay_in_unit_range_after_noise(self):
        img = render_logo(LogoSceneParams(seed=3, noise_std=0.2))
        assert img.pixels.min() >= 0.0
        assert img.pixels.max() <= 1.0

    def test_double_print_differs_from_good_render(self):
        good = render_logo(LogoSceneParams(seed=4, noise_std=0.0))
        dbl = render_logo(
            LogoSceneParams(seed=4, noise_std=0.0, defect="double_print", double_offset=3.0)
        )
        assert int((np.abs(dbl.as_array() - good.as_array()) > 0.5).sum()) > 0

    def test_interrupted_print_removes_about_the_gap_fraction(self):
        good = render_logo(LogoSceneParams(seed=5, noise_std=0.0))
        gap = render_logo(
            LogoSceneParams(seed=5, noise_std=0.0, defect="interrupted_print", gap_fraction=0.3)
        )
        n_good = (good.as_array() > 0.5).sum()
        n_gap = (gap.as_array() > 0.5).sum()
        assert 0.55 * n_good <= n_gap <= 0.85 * n_good

    def test_generate_logo_sample_is_synthetic(self):
        s, img = generate_logo_sample(LogoSceneParams(seed=1))
        assert s.provenance == Provenance.SYNTHETIC
        assert s.kind == SampleKind.IMAGE
        assert img.width == 64
        with pytest.raises(ValueError):
            generate_logo_sample(LogoSceneParams(seed=1), provenance=Provenance.REAL)

    def test_param_validation(self):
        with pytest.raises(ValueError):
            LogoSceneParams(defect="double_print", double_offset=0.5)
        with pytest.raises(ValueError):
            LogoSceneParams(defect="interrupted_print", gap_fraction=1.5)
        with pytest.raises(ValueError):
            LogoSceneParams(noise_std=0.5)


class TestOversampling:
    def test_midpoint_interpolation_possible(self):
        # with u ~ U(0,1), every synthetic point sits on the parent segment
        minority = [tab(np.array([0.0, 0.0]), "m0", "bad"), tab(np.array([2.0, 2.0]), "m1", "bad")]
        majority = [tab(np.array([10.0 + i, 0.0]), f"g{i}", "good") for i in range(8)]
        out = oversample_minority(minority + majority, target_ratio=0.5, k=1, seed=0)
        for s in out:
            # on the segment between (0,0) and (2,2): x == y and 0 <= x <= 2
            assert s.features[0] == pytest.approx(s.features[1], abs=1e-12)
            assert -1e-12 <= s.features[0] <= 2.0 + 1e-12

    def test_count_arithmetic_95_5_to_half(self):
        rng = np.random.default_rng(0)
        majority = [tab(rng.normal(size=2), f"g{i}", "good") for i in range(190)]
        minority = [tab(rng.normal(5.0, 1.0, size=2), f"b{i}", "bad") for i in range(10)]
        out = oversample_minority(majority + minority, target_ratio=0.5, seed=1)
        assert len(out) == 90
        assert all(s.label == "bad" for s in out)
        assert all(s.provenance == Provenance.SYNTHETIC for s in out)

    def test_majority_count_unchanged(self):
        rng = np.random.default_rng(1)
        majority = [tab(rng.normal(size=2), f"g{i}", "good") for i in range(20)]
        minority = [tab(rng.normal(size=2), f"b{i}", "bad") for i in range(4)]
        out = oversample_minority(majority + minority, target_ratio=0.5, seed=0)
        assert all(s.label == "bad" for s in out)

    def test_singleton_minority_rejected(self):
        rng = np.random.default_rng(2)
        majority = [tab(rng.normal(size=2), f"g{i}", "good") for i in range(5)]
        minority = [tab(rng.normal(size=2), "b0", "bad")]
        with pytest.raises(ValueError, match="cannot interpolate"):
            oversample_minority(majority + minority, target_ratio=0.5)


def synth_defect(i):
    return Sample(id=f"inj{i}", kind=SampleKind.IMAGE, payload_ref="", features=np.zeros(3),
                  provenance=Provenance.INJECTED_KNOWN_DEFECT, label="double_print")


def real_item(i, label="good"):
    return Sample(id=f"real{i}", kind=SampleKind.IMAGE, payload_ref="", features=np.zeros(3),
                  provenance=Provenance.REAL, label=label)


class TestBalancer:
    def test_all_good_window_triggers_injection(self):
        balancer = StreamBalancer(BalancerConfig(target_ratio=0.3, window=10),
                                  reserve=[synth_defect(i) for i in range(50)])
        result = balancer.process(real_item(0))
        assert result.injected > 0

    def test_long_stream_holds_presented_ratio(self):
        rng = np.random.default_rng(9)
        balancer = StreamBalancer(BalancerConfig(target_ratio=0.3, window=100),
                                  reserve=[synth_defect(i) for i in range(600)])
        emitted = 0
        true_defects = 0
        for i in range(1000):
            label = "double_print" if rng.random() < 0.02 else "good"
            true_defects += label != "good"
            result = balancer.process(real_item(i, label))
            emitted += len(result.emitted)
            if emitted >= 100 and i % 100 == 0:
                assert 0.25 <= balancer.window_ratio() <= 0.35
        stats = balancer.production_stats()
        assert stats["real_items"] == 1000  # nothing dropped
        assert stats["real_defects"] == true_defects  # injected items excluded

    def test_production_stats_exclude_injected(self):
        balancer = StreamBalancer(BalancerConfig(target_ratio=0.3, window=20),
                                  reserve=[synth_defect(i) for i in range(100)])
        true_defects = 0
        for i in range(50):
            label = "interrupted_print" if i % 25 == 0 else "good"
            true_defects += label != "good"
            balancer.process(real_item(i, label))
        stats = balancer.production_stats()
        assert stats["real_items"] == 50
        assert stats["real_defects"] == true_defects
        assert stats["injected_items"] > 0

    def test_empty_reserve_warns_and_keeps_streaming(self):
        balancer = StreamBalancer(BalancerConfig(target_ratio=0.5, window=10), reserve=[])
        result = balancer.process(real_item(0))
        assert result.warning is not None
        assert result.emitted == [result.emitted[0]]

    def test_injected_items_never_claim_real_provenance(self):
        balancer = StreamBalancer(BalancerConfig(target_ratio=0.4, window=10),
                                  reserve=[synth_defect(i) for i in range(20)])
        result = balancer.process(real_item(0))
        for s in result.emitted[1:]:
            assert s.provenance != Provenance.REAL

    def test_reserve_rejects_real_samples(self):
        balancer = StreamBalancer(BalancerConfig())
        with pytest.raises(ValueError):
            balancer.add_reserve([real_item(0)])

    def test_injection_follows_source_priority(self):
        synth = Sample(id="syn", kind=SampleKind.IMAGE, payload_ref="", features=np.zeros(3),
                       provenance=Provenance.SYNTHETIC, label="double_print")
        known = synth_defect(0)  # provenance=injected_known_defect
        balancer = StreamBalancer(
            BalancerConfig(target_ratio=0.3, window=10,
                           source_priority=(Provenance.INJECTED_KNOWN_DEFECT,
                                            Provenance.SYNTHETIC)),
            reserve=[synth, known],
        )
        result = balancer.process(real_item(0))
        assert result.emitted[1].provenance == Provenance.INJECTED_KNOWN_DEFECT

    def test_real_cannot_be_an_injection_source(self):
        with pytest.raises(ValueError):
            BalancerConfig(source_priority=(Provenance.REAL,))


class TestScenarios:
    def base(self):
        return DemandSeries("p1", periods=list(range(9)),
                            quantities=[0, 0, 6, 0, 0, 6, 0, 0, 6])

    def test_identity_scenario(self):
        res = simulate_scenario(ScenarioSpec(base=self.base()))
        assert res.adjusted_series.quantities == self.base().quantities
        assert res.delta == pytest.approx(0.0)

    def test_doubling_doubles_croston_forecast(self):
        spec = ScenarioSpec(base=self.base(),
                            adjustments=[Adjustment(0, 8, multiplier=2.0)])
        res = simulate_scenario(spec, forecaster=lambda s: forecast_croston(s, 0.2))
        assert res.adjusted_forecast.next_forecast == pytest.approx(
            2.0 * res.base_forecast.next_forecast
        )

    def test_adjustment_outside_span_rejected(self):
        spec = ScenarioSpec(base=self.base(), adjustments=[Adjustment(5, 20, multiplier=1.1)])
        with pytest.raises(ValueError, match="outside"):
            simulate_scenario(spec)

    def test_negative_result_rejected(self):
        spec = ScenarioSpec(base=self.base(), adjustments=[Adjustment(2, 2, delta=-10.0)])
        with pytest.raises(ValueError, match="negative"):
            simulate_scenario(spec)

    def test_adjustment_validation(self):
        with pytest.raises(ValueError):
            Adjustment(0, 1)  # neither multiplier nor delta
        with pytest.raises(ValueError):
            Adjustment(0, 1, multiplier=-2.0)


class TestImu:
    def test_two_seconds_gives_forty_samples_per_channel(self):
        _, window = generate_imu_sequence("walk", 2.0, seed=0)
        assert window.length == 40
        assert len(window.channels) == 10

    def test_idle_channels_are_quiet(self):
        _, window = generate_imu_sequence("idle", 4.0, seed=1)
        for name, signal in window.channels.items():
            assert signal.std() < 0.2, name

    def test_same_seed_reproduces_sequences(self):
        _, w1 = generate_imu_sequence("assemble", 2.0, seed=5)
        _, w2 = generate_imu_sequence("assemble", 2.0, seed=5)
        for name in w1.channels:
            assert np.array_equal(w1.channels[name], w2.channels[name])

    def test_unknown_activity_rejected(self):
        with pytest.raises(ValueError):
            generate_imu_sequence("moonwalk", 2.0)

    def test_short_duration_rejected(self):
        with pytest.raises(ValueError):
            generate_imu_sequence("walk", 1.0)

    def test_sample_provenance_is_synthetic(self):
        s, _ = generate_imu_sequence("carry", 2.0, seed=2)
        assert s.provenance == Provenance.SYNTHETIC
        assert s.kind == SampleKind.IMU_WINDOW
        assert len(s.features) == 60


def test_dataset_generator_proportions():
    ds = make_logo_dataset(300, 0.2, seed=0, binary=True)
    defects = sum(1 for s in ds if s.label == "defect")
    assert 30 <= defects <= 90  # 20% +/- sampling noise
    assert all(s.provenance == Provenance.REAL for s in ds)
