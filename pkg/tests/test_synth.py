import numpy as np
import pytest

from stressgraph.data import GraphConfig, stratified_carve
from stressgraph.graphs import functional_adjacency
from stressgraph.models import ModelConfig, TrainConfig, evaluate, train
from stressgraph.synth import SynthSpec, generate, pink_noise


class TestPinkNoise:
    def test_deterministic_per_seed(self):
        assert np.array_equal(pink_noise(1024, seed=3), pink_noise(1024, seed=3))
        assert not np.array_equal(pink_noise(1024, seed=3), pink_noise(1024, seed=4))

    def test_zero_mean_and_unit_variance(self):
        y = pink_noise(100_000, seed=0)
        assert abs(y.mean()) < 0.05 * y.std()
        assert y.std() == pytest.approx(1.0, abs=1e-9)

    def test_spectral_slope_in_pink_band(self):
        # Periodogram fit oracle: log-log slope over 1-40 Hz at a 128 Hz rate
        # (normalized frequencies 1/128 .. 40/128) should be near -1.
        n = 1 << 15
        slopes = []
        for seed in range(5):
            y = pink_noise(n, seed=seed)
            power = np.abs(np.fft.rfft(y)) ** 2
            freqs = np.fft.rfftfreq(n)
            band = (freqs >= 1.0 / 128.0) & (freqs <= 40.0 / 128.0)
            slope = np.polyfit(np.log(freqs[band]), np.log(power[band]), 1)[0]
            slopes.append(slope)
        mean_slope = float(np.mean(slopes))
        assert -1.5 <= mean_slope <= -0.5, mean_slope

    def test_too_short_rejected(self):
        with pytest.raises(ValueError):
            pink_noise(1, seed=0)


def small_spec(**kwargs):
    base = dict(n_relaxed=10, n_stressed=10, n_channels=8, n_samples=320, seed=0)
    base.update(kwargs)
    return SynthSpec(**base)


class TestGenerate:
    def test_deterministic_per_seed(self):
        spec = small_spec(signature_channels=(2, 5), signature_amplitude=2.0)
        a = generate(spec)
        b = generate(spec)
        for ta, tb in zip(a.trials, b.trials):
            assert np.array_equal(ta.signal, tb.signal)

    def test_distinct_seeds_distinct_data(self):
        a = generate(small_spec(seed=1))
        b = generate(small_spec(seed=2))
        assert not np.array_equal(a.trials[0].signal, b.trials[0].signal)

    def test_paper_shape_and_imbalance(self):
        ds = generate(SynthSpec(n_relaxed=120, n_stressed=360, n_channels=4, n_samples=320))
        assert len(ds) == 480
        labels = ds.labels()
        assert int((labels == 0).sum()) == 120
        assert int((labels == 1).sum()) == 360
        assert len({t.id for t in ds.trials}) == 480
        assert ds.trials[0].signal.shape == (4, 320)

    def test_signature_confined_to_channels_and_segments(self):
        # Same seed with and without the plant: the noise draws are identical,
        # so the difference isolates exactly the planted signature.
        base = generate(small_spec(signature_channels=(2, 5), signature_segments=(1,),
                                   signature_amplitude=0.0, shared_noise_gain=0.0))
        planted = generate(small_spec(signature_channels=(2, 5), signature_segments=(1,),
                                      signature_amplitude=3.0, shared_noise_gain=1.0))
        seg_len = 320 // 10
        for t_base, t_plant in zip(base.trials, planted.trials):
            diff = t_plant.signal - t_base.signal
            if t_base.label == 0:
                assert np.array_equal(diff, np.zeros_like(diff))
            else:
                untouched = [c for c in range(8) if c not in (2, 5)]
                assert np.all(diff[untouched] == 0.0)
                assert np.all(diff[:, :seg_len] == 0.0)
                assert np.all(diff[:, 2 * seg_len:] == 0.0)
                assert np.any(diff[2, seg_len:2 * seg_len] != 0.0)

    def test_strong_signature_creates_functional_edge(self):
        # Monte Carlo over 200 trials: the planted pair must correlate past
        # tau=0.5 in stressed trials and essentially never in relaxed ones.
        spec = small_spec(n_relaxed=100, n_stressed=100, n_samples=640,
                          signature_channels=(2, 5), signature_amplitude=3.0,
                          shared_noise_gain=1.0)
        ds = generate(spec)
        cfg = GraphConfig()
        edge_rate = {0: [], 1: []}
        other_rate = {0: [], 1: []}
        for trial in ds.trials:
            w = functional_adjacency(trial, cfg).weights
            edge_rate[trial.label].append(w[2, 5])
            other_rate[trial.label].append(w[1, 3])
        assert np.mean(edge_rate[1]) >= 0.95
        assert np.mean(edge_rate[0]) <= 0.20
        # label-0 trials carry no planted structure on any pair
        assert np.mean(other_rate[0]) <= 0.05
        assert np.mean(edge_rate[0]) <= 0.05

    def test_null_spec_labels_identical_in_distribution(self):
        # With amplitude and gain 0 the stressed branch adds exactly nothing.
        ds = generate(small_spec(signature_channels=(2, 5), signature_amplitude=0.0,
                                 shared_noise_gain=0.0))
        for trial in ds.trials:
            assert trial.signal.shape == (8, 320)
            assert np.all(np.isfinite(trial.signal))

    def test_invalid_specs_rejected(self):
        with pytest.raises(ValueError):
            small_spec(signature_channels=(99,))
        with pytest.raises(ValueError):
            small_spec(signature_segments=(12,))
        with pytest.raises(ValueError):
            small_spec(n_samples=321)  # not divisible into 10 segments
        with pytest.raises(ValueError):
            small_spec(signature_amplitude=-1.0)
        with pytest.raises(ValueError):
            SynthSpec(n_relaxed=0, n_stressed=0)

    def test_layout_capped_at_bundled_size(self):
        with pytest.raises(ValueError):
            generate(small_spec(n_channels=64, n_samples=320))


class TestRecoverabilityMonotone:
    def test_stronger_amplitude_never_much_worse(self):
        # Smoke property: raising the signature amplitude must not drop the mean
        # test accuracy across 5 seeds by more than 3 points.
        def mean_acc(amplitude):
            accs = []
            for seed in range(5):
                spec = small_spec(n_relaxed=30, n_stressed=30,
                                  signature_channels=(2, 5),
                                  signature_amplitude=amplitude,
                                  shared_noise_gain=1.0, seed=100 + seed)
                ds = generate(spec)
                rest, test = stratified_carve(ds.trials, 0.2, seed)
                model, _ = train(
                    ModelConfig(filters=4, gcn_width=4, kernel_size=5, hidden_width=4, seed=seed),
                    TrainConfig(learning_rate=0.005, seed=seed),
                    ds.replace_trials(rest),
                )
                accs.append(evaluate(model, ds.replace_trials(test)).accuracy)
            return float(np.mean(accs))

        weak, strong = mean_acc(0.5), mean_acc(3.0)
        assert strong >= weak - 0.03, (weak, strong)
