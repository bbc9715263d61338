import numpy as np
import pytest

from stressgraph.ablation import (
    AblationReport,
    keep_single_channel,
    region_filter,
    remove_single_channel,
    run_ablation,
    segment_filter,
    write_report_csv,
    write_report_json,
)
from stressgraph.data import (
    Dataset,
    ElectrodeLayout,
    GraphConfig,
    Region,
    Trial,
    default_layout,
)
from stressgraph.graphs import functional_adjacency, structural_adjacency
from stressgraph.models import ModelConfig, TrainConfig


def toy_dataset(n_per_label=(4, 4), n_channels=4, n_samples=40, seed=0):
    layout = ElectrodeLayout(
        names=tuple(f"C{i}" for i in range(n_channels)),
        positions=np.column_stack([np.arange(n_channels, dtype=float), np.zeros(n_channels)]),
    )
    rng = np.random.default_rng(seed)
    trials = []
    idx = 0
    for label, count in enumerate(n_per_label):
        for _ in range(count):
            trials.append(
                Trial(id=f"t{idx:03d}", signal=rng.standard_normal((n_channels, n_samples)),
                      label=label)
            )
            idx += 1
    return Dataset(trials=trials, layout=layout)


def default_layout_dataset(n_trials=4, n_samples=40):
    layout = default_layout()
    rng = np.random.default_rng(1)
    trials = [
        Trial(id=f"t{i}", signal=rng.standard_normal((32, n_samples)), label=i % 2)
        for i in range(n_trials)
    ]
    return Dataset(trials=trials, layout=layout)


class TestChannelFilters:
    def test_keep_zeroes_everything_else(self):
        ds = toy_dataset(n_per_label=(1, 0), n_channels=3)
        kept = keep_single_channel(ds, 0)
        assert np.array_equal(kept.trials[0].signal[0], ds.trials[0].signal[0])
        assert np.all(kept.trials[0].signal[1:] == 0.0)

    def test_keep_is_idempotent(self):
        ds = toy_dataset()
        once = keep_single_channel(ds, 2)
        twice = keep_single_channel(once, 2)
        for a, b in zip(once.trials, twice.trials):
            assert np.array_equal(a.signal, b.signal)

    def test_remove_zeroes_only_named_channel(self):
        ds = toy_dataset(n_per_label=(1, 0), n_channels=3)
        removed = remove_single_channel(ds, 1)
        assert np.all(removed.trials[0].signal[1] == 0.0)
        assert np.array_equal(removed.trials[0].signal[0], ds.trials[0].signal[0])

    def test_remove_then_keep_same_channel_is_all_zero(self):
        ds = toy_dataset(n_per_label=(1, 0))
        out = keep_single_channel(remove_single_channel(ds, 2), 2)
        assert np.all(out.trials[0].signal == 0.0)

    def test_remove_already_zero_channel_unchanged(self):
        ds = toy_dataset(n_per_label=(1, 0))
        once = remove_single_channel(ds, 1)
        twice = remove_single_channel(once, 1)
        assert np.array_equal(once.trials[0].signal, twice.trials[0].signal)

    def test_out_of_range_rejected(self):
        ds = toy_dataset()
        with pytest.raises(IndexError):
            keep_single_channel(ds, 7)
        with pytest.raises(IndexError):
            remove_single_channel(ds, -1)

    def test_zeroed_channels_lose_functional_edges(self):
        ds = toy_dataset(n_per_label=(1, 0), n_channels=3)
        # duplicate channel 1 into channel 2 so an edge exists before filtering
        sig = ds.trials[0].signal.copy()
        sig[2] = sig[1]
        ds = ds.replace_trials([Trial(id="t", signal=sig, label=0)])
        cfg = GraphConfig()
        before = functional_adjacency(ds.trials[0], cfg).weights
        assert before[1, 2] == 1.0
        kept = keep_single_channel(ds, 0)
        after = functional_adjacency(kept.trials[0], cfg).weights
        assert np.all(after == 0.0)

    def test_structural_graph_unaffected_by_channel_filters(self):
        ds = toy_dataset()
        removed = remove_single_channel(ds, 0)
        cfg = GraphConfig(k=1)
        assert np.array_equal(
            structural_adjacency(ds.layout, cfg).weights,
            structural_adjacency(removed.layout, cfg).weights,
        )

    def test_filters_preserve_labels_and_counts(self):
        ds = toy_dataset()
        for filtered in (keep_single_channel(ds, 1), remove_single_channel(ds, 1)):
            assert len(filtered) == len(ds)
            assert np.array_equal(filtered.labels(), ds.labels())


class TestRegionFilter:
    def test_only_keeps_exactly_the_region(self):
        ds = default_layout_dataset(n_trials=1)
        frontal = ds.layout.channels_in_region(Region.FRONTAL)
        only = region_filter(ds, Region.FRONTAL, "only")
        sig = only.trials[0].signal
        for i in range(32):
            if i in frontal:
                assert np.array_equal(sig[i], ds.trials[0].signal[i])
            else:
                assert np.all(sig[i] == 0.0)

    def test_only_and_removed_are_complementary(self):
        ds = default_layout_dataset(n_trials=1)
        only = region_filter(ds, Region.PARIETAL, "only").trials[0].signal
        removed = region_filter(ds, Region.PARIETAL, "removed").trials[0].signal
        only_support = {i for i in range(32) if np.any(only[i] != 0)}
        removed_support = {i for i in range(32) if np.any(removed[i] != 0)}
        assert only_support & removed_support == set()
        assert only_support | removed_support == set(range(32))

    def test_removed_after_only_is_all_zero(self):
        ds = default_layout_dataset(n_trials=1)
        out = region_filter(region_filter(ds, Region.CENTRAL, "only"), Region.CENTRAL, "removed")
        assert np.all(out.trials[0].signal == 0.0)

    def test_region_only_masks_tile_all_channels(self):
        ds = default_layout_dataset(n_trials=1)
        coverage = np.zeros(32, dtype=int)
        for region in Region:
            only = region_filter(ds, region, "only").trials[0].signal
            coverage += np.array([int(np.any(only[i] != 0)) for i in range(32)])
        assert np.array_equal(coverage, np.ones(32, dtype=int))

    def test_empty_region_rejected(self):
        ds = toy_dataset()  # all channels are C* = central
        with pytest.raises(ValueError, match="no member"):
            region_filter(ds, Region.OCCIPITAL, "only")

    def test_bad_mode_rejected(self):
        ds = toy_dataset()
        with pytest.raises(ValueError):
            region_filter(ds, Region.CENTRAL, "both")


class TestSegmentFilter:
    def test_only_keeps_stated_columns(self):
        # T=3200, 10 segments: segment 3 covers columns 960..1279.
        signal = np.tile(np.arange(3200, dtype=float), (2, 1))
        ds = Dataset(
            trials=[Trial(id="t", signal=signal, label=0)],
            layout=ElectrodeLayout(names=("C0", "C1"),
                                   positions=np.array([[0.0, 0.0], [1.0, 0.0]])),
        )
        out = segment_filter(ds, 3, "only")
        assert out.trials[0].signal.shape == (2, 320)
        assert np.array_equal(out.trials[0].signal[0], np.arange(960, 1280, dtype=float))

    def test_removed_drops_one_block(self):
        signal = np.tile(np.arange(3200, dtype=float), (2, 1))
        ds = Dataset(
            trials=[Trial(id="t", signal=signal, label=0)],
            layout=ElectrodeLayout(names=("C0", "C1"),
                                   positions=np.array([[0.0, 0.0], [1.0, 0.0]])),
        )
        out = segment_filter(ds, 0, "removed")
        assert out.trials[0].signal.shape == (2, 2880)
        assert out.trials[0].signal[0, 0] == 320.0

    def test_single_segment_only_is_identity(self):
        ds = toy_dataset(n_per_label=(2, 0))
        out = segment_filter(ds, 0, "only", segments=1)
        for a, b in zip(out.trials, ds.trials):
            assert np.array_equal(a.signal, b.signal)

    def test_indivisible_t_rejected(self):
        ds = toy_dataset(n_per_label=(1, 0), n_samples=41)
        with pytest.raises(ValueError, match="divisible"):
            segment_filter(ds, 0, "only", segments=10)

    def test_segments_tile_time_exactly_once(self):
        ds = toy_dataset(n_per_label=(1, 0), n_samples=40)
        pieces = [
            segment_filter(ds, i, "only", segments=10).trials[0].signal for i in range(10)
        ]
        assert np.array_equal(np.concatenate(pieces, axis=1), ds.trials[0].signal)

    def test_filters_preserve_labels_and_counts(self):
        ds = toy_dataset()
        out = segment_filter(ds, 2, "removed", segments=10)
        assert len(out) == len(ds)
        assert np.array_equal(out.labels(), ds.labels())


def tiny_run_kwargs():
    return dict(
        model_config=ModelConfig(filters=2, gcn_width=2, kernel_size=3, hidden_width=2, seed=0),
        train_config=TrainConfig(epochs=1, batch_size=4, seed=0),
        seeds=[0],
        test_fraction=0.25,
    )


class TestRunAblation:
    def test_channel_only_report_shape(self):
        ds = toy_dataset(n_per_label=(6, 6))
        report = run_ablation("channel_only", ds, **tiny_run_kwargs())
        assert report.protocol == "channel_only"
        assert [r.unit for r in report.rows] == sorted(ds.layout.names)
        for row in report.rows:
            assert row.error is None
            assert row.delta == pytest.approx(
                row.metrics.accuracy - report.baseline.accuracy, abs=1e-12
            )

    def test_deterministic_for_fixed_seeds(self):
        ds = toy_dataset(n_per_label=(6, 6))
        a = run_ablation("segment_only", ds, segments=2, **tiny_run_kwargs())
        b = run_ablation("segment_only", ds, segments=2, **tiny_run_kwargs())
        for ra, rb in zip(a.rows, b.rows):
            assert ra.unit == rb.unit
            assert ra.metrics.accuracy == rb.metrics.accuracy
            assert ra.delta == rb.delta

    def test_region_protocol_uses_present_regions(self):
        ds = toy_dataset(n_per_label=(6, 6))  # every channel is central
        report = run_ablation("region_removed", ds, **tiny_run_kwargs())
        assert [r.unit for r in report.rows] == ["central"]

    def test_segment_removed_degenerate_error_recorded(self):
        ds = toy_dataset(n_per_label=(6, 6))
        report = run_ablation("segment_removed", ds, segments=1, **tiny_run_kwargs())
        assert len(report.rows) == 1
        assert report.rows[0].error is not None
        assert report.rows[0].metrics is None

    def test_unknown_protocol_rejected(self):
        ds = toy_dataset(n_per_label=(6, 6))
        with pytest.raises(ValueError, match="protocol"):
            run_ablation("channel_shuffled", ds, **tiny_run_kwargs())

    def test_empty_seed_list_rejected(self):
        ds = toy_dataset(n_per_label=(6, 6))
        kwargs = tiny_run_kwargs()
        kwargs["seeds"] = []
        with pytest.raises(ValueError, match="seed"):
            run_ablation("channel_only", ds, **kwargs)

    def test_report_files_written(self, tmp_path):
        ds = toy_dataset(n_per_label=(6, 6))
        report = run_ablation("segment_only", ds, segments=2, **tiny_run_kwargs())
        csv_path = tmp_path / "report.csv"
        json_path = tmp_path / "report.json"
        write_report_csv(csv_path, report)
        write_report_json(json_path, report)
        lines = csv_path.read_text().strip().splitlines()
        assert lines[0].startswith("unit,accuracy,balanced_accuracy,")
        assert len(lines) == 3
        assert json_path.exists()
