"""Interpretability protocols: channel, region, and temporal segment ablation with ranked reports."""

import json
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .data import Dataset, GraphConfig, Region, Trial, stratified_carve
from .models import (
    Metrics,
    ModelConfig,
    TrainConfig,
    balanced_accuracy,
    mean_metrics,
    metrics_from_scores,
    predict_scores,
    train,
)

PROTOCOLS = (
    "channel_only",
    "channel_removed",
    "region_only",
    "region_removed",
    "segment_only",
    "segment_removed",
)


def _zero_channels(dataset: Dataset, zeroed: list[int]) -> Dataset:
    trials = []
    for t in dataset.trials:
        signal = t.signal.copy()
        signal[zeroed, :] = 0.0
        trials.append(Trial(id=t.id, signal=signal, label=t.label))
    return dataset.replace_trials(trials)


def keep_single_channel(dataset: Dataset, channel_index: int) -> Dataset:
    """Zero every channel except the named one."""
    n = dataset.layout.n_channels
    if not (0 <= channel_index < n):
        raise IndexError(f"channel index {channel_index} out of range [0, {n})")
    return _zero_channels(dataset, [i for i in range(n) if i != channel_index])


def remove_single_channel(dataset: Dataset, channel_index: int) -> Dataset:
    """Zero only the named channel."""
    n = dataset.layout.n_channels
    if not (0 <= channel_index < n):
        raise IndexError(f"channel index {channel_index} out of range [0, {n})")
    return _zero_channels(dataset, [channel_index])


def region_filter(dataset: Dataset, region: Region, mode: str) -> Dataset:
    """Zero the complement of a region (mode "only") or the region itself (mode "removed")."""
    if mode not in ("only", "removed"):
        raise ValueError(f"mode must be 'only' or 'removed', got {mode!r}")
    members = dataset.layout.channels_in_region(region)
    if not members:
        raise ValueError(f"region {region.value} has no member channels in this layout")
    if mode == "only":
        zeroed = [i for i in range(dataset.layout.n_channels) if i not in members]
    else:
        zeroed = members
    return _zero_channels(dataset, zeroed)


def segment_filter(dataset: Dataset, segment_index: int, mode: str, segments: int = 10) -> Dataset:
    """Keep only one time segment, or delete it and concatenate the rest."""
    if mode not in ("only", "removed"):
        raise ValueError(f"mode must be 'only' or 'removed', got {mode!r}")
    if not dataset.trials:
        return dataset
    n_samples = dataset.trials[0].n_samples
    if n_samples % segments != 0:
        raise ValueError(f"T={n_samples} is not divisible by {segments} segments")
    if not (0 <= segment_index < segments):
        raise IndexError(f"segment index {segment_index} out of range [0, {segments})")
    seg_len = n_samples // segments
    lo, hi = segment_index * seg_len, (segment_index + 1) * seg_len
    trials = []
    for t in dataset.trials:
        if mode == "only":
            signal = t.signal[:, lo:hi].copy()
        else:
            signal = np.concatenate([t.signal[:, :lo], t.signal[:, hi:]], axis=1)
        trials.append(Trial(id=t.id, signal=signal, label=t.label))
    return dataset.replace_trials(trials)


@dataclass
class AblationRow:
    unit: str
    metrics: Metrics | None
    balanced_accuracy: float | None
    delta: float | None  # unit accuracy minus baseline accuracy
    error: str | None = None


@dataclass
class AblationReport:
    protocol: str
    seeds: list[int]
    baseline: Metrics
    baseline_balanced_accuracy: float
    rows: list[AblationRow]


def _unit_filters(protocol: str, dataset: Dataset, segments: int):
    layout = dataset.layout
    if protocol in ("channel_only", "channel_removed"):
        fn = keep_single_channel if protocol == "channel_only" else remove_single_channel
        return [(name, (lambda ds, i=i: fn(ds, i))) for i, name in enumerate(layout.names)]
    if protocol in ("region_only", "region_removed"):
        mode = "only" if protocol == "region_only" else "removed"
        present = sorted({r for r in layout.regions()}, key=lambda r: r.value)
        return [(r.value, (lambda ds, r=r: region_filter(ds, r, mode))) for r in present]
    if protocol in ("segment_only", "segment_removed"):
        mode = "only" if protocol == "segment_only" else "removed"
        return [
            (f"segment-{i:02d}", (lambda ds, i=i: segment_filter(ds, i, mode, segments)))
            for i in range(segments)
        ]
    raise ValueError(f"unknown protocol {protocol!r}; expected one of {PROTOCOLS}")


def _train_eval(model_config, train_config, graph_config, train_ds, test_ds, seed):
    cfg = replace(model_config, seed=seed)
    tcfg = replace(train_config, seed=seed)
    model, _ = train(cfg, tcfg, train_ds, graph_config)
    scores = predict_scores(model, test_ds, graph_config)
    labels = test_ds.labels()
    return metrics_from_scores(scores, labels), balanced_accuracy(scores, labels)


def run_ablation(
    protocol: str,
    dataset: Dataset,
    model_config: ModelConfig,
    train_config: TrainConfig,
    seeds: list[int],
    graph_config: GraphConfig | None = None,
    test_fraction: float = 0.2,
    segments: int = 10,
) -> AblationReport:
    """Retrain from scratch per unit and seed; report mean metrics and deltas vs baseline.

    The baseline is trained on the unfiltered data with the same seed list.
    Per-unit training failures are recorded in the report instead of raised.
    """
    if protocol not in PROTOCOLS:
        raise ValueError(f"unknown protocol {protocol!r}; expected one of {PROTOCOLS}")
    if not seeds:
        raise ValueError("need at least one seed")
    graph_config = graph_config or GraphConfig()

    train_trials, test_trials = stratified_carve(dataset.trials, test_fraction, train_config.seed)
    train_ds = dataset.replace_trials(train_trials)
    test_ds = dataset.replace_trials(test_trials)

    base_metrics, base_bal = [], []
    for seed in seeds:
        m, b = _train_eval(model_config, train_config, graph_config, train_ds, test_ds, seed)
        base_metrics.append(m)
        base_bal.append(b)
    baseline = mean_metrics(base_metrics)
    baseline_bal = float(np.mean(base_bal))

    rows = []
    for unit, filter_fn in _unit_filters(protocol, dataset, segments):
        try:
            unit_train = filter_fn(train_ds)
            unit_test = filter_fn(test_ds)
            unit_metrics, unit_bal = [], []
            for seed in seeds:
                m, b = _train_eval(
                    model_config, train_config, graph_config, unit_train, unit_test, seed
                )
                unit_metrics.append(m)
                unit_bal.append(b)
            mean_m = mean_metrics(unit_metrics)
            rows.append(
                AblationRow(
                    unit=unit,
                    metrics=mean_m,
                    balanced_accuracy=float(np.mean(unit_bal)),
                    delta=mean_m.accuracy - baseline.accuracy,
                )
            )
        except Exception as exc:  # recorded per unit, not fatal
            rows.append(
                AblationRow(unit=unit, metrics=None, balanced_accuracy=None,
                            delta=None, error=str(exc))
            )
    rows.sort(key=lambda r: r.unit)
    return AblationReport(
        protocol=protocol,
        seeds=list(seeds),
        baseline=baseline,
        baseline_balanced_accuracy=baseline_bal,
        rows=rows,
    )


def write_report_csv(path: str | Path, report: AblationReport) -> None:
    lines = ["unit,accuracy,balanced_accuracy,precision,recall,f1,auc,delta,error"]
    for row in report.rows:
        if row.metrics is None:
            lines.append(f"{row.unit},,,,,,,,{row.error}")
        else:
            m = row.metrics
            lines.append(
                f"{row.unit},{m.accuracy:.10g},{row.balanced_accuracy:.10g},"
                f"{m.precision:.10g},{m.recall:.10g},{m.f1:.10g},{m.auc_roc:.10g},"
                f"{row.delta:.10g},"
            )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def report_to_dict(report: AblationReport) -> dict:
    return {
        "protocol": report.protocol,
        "seeds": report.seeds,
        "baseline": report.baseline.to_dict(),
        "baseline_balanced_accuracy": report.baseline_balanced_accuracy,
        "rows": [
            {
                "unit": r.unit,
                "metrics": r.metrics.to_dict() if r.metrics else None,
                "balanced_accuracy": r.balanced_accuracy,
                "delta": r.delta,
                "error": r.error,
            }
            for r in report.rows
        ],
    }


def write_report_json(path: str | Path, report: AblationReport) -> None:
    Path(path).write_text(
        json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
