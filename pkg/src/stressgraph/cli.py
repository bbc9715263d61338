"""Command-line entry point: graph export, (k, tau) sweeps, training, ablation, synth, gradcheck.

Exit codes: 0 success, 1 validation error, 2 runtime error / divergence.
Option precedence: explicit flags > --config JSON file > built-in defaults.
All outputs land inside the directory given by --out.
"""

import argparse
import json
import sys
from pathlib import Path

from . import ablation as ab
from . import figures
from .data import (
    Dataset,
    GraphConfig,
    load_dataset,
    load_layout,
    read_trial_csv,
    stratified_carve,
    write_dataset,
    write_layout_csv,
)
from .graphs import (
    functional_adjacency,
    fuse_adjacency,
    graph_metrics,
    structural_adjacency,
    write_adjacency_csv,
    write_metrics_json,
)
from .models import (
    ModelConfig,
    TrainConfig,
    evaluate,
    gradcheck_suite,
    mean_metrics,
    save_checkpoint,
    std_metrics,
    train,
    write_history_csv,
)
from .synth import SynthSpec, generate

VALIDATION_ERRORS = (
    ValueError,
    KeyError,
    IndexError,
    FileNotFoundError,
    IsADirectoryError,
    NotADirectoryError,
    json.JSONDecodeError,
)


def _int_list(text: str) -> list[int]:
    return [int(p) for p in text.split(",") if p.strip() != ""]


def _float_list(text: str) -> list[float]:
    return [float(p) for p in text.split(",") if p.strip() != ""]


def _apply_config(args: argparse.Namespace, defaults: dict) -> argparse.Namespace:
    """Fill unset options from the --config JSON file, then from defaults."""
    config = {}
    if getattr(args, "config", None):
        config = json.loads(Path(args.config).read_text(encoding="utf-8"))
        if not isinstance(config, dict):
            raise ValueError(f"{args.config}: config file must hold a JSON object")
    for key, default in defaults.items():
        if getattr(args, key, None) is None:
            setattr(args, key, config.get(key, default))
    return args


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _graph_config(args) -> GraphConfig:
    return GraphConfig(k=int(args.k), tau=float(args.tau), epsilon=float(args.epsilon))


def _model_config(args, seed: int) -> ModelConfig:
    hidden = args.hidden_width
    if hidden is None:
        hidden = 64 if args.model == "mlp" else 32
    return ModelConfig(
        kind=args.model,
        filters=int(args.filters),
        gcn_width=int(args.gcn_width),
        kernel_size=int(args.kernel_size),
        hidden_width=int(hidden),
        dropout_rate=float(args.dropout_rate),
        seed=seed,
    )


def _train_config(args, seed: int) -> TrainConfig:
    return TrainConfig(
        epochs=int(args.epochs),
        batch_size=int(args.batch_size),
        learning_rate=float(args.learning_rate),
        val_fraction=float(args.val_fraction),
        seed=seed,
        class_weighted=bool(args.class_weighted),
    )


MODEL_DEFAULTS = {
    "model": "stgcn",
    "filters": 16,
    "gcn_width": 32,
    "kernel_size": 7,
    "hidden_width": None,
    "dropout_rate": 0.3,
}

TRAIN_DEFAULTS = {
    "epochs": 10,
    "batch_size": 8,
    "learning_rate": 0.001,
    "val_fraction": 0.1,
    "test_fraction": 0.2,
    "seed": 0,
    "class_weighted": False,
}

GRAPH_DEFAULTS = {"k": 2, "tau": 0.5, "epsilon": 1e-6}


def _add_model_train_options(sub):
    sub.add_argument("--model", choices=["stgcn", "mlp"])
    sub.add_argument("--filters", type=int)
    sub.add_argument("--gcn-width", dest="gcn_width", type=int)
    sub.add_argument("--kernel-size", dest="kernel_size", type=int)
    sub.add_argument("--hidden-width", dest="hidden_width", type=int)
    sub.add_argument("--dropout-rate", dest="dropout_rate", type=float)
    sub.add_argument("--epochs", type=int)
    sub.add_argument("--batch-size", dest="batch_size", type=int)
    sub.add_argument("--learning-rate", dest="learning_rate", type=float)
    sub.add_argument("--val-fraction", dest="val_fraction", type=float)
    sub.add_argument("--test-fraction", dest="test_fraction", type=float)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--class-weighted", dest="class_weighted", action="store_true", default=None)


def _add_graph_options(sub):
    sub.add_argument("--k", type=int)
    sub.add_argument("--tau", type=float)
    sub.add_argument("--epsilon", type=float)


def cmd_graph(args) -> int:
    _apply_config(args, {**GRAPH_DEFAULTS, "weighted_paths": False})
    layout = load_layout(args.layout)
    trial = read_trial_csv(args.trial, trial_id=Path(args.trial).stem, label=0)
    if trial.n_channels != layout.n_channels:
        raise ValueError(
            f"trial has {trial.n_channels} channels but layout has {layout.n_channels}"
        )
    config = _graph_config(args)
    out = _out_dir(args)
    fused = fuse_adjacency(
        structural_adjacency(layout, config), functional_adjacency(trial, config)
    )
    write_adjacency_csv(out / "adjacency.csv", fused)
    write_metrics_json(out / "metrics.json", graph_metrics(fused, weighted_paths=args.weighted_paths))
    return 0


def _load_inputs(args) -> Dataset:
    layout = load_layout(args.layout)
    return load_dataset(args.manifest, layout)


def cmd_train(args) -> int:
    _apply_config(args, {**MODEL_DEFAULTS, **TRAIN_DEFAULTS, **GRAPH_DEFAULTS,
                         "runs": 1, "run_mode": "resplit"})
    dataset = _load_inputs(args)
    graph_config = _graph_config(args)
    out = _out_dir(args)
    runs = int(args.runs)
    base_seed = int(args.seed)

    per_run = []
    for i in range(runs):
        run_seed = base_seed + i
        split_seed = run_seed if args.run_mode == "resplit" else base_seed
        train_trials, test_trials = stratified_carve(
            dataset.trials, float(args.test_fraction), split_seed
        )
        model, history = train(
            _model_config(args, run_seed),
            _train_config(args, run_seed),
            dataset.replace_trials(train_trials),
            graph_config,
        )
        metrics = evaluate(model, dataset.replace_trials(test_trials), graph_config=graph_config)
        write_history_csv(out / f"history_run{i}.csv", history)
        save_checkpoint(model, out / f"checkpoint_run{i}.json")
        per_run.append(metrics)

    payload = {
        "model": args.model,
        "runs": runs,
        "run_mode": args.run_mode,
        "seeds": [base_seed + i for i in range(runs)],
        "per_run": [m.to_dict() for m in per_run],
        "mean": mean_metrics(per_run).to_dict(),
        "std": std_metrics(per_run).to_dict(),
    }
    (out / "metrics.json").write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return 0


def cmd_sweep(args) -> int:
    _apply_config(args, {**MODEL_DEFAULTS, **TRAIN_DEFAULTS,
                         "epsilon": 1e-6, "k_values": "2,3,4", "tau_values": "0.4,0.5,0.6"})
    dataset = _load_inputs(args)
    out = _out_dir(args)
    k_values = _int_list(args.k_values) if isinstance(args.k_values, str) else list(args.k_values)
    tau_values = (
        _float_list(args.tau_values) if isinstance(args.tau_values, str) else list(args.tau_values)
    )
    seed = int(args.seed)
    train_trials, test_trials = stratified_carve(dataset.trials, float(args.test_fraction), seed)
    train_ds = dataset.replace_trials(train_trials)
    test_ds = dataset.replace_trials(test_trials)

    lines = ["k\\tau," + ",".join(f"{t:g}" for t in tau_values)]
    for k in k_values:
        cells = []
        for tau in tau_values:
            gc = GraphConfig(k=k, tau=tau, epsilon=float(args.epsilon))
            model, _ = train(_model_config(args, seed), _train_config(args, seed), train_ds, gc)
            cells.append(f"{evaluate(model, test_ds, graph_config=gc).accuracy:.4f}")
        lines.append(f"{k}," + ",".join(cells))
    (out / "sweep.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return 0


def cmd_ablate(args) -> int:
    _apply_config(args, {**MODEL_DEFAULTS, **TRAIN_DEFAULTS, **GRAPH_DEFAULTS,
                         "seeds": "0", "segments": 10})
    if args.protocol not in ab.PROTOCOLS:
        raise ValueError(f"unknown protocol {args.protocol!r}; expected one of {ab.PROTOCOLS}")
    dataset = _load_inputs(args)
    seeds = _int_list(args.seeds) if isinstance(args.seeds, str) else list(args.seeds)
    out = _out_dir(args)
    report = ab.run_ablation(
        args.protocol,
        dataset,
        _model_config(args, int(args.seed)),
        _train_config(args, int(args.seed)),
        seeds,
        graph_config=_graph_config(args),
        test_fraction=float(args.test_fraction),
        segments=int(args.segments),
    )
    ab.write_report_csv(out / "ablation.csv", report)
    ab.write_report_json(out / "ablation.json", report)

    if args.protocol.startswith("channel"):
        values = {
            r.unit: r.metrics.accuracy for r in report.rows if r.metrics is not None
        }
        topomap_lines = [f"{name},{values[name]:.10g}" for name in dataset.layout.names
                         if name in values]
        (out / "topomap.csv").write_text("\n".join(topomap_lines) + "\n", encoding="utf-8")
        svg = figures.topomap_svg(dataset.layout, values)
    else:
        if args.protocol.endswith("_removed"):
            items = [(r.unit, r.delta) for r in report.rows]
            label = "accuracy delta vs baseline"
        else:
            items = [(r.unit, r.metrics.accuracy if r.metrics else None) for r in report.rows]
            label = "accuracy"
        svg = figures.bar_chart_svg(items, y_label=label)
    (out / "ablation.svg").write_text(svg, encoding="utf-8")
    return 0


def cmd_synth(args) -> int:
    _apply_config(args, {
        "n_relaxed": 120, "n_stressed": 360, "channels": 32, "samples": 3200,
        "sample_rate": 128.0, "signature_channels": "", "signature_segments": None,
        "amplitude": 0.0, "freq": 10.0, "gain": 0.0, "seed": 0, "segments": 10,
    })
    sig_channels = args.signature_channels
    if isinstance(sig_channels, str):
        sig_channels = tuple(_int_list(sig_channels))
    sig_segments = args.signature_segments
    if isinstance(sig_segments, str):
        sig_segments = tuple(_int_list(sig_segments)) if sig_segments.strip() else None
    spec = SynthSpec(
        n_relaxed=int(args.n_relaxed),
        n_stressed=int(args.n_stressed),
        n_channels=int(args.channels),
        n_samples=int(args.samples),
        sample_rate=float(args.sample_rate),
        signature_channels=tuple(sig_channels or ()),
        signature_segments=sig_segments,
        signature_amplitude=float(args.amplitude),
        signature_freq=float(args.freq),
        shared_noise_gain=float(args.gain),
        seed=int(args.seed),
        segments=int(args.segments),
    )
    dataset = generate(spec)
    out = _out_dir(args)
    write_dataset(dataset, out)
    write_layout_csv(out / "layout.csv", dataset.layout)
    return 0


def cmd_gradcheck(args) -> int:
    _apply_config(args, {"size": "toy", "tolerance": 1e-4})
    if args.size != "toy":
        raise ValueError(f"unsupported gradcheck size {args.size!r}")
    tolerance = float(args.tolerance)
    report = gradcheck_suite()
    worst = 0.0
    for model_name, blocks in report.items():
        for block, err in blocks.items():
            worst = max(worst, err)
            status = "ok" if err < tolerance else "FAIL"
            print(f"{model_name} {block}: max_rel_err={err:.3e} {status}")
    passed = worst < tolerance
    print(f"gradcheck {'PASSED' if passed else 'FAILED'} "
          f"(worst {worst:.3e}, tolerance {tolerance:g})")
    return 0 if passed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stressgraph",
        description="EEG connectivity graphs and a from-scratch ST-GCN stress classifier",
    )
    subs = parser.add_subparsers(dest="command")

    p = subs.add_parser("graph", help="export a trial's fused adjacency and quality metrics")
    p.add_argument("trial")
    p.add_argument("layout")
    _add_graph_options(p)
    p.add_argument("--weighted-paths", dest="weighted_paths", action="store_true", default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(handler=cmd_graph)

    p = subs.add_parser("train", help="train a model and report the metric suite")
    p.add_argument("manifest")
    p.add_argument("layout")
    _add_model_train_options(p)
    _add_graph_options(p)
    p.add_argument("--runs", type=int)
    p.add_argument("--run-mode", dest="run_mode", choices=["resplit", "reinit"])
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(handler=cmd_train)

    p = subs.add_parser("sweep", help="accuracy grid over (k, tau) graph parameters")
    p.add_argument("manifest")
    p.add_argument("layout")
    _add_model_train_options(p)
    p.add_argument("--k-values", dest="k_values")
    p.add_argument("--tau-values", dest="tau_values")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(handler=cmd_sweep)

    p = subs.add_parser("ablate", help="run an ablation protocol and render its figure")
    p.add_argument("manifest")
    p.add_argument("layout")
    p.add_argument("--protocol", required=True)
    p.add_argument("--seeds")
    p.add_argument("--segments", type=int)
    _add_model_train_options(p)
    _add_graph_options(p)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(handler=cmd_ablate)

    p = subs.add_parser("synth", help="generate a synthetic dataset (trial CSVs + manifest)")
    p.add_argument("--n-relaxed", dest="n_relaxed", type=int)
    p.add_argument("--n-stressed", dest="n_stressed", type=int)
    p.add_argument("--channels", type=int)
    p.add_argument("--samples", type=int)
    p.add_argument("--sample-rate", dest="sample_rate", type=float)
    p.add_argument("--signature-channels", dest="signature_channels")
    p.add_argument("--signature-segments", dest="signature_segments")
    p.add_argument("--amplitude", type=float)
    p.add_argument("--freq", type=float)
    p.add_argument("--gain", type=float)
    p.add_argument("--segments", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(handler=cmd_synth)

    p = subs.add_parser("gradcheck", help="finite-difference check of every layer's backward pass")
    p.add_argument("--size")
    p.add_argument("--tolerance", type=float)
    p.add_argument("--config")
    p.set_defaults(handler=cmd_gradcheck)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not getattr(args, "handler", None):
        parser.print_help()
        return 1
    try:
        return args.handler(args)
    except VALIDATION_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FloatingPointError as exc:
        print(f"error: training diverged: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    sys.exit(main())
