"""Model assembly, the training loop, and the evaluation metric suite."""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import Dataset, GraphConfig, stratified_carve, zscore_normalize
from .graphs import Adjacency, renormalize, structural_adjacency, trial_propagation_matrix
from .nn import (
    Adam,
    Dense,
    Dropout,
    GraphConv,
    NodePool,
    Tensor,
    TemporalConv,
    TimePool,
    bce_loss,
    gradcheck,
)


@dataclass(frozen=True)
class ModelConfig:
    kind: str = "stgcn"  # "stgcn" or "mlp"
    filters: int = 16  # temporal conv output features
    gcn_width: int = 32  # graph conv output features
    kernel_size: int = 7
    hidden_width: int = 32  # dense head width (the MLP baseline uses 64)
    dropout_rate: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("stgcn", "mlp"):
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kernel_size % 2 != 1 or self.kernel_size < 1:
            raise ValueError(f"kernel_size must be a positive odd integer, got {self.kernel_size}")
        for name in ("filters", "gcn_width", "hidden_width"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ValueError(f"dropout_rate must lie in [0, 1), got {self.dropout_rate}")


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 10
    batch_size: int = 8
    learning_rate: float = 0.001
    val_fraction: float = 0.1
    seed: int = 0
    class_weighted: bool = False  # inverse-frequency loss weights; off by default

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if not (0.0 < self.val_fraction < 1.0):
            raise ValueError(f"val_fraction must lie in (0, 1), got {self.val_fraction}")


@dataclass
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc_roc: float

    def to_dict(self) -> dict:
        def enc(v: float):
            return v if math.isfinite(v) else None

        return {
            "accuracy": enc(self.accuracy),
            "precision": enc(self.precision),
            "recall": enc(self.recall),
            "f1": enc(self.f1),
            "auc_roc": enc(self.auc_roc),
        }


class StgcnModel:
    """Temporal conv -> time pool -> graph conv -> node pool -> dense head."""

    kind = "stgcn"

    def __init__(self, config: ModelConfig):
        self.config = config
        rng = np.random.default_rng(config.seed)
        self.conv = TemporalConv(config.kernel_size, config.filters, rng)
        self.time_pool = TimePool()
        self.gcn = GraphConv(config.filters, config.gcn_width, rng)
        self.node_pool = NodePool()
        self.hidden = Dense(config.gcn_width, config.hidden_width, "relu", rng)
        self.head = Dense(config.hidden_width, 1, "sigmoid", rng)

    def params(self) -> list[tuple[str, Tensor]]:
        named = []
        named += self.conv.params()
        named += self.gcn.params()
        named += [("hidden." + n, t) for n, t in self.hidden.params()]
        named += [("head." + n, t) for n, t in self.head.params()]
        return named

    def forward(self, signal: np.ndarray, a_hat: np.ndarray, training: bool = False) -> float:
        h = self.conv.forward(signal)
        z = self.time_pool.forward(h)
        z = self.gcn.forward(z, a_hat)
        v = self.node_pool.forward(z)
        v = self.hidden.forward(v)
        p = self.head.forward(v)
        return float(p[0])

    def backward(self, d_out: float) -> np.ndarray:
        g = self.head.backward(np.array([d_out]))
        g = self.hidden.backward(g)
        g = self.node_pool.backward(g)
        g = self.gcn.backward(g)
        g = self.time_pool.backward(g)
        return self.conv.backward(g)


class MlpModel:
    """Flatten -> dense(hidden, relu) -> dropout -> dense(1, sigmoid) baseline."""

    kind = "mlp"

    def __init__(self, config: ModelConfig, input_width: int):
        self.config = config
        self.input_width = input_width
        rng = np.random.default_rng(config.seed)
        self.hidden = Dense(input_width, config.hidden_width, "relu", rng)
        self.dropout = Dropout(config.dropout_rate, seed=config.seed + 1)
        self.head = Dense(config.hidden_width, 1, "sigmoid", rng)

    def params(self) -> list[tuple[str, Tensor]]:
        named = [("hidden." + n, t) for n, t in self.hidden.params()]
        named += [("head." + n, t) for n, t in self.head.params()]
        return named

    def forward(self, signal: np.ndarray, a_hat: np.ndarray | None = None,
                training: bool = False) -> float:
        flat = signal.reshape(-1)
        if flat.size != self.input_width:
            raise ValueError(
                f"input width {flat.size} does not match trained width {self.input_width}"
            )
        h = self.hidden.forward(flat)
        h = self.dropout.forward(h, training)
        p = self.head.forward(h)
        return float(p[0])

    def backward(self, d_out: float) -> np.ndarray:
        g = self.head.backward(np.array([d_out]))
        g = self.dropout.backward(g)
        return self.hidden.backward(g)


def build_model(config: ModelConfig, dataset: Dataset | None = None):
    if config.kind == "stgcn":
        return StgcnModel(config)
    if dataset is None or not dataset.trials:
        raise ValueError("mlp needs a dataset to fix its flattened input width")
    first = dataset.trials[0]
    return MlpModel(config, first.n_channels * first.n_samples)


def prepare_inputs(
    dataset: Dataset, graph_config: GraphConfig, need_graphs: bool
) -> list[tuple[np.ndarray, np.ndarray | None, int]]:
    """Normalize trials and (for the graph model) build each trial's propagation matrix."""
    a_struct = structural_adjacency(dataset.layout, graph_config) if need_graphs else None
    prepared = []
    for trial in dataset.trials:
        norm = zscore_normalize(trial)
        a_hat = None
        if need_graphs:
            a_hat = trial_propagation_matrix(norm, dataset.layout, graph_config, a_struct).weights
        prepared.append((norm.signal, a_hat, trial.label))
    return prepared


def train(
    model_config: ModelConfig,
    train_config: TrainConfig,
    dataset: Dataset,
    graph_config: GraphConfig | None = None,
):
    """Train on a stratified carve-out of the dataset; returns (model, history).

    Per epoch: seeded shuffle, mini-batches, forward -> mean BCE -> backward ->
    Adam. History rows record train/val loss and accuracy. Deterministic for a
    fixed seed pair (model_config.seed, train_config.seed).
    """
    if not dataset.trials:
        raise ValueError("dataset is empty")
    labels = {t.label for t in dataset.trials}
    if labels != {0, 1}:
        raise ValueError("training needs both labels present")
    graph_config = graph_config or GraphConfig()

    train_trials, val_trials = stratified_carve(
        dataset.trials, train_config.val_fraction, train_config.seed
    )
    train_ds = dataset.replace_trials(train_trials)
    val_ds = dataset.replace_trials(val_trials)

    model = build_model(model_config, train_ds)
    need_graphs = model.kind == "stgcn"
    train_inputs = prepare_inputs(train_ds, graph_config, need_graphs)
    val_inputs = prepare_inputs(val_ds, graph_config, need_graphs) if val_trials else []

    class_weights = {0: 1.0, 1: 1.0}
    if train_config.class_weighted:
        counts = {lbl: sum(1 for _, _, y in train_inputs if y == lbl) for lbl in (0, 1)}
        total = len(train_inputs)
        class_weights = {lbl: total / (2.0 * counts[lbl]) for lbl in (0, 1)}

    optimizer = Adam(model.params(), learning_rate=train_config.learning_rate)
    shuffle_rng = np.random.default_rng(train_config.seed)
    history = []
    n_train = len(train_inputs)
    for epoch in range(train_config.epochs):
        order = shuffle_rng.permutation(n_train)
        epoch_losses = []
        correct = 0
        for start in range(0, n_train, train_config.batch_size):
            batch = order[start:start + train_config.batch_size]
            optimizer.zero_grad()
            for idx in batch:
                signal, a_hat, label = train_inputs[idx]
                p = model.forward(signal, a_hat, training=True)
                loss_i, dp = bce_loss(np.array([p]), np.array([float(label)]))
                if not math.isfinite(loss_i):
                    raise FloatingPointError(f"training diverged: loss is {loss_i}")
                w = class_weights[label]
                model.backward(w * float(dp[0]) / len(batch))
                epoch_losses.append(w * loss_i)
                correct += int((p >= 0.5) == bool(label))
            optimizer.step()
        val_loss, val_acc = _inference_loss_acc(model, val_inputs)
        history.append({
            "epoch": epoch + 1,
            "train_loss": float(np.mean(epoch_losses)),
            "train_acc": correct / n_train,
            "val_loss": val_loss,
            "val_acc": val_acc,
        })
    return model, history


def _inference_loss_acc(model, inputs) -> tuple[float, float]:
    if not inputs:
        return math.nan, math.nan
    ps, ys = [], []
    for signal, a_hat, label in inputs:
        ps.append(model.forward(signal, a_hat, training=False))
        ys.append(float(label))
    loss, _ = bce_loss(np.array(ps), np.array(ys))
    acc = float(np.mean((np.array(ps) >= 0.5) == (np.array(ys) > 0)))
    return loss, acc


def predict_scores(
    model, dataset: Dataset, graph_config: GraphConfig | None = None
) -> np.ndarray:
    graph_config = graph_config or GraphConfig()
    inputs = prepare_inputs(dataset, graph_config, model.kind == "stgcn")
    return np.array([model.forward(sig, a_hat, training=False) for sig, a_hat, _ in inputs])


def auc_roc(scores: np.ndarray, labels: np.ndarray) -> float:
    """AUC via the Mann-Whitney rank statistic with midranks for ties."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValueError("scores and labels must be equal-length vectors")
    n_pos = int((labels == 1).sum())
    n_neg = int((labels == 0).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs at least one positive and one negative label")
    order = np.argsort(scores, kind="mergesort")
    ranks = np.empty(len(scores))
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + 1 + j + 1) / 2.0
        i = j + 1
    rank_sum_pos = float(ranks[labels == 1].sum())
    return (rank_sum_pos - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def metrics_from_scores(scores: np.ndarray, labels: np.ndarray, threshold: float = 0.5) -> Metrics:
    """Threshold scores into hard predictions and compute the full metric suite.

    Precision/recall/F1 target the positive (stressed) label and fall back to 0
    when their denominator is 0. AUC is nan when only one label is present.
    """
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    preds = (scores >= threshold).astype(int)
    accuracy = float((preds == labels).mean())
    tp = int(((preds == 1) & (labels == 1)).sum())
    fp = int(((preds == 1) & (labels == 0)).sum())
    fn = int(((preds == 0) & (labels == 1)).sum())
    precision = tp / (tp + fp) if (tp + fp) > 0 else 0.0
    recall = tp / (tp + fn) if (tp + fn) > 0 else 0.0
    f1 = 2.0 * precision * recall / (precision + recall) if (precision + recall) > 0 else 0.0
    try:
        auc = auc_roc(scores, labels)
    except ValueError:
        auc = math.nan
    return Metrics(accuracy=accuracy, precision=precision, recall=recall, f1=f1, auc_roc=auc)


def balanced_accuracy(scores: np.ndarray, labels: np.ndarray, threshold: float = 0.5) -> float:
    """Mean of per-class recalls; degenerate single-label inputs reduce to that class's recall."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    preds = (scores >= threshold).astype(int)
    recalls = []
    for cls in (0, 1):
        mask = labels == cls
        if mask.any():
            recalls.append(float((preds[mask] == cls).mean()))
    return float(np.mean(recalls))


def evaluate(
    model,
    dataset: Dataset,
    threshold: float = 0.5,
    graph_config: GraphConfig | None = None,
) -> Metrics:
    if not dataset.trials:
        raise ValueError("cannot evaluate on an empty dataset")
    scores = predict_scores(model, dataset, graph_config)
    return metrics_from_scores(scores, dataset.labels(), threshold)


def mean_metrics(items: list[Metrics]) -> Metrics:
    return Metrics(
        accuracy=float(np.mean([m.accuracy for m in items])),
        precision=float(np.mean([m.precision for m in items])),
        recall=float(np.mean([m.recall for m in items])),
        f1=float(np.mean([m.f1 for m in items])),
        auc_roc=float(np.mean([m.auc_roc for m in items])),
    )


def std_metrics(items: list[Metrics]) -> Metrics:
    return Metrics(
        accuracy=float(np.std([m.accuracy for m in items])),
        precision=float(np.std([m.precision for m in items])),
        recall=float(np.std([m.recall for m in items])),
        f1=float(np.std([m.f1 for m in items])),
        auc_roc=float(np.std([m.auc_roc for m in items])),
    )


CHECKPOINT_VERSION = 1


def save_checkpoint(model, path: str | Path) -> None:
    payload = {
        "format_version": CHECKPOINT_VERSION,
        "kind": model.kind,
        "config": {
            "kind": model.config.kind,
            "filters": model.config.filters,
            "gcn_width": model.config.gcn_width,
            "kernel_size": model.config.kernel_size,
            "hidden_width": model.config.hidden_width,
            "dropout_rate": model.config.dropout_rate,
            "seed": model.config.seed,
        },
        "input_width": getattr(model, "input_width", None),
        "params": {
            name: {"shape": list(t.data.shape), "values": t.data.reshape(-1).tolist()}
            for name, t in model.params()
        },
    }
    Path(path).write_text(json.dumps(payload, sort_keys=True) + "\n", encoding="utf-8")


def load_checkpoint(path: str | Path):
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    if payload.get("format_version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {payload.get('format_version')}")
    config = ModelConfig(**payload["config"])
    if payload["kind"] == "stgcn":
        model = StgcnModel(config)
    else:
        model = MlpModel(config, int(payload["input_width"]))
    stored = payload["params"]
    for name, tensor in model.params():
        entry = stored[name]
        tensor.data = np.array(entry["values"], dtype=float).reshape(entry["shape"])
    return model


def _checked_model_grads(model, signal: np.ndarray, a_hat: np.ndarray | None, label: float):
    """Forward + BCE + backward once; returns the named blocks (params + input) with grads set."""
    x = Tensor(signal)
    for _, t in model.params():
        t.zero_grad()
    p = model.forward(x.data, a_hat, training=False)
    y = np.array([label])
    _, dp = bce_loss(np.array([p]), y)
    x.grad = model.backward(float(dp[0]))

    def loss_fn():
        prob = model.forward(x.data, a_hat, training=False)
        return bce_loss(np.array([prob]), y)[0]

    return loss_fn, model.params() + [("input", x)]


def gradcheck_suite() -> dict[str, dict[str, float]]:
    """Finite-difference verification of the toy ST-GCN and MLP backward passes.

    Toy sizes: 4 nodes, 32 time steps, 4 conv filters, 4 GCN features. Returns
    per-block max relative errors keyed by model name.
    """
    report = {}

    cfg = ModelConfig(kind="stgcn", filters=4, gcn_width=4, kernel_size=5,
                      hidden_width=4, dropout_rate=0.0, seed=3)
    model = StgcnModel(cfg)
    rng = np.random.default_rng(12)
    signal = rng.standard_normal((4, 32))
    ring = np.zeros((4, 4))
    for i in range(4):
        ring[i, (i + 1) % 4] = ring[(i + 1) % 4, i] = 1.0
    a_hat = renormalize(Adjacency(weights=ring, kind="fused")).weights
    loss_fn, blocks = _checked_model_grads(model, signal, a_hat, label=1.0)
    report["stgcn"] = gradcheck(loss_fn, blocks)

    mlp_cfg = ModelConfig(kind="mlp", hidden_width=8, dropout_rate=0.3, seed=5)
    mlp = MlpModel(mlp_cfg, input_width=4 * 32)
    mlp_signal = np.random.default_rng(21).standard_normal((4, 32))
    loss_fn, blocks = _checked_model_grads(mlp, mlp_signal, None, label=0.0)
    report["mlp"] = gradcheck(loss_fn, blocks)
    return report


def write_history_csv(path: str | Path, history: list[dict]) -> None:
    lines = ["epoch,train_loss,train_acc,val_loss,val_acc"]
    for row in history:
        lines.append(
            f"{row['epoch']},{row['train_loss']:.10g},{row['train_acc']:.10g},"
            f"{row['val_loss']:.10g},{row['val_acc']:.10g}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
