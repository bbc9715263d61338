"""Trial/dataset/layout containers, normalization, and stratified splitting."""

import json
import math
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path

import numpy as np

LABEL_NAMES = {0: "relaxed", 1: "stressed"}
LABEL_VALUES = {"relaxed": 0, "stressed": 1}


class Region(str, Enum):
    FRONTAL = "frontal"
    FRONTAL_CENTRAL = "frontal-central"
    FRONTAL_TEMPORAL = "frontal-temporal"
    TEMPORAL = "temporal"
    CENTRAL = "central"
    CENTRAL_PARIETAL = "central-parietal"
    PARIETAL = "parietal"
    PARIETAL_OCCIPITAL = "parietal-occipital"
    OCCIPITAL = "occipital"


# Longest matching prefix wins, so FC5 is frontal-central rather than frontal.
# Midline z-suffixed channels (Fz, Cz, Pz, Oz) resolve through their letter prefix.
_REGION_PREFIXES = [
    ("FP", Region.FRONTAL),
    ("AF", Region.FRONTAL),
    ("FC", Region.FRONTAL_CENTRAL),
    ("FT", Region.FRONTAL_TEMPORAL),
    ("CP", Region.CENTRAL_PARIETAL),
    ("PO", Region.PARIETAL_OCCIPITAL),
    ("F", Region.FRONTAL),
    ("T", Region.TEMPORAL),
    ("C", Region.CENTRAL),
    ("P", Region.PARIETAL),
    ("O", Region.OCCIPITAL),
]


def region_of_channel(name: str) -> Region:
    """Map a 10-20 channel name to its brain region by longest prefix match."""
    upper = name.upper()
    best = None
    for prefix, region in _REGION_PREFIXES:
        if upper.startswith(prefix) and (best is None or len(prefix) > len(best[0])):
            best = (prefix, region)
    if best is None:
        raise ValueError(f"channel name {name!r} has no known region prefix")
    return best[1]


@dataclass(frozen=True)
class ElectrodeLayout:
    """Ordered channel names with 2-D head coordinates and region assignments."""

    names: tuple[str, ...]
    positions: np.ndarray  # (N, 2)

    def __post_init__(self):
        if len(self.names) < 2:
            raise ValueError("layout needs at least 2 channels")
        if len(set(self.names)) != len(self.names):
            dupes = sorted({n for n in self.names if self.names.count(n) > 1})
            raise ValueError(f"duplicate channel names: {dupes}")
        pos = np.asarray(self.positions, dtype=float)
        if pos.shape != (len(self.names), 2):
            raise ValueError(f"positions shape {pos.shape} does not match {len(self.names)} channels")
        if not np.all(np.isfinite(pos)):
            raise ValueError("non-finite electrode coordinates")
        object.__setattr__(self, "positions", pos)

    @property
    def n_channels(self) -> int:
        return len(self.names)

    def region_of(self, name: str) -> Region:
        if name not in self.names:
            raise KeyError(f"unknown channel {name!r}")
        return region_of_channel(name)

    def regions(self) -> list[Region]:
        return [region_of_channel(n) for n in self.names]

    def channels_in_region(self, region: Region) -> list[int]:
        return [i for i, n in enumerate(self.names) if region_of_channel(n) == region]

    def index_of(self, name: str) -> int:
        return self.names.index(name)


@dataclass
class Trial:
    """One EEG recording: channels x time samples plus a binary label."""

    id: str
    signal: np.ndarray  # (N, T)
    label: int  # 0 = relaxed, 1 = stressed

    def __post_init__(self):
        sig = np.asarray(self.signal, dtype=float)
        if sig.ndim != 2:
            raise ValueError(f"trial {self.id}: signal must be 2-D, got shape {sig.shape}")
        if sig.shape[1] < 2:
            raise ValueError(f"trial {self.id}: needs at least 2 samples, got {sig.shape[1]}")
        if not np.all(np.isfinite(sig)):
            raise ValueError(f"trial {self.id}: non-finite samples")
        if self.label not in (0, 1):
            raise ValueError(f"trial {self.id}: label must be 0 or 1, got {self.label}")
        self.signal = sig

    @property
    def n_channels(self) -> int:
        return self.signal.shape[0]

    @property
    def n_samples(self) -> int:
        return self.signal.shape[1]


@dataclass
class Dataset:
    trials: list[Trial]
    layout: ElectrodeLayout

    def __post_init__(self):
        for t in self.trials:
            if t.n_channels != self.layout.n_channels:
                raise ValueError(
                    f"trial {t.id}: {t.n_channels} channels but layout has {self.layout.n_channels}"
                )

    def __len__(self) -> int:
        return len(self.trials)

    def labels(self) -> np.ndarray:
        return np.array([t.label for t in self.trials], dtype=int)

    def replace_trials(self, trials: list[Trial]) -> "Dataset":
        return Dataset(trials=trials, layout=self.layout)


@dataclass(frozen=True)
class GraphConfig:
    """Graph construction parameters: neighbor count, correlation threshold, distance regularizer."""

    k: int = 2
    tau: float = 0.5
    epsilon: float = 1e-6

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError(f"k must be a positive integer, got {self.k}")
        if not (0.0 < self.tau < 1.0):
            raise ValueError(f"tau must lie strictly in (0, 1), got {self.tau}")
        if not (self.epsilon > 0):
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")


def load_layout(path: str | Path) -> ElectrodeLayout:
    """Read an electrode layout file: one `name,x,y` record per line, UTF-8."""
    text = Path(path).read_text(encoding="utf-8")
    names: list[str] = []
    coords: list[tuple[float, float]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line:
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise ValueError(f"{path}:{lineno}: expected `name,x,y`, got {raw!r}")
        name = parts[0]
        if not name:
            raise ValueError(f"{path}:{lineno}: empty channel name")
        try:
            x, y = float(parts[1]), float(parts[2])
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: bad coordinate in {raw!r}") from exc
        if not (math.isfinite(x) and math.isfinite(y)):
            raise ValueError(f"{path}:{lineno}: non-finite coordinate for {name}")
        names.append(name)
        coords.append((x, y))
    if not names:
        raise ValueError(f"{path}: empty layout file")
    return ElectrodeLayout(names=tuple(names), positions=np.array(coords, dtype=float))


def write_layout_csv(path: str | Path, layout: ElectrodeLayout) -> None:
    lines = [
        f"{name},{x:.10g},{y:.10g}" for name, (x, y) in zip(layout.names, layout.positions)
    ]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def default_layout() -> ElectrodeLayout:
    """The bundled 32-channel 10-20 layout."""
    ref = resources.files("stressgraph.resources").joinpath("layout32.csv")
    with resources.as_file(ref) as path:
        return load_layout(path)


def zscore_normalize(trial: Trial) -> Trial:
    """Per-channel z-score over the full trial (population std). Zero-variance rows become zeros."""
    sig = trial.signal
    mean = sig.mean(axis=1, keepdims=True)
    std = sig.std(axis=1, keepdims=True)
    out = np.zeros_like(sig)
    nonzero = std[:, 0] > 0
    out[nonzero] = (sig[nonzero] - mean[nonzero]) / std[nonzero]
    return Trial(id=trial.id, signal=out, label=trial.label)


def _largest_remainder_counts(per_label: dict[int, int], fraction: float) -> dict[int, int]:
    """Allocate round(fraction * total) slots across labels proportionally.

    Floors of the per-label quotas first, then one extra slot at a time by
    largest fractional remainder; ties go to the smaller label value.
    """
    total = sum(per_label.values())
    target = int(round(fraction * total))
    quotas = {lbl: fraction * n for lbl, n in per_label.items()}
    counts = {lbl: int(math.floor(q)) for lbl, q in quotas.items()}
    leftover = target - sum(counts.values())
    order = sorted(per_label, key=lambda lbl: (-(quotas[lbl] - counts[lbl]), lbl))
    for lbl in order[:max(leftover, 0)]:
        counts[lbl] += 1
    return counts


def stratified_split(
    dataset: Dataset, test_fraction: float, val_fraction: float, seed: int
) -> tuple[Dataset, Dataset, Dataset]:
    """Split into (train, val, test) preserving per-label proportions within rounding.

    Deterministic for a fixed seed and invariant to the input trial order:
    trials are ordered by id within each label before the seeded shuffle.
    """
    for name, frac in (("test_fraction", test_fraction), ("val_fraction", val_fraction)):
        if not (0.0 < frac < 1.0):
            raise ValueError(f"{name} must lie in (0, 1), got {frac}")
    if test_fraction + val_fraction >= 1.0:
        raise ValueError("test_fraction + val_fraction must be < 1")

    by_label: dict[int, list[Trial]] = {}
    for t in dataset.trials:
        by_label.setdefault(t.label, []).append(t)
    per_label = {lbl: len(ts) for lbl, ts in by_label.items()}
    test_counts = _largest_remainder_counts(per_label, test_fraction)
    val_counts = _largest_remainder_counts(per_label, val_fraction)

    rng = np.random.default_rng(seed)
    train: list[Trial] = []
    val: list[Trial] = []
    test: list[Trial] = []
    for lbl in sorted(by_label):
        ordered = sorted(by_label[lbl], key=lambda t: t.id)
        perm = rng.permutation(len(ordered))
        shuffled = [ordered[i] for i in perm]
        n_test, n_val = test_counts[lbl], val_counts[lbl]
        if n_test + n_val >= len(shuffled):
            raise ValueError(
                f"label {lbl}: {len(shuffled)} trials cannot populate test={n_test}, "
                f"val={n_val} and a non-empty train partition"
            )
        test.extend(shuffled[:n_test])
        val.extend(shuffled[n_test:n_test + n_val])
        train.extend(shuffled[n_test + n_val:])
    make = dataset.replace_trials
    return make(train), make(val), make(test)


def stratified_carve(trials: list[Trial], fraction: float, seed: int) -> tuple[list[Trial], list[Trial]]:
    """Split trials into (rest, carved) preserving label proportions within rounding.

    Same ordering contract as stratified_split: trials are sorted by id within
    each label before the seeded shuffle, so the result is permutation-invariant.
    """
    if not (0.0 < fraction < 1.0):
        raise ValueError(f"fraction must lie in (0, 1), got {fraction}")
    by_label: dict[int, list[Trial]] = {}
    for t in trials:
        by_label.setdefault(t.label, []).append(t)
    counts = _largest_remainder_counts({lbl: len(ts) for lbl, ts in by_label.items()}, fraction)
    rng = np.random.default_rng(seed)
    rest: list[Trial] = []
    carved: list[Trial] = []
    for lbl in sorted(by_label):
        ordered = sorted(by_label[lbl], key=lambda t: t.id)
        perm = rng.permutation(len(ordered))
        shuffled = [ordered[i] for i in perm]
        carved.extend(shuffled[: counts[lbl]])
        rest.extend(shuffled[counts[lbl]:])
    return rest, carved


def read_trial_csv(path: str | Path, trial_id: str, label: int) -> Trial:
    """Read a trial file: N rows x T comma-separated samples."""
    signal = np.loadtxt(path, delimiter=",", ndmin=2, dtype=float)
    return Trial(id=trial_id, signal=signal, label=label)


def write_trial_csv(path: str | Path, trial: Trial) -> None:
    np.savetxt(path, trial.signal, delimiter=",", fmt="%.17g")


def load_dataset(manifest_path: str | Path, layout: ElectrodeLayout) -> Dataset:
    """Load trials listed in a JSON manifest: array of {id, file, label}.

    Trial file paths are resolved relative to the manifest's directory.
    """
    manifest_path = Path(manifest_path)
    entries = json.loads(manifest_path.read_text(encoding="utf-8"))
    if not isinstance(entries, list):
        raise ValueError(f"{manifest_path}: manifest must be a JSON array")
    trials = []
    for entry in entries:
        try:
            trial_id, fname, label_name = entry["id"], entry["file"], entry["label"]
        except (TypeError, KeyError) as exc:
            raise ValueError(f"{manifest_path}: each entry needs id, file, label") from exc
        if label_name not in LABEL_VALUES:
            raise ValueError(f"{manifest_path}: unknown label {label_name!r} for trial {trial_id}")
        trials.append(
            read_trial_csv(manifest_path.parent / fname, trial_id, LABEL_VALUES[label_name])
        )
    return Dataset(trials=trials, layout=layout)


def write_dataset(dataset: Dataset, out_dir: str | Path) -> Path:
    """Write one CSV per trial plus manifest.json; returns the manifest path."""
    out_dir = Path(out_dir)
    trials_dir = out_dir / "trials"
    trials_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for trial in dataset.trials:
        fname = f"trials/{trial.id}.csv"
        write_trial_csv(out_dir / fname, trial)
        entries.append({"id": trial.id, "file": fname, "label": LABEL_NAMES[trial.label]})
    manifest = out_dir / "manifest.json"
    manifest.write_text(json.dumps(entries, indent=2) + "\n", encoding="utf-8")
    return manifest
