"""Seeded synthetic EEG datasets with controllable planted stress signatures.

Each channel is pink (1/f) background noise. Stressed trials additionally get
a common sinusoid plus a shared noise source on the signature channels within
the signature segments, which raises both their rectified spectral energy and
their mutual Pearson correlation.
"""

import math
from dataclasses import dataclass

import numpy as np

from .data import Dataset, ElectrodeLayout, Trial, default_layout


@dataclass(frozen=True)
class SynthSpec:
    n_relaxed: int = 120
    n_stressed: int = 360
    n_channels: int = 32
    n_samples: int = 3200
    sample_rate: float = 128.0
    signature_channels: tuple[int, ...] = ()
    signature_segments: tuple[int, ...] | None = None  # None = every segment
    signature_amplitude: float = 0.0
    signature_freq: float = 10.0
    shared_noise_gain: float = 0.0
    seed: int = 0
    segments: int = 10

    def __post_init__(self):
        if self.n_relaxed < 0 or self.n_stressed < 0 or self.n_relaxed + self.n_stressed < 1:
            raise ValueError("need at least one trial")
        if self.n_channels < 2 or self.n_samples < 2:
            raise ValueError("need at least 2 channels and 2 samples")
        if self.n_samples % self.segments != 0:
            raise ValueError(f"n_samples={self.n_samples} not divisible by {self.segments} segments")
        for c in self.signature_channels:
            if not (0 <= c < self.n_channels):
                raise ValueError(f"signature channel {c} out of range")
        if self.signature_segments is not None:
            for s in self.signature_segments:
                if not (0 <= s < self.segments):
                    raise ValueError(f"signature segment {s} out of range")
        for name in ("signature_amplitude", "shared_noise_gain", "sample_rate", "signature_freq"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and non-negative")


def _pink(rng: np.random.Generator, n_samples: int) -> np.ndarray:
    """1/f-shaped noise via spectral scaling of white Gaussian bins, unit variance."""
    n_bins = n_samples // 2 + 1
    spectrum = rng.standard_normal(n_bins) + 1j * rng.standard_normal(n_bins)
    freqs = np.fft.rfftfreq(n_samples)
    scale = np.zeros(n_bins)
    scale[1:] = 1.0 / np.sqrt(freqs[1:])
    spectrum *= scale  # DC bin zeroed: exactly zero-mean output
    y = np.fft.irfft(spectrum, n=n_samples)
    std = y.std()
    return y / std if std > 0 else y


def pink_noise(n_samples: int, seed: int) -> np.ndarray:
    """Zero-mean, unit-variance noise with approximately 1/f spectral density."""
    if n_samples < 2:
        raise ValueError("need at least 2 samples")
    return _pink(np.random.default_rng(seed), n_samples)


def _synth_layout(n_channels: int) -> ElectrodeLayout:
    full = default_layout()
    if n_channels > full.n_channels:
        raise ValueError(f"synthetic layouts support at most {full.n_channels} channels")
    if n_channels == full.n_channels:
        return full
    return ElectrodeLayout(
        names=full.names[:n_channels], positions=full.positions[:n_channels]
    )


def generate(spec: SynthSpec) -> Dataset:
    """Generate a seeded dataset; relaxed trials first, then stressed trials."""
    layout = _synth_layout(spec.n_channels)
    n_total = spec.n_relaxed + spec.n_stressed
    children = np.random.SeedSequence(spec.seed).spawn(n_total)
    seg_len = spec.n_samples // spec.segments
    seg_indices = (
        range(spec.segments) if spec.signature_segments is None else spec.signature_segments
    )
    mask = np.zeros(spec.n_samples)
    for s in seg_indices:
        mask[s * seg_len:(s + 1) * seg_len] = 1.0
    t_axis = np.arange(spec.n_samples) / spec.sample_rate

    trials = []
    for i in range(n_total):
        label = 0 if i < spec.n_relaxed else 1
        rng = np.random.default_rng(children[i])
        signal = np.stack([_pink(rng, spec.n_samples) for _ in range(spec.n_channels)])
        if label == 1 and spec.signature_channels:
            phase = rng.uniform(0.0, 2.0 * math.pi)
            shared = rng.standard_normal(spec.n_samples)
            planted = mask * (
                spec.signature_amplitude
                * np.sin(2.0 * math.pi * spec.signature_freq * t_axis + phase)
                + spec.shared_noise_gain * shared
            )
            for c in spec.signature_channels:
                signal[c] += planted
        trials.append(Trial(id=f"synth-{i:04d}", signal=signal, label=label))
    return Dataset(trials=trials, layout=layout)
