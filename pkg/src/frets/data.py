"""Series ingestion, chronological splits, sliding windows and synthetic signals."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from frets.errors import ConfigError, IngestionError

MISSING_TOKENS = {"", "nan", "na", "null"}


@dataclass
class SeriesMatrix:
    """Channels x timestamps."""

    values: np.ndarray
    names: list = field(default_factory=list)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[1] < 1:
            raise IngestionError(f"series must be a non-empty N x T matrix, got {self.values.shape}")
        if not self.names:
            self.names = [f"ch{k}" for k in range(self.values.shape[0])]
        if len(self.names) != self.values.shape[0]:
            raise IngestionError(f"{len(self.names)} names for {self.values.shape[0]} channels")

    @property
    def n_channels(self):
        return self.values.shape[0]

    @property
    def length(self):
        return self.values.shape[1]

    def segment(self, start, stop):
        return SeriesMatrix(self.values[:, start:stop].copy(), list(self.names))


def _parse(token, row, col):
    text = token.strip()
    if text.lower() in MISSING_TOKENS:
        return None
    try:
        value = float(text)
    except ValueError:
        raise IngestionError(f"row {row}, column {col}: cannot parse {token!r} as a number") from None
    if not math.isfinite(value):
        raise IngestionError(f"row {row}, column {col}: non-finite value {token!r}")
    return value


def ingest_csv(path, missing_policy="error", timestamp_column=False):
    """Read a header-first CSV with one timestamp per row and one column per channel.

    Row and column numbers in error messages are 1-based and count the header
    as row 1. ``timestamp_column`` drops a leading non-numeric column.
    """
    if missing_policy not in ("error", "forward_fill"):
        raise ConfigError(f"unknown missing policy {missing_policy!r}")
    path = Path(path)
    try:
        with path.open(newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except OSError as exc:
        raise IngestionError(f"cannot read {path}: {exc.strerror or exc}") from None
    rows = [r for r in rows if r]
    if not rows:
        raise IngestionError(f"{path}: file is empty")
    header, body = rows[0], rows[1:]
    if timestamp_column:
        header = header[1:]
    if not header:
        raise IngestionError(f"{path}: header names no channels")
    if not body:
        raise IngestionError(f"{path}: no data rows")
    width = len(header)
    data = []
    last = None
    for r, raw in enumerate(body, start=2):
        fields_ = raw[1:] if timestamp_column else raw
        if len(fields_) != width:
            raise IngestionError(f"{path}: row {r} has {len(fields_)} fields, expected {width}")
        offset = 2 if timestamp_column else 1
        parsed = [_parse(tok, r, c) for c, tok in enumerate(fields_, start=offset)]
        for c, value in enumerate(parsed):
            if value is None:
                if missing_policy == "error" or last is None:
                    raise IngestionError(f"{path}: row {r}, column {c + offset}: missing value")
                parsed[c] = last[c]
        data.append(parsed)
        last = parsed
    return SeriesMatrix(np.array(data, dtype=np.float64).T, [h.strip() for h in header])


def write_csv(series, path):
    """Inverse of :func:`ingest_csv`; ``repr`` keeps every double exact."""
    path = Path(path)
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(series.names)
        for column in series.values.T:
            writer.writerow([repr(float(v)) for v in column])


@dataclass(frozen=True)
class SplitSpec:
    train: float = 0.7
    val: float = 0.2
    test: float = 0.1

    def __post_init__(self):
        ratios = (self.train, self.val, self.test)
        if any(not r > 0 for r in ratios):
            raise ConfigError(f"split ratios must be positive, got {ratios}")
        if abs(sum(ratios) - 1.0) > 1e-9:
            raise ConfigError(f"split ratios must sum to 1, got {sum(ratios)}")


def split_lengths(T, spec):
    # the epsilon absorbs representation error, e.g. 0.7 * 10 -> 7.000000000000001
    n_train = int(math.floor(spec.train * T + 1e-9))
    n_val = int(math.floor(spec.val * T + 1e-9))
    return n_train, n_val, T - n_train - n_val


def chronological_split(series, spec, min_length=1):
    """Contiguous train/val/test segments, in time order."""
    n_train, n_val, n_test = split_lengths(series.length, spec)
    for name, n in (("train", n_train), ("val", n_val), ("test", n_test)):
        if n < min_length:
            raise ConfigError(
                f"{name} segment has {n} timestamps, needs at least {min_length}"
            )
    return (
        series.segment(0, n_train),
        series.segment(n_train, n_train + n_val),
        series.segment(n_train + n_val, series.length),
    )


@dataclass
class WindowedDataset:
    """Stride-1 (lookback, horizon) pairs cut from one segment.

    ``inputs`` is ``(S, N, L)`` and ``targets`` is ``(S, N, horizon)``.
    """

    source: SeriesMatrix
    lookback: int
    horizon: int
    inputs: np.ndarray
    targets: np.ndarray

    def __len__(self):
        return self.inputs.shape[0]

    def batch(self, idx):
        return self.inputs[idx], self.targets[idx]


def window_count(T, lookback, horizon):
    return max(T - lookback - horizon + 1, 0)


def make_windows(segment, lookback, horizon):
    if lookback < 1 or horizon < 1:
        raise ConfigError(f"lookback and horizon must be >= 1, got {lookback}, {horizon}")
    T = segment.length
    count = window_count(T, lookback, horizon)
    if count == 0:
        raise ConfigError(
            f"segment of length {T} is shorter than lookback + horizon = {lookback + horizon}"
        )
    view = np.lib.stride_tricks.sliding_window_view(segment.values, lookback + horizon, axis=1)
    view = view[:, :count].transpose(1, 0, 2)
    return WindowedDataset(
        segment,
        lookback,
        horizon,
        np.ascontiguousarray(view[..., :lookback]),
        np.ascontiguousarray(view[..., lookback:]),
    )


def synth_sinusoids(n_channels, T, components, noise_std=0.0, seed=0, window=None, names=None):
    """Sum of sinusoids per channel plus i.i.d. Gaussian noise.

    Each component is ``(channel, cycles, amplitude, phase)`` and contributes
    ``amplitude * sin(2*pi*cycles*t/window + phase)``; ``window`` defaults to
    ``T``, so integer ``cycles`` land exactly on DFT bins of the full series.
    """
    if n_channels < 1 or T < 1:
        raise ConfigError(f"need at least one channel and one timestamp, got {n_channels}, {T}")
    if not noise_std >= 0 or not math.isfinite(noise_std):
        raise ConfigError(f"noise_std must be finite and >= 0, got {noise_std}")
    window = T if window is None else window
    if not window > 0:
        raise ConfigError(f"window must be positive, got {window}")
    t = np.arange(T, dtype=np.float64)
    values = np.zeros((n_channels, T))
    for channel, cycles, amplitude, phase in components:
        if not 0 <= channel < n_channels:
            raise ConfigError(f"component channel {channel} outside 0..{n_channels - 1}")
        if not all(math.isfinite(v) for v in (cycles, amplitude, phase)):
            raise ConfigError("component parameters must be finite")
        values[channel] += amplitude * np.sin(2.0 * np.pi * cycles * t / window + phase)
    if noise_std > 0:
        values += np.random.default_rng(seed).normal(0.0, noise_std, size=values.shape)
    return SeriesMatrix(values, list(names) if names else None)
