"""Series -> scaled, windowed splits; the path shared by the CLI and experiments."""
from __future__ import annotations

from dataclasses import dataclass

from frets.data import SeriesMatrix, SplitSpec, chronological_split, make_windows
from frets.errors import DimensionError
from frets.training import MinMaxScaler, scaler_fit

SPLITS = ("train", "val", "test")


@dataclass
class PreparedData:
    scaler: MinMaxScaler
    names: list
    train: object
    val: object
    test: object

    def split(self, name):
        return getattr(self, name)


def prepare(series, lookback, horizon, spec=None, scaler=None):
    """Split chronologically, scale every segment with train statistics, window each.

    Pass ``scaler`` to reuse stored statistics (evaluation of a checkpoint)
    instead of refitting on the train segment.
    """
    spec = spec or SplitSpec()
    segments = chronological_split(series, spec, min_length=lookback + horizon)
    if scaler is None:
        scaler = scaler_fit(segments[0].values)
    elif scaler.min.size != series.n_channels:
        raise DimensionError(
            f"model expects {scaler.min.size} channels, data has {series.n_channels}"
        )
    windows = [
        make_windows(SeriesMatrix(scaler.apply(seg.values, axis=0), seg.names), lookback, horizon)
        for seg in segments
    ]
    return PreparedData(scaler, list(series.names), *windows)
