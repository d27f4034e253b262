"""Export of learned FreMLP weights and their diagonal-band energy."""
from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

BAND_WIDTHS = (1, 3, 5)


def band_mask(d, width):
    """Entries within ``width`` of the diagonal: ``|i - j| <= width``.

    Band 0 would be the bare diagonal; band 1 adds the first off-diagonals.
    """
    idx = np.arange(d)
    return np.abs(idx[:, None] - idx[None, :]) <= width


def band_fractions(mass, widths=BAND_WIDTHS):
    """Fraction of the (nonnegative) ``mass`` matrix inside each diagonal band.

    Returns ``(fractions, total)``; fractions are ``None`` when the total is 0.
    """
    mass = np.asarray(mass, dtype=np.float64)
    total = float(mass.sum())
    if total == 0.0:
        return {str(w): None for w in widths}, total
    return {str(w): float(mass[band_mask(mass.shape[0], w)].sum() / total) for w in widths}, total


def energy_summary(layer):
    """Band fractions of squared weight mass for W_r, W_i and |W|^2 combined."""
    parts = {
        "real": layer.W_r**2,
        "imag": layer.W_i**2,
        "combined": layer.W_r**2 + layer.W_i**2,
    }
    summary = {}
    for name, mass in parts.items():
        fractions, total = band_fractions(mass)
        summary[name] = {"mass": total, "band_fraction": fractions, "degenerate": total == 0.0}
    return summary


def _write_matrix(path, matrix):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        for row in np.atleast_2d(matrix):
            writer.writerow([repr(float(v)) for v in row])


def export_learner(layers, out_dir, prefix=""):
    """Write W_r, W_i, B_r, B_i as CSV (biases as a single row) plus ``summary.json``.

    With more than one layer, file names carry a ``layer<k>_`` prefix.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = {"layers": []}
    written = []
    for k, layer in enumerate(layers):
        tag = f"{prefix}layer{k}_" if len(layers) > 1 else prefix
        for name, arr in layer.arrays().items():
            path = out_dir / f"{tag}{name}.csv"
            _write_matrix(path, arr)
            written.append(path)
        summary["layers"].append({"layer": k, "d": layer.d, **energy_summary(layer)})
    summary_path = out_dir / f"{prefix}summary.json"
    summary_path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    written.append(summary_path)
    return summary, written
