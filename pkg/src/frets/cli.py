"""Command-line entry point: ``frets <command> [options]``.

Exit status: 0 success, 2 config, 3 I/O or data, 4 shape mismatch,
5 property-suite failure, 6 training failure.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import dataclass, field, fields
from pathlib import Path

from frets import checks
from frets.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from frets.data import SeriesMatrix, SplitSpec, ingest_csv, synth_sinusoids, write_csv
from frets.errors import ConfigError, DimensionError, FretsError, IngestionError
from frets.model import ModelConfig
from frets.pipeline import SPLITS, prepare
from frets.training import TrainConfig, evaluate, predict, train
from frets.weights import export_learner

EXIT_PROPERTY = 5
CHECKPOINT_NAME = "checkpoint.frets"
EPOCH_LOG_NAME = "epochs.jsonl"


# -- config files ----------------------------------------------------------------

MODEL_KEYS = {f.name for f in fields(ModelConfig)} - {"channels", "seed"}
TRAIN_KEYS = {f.name for f in fields(TrainConfig)} - {"seed"}


@dataclass
class RunConfig:
    dataset: Path
    out_dir: Path
    split: SplitSpec = field(default_factory=SplitSpec)
    seed: int = 0
    missing_policy: str = "error"
    timestamp_column: bool = False
    model: dict = field(default_factory=dict)
    train: dict = field(default_factory=dict)

    def model_config(self, channels):
        return ModelConfig(channels=channels, seed=self.seed, **self.model)

    def train_config(self):
        return TrainConfig(seed=self.seed, **self.train)


RUN_KEYS = {"dataset", "out_dir", "split", "seed", "missing_policy", "timestamp_column"}


def _read_json(path, what):
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise IngestionError(f"cannot read {what} {path}: {exc.strerror or exc}") from None
    try:
        data = json.loads(text)
    except ValueError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a JSON object at top level")
    return data


def _seed(value):
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value < 2**64:
        raise ConfigError(f"seed must be an integer in [0, 2^64), got {value!r}")
    return value


def load_run_config(path, seed=None, out=None):
    """Parse a flat JSON run config. Relative paths resolve against its directory.

    Keys: ``dataset`` (required), ``out_dir``, ``split`` (three ratios),
    ``seed``, ``missing_policy``, ``timestamp_column``, every model field
    except ``channels`` (taken from the data) and every training field.
    """
    path = Path(path)
    data = _read_json(path, "config")
    unknown = set(data) - RUN_KEYS - MODEL_KEYS - TRAIN_KEYS
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    if "dataset" not in data:
        raise ConfigError(f"{path}: missing required key 'dataset'")
    base = path.resolve().parent
    dataset = base / data["dataset"]
    if not dataset.is_file():
        raise IngestionError(f"dataset not found: {dataset}")
    split = data.get("split", [0.7, 0.2, 0.1])
    if not isinstance(split, list) or len(split) != 3:
        raise ConfigError(f"{path}: split must be a list of three ratios, got {split!r}")
    policy = data.get("missing_policy", "error")
    if policy not in ("error", "forward_fill"):
        raise ConfigError(f"{path}: missing_policy must be 'error' or 'forward_fill', got {policy!r}")
    if out is not None:
        out_dir = Path(out)
    else:
        out_dir = base / data.get("out_dir", "runs/" + path.stem)
    cfg = RunConfig(
        dataset=dataset,
        out_dir=out_dir,
        split=SplitSpec(*split),
        seed=_seed(data.get("seed", 0) if seed is None else seed),
        missing_policy=policy,
        timestamp_column=bool(data.get("timestamp_column", False)),
        model={k: data[k] for k in MODEL_KEYS if k in data},
        train={k: data[k] for k in TRAIN_KEYS if k in data},
    )
    try:
        cfg.train_config()
        cfg.model_config(1)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return cfg


def _atomic_write_text(path, text):
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _data_settings(cfg):
    return {
        "dataset": str(cfg.dataset),
        "split": [cfg.split.train, cfg.split.val, cfg.split.test],
        "missing_policy": cfg.missing_policy,
        "timestamp_column": cfg.timestamp_column,
    }


# -- commands --------------------------------------------------------------------

def cmd_train(args):
    cfg = load_run_config(args.config, seed=args.seed, out=args.out)
    series = ingest_csv(cfg.dataset, cfg.missing_policy, cfg.timestamp_column)
    model_cfg = cfg.model_config(series.n_channels)
    train_cfg = cfg.train_config()
    data = prepare(series, model_cfg.lookback, model_cfg.horizon, cfg.split)

    def report(record):
        print(record.to_line(with_time=True), flush=True)

    result = train(model_cfg, data.train, data.val, train_cfg, on_epoch=report)
    best = next((r for r in result.log if r.epoch == result.best_epoch), None)
    summary = {
        "epochs_run": len(result.log),
        "best_epoch": result.best_epoch,
        "best_val_mae": result.best_val_mae,
        "best_val_rmse": best.val_rmse if best else None,
        "train": {"lr": train_cfg.lr, "batch_size": train_cfg.batch_size,
                  "epochs": train_cfg.epochs, "patience": train_cfg.patience,
                  "seed": train_cfg.seed},
    }
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    ckpt = Checkpoint(model_cfg, result.params, data.scaler, data.names, _data_settings(cfg), summary)
    save_checkpoint(ckpt, cfg.out_dir / CHECKPOINT_NAME)
    # wall time goes to stdout only, so the written log is reproducible byte for byte
    _atomic_write_text(
        cfg.out_dir / EPOCH_LOG_NAME,
        "".join(r.to_line(with_time=False) + "\n" for r in result.log),
    )
    print(f"wrote {cfg.out_dir / CHECKPOINT_NAME}")
    return 0


def _checkpoint_series(ckpt, override):
    settings = ckpt.data
    path = override or settings.get("dataset")
    if not path:
        raise ConfigError("checkpoint records no dataset; pass --data")
    if not Path(path).is_file():
        raise IngestionError(f"dataset not found: {path}")
    series = ingest_csv(
        path, settings.get("missing_policy", "error"), settings.get("timestamp_column", False)
    )
    if series.n_channels != ckpt.config.channels:
        raise DimensionError(
            f"checkpoint expects N={ckpt.config.channels} channels, dataset has N={series.n_channels}"
        )
    return series


def cmd_evaluate(args):
    ckpt = load_checkpoint(args.checkpoint)
    series = _checkpoint_series(ckpt, args.data)
    spec = SplitSpec(*ckpt.data.get("split", [0.7, 0.2, 0.1]))
    data = prepare(series, ckpt.config.lookback, ckpt.config.horizon, spec, scaler=ckpt.scaler)
    metrics = evaluate(ckpt.params, ckpt.config, data.split(args.split))
    report = {"split": args.split, "mae": metrics.mae, "rmse": metrics.rmse,
              "windows": len(data.split(args.split))}
    text = json.dumps(report, sort_keys=True)
    print(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _atomic_write_text(out / f"metrics_{args.split}.json", text + "\n")
    return 0


def cmd_predict(args):
    ckpt = load_checkpoint(args.checkpoint)
    cfg = ckpt.config
    series = ingest_csv(args.input, ckpt.data.get("missing_policy", "error"),
                        ckpt.data.get("timestamp_column", False))
    if series.length != cfg.lookback:
        raise DimensionError(f"input has {series.length} rows, model needs lookback={cfg.lookback}")
    if series.n_channels != cfg.channels:
        raise DimensionError(
            f"input has N={series.n_channels} columns, checkpoint expects N={cfg.channels}"
        )
    window = ckpt.scaler.apply(series.values, axis=0)[None]
    scaled = predict(ckpt.params, cfg, window)[0]
    forecast = SeriesMatrix(ckpt.scaler.invert(scaled, axis=0), list(ckpt.channel_names))
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    write_csv(forecast, out / "forecast.csv")
    print(f"wrote {out / 'forecast.csv'}")
    return 0


def cmd_check(args):
    results = checks.run_checks(fault=args.inject_fault, seed=args.seed or 0)
    for r in results:
        print(r.line())
    failed = [r.name for r in results if not r.passed]
    if failed:
        print(f"property failures: {', '.join(failed)}", file=sys.stderr)
        return EXIT_PROPERTY
    return 0


def cmd_inspect_weights(args):
    ckpt = load_checkpoint(args.checkpoint)
    enabled = ckpt.config.channel_enabled if args.which == "channel" else ckpt.config.temporal_enabled
    if not enabled:
        raise ConfigError(f"checkpoint has no {args.which} learner")
    if ckpt.config.learner_domain != "frequency":
        raise ConfigError("weights of a time-domain learner are real; nothing to inspect")
    layers = ckpt.params.channel if args.which == "channel" else ckpt.params.temporal
    out = Path(args.out or ".")
    summary, written = export_learner(layers, out, prefix=f"{args.which}_")
    for layer in summary["layers"]:
        fr = layer["combined"]["band_fraction"]
        print(json.dumps({"layer": layer["layer"], "band_fraction": fr}, sort_keys=True))
    print(f"wrote {len(written)} files to {out}")
    return 0


SYNTH_KEYS = {"n_channels", "length", "components", "noise_std", "seed", "window", "names", "filename"}


def _component(item):
    if isinstance(item, dict):
        unknown = set(item) - {"channel", "cycles", "amplitude", "phase"}
        if unknown:
            raise ConfigError(f"unknown component keys {sorted(unknown)}")
        item = [item.get("channel"), item.get("cycles"), item.get("amplitude", 1.0), item.get("phase", 0.0)]
    if not isinstance(item, (list, tuple)) or len(item) != 4:
        raise ConfigError(f"component must be [channel, cycles, amplitude, phase], got {item!r}")
    ch, cycles, amp, phase = item
    if isinstance(ch, bool) or not isinstance(ch, int):
        raise ConfigError(f"component channel must be an integer, got {ch!r}")
    try:
        return ch, float(cycles), float(amp), float(phase)
    except (TypeError, ValueError):
        raise ConfigError(f"component values must be numbers, got {item!r}") from None


def cmd_synth(args):
    spec = _read_json(args.config, "synth spec")
    unknown = set(spec) - SYNTH_KEYS
    if unknown:
        raise ConfigError(f"unknown synth spec keys {sorted(unknown)}")
    for key in ("n_channels", "length"):
        if isinstance(spec.get(key), bool) or not isinstance(spec.get(key), int):
            raise ConfigError(f"synth spec needs integer {key!r}")
    series = synth_sinusoids(
        spec["n_channels"],
        spec["length"],
        [_component(c) for c in spec.get("components", [])],
        noise_std=float(spec.get("noise_std", 0.0)),
        seed=_seed(spec.get("seed", 0) if args.seed is None else args.seed),
        window=spec.get("window"),
        names=spec.get("names"),
    )
    out = Path(args.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    target = out / spec.get("filename", "synth.csv")
    write_csv(series, target)
    print(f"wrote {target} ({series.n_channels} channels x {series.length} rows)")
    return 0


# -- argument parsing ------------------------------------------------------------

def _u64(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError(f"seed out of range: {value}")
    return value


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_u64, default=None, help="override every seed")
    common.add_argument("--out", default=None, help="output directory")

    parser = argparse.ArgumentParser(prog="frets", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="train a model from a run config")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("evaluate", parents=[common], help="MAE/RMSE of a checkpoint on one split")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--split", choices=SPLITS, default="test")
    p.add_argument("--data", default=None, help="dataset CSV (default: the one recorded at training)")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("predict", parents=[common], help="forecast from the last lookback rows")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--input", required=True)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("check", parents=[common], help="run the numerical property suites")
    p.add_argument("--inject-fault", choices=checks.FAULTS, default=None, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("inspect-weights", parents=[common], help="export learner weights as CSV")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--which", choices=("channel", "temporal"), required=True)
    p.set_defaults(func=cmd_inspect_weights)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic sinusoid dataset")
    p.add_argument("--config", required=True, help="generator spec (JSON)")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except FretsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
