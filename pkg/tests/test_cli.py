import json

import numpy as np
import pytest

from frets.checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from frets.cli import main
from frets.data import ingest_csv
from frets.model import frets_forward, init_params
from frets.pipeline import prepare

SYNTH = {
    "n_channels": 3,
    "length": 240,
    "components": [[0, 2, 1.0, 0.0], [1, 3, 0.5, 1.0], {"channel": 2, "cycles": 5, "amplitude": 1.0}],
    "noise_std": 0.01,
    "seed": 4,
    "window": 48,
    "filename": "series.csv",
}
RUN = {"dataset": "series.csv", "lookback": 16, "horizon": 8, "embed_dim": 4, "hidden_dim": 8,
       "epochs": 3, "seed": 1}


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "synth.json").write_text(json.dumps(SYNTH))
    assert main(["synth", "--config", str(tmp_path / "synth.json"), "--out", str(tmp_path)]) == 0
    (tmp_path / "run.json").write_text(json.dumps(RUN))
    return tmp_path


@pytest.fixture
def trained(workdir):
    assert main(["train", "--config", str(workdir / "run.json"), "--out", str(workdir / "out")]) == 0
    return workdir, workdir / "out" / "checkpoint.frets"


# -- synth ---------------------------------------------------------------------------

def test_synth_dimensions_and_determinism(workdir):
    s = ingest_csv(workdir / "series.csv")
    assert s.values.shape == (3, 240)
    first = (workdir / "series.csv").read_bytes()
    main(["synth", "--config", str(workdir / "synth.json"), "--out", str(workdir)])
    assert (workdir / "series.csv").read_bytes() == first


def test_synth_noiseless_is_analytic(tmp_path):
    spec = {"n_channels": 1, "length": 32, "components": [[0, 3, 2.0, 0.5]]}
    (tmp_path / "s.json").write_text(json.dumps(spec))
    assert main(["synth", "--config", str(tmp_path / "s.json"), "--out", str(tmp_path)]) == 0
    values = ingest_csv(tmp_path / "synth.csv").values[0]
    np.testing.assert_array_equal(values, 2.0 * np.sin(2 * np.pi * 3 * np.arange(32.0) / 32 + 0.5))


def test_synth_seed_flag_overrides(workdir):
    main(["synth", "--config", str(workdir / "synth.json"), "--out", str(workdir / "s9"), "--seed", "9"])
    assert (workdir / "s9" / "series.csv").read_bytes() != (workdir / "series.csv").read_bytes()


@pytest.mark.parametrize("spec", [{"n_channels": 2}, {"n_channels": 2, "length": 10, "colour": 1},
                                  {"n_channels": 2, "length": 10, "components": [[5, 1, 1, 0]]}])
def test_synth_invalid_spec(tmp_path, spec):
    (tmp_path / "s.json").write_text(json.dumps(spec))
    assert main(["synth", "--config", str(tmp_path / "s.json"), "--out", str(tmp_path)]) == 2


# -- train ---------------------------------------------------------------------------

def test_train_writes_artifacts(trained, capsys):
    workdir, ckpt_path = trained
    log = (workdir / "out" / "epochs.jsonl").read_text().splitlines()
    assert len(log) == 3
    assert set(json.loads(log[0])) == {"epoch", "train_loss", "val_mae", "val_rmse"}
    ckpt = load_checkpoint(ckpt_path)
    assert ckpt.config.channels == 3 and ckpt.config.seed == 1
    assert ckpt.log_summary["epochs_run"] == 3


def test_train_twice_byte_identical(trained):
    workdir, ckpt_path = trained
    assert main(["train", "--config", str(workdir / "run.json"), "--out", str(workdir / "again")]) == 0
    assert (workdir / "again" / "checkpoint.frets").read_bytes() == ckpt_path.read_bytes()
    assert (workdir / "again" / "epochs.jsonl").read_bytes() == (workdir / "out" / "epochs.jsonl").read_bytes()


def test_train_zero_epochs_saves_initial_parameters(workdir):
    (workdir / "zero.json").write_text(json.dumps({**RUN, "epochs": 0}))
    assert main(["train", "--config", str(workdir / "zero.json"), "--out", str(workdir / "z")]) == 0
    ckpt = load_checkpoint(workdir / "z" / "checkpoint.frets")
    for name, arr in init_params(ckpt.config).named_arrays().items():
        np.testing.assert_array_equal(ckpt.params.named_arrays()[name], arr)


def test_train_missing_dataset(tmp_path, capsys):
    (tmp_path / "run.json").write_text(json.dumps({**RUN, "dataset": "missing.csv"}))
    assert main(["train", "--config", str(tmp_path / "run.json"), "--out", str(tmp_path / "o")]) == 3
    assert "missing.csv" in capsys.readouterr().err
    assert not (tmp_path / "o").exists()


@pytest.mark.parametrize("bad", [{"dropout": 0.5}, {"lr": -1}, {"split": [0.5, 0.5]}, {"embed_dim": 0}])
def test_train_invalid_config(workdir, bad):
    (workdir / "bad.json").write_text(json.dumps({**RUN, **bad}))
    assert main(["train", "--config", str(workdir / "bad.json"), "--out", str(workdir / "b")]) == 2
    assert not (workdir / "b" / "checkpoint.frets").exists()


def test_train_seed_flag(workdir):
    main(["train", "--config", str(workdir / "run.json"), "--out", str(workdir / "s2"), "--seed", "2"])
    assert load_checkpoint(workdir / "s2" / "checkpoint.frets").config.seed == 2


# -- evaluate --------------------------------------------------------------------------

def test_evaluate_reproduces_best_validation(trained, capsys):
    workdir, ckpt_path = trained
    capsys.readouterr()
    assert main(["evaluate", "--checkpoint", str(ckpt_path), "--split", "val"]) == 0
    first = json.loads(capsys.readouterr().out)
    assert first["mae"] == load_checkpoint(ckpt_path).log_summary["best_val_mae"]
    main(["evaluate", "--checkpoint", str(ckpt_path), "--split", "val", "--out", str(workdir / "m")])
    assert json.loads(capsys.readouterr().out) == first
    assert json.loads((workdir / "m" / "metrics_val.json").read_text()) == first


def test_evaluate_channel_mismatch(trained, capsys):
    workdir, ckpt_path = trained
    (workdir / "two.csv").write_text("a,b\n" + "".join(f"{i},{i}\n" for i in range(100)))
    assert main(["evaluate", "--checkpoint", str(ckpt_path), "--data", str(workdir / "two.csv")]) == 4
    err = capsys.readouterr().err
    assert "N=3" in err and "N=2" in err


# -- predict ----------------------------------------------------------------------------

def _tail_input(workdir, rows):
    lines = (workdir / "series.csv").read_text().splitlines()
    (workdir / "tail.csv").write_text("\n".join([lines[0]] + lines[-rows:]) + "\n")
    return workdir / "tail.csv"


def test_predict_matches_in_process_pipeline(trained):
    workdir, ckpt_path = trained
    assert main(["predict", "--checkpoint", str(ckpt_path), "--input", str(_tail_input(workdir, 16)),
                 "--out", str(workdir / "p")]) == 0
    forecast = ingest_csv(workdir / "p" / "forecast.csv")
    assert forecast.values.shape == (3, 8)
    ckpt = load_checkpoint(ckpt_path)
    series = ingest_csv(workdir / "series.csv")
    window = ckpt.scaler.apply(series.values[:, -16:], axis=0)[None]
    expected = ckpt.scaler.invert(frets_forward(window, ckpt.params, ckpt.config)[0], axis=0)
    np.testing.assert_array_equal(forecast.values, expected)


def test_predict_constant_input_zero_projection(trained):
    workdir, ckpt_path = trained
    ckpt = load_checkpoint(ckpt_path)
    ckpt.params.w1[:] = 0.0
    ckpt.params.b1[:] = 0.0
    ckpt.params.b2[:] = np.linspace(0.1, 0.8, ckpt.config.horizon)
    save_checkpoint(Checkpoint(ckpt.config, ckpt.params, ckpt.scaler, ckpt.channel_names, ckpt.data),
                    workdir / "zero.frets")
    (workdir / "const.csv").write_text("ch0,ch1,ch2\n" + "0.5,0.5,0.5\n" * 16)
    assert main(["predict", "--checkpoint", str(workdir / "zero.frets"), "--input", str(workdir / "const.csv"),
                 "--out", str(workdir / "c")]) == 0
    out = ingest_csv(workdir / "c" / "forecast.csv").values
    expected = ckpt.scaler.invert(np.tile(ckpt.params.b2, (3, 1)), axis=0)
    np.testing.assert_array_equal(out, expected)


def test_predict_wrong_row_count(trained):
    workdir, ckpt_path = trained
    assert main(["predict", "--checkpoint", str(ckpt_path), "--input", str(_tail_input(workdir, 10))]) == 4


# -- inspect-weights -----------------------------------------------------------------------

def test_inspect_weights(trained):
    workdir, ckpt_path = trained
    assert main(["inspect-weights", "--checkpoint", str(ckpt_path), "--which", "channel",
                 "--out", str(workdir / "w")]) == 0
    W = np.loadtxt(workdir / "w" / "channel_W_r.csv", delimiter=",")
    np.testing.assert_array_equal(W, load_checkpoint(ckpt_path).params.channel[0].W_r)
    summary = json.loads((workdir / "w" / "channel_summary.json").read_text())
    assert set(summary["layers"][0]["combined"]["band_fraction"]) == {"1", "3", "5"}


def test_inspect_absent_learner(workdir):
    (workdir / "ci.json").write_text(json.dumps({**RUN, "channel_independent": True, "epochs": 0}))
    main(["train", "--config", str(workdir / "ci.json"), "--out", str(workdir / "ci")])
    code = main(["inspect-weights", "--checkpoint", str(workdir / "ci" / "checkpoint.frets"),
                 "--which", "channel", "--out", str(workdir / "w")])
    assert code != 0


# -- check -------------------------------------------------------------------------------------

def test_check_passes(capsys):
    assert main(["check"]) == 0
    out = capsys.readouterr().out
    for suite in ("parseval", "fft-oracle", "convolution", "gradient", "roundtrip"):
        assert f"[PASS] {suite}: max error" in out


def test_check_injected_fault(capsys):
    assert main(["check", "--inject-fault", "skip-adjoint-scaling"]) == 5
    out = capsys.readouterr().out
    assert "[FAIL] gradient" in out and "first failing seed 0" in out


def test_check_fault_flag_hidden(capsys):
    with pytest.raises(SystemExit):
        main(["check", "--help"])
    assert "inject" not in capsys.readouterr().out


def test_prepare_agrees_with_checkpoint_scaler(trained):
    workdir, ckpt_path = trained
    ckpt = load_checkpoint(ckpt_path)
    data = prepare(ingest_csv(workdir / "series.csv"), 16, 8)
    np.testing.assert_array_equal(data.scaler.min, ckpt.scaler.min)
