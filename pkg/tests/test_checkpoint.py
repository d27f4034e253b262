import numpy as np
import pytest

from frets.checkpoint import MAGIC, Checkpoint, load_checkpoint, save_checkpoint
from frets.errors import CheckpointError
from frets.model import ModelConfig, frets_forward, init_params
from frets.training import MinMaxScaler


@pytest.fixture
def ckpt():
    cfg = ModelConfig(channels=3, lookback=5, horizon=2, embed_dim=4, hidden_dim=6, fremlp_layers=2, seed=3)
    scaler = MinMaxScaler(np.array([0.1, -2.0, 5.0]), np.array([1.0 / 3, 4.0, 5.0]))
    return Checkpoint(cfg, init_params(cfg), scaler, ["a", "b", "c"], {"dataset": "x.csv"}, {"best_epoch": 4})


def test_roundtrip_bit_exact(tmp_path, ckpt):
    save_checkpoint(ckpt, tmp_path / "m.frets")
    back = load_checkpoint(tmp_path / "m.frets")
    assert back.config == ckpt.config
    assert back.channel_names == ["a", "b", "c"]
    assert back.data == {"dataset": "x.csv"} and back.log_summary == {"best_epoch": 4}
    np.testing.assert_array_equal(back.scaler.min, ckpt.scaler.min)
    np.testing.assert_array_equal(back.scaler.max, ckpt.scaler.max)
    for name, arr in ckpt.params.named_arrays().items():
        np.testing.assert_array_equal(back.params.named_arrays()[name], arr)
    X = np.random.default_rng(0).standard_normal((4, 3, 5))
    np.testing.assert_array_equal(
        frets_forward(X, back.params, back.config), frets_forward(X, ckpt.params, ckpt.config)
    )


def test_save_is_deterministic(tmp_path, ckpt):
    save_checkpoint(ckpt, tmp_path / "a.frets")
    save_checkpoint(ckpt, tmp_path / "b.frets")
    assert (tmp_path / "a.frets").read_bytes() == (tmp_path / "b.frets").read_bytes()


def test_header_is_readable_text(tmp_path, ckpt):
    save_checkpoint(ckpt, tmp_path / "m.frets")
    raw = (tmp_path / "m.frets").read_bytes()
    assert raw.startswith(MAGIC + b" 1\n")
    assert b'"blocks"' in raw.split(b"\n")[1]


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda raw: raw[:-8], "truncated"),
        (lambda raw: raw + b"\0", "trailing"),
        (lambda raw: b"NOT" + raw, "not a FreTS checkpoint"),
        (lambda raw: raw.replace(b"CHECKPOINT 1", b"CHECKPOINT 9", 1), "version"),
    ],
)
def test_corrupt_files_rejected(tmp_path, ckpt, mutate, message):
    path = tmp_path / "m.frets"
    save_checkpoint(ckpt, path)
    path.write_bytes(mutate(path.read_bytes()))
    with pytest.raises(CheckpointError, match=message):
        load_checkpoint(path)


def test_missing_file(tmp_path):
    with pytest.raises(CheckpointError):
        load_checkpoint(tmp_path / "absent.frets")


def test_failed_save_leaves_nothing(tmp_path, ckpt):
    ckpt.params.w1 = None  # cannot be serialized
    with pytest.raises(Exception):
        save_checkpoint(ckpt, tmp_path / "m.frets")
    assert list(tmp_path.iterdir()) == []
