import numpy as np
import pytest

from frets import numeric as nm
from frets.checks import constant_spectrum_kernel, gradient_suite
from frets.errors import ConfigError
from frets.fremlp import FreMLPParams
from frets.model import (
    FreTSParams,
    ModelConfig,
    channel_learner,
    check_params,
    dimension_extension,
    frets_backward,
    frets_forward,
    init_params,
    loss_and_grads,
    projection,
    temporal_learner,
)

SMALL = dict(channels=3, lookback=6, horizon=2, embed_dim=4, hidden_dim=5)


def random_layer(d, rng):
    return FreMLPParams(*rng.standard_normal((2, d, d)), *rng.standard_normal((2, d)))


# -- config ------------------------------------------------------------------------

@pytest.mark.parametrize(
    "bad",
    [
        dict(lookback=0),
        dict(embed_dim=0),
        dict(fremlp_layers=0),
        dict(use_channel_learner=False, use_temporal_learner=False),
        dict(activation="tanh"),
        dict(learner_domain="wavelet"),
    ],
)
def test_config_validation(bad):
    with pytest.raises(ConfigError):
        ModelConfig(**{**SMALL, **bad})


def test_config_roundtrip_and_unknown_keys():
    cfg = ModelConfig(**SMALL, fremlp_layers=2, seed=7)
    assert ModelConfig.from_dict(cfg.to_dict()) == cfg
    with pytest.raises(ConfigError):
        ModelConfig.from_dict({**cfg.to_dict(), "dropout": 0.1})


def test_disabled_learners_carry_no_parameters():
    p = init_params(ModelConfig(**SMALL, channel_independent=True))
    assert p.channel == [] and len(p.temporal) == 1
    p = init_params(ModelConfig(**SMALL, use_temporal_learner=False))
    assert p.temporal == [] and len(p.channel) == 1


def test_check_params_rejects_wrong_shapes():
    cfg = ModelConfig(**SMALL)
    p = init_params(cfg)
    p.w1 = np.zeros((3, 3))
    with pytest.raises(ConfigError):
        check_params(p, cfg)


def test_init_ranges():
    cfg = ModelConfig(channels=2, lookback=8, horizon=3, embed_dim=16, hidden_dim=32)
    p = init_params(cfg)
    assert np.all(np.abs(p.embed) <= 1 / np.sqrt(16))
    assert np.all(np.abs(p.w1) <= 1 / np.sqrt(8 * 16))
    assert np.all(np.abs(p.w2) <= 1 / np.sqrt(32))
    assert not p.b1.any() and not p.b2.any()


# -- dimension extension -------------------------------------------------------------

def test_dimension_extension_examples():
    H = dimension_extension(np.ones((2, 3)), np.array([1.0, 2.0]))
    assert H.shape == (2, 3, 2)
    assert np.all(H[..., 0] == 1) and np.all(H[..., 1] == 2)
    assert not dimension_extension(np.zeros((2, 3)), np.array([1.0, 2.0])).any()
    X = np.zeros((2, 2))
    X[0, 0] = 3
    np.testing.assert_array_equal(dimension_extension(X, np.array([0.5, -1.0]))[0, 0], [1.5, -3.0])


# -- learners ------------------------------------------------------------------------

@pytest.mark.parametrize("learner", [channel_learner, temporal_learner])
@pytest.mark.parametrize("shape", [(4, 6, 3), (5, 7, 2), (2, 3, 4, 2)])
def test_identity_learner_is_transparent(learner, shape):
    H = np.random.default_rng(0).standard_normal(shape)
    out = learner(H, FreMLPParams.identity(shape[-1]), "identity")
    assert np.max(np.abs(out - H)) < 1e-9


@pytest.mark.parametrize("learner", [channel_learner, temporal_learner])
def test_zero_in_zero_out(learner):
    layer = random_layer(3, np.random.default_rng(1))
    layer = FreMLPParams(layer.W_r, layer.W_i, np.zeros(3), np.zeros(3))
    assert not learner(np.zeros((4, 5, 3)), layer).any()


def test_channel_learner_is_convolution_over_channels():
    rng = np.random.default_rng(2)
    h = rng.standard_normal(4)
    w = complex(*rng.standard_normal(2))
    layer = FreMLPParams(np.array([[w.real]]), np.array([[w.imag]]), np.zeros(1), np.zeros(1))
    out = channel_learner(h.reshape(4, 1, 1), layer, "identity")
    expected = nm.circular_conv(h, constant_spectrum_kernel(w, 4))
    assert np.max(np.abs(out[:, 0, 0] - expected)) < 1e-9


def test_temporal_learner_is_convolution_over_time():
    rng = np.random.default_rng(3)
    h = rng.standard_normal(8)
    w = complex(*rng.standard_normal(2))
    layer = FreMLPParams(np.array([[w.real]]), np.array([[w.imag]]), np.zeros(1), np.zeros(1))
    out = temporal_learner(h.reshape(1, 8, 1), layer, "identity")
    expected = nm.circular_conv(h, constant_spectrum_kernel(w, 8))
    assert np.max(np.abs(out[0, :, 0] - expected)) < 1e-9


def test_channel_learner_shares_weights_over_time():
    rng = np.random.default_rng(4)
    layer = random_layer(3, rng)
    H = rng.standard_normal((5, 6, 3))
    base = channel_learner(H, layer)
    poked = H.copy()
    poked[:, [0, 1, 3, 4, 5], :] += rng.standard_normal((5, 5, 3))
    np.testing.assert_array_equal(channel_learner(poked, layer)[:, 2], base[:, 2])


def test_temporal_learner_shares_weights_over_channels():
    rng = np.random.default_rng(5)
    layer = random_layer(3, rng)
    Z = rng.standard_normal((5, 6, 3))
    base = temporal_learner(Z, layer)
    poked = Z.copy()
    poked[[0, 2, 3, 4]] += rng.standard_normal((4, 6, 3))
    np.testing.assert_array_equal(temporal_learner(poked, layer)[1], base[1])


# -- projection -------------------------------------------------------------------------

def test_projection_zero():
    w1 = np.random.default_rng(6).standard_normal((6, 4))
    w2 = np.random.default_rng(7).standard_normal((4, 2))
    out = projection(np.zeros((2, 3, 2)), w1, np.zeros(4), w2, np.zeros(2))
    assert not out.any()


def test_projection_constant_bias():
    S = np.random.default_rng(8).standard_normal((2, 3, 2))
    w2 = np.random.default_rng(9).standard_normal((4, 2))
    out = projection(S, np.zeros((6, 4)), np.zeros(4), w2, np.array([1.5, 1.5]))
    assert np.all(out == 1.5)


def test_projection_hand_chain():
    rng = np.random.default_rng(10)
    S = rng.standard_normal((2, 3, 2))
    w1, b1 = rng.standard_normal((6, 4)), rng.standard_normal(4)
    w2, b2 = rng.standard_normal((4, 2)), rng.standard_normal(2)
    out = projection(S, w1, b1, w2, b2)
    for n in range(2):
        flat = np.array([S[n, l, k] for l in range(3) for k in range(2)])
        hidden = [max(sum(flat[i] * w1[i, j] for i in range(6)) + b1[j], 0.0) for j in range(4)]
        expected = [sum(hidden[j] * w2[j, t] for j in range(4)) + b2[t] for t in range(2)]
        np.testing.assert_allclose(out[n], expected, atol=1e-12)


# -- full model ---------------------------------------------------------------------------

def _unbatched(X, p, cfg):
    S = dimension_extension(X, p.embed)
    if cfg.channel_enabled:
        S = channel_learner(S, p.channel, cfg.activation)
    if cfg.temporal_enabled:
        S = temporal_learner(S, p.temporal, cfg.activation)
    return projection(S, p.w1, p.b1, p.w2, p.b2, cfg.projection_activation)


@pytest.mark.parametrize(
    "extra", [{}, dict(channel_independent=True), dict(fremlp_layers=2), dict(channels=5, lookback=7)]
)
def test_forward_matches_building_blocks(extra):
    cfg = ModelConfig(**{**SMALL, **extra})
    p = init_params(cfg)
    X = np.random.default_rng(11).standard_normal((3, cfg.channels, cfg.lookback))
    out = frets_forward(X, p, cfg)
    assert out.shape == (3, cfg.channels, cfg.horizon)
    for b in range(3):
        np.testing.assert_allclose(out[b], _unbatched(X[b], p, cfg), atol=1e-12)


def test_batch_permutation():
    cfg = ModelConfig(**SMALL)
    p = init_params(cfg)
    X = np.random.default_rng(12).standard_normal((6, 3, 6))
    perm = np.array([3, 0, 5, 1, 4, 2])
    np.testing.assert_array_equal(frets_forward(X[perm], p, cfg), frets_forward(X, p, cfg)[perm])


def test_input_shape_checked():
    cfg = ModelConfig(**SMALL)
    with pytest.raises(ConfigError):
        frets_forward(np.zeros((2, 4, 6)), init_params(cfg), cfg)


def test_ablations_share_parameters_and_outputs():
    X = np.random.default_rng(13).standard_normal((4, 3, 6))
    full = init_params(ModelConfig(**SMALL))
    fre_cl_cfg = ModelConfig(**SMALL, use_temporal_learner=False)
    fre_tl_cfg = ModelConfig(**SMALL, use_channel_learner=False)
    fre_cl, fre_tl = init_params(fre_cl_cfg), init_params(fre_tl_cfg)
    np.testing.assert_array_equal(fre_cl.channel[0].W_r, full.channel[0].W_r)
    np.testing.assert_array_equal(fre_tl.temporal[0].W_r, full.temporal[0].W_r)
    np.testing.assert_array_equal(fre_cl.w1, full.w1)
    # the same parameters with the other learner switched off give the same output
    ablated = FreTSParams(full.embed, full.channel, [], full.w1, full.b1, full.w2, full.b2)
    np.testing.assert_array_equal(frets_forward(X, ablated, fre_cl_cfg), frets_forward(X, fre_cl, fre_cl_cfg))


def test_channel_independent_equals_fretl():
    X = np.random.default_rng(14).standard_normal((2, 3, 6))
    a_cfg = ModelConfig(**SMALL, channel_independent=True)
    b_cfg = ModelConfig(**SMALL, use_channel_learner=False)
    np.testing.assert_array_equal(
        frets_forward(X, init_params(a_cfg), a_cfg), frets_forward(X, init_params(b_cfg), b_cfg)
    )


# -- gradients ---------------------------------------------------------------------------

def test_perfect_targets_give_zero_gradients():
    cfg = ModelConfig(**SMALL)
    p = init_params(cfg)
    X = np.random.default_rng(15).standard_normal((3, 3, 6))
    loss, grads = loss_and_grads(X, frets_forward(X, p, cfg), p, cfg)
    assert loss == 0.0
    assert all(not g.any() for g in grads.named_arrays().values())


def test_loss_scale_is_linear():
    cfg = ModelConfig(**SMALL)
    p = init_params(cfg)
    rng = np.random.default_rng(16)
    X, Y = rng.standard_normal((3, 3, 6)), rng.standard_normal((3, 3, 2))
    g1 = frets_backward(X, Y, p, cfg).named_arrays()
    g2 = frets_backward(X, Y, p, cfg, loss_scale=2.0).named_arrays()
    for name in g1:
        np.testing.assert_allclose(g2[name], 2 * g1[name], rtol=1e-14, atol=0)


@pytest.mark.parametrize(
    "overrides",
    [
        {},
        dict(fremlp_layers=2),
        dict(channel_independent=True),
        dict(use_temporal_learner=False),
        dict(activation="identity", projection_activation="identity"),
        dict(learner_domain="time"),
        dict(channels=4, lookback=5),
    ],
)
def test_end_to_end_gradients(overrides):
    result = gradient_suite(seeds=4, **overrides)
    assert result.passed, result.line()


def test_skipping_adjoint_scaling_breaks_gradients():
    result = gradient_suite(seeds=3, fault="skip-adjoint-scaling")
    assert not result.passed
