import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sonotact.audiobank import LABELS, ContactLabel, build_synthetic_bank, synth_clip, SynthProfile
from sonotact.audio import Waveform
from sonotact.dataset import build_dataset
from sonotact.errors import EmptyDataset, InvalidArch, MissingLabel, NonFiniteFeatures, ShapeMismatch
from sonotact.model import (
    FROZEN,
    AdamState,
    Arch,
    Batch,
    ClassifierParams,
    TrainConfig,
    adam_step,
    backward,
    batch_loss,
    bce_with_logits,
    classifier_probs,
    classify_mode_audio,
    fit_mode_classifier,
    forward,
    fit_spec_norm,
    forward_batch,
    init_params,
    load_checkpoint,
    loss_and_grads,
    param_shapes,
    predict,
    save_checkpoint,
    threshold_logits,
    train,
)
from sonotact.scene import SceneConfig

from gradcheck import LAYER_GROUPS, MINI, finite_difference_errors, random_batch


@pytest.fixture(scope="module")
def tiny_ds(tmp_path_factory):
    root = tmp_path_factory.mktemp("m")
    bank = build_synthetic_bank(root / "bank", 1, seed=1)
    return build_dataset(SceneConfig(near_contact_frac=0.0), bank, 1, 4, root / "ds")


# ---------------------------------------------------------------- init


def test_init_deterministic_and_zero_bias():
    a, b = init_params(3), init_params(3)
    assert all(np.array_equal(a[k], b[k]) for k in a.tensors)
    assert all(not v.any() for k, v in a.tensors.items() if k.endswith(".b"))
    assert not np.array_equal(a["head.w"], init_params(4)["head.w"])
    a.check()


def test_init_weight_variance():
    shapes = param_shapes(Arch())
    weights = [k for k in shapes if k.endswith(".w")]
    # large layers: one draw is enough for a 20% bound
    p = init_params(0)
    for k in weights:
        fan_in = int(np.prod(shapes[k][1:]))
        if p[k].size >= 256:
            assert p[k].var() == pytest.approx(2 / fan_in, rel=0.2), k
    # every layer: pooled over seeds
    pooled = {k: np.concatenate([init_params(s)[k].ravel() for s in range(40)]) for k in weights}
    for k, v in pooled.items():
        assert v.var() == pytest.approx(2 / int(np.prod(shapes[k][1:])), rel=0.2), k


def test_invalid_arch():
    with pytest.raises(InvalidArch):
        init_params(0, Arch(levels=0))
    with pytest.raises(InvalidArch):
        init_params(0, Arch(crop_side=30))
    with pytest.raises(InvalidArch):
        init_params(0, Arch(spec_side=16))


# ---------------------------------------------------------------- forward


def test_forward_shape_and_background(tiny_ds):
    p = init_params(0)
    rec = tiny_ds.load_record(tiny_ds.records[30])
    logits = forward(p, rec, tiny_ds.spectrogram(rec.clip_id))
    assert logits.shape == (64, 64)
    r0, c0 = rec.crop_origin
    outside = np.ones((64, 64), bool)
    outside[max(r0, 0):r0 + 32, max(c0, 0):c0 + 32] = False
    assert np.all(logits[outside] == -10)
    prob, _, _ = predict(p, rec, tiny_ds.spectrogram(rec.clip_id))
    assert np.all((prob > 0) & (prob < 1))


def test_forward_rejects_wrong_shapes(tiny_ds):
    rec = tiny_ds.load_record(tiny_ds.records[0])
    with pytest.raises(ShapeMismatch):
        forward(init_params(0, Arch(crop_side=16, spec_side=16)), rec, np.zeros((1, 16, 16)))


def test_batch_permutation_equivariance():
    p = init_params(2, MINI, np.float64)
    b = random_batch(MINI, 5)
    perm = np.array([3, 0, 4, 1, 2])
    np.testing.assert_allclose(forward_batch(p, b.take(perm)), forward_batch(p, b)[perm], rtol=1e-12)


def test_translation_co_behavior():
    arch = Arch(crop_side=48, spec_side=48, image_h=64, image_w=64)
    p = init_params(5, arch, np.float64)
    rng = np.random.default_rng(0)
    k = 4  # multiple of the total pooling stride
    big_a = rng.normal(size=(1, 48 + k, 48, 4))
    big_b = rng.normal(size=(1, 48 + k, 48, 6))
    spec = np.full((1, 48, 48, 1), 0.5)  # audio image carries no crop position
    prop = rng.normal(size=(1, 7))
    origin = np.array([[8, 8]])
    base = Batch(big_a[:, k:], big_b[:, k:], spec, prop, origin)
    shifted = Batch(big_a[:, :48], big_b[:, :48], spec, prop, origin)
    y0 = forward_batch(p, base)[0, 8:56, 8:56]
    y1 = forward_batch(p, shifted)[0, 8:56, 8:56]
    # content moved down by k rows; compare away from the receptive-field border
    border = 16
    np.testing.assert_allclose(y1[border + k:48 - border, border:48 - border],
                               y0[border:48 - border - k, border:48 - border], rtol=1e-10, atol=1e-10)


# ---------------------------------------------------------------- loss


def test_bce_closed_forms():
    rng = np.random.default_rng(0)
    y = (rng.random((8, 8)) < 0.5).astype(float)
    assert bce_with_logits(np.zeros((8, 8)), y) == pytest.approx(np.log(2), abs=1e-12)
    assert bce_with_logits(np.where(y > 0, 20.0, -20.0), y) < 1e-8
    z = rng.normal(size=(8, 8)) * 3
    assert bce_with_logits(z, y) == pytest.approx(bce_with_logits(-z, 1 - y), rel=1e-12)
    with pytest.raises(ShapeMismatch):
        bce_with_logits(np.zeros((2, 2)), np.zeros((3, 3)))


@settings(max_examples=50, deadline=None)
@given(st.floats(-500, 500), st.sampled_from([0.0, 1.0]))
def test_bce_is_stable(z, y):
    loss = bce_with_logits(np.array([z]), np.array([y]))
    naive_p = 1 / (1 + np.exp(-np.clip(z, -15, 15)))
    assert np.isfinite(loss) and loss >= 0
    if abs(z) < 15:
        assert loss == pytest.approx(-(y * np.log(naive_p) + (1 - y) * np.log(1 - naive_p)), rel=1e-6)


# ---------------------------------------------------------------- gradients


def test_gradient_check_finite_difference():
    params = init_params(0, MINI, np.float64)
    batch = random_batch(MINI, 2)
    for group, prefix in LAYER_GROUPS.items():
        errs = finite_difference_errors(params, batch, prefix)
        assert len(errs) == 200
        assert errs.max() < 1e-4, group


def test_masked_audio_stream_has_zero_gradient():
    arch = Arch(crop_side=8, spec_side=8, image_h=12, image_w=12, use_audio=False)
    params = init_params(0, arch, np.float64)
    _, grads = loss_and_grads(params, random_batch(arch, 3))
    for k, g in grads.items():
        if k.startswith("enc_c"):
            assert not g.any(), k
    assert grads["enc_a0.w"].any()


def test_duplicated_sample_doubles_summed_gradient():
    params = init_params(0, MINI, np.float64)
    one = random_batch(MINI, 1)
    two = one.take(np.array([0, 0]))
    _, g1 = loss_and_grads(params, one, "sum")
    _, g2 = loss_and_grads(params, two, "sum")
    for k in g1:
        np.testing.assert_allclose(g2[k], 2 * g1[k], rtol=1e-12, atol=1e-15)


def test_single_record_backward_matches_batch(tiny_ds):
    p = init_params(0).astype(np.float64)
    rec = tiny_ds.load_record(tiny_ds.records[40])
    spec = tiny_ds.spectrogram(rec.clip_id)
    g = backward(p, rec, spec)
    g_mask = backward(p, rec, spec, rec.gt_mask)
    for k in g:
        np.testing.assert_allclose(g[k], g_mask[k])


# ---------------------------------------------------------------- adam


def test_adam_zero_grad_and_first_step():
    p = init_params(0, MINI, np.float64)
    state = AdamState.zeros_like(p)
    zero = {k: np.zeros_like(v) for k, v in p.tensors.items()}
    p2, _ = adam_step(p, zero, state)
    assert all(np.array_equal(p[k], p2[k]) for k in p.tensors)

    rng = np.random.default_rng(0)
    g = {k: rng.normal(size=v.shape) for k, v in p.tensors.items()}
    p3, s3 = adam_step(p, g, state, lr=5e-4)
    assert s3.t == 1
    for k in p.tensors:
        step = p3[k] - p[k]
        if k in FROZEN:
            # fitted input statistics are never optimized
            assert not step.any() and not s3.m[k].any()
            continue
        # closed form: m_hat = g, v_hat = g^2, so the step is -lr * g / (|g| + eps)
        np.testing.assert_allclose(step, -5e-4 * g[k] / (np.abs(g[k]) + 1e-8), rtol=1e-9)
        big = np.abs(g[k]) > 1e-3
        np.testing.assert_allclose(step[big], -5e-4 * np.sign(g[k][big]), rtol=1e-4)


def test_adam_shape_mismatch():
    p = init_params(0, MINI)
    g = {k: np.zeros((1,)) for k in p.tensors}
    with pytest.raises(ShapeMismatch):
        adam_step(p, g, AdamState.zeros_like(p))


# ---------------------------------------------------------------- training


def test_train_curve_and_determinism():
    b = random_batch(MINI, 10)
    cfg = TrainConfig(epochs=3, batch_size=4, seed=1)
    p1, c1 = train(b, MINI, cfg)
    p2, c2 = train(b, MINI, cfg)
    assert len(c1) == 3 and c1 == c2
    assert all(np.array_equal(p1[k], p2[k]) for k in p1.tensors)
    assert c1[-1] < c1[0]


def test_train_empty():
    with pytest.raises(EmptyDataset):
        train(random_batch(MINI, 1).take(slice(0, 0)), MINI)


def test_checkpoint_round_trip(tmp_path):
    p = init_params(9)
    save_checkpoint(tmp_path / "ck", p, {"epochs": 1})
    q = load_checkpoint(tmp_path / "ck")
    assert q.arch == p.arch
    assert all(np.array_equal(p[k], q[k]) for k in p.tensors)


def test_spectrogram_standardization_is_fitted_then_frozen(tmp_path):
    batch = random_batch(MINI, 6, seed=4)
    params, _ = train(batch, MINI, TrainConfig(epochs=2, batch_size=3))
    np.testing.assert_allclose(params["spec_norm.mean"], batch.c.mean(axis=0), rtol=1e-6)
    np.testing.assert_allclose(params["spec_norm.std"], batch.c.std(axis=0) + 1e-3, rtol=1e-5)
    # an affine change of the spectrograms is absorbed, up to the 1e-3 std floor
    shifted = Batch(batch.a, batch.b, 3 * batch.c + 1, batch.proprio, batch.origin, batch.mask)
    p1 = fit_spec_norm(init_params(0, MINI, np.float64), batch.c)
    p2 = fit_spec_norm(init_params(0, MINI, np.float64), shifted.c)
    np.testing.assert_allclose(forward_batch(p1, batch), forward_batch(p2, shifted), atol=1e-2)
    save_checkpoint(tmp_path / "ck", params)
    q = load_checkpoint(tmp_path / "ck")
    assert np.array_equal(q["spec_norm.std"], params["spec_norm.std"])


# ---------------------------------------------------------------- predict


def test_predict_thresholds():
    logits = np.full((64, 64), -10.0)
    for th in (0.5, 0.05):
        _, mask, contact = threshold_logits(logits, th)
        assert not mask.any() and not contact
    with pytest.raises(ValueError):
        threshold_logits(logits, 1.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.01, 0.98), st.floats(0.001, 0.5), st.integers(0, 1000))
def test_predict_monotone_in_threshold(t1, dt, seed):
    t2 = min(t1 + dt, 0.999)
    z = np.random.default_rng(seed).normal(size=(16, 16)) * 4
    _, m1, _ = threshold_logits(z, t1)
    _, m2, _ = threshold_logits(z, t2)
    assert np.all(m2 <= m1)


# ---------------------------------------------------------------- mode classifier


@pytest.fixture(scope="module")
def clf_bank(tmp_path_factory):
    return build_synthetic_bank(tmp_path_factory.mktemp("cb"), 20, seed=3)


def test_classifier_probabilities(clf_bank):
    params = fit_mode_classifier(clf_bank, seed=0)
    label, probs = classify_mode_audio(params, synth_clip(ContactLabel.POINT, SynthProfile(), 99991))
    assert probs.sum() == pytest.approx(1, abs=1e-6)
    assert label is ContactLabel.POINT and probs[ContactLabel.POINT.index] > 0.9


def test_classifier_permutation_equivariance(clf_bank):
    params = fit_mode_classifier(clf_bank, seed=0, iterations=50)
    feats = np.random.default_rng(0).normal(size=(5, 64)) + params.feature_mean
    perm = np.array([2, 0, 3, 1])
    permuted = ClassifierParams(params.weights[perm], params.feature_mean, params.feature_std)
    np.testing.assert_allclose(classifier_probs(permuted, feats), classifier_probs(params, feats)[:, perm])


def test_classifier_errors(clf_bank):
    ids = [c for c in clf_bank.ids_for("point")] + list(clf_bank.ids_for("free"))
    with pytest.raises(MissingLabel):
        fit_mode_classifier(clf_bank, clip_ids=ids)
    params = fit_mode_classifier(clf_bank, iterations=10)
    with pytest.raises(NonFiniteFeatures):
        classify_mode_audio(params, Waveform(np.zeros(44100), 44100))
    assert len(LABELS) == params.weights.shape[0]
