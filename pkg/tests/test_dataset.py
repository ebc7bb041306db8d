
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra import numpy as hnp

from sonotact.audiobank import AudioBank, ContactLabel, build_synthetic_bank
from sonotact.dataset import (
    DatasetManifest,
    ObservationRecord,
    RecordEntry,
    _episode_stratum,
    assign_split,
    build_dataset,
    hallucination_violations,
    split,
)
from sonotact.errors import (
    BadMagic,
    ChecksumMismatch,
    DegenerateSplit,
    InvalidTensor,
    MissingLabel,
    TruncatedBlob,
)
from sonotact.scene import SceneConfig, frame_label, sample_episode
from sonotact.tensorio import decode_tensor, encode_tensor, read_all, read_tensor, write_tensor


@pytest.fixture(scope="module")
def bank(tmp_path_factory):
    return build_synthetic_bank(tmp_path_factory.mktemp("bank"), 2, seed=1)


@pytest.fixture(scope="module")
def ds(bank, tmp_path_factory):
    return build_dataset(SceneConfig(), bank, 10, 0, tmp_path_factory.mktemp("ds"))


# ---------------------------------------------------------------- tensor blobs


@settings(max_examples=50, deadline=None)
@given(hnp.arrays(np.float32, hnp.array_shapes(min_dims=1, max_dims=4, max_side=6),
                  elements=st.floats(width=32, allow_nan=True, allow_infinity=True)))
def test_tensor_round_trip_is_bit_exact(arr):
    back, end = decode_tensor(encode_tensor(arr))
    assert back.shape == arr.shape
    assert back.tobytes() == np.ascontiguousarray(arr).tobytes()
    assert end == 7 + 4 * arr.ndim + arr.nbytes + 4


def test_tensor_header_layout():
    blob = encode_tensor(np.zeros((2, 3), np.float32))
    assert blob[:4] == b"SNTT" and blob[4:7] == bytes([1, 1, 2])
    assert blob[7:15] == (2).to_bytes(4, "little") + (3).to_bytes(4, "little")
    assert len(blob) == 7 + 8 + 24 + 4


def test_tensor_corruption_detected(tmp_path):
    blob = bytearray(encode_tensor(np.arange(12, dtype=np.float32)))
    blob[20] ^= 0x01
    with pytest.raises(ChecksumMismatch):
        decode_tensor(bytes(blob))
    with pytest.raises(BadMagic):
        decode_tensor(b"XXXX" + bytes(blob[4:]))
    good = encode_tensor(np.arange(12, dtype=np.float32))
    with pytest.raises(TruncatedBlob):
        decode_tensor(good[:-3])
    with pytest.raises(TruncatedBlob):
        decode_tensor(good[:5])


@pytest.mark.parametrize("arr", [np.float32(3.0), np.zeros((0,)), np.zeros((3, 0))])
def test_empty_dims_rejected(arr):
    with pytest.raises(InvalidTensor):
        encode_tensor(arr)


def test_concatenated_blobs_by_offset(tmp_path):
    a, b = np.ones((2, 2), np.float32), np.arange(5, dtype=np.float32)
    with open(tmp_path / "x.sntt", "wb") as fh:
        oa, ob = write_tensor(fh, a), write_tensor(fh, b)
    assert oa == 0
    assert np.array_equal(read_tensor(tmp_path / "x.sntt", ob), b)
    assert [t.shape for t in read_all(tmp_path / "x.sntt")] == [(2, 2), (5,)]


# ---------------------------------------------------------------- build


def test_build_counts_and_pairing(ds, bank):
    assert len(ds) == 600
    assert len({r.record_id for r in ds.records}) == 600
    assert hallucination_violations(ds) == []
    for rec in ds.iter_records():
        assert rec.clip_label is rec.gt_label
        assert bank.label_of(rec.clip_id) is rec.gt_label


def test_record_shapes(ds):
    rec = ds.load_record(ds.records[20])
    assert rec.depth_crop.shape == (4, 32, 32)
    assert rec.ref_depth_crop.shape == (4, 32, 32)
    assert rec.flow_crop.shape == (5, 32, 32)
    assert rec.proprio.shape == (7,)
    assert rec.gt_mask.shape == (64, 64)
    assert ds.spectrogram(rec.clip_id).shape == (1, 32, 32)


def test_manifest_validates_and_reloads(ds):
    ds.validate()
    again = DatasetManifest.load(ds.root)
    assert again.manifest_hash() == ds.manifest_hash()
    again.validate()


def test_rebuild_is_identical(ds, bank, tmp_path):
    other = build_dataset(SceneConfig(), bank, 10, 0, tmp_path / "again")
    assert other.manifest_hash() == ds.manifest_hash()
    assert other.blob_sha256 == ds.blob_sha256
    assert other.config_hash == ds.config_hash


def test_parallel_build_is_identical(ds, bank, tmp_path):
    other = build_dataset(SceneConfig(), bank, 10, 0, tmp_path / "par", jobs=2)
    assert other.manifest_hash() == ds.manifest_hash()
    assert other.blob_sha256 == ds.blob_sha256


def test_corrupt_blob_fails_validation(ds, bank, tmp_path):
    other = build_dataset(SceneConfig(), bank, 2, 5, tmp_path / "bad")
    path = other.root / other.records[0].blob
    data = bytearray(path.read_bytes())
    data[100] ^= 0xFF
    path.write_bytes(bytes(data))
    with pytest.raises(ChecksumMismatch):
        other.validate()


def test_bank_missing_label(bank, tmp_path):
    partial = AudioBank([c for c in bank.clips if c.label is not ContactLabel.LINE], bank.root)
    with pytest.raises(MissingLabel):
        build_dataset(SceneConfig(), partial, 1, 0, tmp_path)


def test_near_contact_records_have_content(bank, tmp_path):
    cfg = SceneConfig(near_contact_frac=1.0)
    m = build_dataset(cfg, bank, 2, 3, tmp_path)
    hover = [m.load_record(r) for r in m.records if r.frame_idx >= cfg.descend_frames]
    assert hover
    for rec in hover:
        assert rec.gt_label is ContactLabel.FREE and not rec.gt_mask.any()
        assert rec.clip_label is ContactLabel.FREE
        assert np.ptp(rec.depth_crop[0]) > 0.01
    assert any(np.abs(rec.flow_crop[:2]).max() > 0 for rec in hover)


def test_near_contact_presence_in_default_build(ds):
    near = [e for e in ds.episodes()
            if all(r.label is ContactLabel.FREE for r in ds.records if r.episode_id == e)]
    assert near


def test_record_invariants():
    z = np.zeros((4, 8, 8), np.float32)
    kw = dict(record_id="r", clip_id="c", depth_crop=z, ref_depth_crop=z,
              flow_crop=np.zeros((5, 8, 8), np.float32), proprio=np.zeros(7, np.float32),
              gt_mask=np.zeros((8, 8), np.float32), gt_label=ContactLabel.FREE,
              episode_id=0, frame_idx=0, crop_origin=(0, 0))
    ObservationRecord(**kw)
    with pytest.raises(ValueError):
        ObservationRecord(**{**kw, "gt_label": ContactLabel.POINT})
    with pytest.raises(ValueError):
        ObservationRecord(**{**kw, "clip_label": ContactLabel.LINE})
    bad = z.copy()
    bad[0, 0, 0] = np.nan
    with pytest.raises(ValueError):
        ObservationRecord(**{**kw, "depth_crop": bad})


# ---------------------------------------------------------------- split


def test_split_ten_episodes(ds):
    train, test = split(ds, 0.2, 0)
    assert len(train.episodes()) == 8 and len(test.episodes()) == 2
    assert not set(train.episodes()) & set(test.episodes())
    assert len(train) + len(test) == len(ds)


def test_split_degenerate(ds):
    for frac in (0.0, 1.0, -0.1):
        with pytest.raises(DegenerateSplit):
            split(ds, frac, 0)
    one = ds.with_records(r for r in ds.records if r.episode_id == 0)
    with pytest.raises(DegenerateSplit):
        split(one, 0.5, 0)


def test_assign_split_round_trips(ds):
    tagged = assign_split(ds, 0.2, 1)
    assert {r.split for r in tagged.records} == {"train", "test"}
    for e in tagged.episodes():
        assert len({r.split for r in tagged.records if r.episode_id == e}) == 1


@pytest.fixture(scope="module")
def label_only_manifest(tmp_path_factory):
    """Records of 50 simulated episodes, labels only (split never touches blobs)."""
    cfg = SceneConfig()
    recs = []
    for e in range(50):
        for t, f in enumerate(sample_episode(1000 + e, cfg)):
            lab = frame_label(f, cfg).label
            recs.append(RecordEntry(f"e{e}-{t}", "none", {}, lab, "c", e, t))
    return DatasetManifest(tmp_path_factory.mktemp("lbl"), recs, "", "", {}, [], {})


def _hist(m):
    c = np.bincount([r.label.index for r in m.records], minlength=4)
    return c / c.sum()


def test_split_is_stratified(label_only_manifest):
    m = label_only_manifest
    by_ep = {}
    for r in m.records:
        by_ep.setdefault(r.episode_id, []).append(r)
    strata = {e: _episode_stratum(v) for e, v in by_ep.items()}
    tr_h, te_h = [], []
    for seed in range(40):
        train, test = split(m, 0.2, seed)
        assert len(test.episodes()) == 10
        for name in set(strata.values()):
            n = sum(1 for s in strata.values() if s == name)
            k = sum(1 for e in test.episodes() if strata[e] == name)
            assert int(np.floor(n * 0.2)) <= k <= int(np.ceil(n * 0.2))
        tr_h.append(_hist(train))
        te_h.append(_hist(test))
    tr, te = np.mean(tr_h, 0), np.mean(te_h, 0)
    assert np.all(np.abs(te - tr) <= 0.2 * tr)


@settings(max_examples=20, deadline=None)
@given(st.integers(2, 40), st.floats(0.05, 0.95), st.integers(0, 1000))
def test_split_never_leaks(n_eps, frac, seed):
    recs = [RecordEntry(f"{e}-{t}", "x", {}, ContactLabel.POINT if (e + t) % 3 else ContactLabel.FREE,
                        "c", e, t) for e in range(n_eps) for t in range(3)]
    m = DatasetManifest(".", recs, "", "", {}, [], {})
    train, test = split(m, frac, seed)
    assert set(train.episodes()).isdisjoint(test.episodes())
    assert len(train) and len(test)
    assert sorted(r.record_id for r in (*train.records, *test.records)) == sorted(r.record_id for r in recs)
