import gzip
import struct

import numpy as np
import pytest

from mculearn.datasets import (
    LabeledDataset,
    ParseError,
    load_csv,
    load_idx,
    minmax_scale,
    save_csv,
    split,
    synth_blobs,
    synth_mixture,
)


def write_csv(path, rows):
    path.write_text("\n".join(",".join(str(v) for v in row) for row in rows) + "\n")


class TestLoadCsv:
    def test_label_remap_sorted(self, tmp_path):
        p = tmp_path / "a.csv"
        write_csv(p, [[0.1, 0.2, 0], [0.3, 0.4, 1], [0.5, 0.6, 0]])
        ds = load_csv(p, 2, 2)
        np.testing.assert_array_equal(ds.labels, [1, 2, 1])
        assert ds.d == 2

    def test_header_detected(self, tmp_path):
        p = tmp_path / "a.csv"
        write_csv(p, [["f1", "f2", "label"], [0.1, 0.2, 5], [0.3, 0.4, 9]])
        ds = load_csv(p, 2, 2)
        np.testing.assert_array_equal(ds.labels, [1, 2])

    def test_ragged_row_names_line(self, tmp_path):
        p = tmp_path / "a.csv"
        write_csv(p, [[0.1, 0.2, 0], [0.3, 1], [0.5, 0.6, 1]])
        with pytest.raises(ParseError, match=":2:"):
            load_csv(p, 2, 2)

    def test_non_numeric_cell(self, tmp_path):
        p = tmp_path / "a.csv"
        write_csv(p, [[0.1, 0.2, 0], [0.3, "oops", 1]])
        with pytest.raises(ParseError, match=":2:"):
            load_csv(p, 2, 2)

    def test_wrong_label_count(self, tmp_path):
        p = tmp_path / "a.csv"
        write_csv(p, [[0.1, 0.2, 0], [0.3, 0.4, 1], [0.5, 0.6, 2]])
        with pytest.raises(ParseError, match="distinct labels"):
            load_csv(p, 2, 2)

    def test_roundtrip_bit_equal(self, tmp_path):
        rng = np.random.default_rng(3)
        ds = LabeledDataset(rng.standard_normal((20, 5)), rng.integers(1, 4, 20), 3)
        p = tmp_path / "rt.csv"
        save_csv(ds, p)
        back = load_csv(p, 5, 3)
        assert np.array_equal(back.features, ds.features)
        np.testing.assert_array_equal(back.labels, ds.labels)


def write_idx_pair(tmp_path, images, labels, gz=False, images_magic=0x803,
                   labels_magic=0x801, truncate=0):
    images = np.asarray(images, dtype=np.uint8)
    labels = np.asarray(labels, dtype=np.uint8)
    ip, lp = tmp_path / "imgs", tmp_path / "labs"
    ibytes = struct.pack(">I", images_magic)
    ibytes += struct.pack(f">{images.ndim}I", *images.shape)
    ibytes += images.tobytes()
    if truncate:
        ibytes = ibytes[:-truncate]
    lbytes = struct.pack(">I", labels_magic) + struct.pack(">I", labels.size) + labels.tobytes()
    if gz:
        ip.write_bytes(gzip.compress(ibytes))
    else:
        ip.write_bytes(ibytes)
    lp.write_bytes(lbytes)
    return ip, lp


class TestLoadIdx:
    def test_scaling(self, tmp_path):
        ip, lp = write_idx_pair(tmp_path, np.array([[[0, 255], [128, 64]]]), [3])
        ds = load_idx(ip, lp)
        np.testing.assert_allclose(ds.features[0], [0.0, 1.0, 128 / 255, 64 / 255])
        assert ds.labels[0] == 1 and ds.K == 1

    def test_count_mismatch(self, tmp_path):
        imgs = np.zeros((10, 2, 2))
        ip, lp = write_idx_pair(tmp_path, imgs, list(range(9)))
        with pytest.raises(ParseError, match="count"):
            load_idx(ip, lp)

    def test_bad_magic(self, tmp_path):
        ip, lp = write_idx_pair(tmp_path, np.zeros((1, 2, 2)), [0], images_magic=0x999)
        with pytest.raises(ParseError, match="magic"):
            load_idx(ip, lp)

    def test_truncated_payload(self, tmp_path):
        ip, lp = write_idx_pair(tmp_path, np.zeros((2, 2, 2)), [0, 1], truncate=3)
        with pytest.raises(ParseError, match="truncated"):
            load_idx(ip, lp)

    def test_gzip_and_label_shift(self, tmp_path):
        imgs = np.arange(16).reshape(4, 2, 2)
        ip, lp = write_idx_pair(tmp_path, imgs, [0, 3, 1, 3], gz=True)
        ds = load_idx(ip, lp)
        assert ds.n == 4 and ds.K == 3
        np.testing.assert_array_equal(ds.labels, [1, 3, 2, 3])


class TestSplit:
    def test_nine_to_one(self):
        ds = synth_blobs(2, 2, 10, 0)
        a, b = split(ds, 0.9, 42)
        assert a.n == 9 and b.n == 1

    def test_deterministic(self):
        ds = synth_blobs(3, 4, 50, 1)
        a1, b1 = split(ds, 0.8, 7)
        a2, b2 = split(ds, 0.8, 7)
        assert np.array_equal(a1.features, a2.features)
        assert np.array_equal(b1.labels, b2.labels)

    def test_partition(self):
        ds = synth_blobs(2, 1, 37, 2)
        keyed = {tuple(ds.features[i]): i for i in range(ds.n)}
        a, b = split(ds, 0.6, 3)
        seen = [keyed[tuple(r)] for part in (a, b) for r in part.features]
        assert sorted(seen) == list(range(ds.n))

    def test_bad_ratio(self):
        ds = synth_blobs(2, 1, 5, 0)
        with pytest.raises(ValueError):
            split(ds, 1.5, 0)


class TestSynthMixture:
    def test_normalized(self):
        fd = synth_mixture(4, 3, 7, 0)
        assert abs(fd.joint.sum() - 1.0) <= 1e-12

    def test_single_point_simplex(self):
        fd = synth_mixture(2, 1, 1, 0)
        assert fd.joint.shape == (1, 2)
        assert abs(fd.joint.sum() - 1.0) <= 1e-12

    def test_deterministic(self):
        a = synth_mixture(3, 2, 5, 9)
        b = synth_mixture(3, 2, 5, 9)
        assert np.array_equal(a.joint, b.joint)
        assert np.array_equal(a.points, b.points)

    def test_every_class_has_mass(self):
        fd = synth_mixture(6, 2, 4, 5)
        assert np.all(fd.joint.sum(axis=0) > 0)

    def test_point_marginal_consistent(self):
        fd = synth_mixture(3, 2, 6, 1)
        np.testing.assert_allclose(fd.point_marginal(), fd.joint.sum(axis=1),
                                   atol=1e-15)


def test_minmax_scale_to_unit_interval():
    ds = synth_blobs(2, 3, 40, 4)
    scaled = minmax_scale(ds)
    assert scaled.features.min() >= 0.0 and scaled.features.max() <= 1.0
    np.testing.assert_allclose(scaled.features.min(axis=0), 0.0, atol=1e-15)
    np.testing.assert_allclose(scaled.features.max(axis=0), 1.0, atol=1e-15)
