from itertools import combinations
from math import comb

import numpy as np
import pytest

from mculearn.datasets import LabeledDataset, synth_blobs
from mculearn.weaklabel import (
    MixtureWeights,
    WeakSample,
    default_alpha,
    default_size_dist,
    default_unlabeled_fraction,
    estimate_priors,
    load_weak,
    save_weak,
    weaken,
)


def uniform_ds(K, n, seed=0, d=2):
    rng = np.random.default_rng(seed)
    return LabeledDataset(rng.standard_normal((n, d)), rng.integers(1, K + 1, n), K)


class TestWeaken:
    def test_binary_complement_is_forced(self):
        ds = uniform_ds(2, 50)
        wd = weaken(ds, [1.0], 0.0, 0)
        for s in wd.groups[1]:
            true = ds.labels[s.feature_index]
            assert s.comp_set == (3 - true,)

    def test_full_complement_forced(self):
        K = 4
        ds = uniform_ds(K, 30)
        wd = weaken(ds, [0, 0, 1.0], 0.0, 1)
        for s in wd.groups[K - 1]:
            true = ds.labels[s.feature_index]
            assert s.comp_set == tuple(y for y in range(1, K + 1) if y != true)

    def test_true_label_never_in_set(self):
        ds = uniform_ds(5, 300, seed=2)
        wd = weaken(ds, default_size_dist(5), 0.1, 3)
        for g in wd.groups.values():
            for s in g:
                assert ds.labels[s.feature_index] not in s.comp_set

    def test_unlabeled_fraction(self):
        ds = uniform_ds(3, 200, seed=4)
        wd = weaken(ds, default_size_dist(3), 0.25, 5)
        assert wd.n_unlabeled == 50
        assert sum(wd.counts) == 150

    def test_deterministic(self):
        ds = uniform_ds(4, 100, seed=6)
        wd1 = weaken(ds, default_size_dist(4), 0.2, 7)
        wd2 = weaken(ds, default_size_dist(4), 0.2, 7)
        assert wd1.counts.tolist() == wd2.counts.tolist()
        for c in wd1.groups:
            assert [s.comp_set for s in wd1.groups[c]] == [s.comp_set for s in wd2.groups[c]]

    def test_subset_uniformity(self):
        # K=4, c=2, fixed true label: each of the C(3,2)=3 subsets ~ 1/3
        K, c, n = 4, 2, 10**5
        ds = LabeledDataset(np.zeros((n, 1)), np.full(n, 1), K)
        wd = weaken(ds, [0, 1.0, 0], 0.0, 8)
        counts = {}
        for s in wd.groups[c]:
            counts[s.comp_set] = counts.get(s.comp_set, 0) + 1
        expected = 1 / comb(K - 1, c)
        assert set(counts) == set(combinations(range(2, K + 1), c))
        for v in counts.values():
            assert abs(v / n - expected) <= 0.01

    def test_fixed_counts_mode(self):
        ds = uniform_ds(3, 100, seed=9)
        wd = weaken(ds, default_size_dist(3), 0.0, 10, fixed_counts=[30, 70])
        assert wd.counts.tolist() == [30, 70]

    def test_bad_size_dist(self):
        ds = uniform_ds(3, 10)
        with pytest.raises(ValueError):
            weaken(ds, [0.5, 0.4], 0.0, 0)


class TestDefaultSizeDist:
    def test_k3_symmetric(self):
        np.testing.assert_allclose(default_size_dist(3), [0.5, 0.5], atol=1e-15)

    def test_k2_single(self):
        np.testing.assert_allclose(default_size_dist(2), [1.0])

    def test_k10_mode_and_symmetry(self):
        p = default_size_dist(10)
        i = np.arange(1, 10)
        expected = np.exp(-((i - 5.0) ** 2))
        expected /= expected.sum()
        np.testing.assert_allclose(p, expected, atol=1e-15)
        assert np.argmax(p) == 4  # i = 5
        np.testing.assert_allclose(p, p[::-1], atol=1e-15)


class TestDefaultAlpha:
    def test_hand_example(self):
        np.testing.assert_allclose(default_alpha([1, 1], 3), [0.2, 0.8], atol=1e-12)

    def test_empty_group_excluded(self):
        np.testing.assert_allclose(default_alpha([0, 5], 3), [0.0, 1.0])

    def test_k2_single(self):
        np.testing.assert_allclose(default_alpha([7], 2), [1.0])

    def test_all_zero_rejected(self):
        with pytest.raises(ValueError):
            default_alpha([0, 0], 3)

    def test_satisfies_mixture_invariants(self):
        a = default_alpha([3, 0, 9, 1], 5)
        MixtureWeights(a)  # raises if invalid


class TestEstimatePriors:
    def test_balanced(self):
        ds = uniform_ds(3, 100, seed=11)
        wd = weaken(ds, [0.5, 0.5], 0.0, 12, fixed_counts=[50, 50])
        pi, lam = estimate_priors(wd)
        np.testing.assert_allclose(pi, [0.5, 0.5])
        assert lam == pytest.approx(4 / 3)

    def test_all_full_sets(self):
        ds = uniform_ds(4, 60, seed=13)
        wd = weaken(ds, [0, 0, 1.0], 0.0, 14)
        _, lam = estimate_priors(wd)
        assert lam == pytest.approx(1.0)

    def test_all_singletons(self):
        ds = uniform_ds(4, 60, seed=15)
        wd = weaken(ds, [1.0, 0, 0], 0.0, 16)
        _, lam = estimate_priors(wd)
        assert lam == pytest.approx(3.0)

    def test_no_labeled_rejected(self):
        ds = uniform_ds(3, 10, seed=17)
        wd = weaken(ds, [0.5, 0.5], 0.9, 18)
        object.__setattr__(wd, "groups", {})
        with pytest.raises(RuntimeError):
            estimate_priors(wd)


class TestMixtureWeights:
    def test_lambda_derived(self):
        w = MixtureWeights([0.5, 0.5], pi=[0.5, 0.5])
        assert w.lam == pytest.approx(4 / 3)

    def test_bad_alpha(self):
        with pytest.raises(ValueError):
            MixtureWeights([0.5, 0.6])
        with pytest.raises(ValueError):
            MixtureWeights([-0.1, 1.1])

    def test_bad_gamma(self):
        with pytest.raises(ValueError):
            MixtureWeights([1.0], gamma=1.5)


class TestWeakSample:
    def test_sorted_and_deduped(self):
        assert WeakSample(0, (3, 1)).comp_set == (1, 3)
        with pytest.raises(ValueError):
            WeakSample(0, (2, 2))


def test_default_unlabeled_fraction():
    assert default_unlabeled_fraction(1000) == 0.99
    assert default_unlabeled_fraction(60000) == 0.995


def test_jsonl_roundtrip_exact(tmp_path):
    ds = synth_blobs(4, 3, 40, 19)
    wd = weaken(ds, default_size_dist(4), 0.3, 20)
    p = tmp_path / "weak.jsonl"
    save_weak(wd, p)
    back = load_weak(p)
    assert back.K == wd.K and back.d == wd.d
    assert back.counts.tolist() == wd.counts.tolist()
    assert back.n_unlabeled == wd.n_unlabeled
    # f64 features must survive the text round-trip exactly
    orig = np.concatenate([
        wd.features[[s.feature_index for s in wd.groups[c]]] for c in sorted(wd.groups)
    ] + [wd.features[[s.feature_index for s in wd.unlabeled]]])
    got = np.concatenate([
        back.features[[s.feature_index for s in back.groups[c]]] for c in sorted(back.groups)
    ] + [back.features[[s.feature_index for s in back.unlabeled]]])
    assert np.array_equal(orig, got)
    for c in wd.groups:
        assert [s.comp_set for s in wd.groups[c]] == [s.comp_set for s in back.groups[c]]
