import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from adaptomo.errors import DegenerateInputError, InvalidArgumentError
from adaptomo.metrics import (OTSU_BINS, ReconSet, f1_jaccard, mean_std, otsu_threshold,
                              pixelwise_std, rmse, segment, squared_bias, std_histogram)
from adaptomo.raster import ImageGrid

skfilters = pytest.importorskip("skimage.filters")


def img(a):
    return ImageGrid.from_array(np.asarray(a, dtype=float))


def rset(*arrays_):
    return ReconSet.from_dict({f"m{i}": img(a) for i, a in enumerate(arrays_)})


def test_identical_members_zero_std():
    a = np.random.default_rng(0).random((5, 5))
    assert not np.any(pixelwise_std(rset(a, a, a)).values)


def test_two_member_std():
    s = pixelwise_std(rset(np.zeros((2, 2)), np.full((2, 2), 2.0)))
    np.testing.assert_array_equal(s.values, 1.0)


def test_std_two_pass_oracle():
    rng = np.random.default_rng(4)
    members = [rng.standard_normal((16, 16)) for _ in range(5)]
    want = np.zeros((16, 16))
    for i in range(16):
        for j in range(16):
            vals = [m[i, j] for m in members]
            mu = sum(vals) / 5
            want[i, j] = np.sqrt(sum((v - mu) ** 2 for v in vals) / 5)
    np.testing.assert_allclose(pixelwise_std(rset(*members)).values, want, rtol=0, atol=1e-12)


def test_std_needs_two():
    with pytest.raises(InvalidArgumentError):
        pixelwise_std(rset(np.zeros((2, 2))))
    with pytest.raises(InvalidArgumentError):
        rset(np.zeros((2, 2)), np.zeros((3, 3)))


members_st = st.integers(2, 5).flatmap(
    lambda k: st.lists(arrays(np.float64, (4, 4), elements=st.floats(-10, 10)),
                       min_size=k, max_size=k))


@settings(max_examples=50, deadline=None)
@given(members_st, st.randoms(use_true_random=False), arrays(np.float64, (4, 4),
                                                             elements=st.floats(-10, 10)))
def test_std_permutation_and_shift_invariance(members, rnd, shift):
    base = pixelwise_std(rset(*members)).values
    perm = list(members)
    rnd.shuffle(perm)
    np.testing.assert_allclose(pixelwise_std(rset(*perm)).values, base, atol=1e-12)
    np.testing.assert_allclose(pixelwise_std(rset(*[m + shift for m in members])).values, base,
                               atol=1e-9)


@settings(max_examples=50, deadline=None)
@given(members_st, st.integers(0, 4))
def test_replacing_member_by_mean_does_not_increase_mean_std(members, k):
    k %= len(members)
    before = mean_std(pixelwise_std(rset(*members)))
    mean = np.mean(members, axis=0)
    after = mean_std(pixelwise_std(rset(*[mean if i == k else m for i, m in enumerate(members)])))
    assert after <= before + 1e-12


def test_mean_std():
    assert mean_std(img(np.zeros((3, 3)))) == 0
    assert mean_std(img(np.full((3, 3), 0.25))) == 0.25
    a = np.random.default_rng(1).random((7, 7))
    total = 0.0
    for v in a.ravel():
        total += v
    assert mean_std(img(a)) == pytest.approx(total / 49, abs=1e-15)


def test_rmse():
    a = np.random.default_rng(2).random((6, 6))
    assert rmse(img(a), img(a)) == 0
    assert rmse(img(a + 1), img(a)) == pytest.approx(1.0, abs=1e-15)
    b = np.random.default_rng(3).random((6, 6))
    want = np.sqrt(sum((x - y) ** 2 for x, y in zip(a.ravel(), b.ravel())) / 36)
    assert rmse(img(a), img(b)) == pytest.approx(want, abs=1e-12)


def test_squared_bias():
    gt = np.random.default_rng(5).random((4, 4))
    m, v = squared_bias(rset(gt, gt), img(gt))
    assert v == 0 and not np.any(m.values)
    m, v = squared_bias(rset(gt + 1, gt - 1), img(gt))
    assert v == pytest.approx(0, abs=1e-24)
    rng = np.random.default_rng(6)
    ms = [rng.random((4, 4)) for _ in range(3)]
    want = ((ms[0] + ms[1] + ms[2]) / 3 - gt) ** 2
    m, v = squared_bias(rset(*ms), img(gt))
    np.testing.assert_allclose(m.values, want, atol=1e-12)
    assert v == pytest.approx(want.mean(), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (5, 5), elements=st.floats(-5, 5)),
       arrays(np.float64, (5, 5), elements=st.floats(-5, 5)))
def test_rmse_squared_equals_singleton_bias(r, gt):
    _, v = squared_bias(rset(r), img(gt))
    assert abs(rmse(img(r), img(gt)) ** 2 - v) <= 1e-12 * max(v, 1.0)


def test_otsu_bimodal():
    a = np.zeros((8, 8))
    a[:4] = 1.0
    t = otsu_threshold(img(a))
    assert 0 < t < 1
    np.testing.assert_array_equal(segment(img(a), t).values, a)


def test_otsu_constant_image():
    with pytest.raises(DegenerateInputError):
        otsu_threshold(img(np.ones((3, 3))))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_otsu_matches_skimage(seed):
    rng = np.random.default_rng(seed)
    a = np.concatenate([rng.normal(0.1, 0.05, 300), rng.normal(0.6, 0.1, 100)])
    ours = otsu_threshold(img(a.reshape(20, 20)))
    theirs = skfilters.threshold_otsu(a, nbins=OTSU_BINS)
    assert abs(ours - theirs) <= (a.max() - a.min()) / OTSU_BINS * 1.0001


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.1, 10), st.floats(-5, 5))
def test_otsu_affine_invariance(seed, a, b):
    x = np.random.default_rng(seed).random((12, 12)) ** 2
    t = otsu_threshold(img(x))
    t2 = otsu_threshold(img(a * x + b))
    assert abs(t2 - (a * t + b)) <= a * (x.max() - x.min()) / OTSU_BINS * 1.0001


def test_f1_jaccard_cases():
    a = np.zeros((4, 4))
    a[1:3, 1:3] = 1
    assert f1_jaccard(img(a), img(a)) == (1.0, 1.0)
    b = np.zeros((4, 4))
    b[0, 0] = 1
    assert f1_jaccard(img(a), img(b)) == (0.0, 0.0)
    z = np.zeros((4, 4))
    assert f1_jaccard(img(z), img(z)) == (1.0, 1.0)
    with pytest.raises(InvalidArgumentError):
        f1_jaccard(img(a * 0.5), img(a))


@settings(max_examples=100, deadline=None)
@given(arrays(np.bool_, (6, 6)), arrays(np.bool_, (6, 6)))
def test_f1_jaccard_identity(a, b):
    f1, j = f1_jaccard(img(a.astype(float)), img(b.astype(float)))
    assert abs(f1 - 2 * j / (1 + j)) <= 1e-12
    tp = np.sum(a & b)
    union = np.sum(a | b)
    if union:
        assert j == pytest.approx(tp / union, abs=1e-15)


def test_histogram_zero_map():
    h = std_histogram(img(np.zeros((5, 5))), 10)
    assert h.counts[0] == 25 and h.counts.sum() == 25 and h.mode_bin == 0


def test_histogram_known_map():
    s = np.array([[0.0, 0.1, 0.2], [0.25, 0.5, 0.5], [0.75, 0.99, 1.0]])
    h = std_histogram(img(s), 4)
    # bins [0,.25) [.25,.5) [.5,.75) [.75,1.0]
    np.testing.assert_array_equal(h.counts, [3, 1, 2, 3])
    np.testing.assert_allclose(h.bin_edges, [0, .25, .5, .75, 1.0])


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (6, 6), elements=st.floats(0, 3)), st.integers(1, 50))
def test_histogram_mass(s, n_bins):
    assert std_histogram(img(s), n_bins).counts.sum() == 36
