import json

import numpy as np
import pytest

from config import GOLDEN_WAVELET
from numeric.gradcheck import grad_check
from numeric.tensor import ShapeError, Tensor
from wavelet import WaveletBands, edge_mask, haar_dwt2, haar_idwt2, wavelet_loss
from wavelet.edge import gradient_magnitude
from wavelet.haar import dwt_array, idwt_array


def flat_normals(height=8, width=8):
    n = np.zeros((3, height, width))
    n[2] = 1.0
    return n


def step_normals():
    """Left half faces +x, right half faces the camera."""
    n = np.zeros((3, 8, 8))
    n[0, :, :4] = 1.0
    n[2, :, 4:] = 1.0
    return n


# --------------------------------------------------
# Haar analysis / synthesis
# --------------------------------------------------
def test_constant_image():
    bands = haar_dwt2(np.full((3, 4, 6), 0.7))
    np.testing.assert_allclose(bands.ll.data, 1.4, atol=1e-15)
    assert not bands.hf.data.any()


def test_single_block():
    x = np.array([[[0.0, 0.0], [1.0, 1.0]]])
    bands = haar_dwt2(x)
    assert bands.band("LL")[0, 0, 0] == 1.0
    assert bands.band("LH")[0, 0, 0] == -1.0
    assert bands.band("HL")[0, 0, 0] == 0.0
    assert bands.band("HH")[0, 0, 0] == 0.0


def test_golden_bands():
    golden = json.loads(GOLDEN_WAVELET.read_text(encoding="utf-8"))
    bands = haar_dwt2(np.array(golden["image"]))
    for name in ("LL", "LH", "HL", "HH"):
        np.testing.assert_allclose(bands.band(name), np.array(golden[name]), atol=1e-12, err_msg=name)


def test_perfect_reconstruction_and_energy(rng):
    for _ in range(1000):
        c = int(rng.integers(1, 4))
        h, w = 2 * int(rng.integers(1, 9)), 2 * int(rng.integers(1, 9))
        x = rng.normal(size=(c, h, w))
        bands = dwt_array(x)
        np.testing.assert_allclose(idwt_array(bands), x, atol=1e-12)
        assert abs(np.sum(bands ** 2) - np.sum(x ** 2)) <= 1e-9 * np.sum(x ** 2)


def test_synthesis_inverts_analysis_both_ways(rng):
    b = rng.normal(size=(12, 3, 4))
    np.testing.assert_allclose(dwt_array(idwt_array(b)), b, atol=1e-12)
    zero = WaveletBands(ll=Tensor(np.zeros((3, 2, 2))), hf=Tensor(np.zeros((9, 2, 2))))
    assert not haar_idwt2(zero).data.any()


def test_rejects_odd_sizes_and_mismatched_bands():
    with pytest.raises(ShapeError, match="even"):
        haar_dwt2(np.zeros((3, 5, 4)))
    with pytest.raises(ShapeError):
        haar_idwt2(WaveletBands(ll=Tensor(np.zeros((3, 2, 2))), hf=Tensor(np.zeros((6, 2, 2)))))
    with pytest.raises(ValueError):
        haar_dwt2(np.zeros((3, 2, 2))).band("XY")


def test_matches_pywt_when_available(rng):
    pywt = pytest.importorskip("pywt")
    x = rng.normal(size=(8, 10))
    ll, (detail_h, detail_v, detail_d) = pywt.dwt2(x, "haar")
    bands = haar_dwt2(x[None])
    np.testing.assert_allclose(bands.band("LL")[0], ll, atol=1e-12)
    np.testing.assert_allclose(np.abs(bands.band("HH")[0]), np.abs(detail_d), atol=1e-12)


# --------------------------------------------------
# edge mask
# --------------------------------------------------
def test_constant_map_has_empty_edge_mask():
    mask = edge_mask(flat_normals())
    assert mask.shape == (4, 4)
    assert not mask.any()


def test_step_edge():
    mask = edge_mask(step_normals())
    np.testing.assert_allclose(mask[:, 1], 1.0)
    assert not mask[:, [0, 2, 3]].any()
    assert mask.max() == 1.0


def test_fixed_normalization_is_bounded():
    mask = edge_mask(step_normals(), normalization="fixed")
    np.testing.assert_allclose(mask[:, 1], np.sqrt(2.0) / 2.0 / 2.0 / 2.0)
    with pytest.raises(ValueError):
        edge_mask(step_normals(), normalization="dataset")


def test_edge_mask_matches_scalar_loop(random_normals):
    n = random_normals(6, 8)
    c, height, width = n.shape
    mag = np.zeros((height, width))
    for i in range(height):
        for j in range(width):
            right = n[:, i, min(j + 1, width - 1)] - n[:, i, j]
            down = n[:, min(i + 1, height - 1), j] - n[:, i, j]
            mag[i, j] = 0.5 * (np.sqrt(np.sum(right ** 2)) + np.sqrt(np.sum(down ** 2)))
    np.testing.assert_allclose(gradient_magnitude(n), mag, atol=1e-12)

    pooled = np.zeros((height // 2, width // 2))
    for i in range(height // 2):
        for j in range(width // 2):
            pooled[i, j] = mag[2 * i:2 * i + 2, 2 * j:2 * j + 2].mean()
    np.testing.assert_allclose(edge_mask(n), pooled / pooled.max(), atol=1e-12)


# --------------------------------------------------
# wavelet loss
# --------------------------------------------------
def test_identical_maps_have_zero_loss(random_normals):
    n = random_normals()
    for mode in ("edge", "interior", "ll_only"):
        assert [t.item() for t in wavelet_loss(n, n, mode)] == [0.0, 0.0, 0.0]


def test_constant_ground_truth_kills_edge_term(rng):
    _, l_hf, _ = wavelet_loss(rng.normal(size=(3, 8, 8)), flat_normals(), mode="edge")
    assert l_hf.item() == 0.0


def test_hand_built_pair():
    gt = flat_normals(4, 4)
    c, i, j = np.meshgrid(np.arange(3), np.arange(4), np.arange(4), indexing="ij")
    pred = gt + (c + 0.5 * i + 0.25 * j)

    l_ll, l_hf, total = wavelet_loss(pred, gt, mode="interior")
    assert l_ll.item() == pytest.approx(4.25, abs=1e-12)
    assert l_hf.item() == pytest.approx(0.25, abs=1e-12)
    assert total.item() == pytest.approx(4.5, abs=1e-12)
    assert [t.item() for t in wavelet_loss(pred, gt, mode="ll_only")] == pytest.approx([4.25, 0.0, 4.25])


def test_mode_algebra(rng, random_normals):
    gt = random_normals()
    pred = gt + 0.1 * rng.normal(size=gt.shape)
    _, edge_hf, _ = wavelet_loss(pred, gt, "edge")
    _, interior_hf, _ = wavelet_loss(pred, gt, "interior")
    unmasked = np.abs(dwt_array(pred - gt)[3:]).mean()
    assert edge_hf.item() + interior_hf.item() == pytest.approx(unmasked, abs=1e-12)


def test_loss_rejects_bad_inputs():
    with pytest.raises(ShapeError):
        wavelet_loss(np.zeros((3, 4, 4)), np.zeros((3, 4, 6)))
    with pytest.raises(ValueError, match="mode"):
        wavelet_loss(np.zeros((3, 4, 4)), np.zeros((3, 4, 4)), mode="sum")


@pytest.mark.parametrize("mode", ["edge", "interior", "ll_only"])
def test_loss_gradient(rng, random_normals, mode):
    gt = random_normals()
    offset = rng.uniform(0.05, 0.3, size=gt.shape) * rng.choice([-1.0, 1.0], size=gt.shape)
    report = grad_check(lambda t: wavelet_loss(t, gt, mode)[2], Tensor(gt + offset))
    assert report.passed
