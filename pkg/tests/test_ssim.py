import numpy as np
import pytest

from nnwatchdog.metrics import SsimError, SsimParams, rmse, ssim, ssim_map
from nnwatchdog.rng import Rng

GLOBAL = SsimParams(aggregation="global")


def brute_force_ssim(x, y, p):
    """Direct per-window evaluation of the local score, averaged."""
    h, w = x.shape
    win = p.window
    c1, c2 = p.c1, p.c2
    vals = []
    for i in range(h - win + 1):
        for j in range(w - win + 1):
            a = x[i : i + win, j : j + win].ravel()
            b = y[i : i + win, j : j + win].ravel()
            mx, my = a.mean(), b.mean()
            vx = (a * a).mean() - mx * mx
            vy = (b * b).mean() - my * my
            cov = (a * b).mean() - mx * my
            vals.append(
                ((2 * mx * my + c1) * (2 * cov + c2))
                / ((mx * mx + my * my + c1) * (vx + vy + c2))
            )
    return float(np.mean(vals))


def test_identical_images_score_exactly_one():
    rng = Rng(1)
    for p in (SsimParams(), GLOBAL):
        for trial in range(5):
            x = rng.uniform(0, 1, (12, 12))
            assert ssim(x, x, p) == 1.0


def test_constant_images_hand_derived_value():
    # global mode, x=0, y=1, L=1: C1/(1+C1) with C1 = 1e-4
    x = np.zeros((8, 8))
    y = np.ones((8, 8))
    expected = 1e-4 / (1 + 1e-4)
    assert ssim(x, y, GLOBAL) == pytest.approx(expected, rel=1e-12)
    m = ssim_map(x, y, GLOBAL)
    assert m.shape == (1, 1)
    assert m[0, 0] == pytest.approx(expected, rel=1e-12)


def test_symmetry():
    rng = Rng(2)
    for trial in range(20):
        x = rng.uniform(0, 1, (10, 10))
        y = rng.uniform(0, 1, (10, 10))
        assert abs(ssim(x, y) - ssim(y, x)) <= 1e-12


def test_windowed_matches_brute_force_oracle():
    rng = Rng(3)
    for trial in range(30):
        side = 8 + int(rng.below(25))
        x = rng.uniform(0, 1, (side, side))
        y = np.clip(x + rng.uniform(-0.3, 0.3, (side, side)), 0, 1)
        assert ssim(x, y) == pytest.approx(brute_force_ssim(x, y, SsimParams()), abs=1e-9)


def test_map_mean_equals_scalar():
    rng = Rng(4)
    x = rng.uniform(0, 1, (16, 16))
    y = rng.uniform(0, 1, (16, 16))
    m = ssim_map(x, y)
    assert m.shape == (10, 10)
    assert abs(m.mean() - ssim(x, y)) <= 1e-12
    assert m.max() <= 1.0


def test_score_at_most_one():
    rng = Rng(5)
    for trial in range(20):
        x = rng.uniform(0, 1, (9, 9))
        y = rng.uniform(0, 1, (9, 9))
        assert ssim(x, y) <= 1.0


def test_noise_degrades_score_monotonically():
    rng = Rng(6)
    x = rng.uniform(0.2, 0.8, (16, 16))
    means = []
    for sigma in (0.05, 0.1, 0.2, 0.4):
        scores = []
        for trial in range(100):
            noise = rng.uniform(-sigma, sigma, (16, 16))
            scores.append(ssim(x, np.clip(x + noise, 0, 1)))
        means.append(np.mean(scores))
    assert all(a > b for a, b in zip(means, means[1:]))


def test_sum_form_differs_and_is_diagnostic_only():
    rng = Rng(7)
    x = rng.uniform(0, 1, (10, 10))
    assert ssim(x, x, form="sum") != 1.0  # the printed sum form loses the identity
    y = rng.uniform(0, 1, (10, 10))
    assert ssim(x, y, form="sum") != ssim(x, y, form="product")


def test_dimension_and_window_errors():
    with pytest.raises(SsimError):
        ssim(np.zeros((8, 8)), np.zeros((9, 9)))
    with pytest.raises(SsimError):
        ssim(np.zeros((4, 4)), np.zeros((4, 4)), SsimParams(window=7))
    with pytest.raises(SsimError):
        SsimParams(window=6)  # even window
    with pytest.raises(SsimError):
        ssim(np.full((8, 8), 1.5), np.zeros((8, 8)))  # out of data range


def test_multichannel_images():
    rng = Rng(8)
    x = rng.uniform(0, 1, (10, 10, 3))
    assert ssim(x, x) == 1.0
    y = rng.uniform(0, 1, (10, 10, 3))
    m = ssim_map(x, y)
    assert m.shape == (4, 4)
    assert abs(m.mean() - ssim(x, y)) <= 1e-12


def test_rmse_values():
    assert rmse(np.zeros((3, 3)), np.zeros((3, 3))) == 0.0
    assert rmse(np.zeros((4, 4)), np.ones((4, 4))) == 1.0
    assert rmse(np.zeros(2), np.array([3.0, 4.0])) == pytest.approx(
        np.sqrt(12.5), rel=1e-12
    )
    with pytest.raises(SsimError):
        rmse(np.zeros(3), np.zeros(4))
