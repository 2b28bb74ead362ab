#!/usr/bin/env python3
"""Structural similarity and ROC basics on synthetic glyphs.

Walks through the two metrics everything else is built on: the windowed
similarity score between an image and a degraded copy, and the ROC curve
over a set of scores with known labels.
"""

import numpy as np

from nnwatchdog.data import SyntheticSpec, synth_in_distribution
from nnwatchdog.metrics import NEG, POS, SsimParams, rmse, roc, ssim, ssim_map
from nnwatchdog.rng import Rng

spec = SyntheticSpec()
glyphs = synth_in_distribution(spec, seed=7, n=10)
img = glyphs.images[0][:, :, 0]
rng = Rng(42)

print("== similarity of an image with progressively noisier copies ==")
print(f"{'noise':>8} {'ssim':>8} {'rmse':>8}")
for sigma in (0.0, 0.05, 0.1, 0.2, 0.4):
    noisy = np.clip(img + rng.uniform(-sigma, sigma, img.shape), 0, 1)
    print(f"{sigma:8.2f} {ssim(img, noisy):8.4f} {rmse(img, noisy):8.4f}")

print()
print("== the local similarity map shows where structure was lost ==")
noisy = img.copy()
noisy[8:18, 8:18] = rng.uniform(0, 1, (10, 10))  # corrupt a patch
m = ssim_map(img, noisy)
print(f"scalar score {ssim(img, noisy):.4f}; map shape {m.shape}")
print("map row means (low values mark the corrupted band):")
print(np.array2string(m.mean(axis=1), precision=2, suppress_small=True))

print()
print("== ROC over scores from two overlapping populations ==")
in_scores = 0.75 + 0.15 * rng.uniform(-1, 1, 50)
out_scores = 0.55 + 0.2 * rng.uniform(-1, 1, 50)
curve = roc(
    np.concatenate([in_scores, out_scores]), [POS] * 50 + [NEG] * 50
)
print(f"AUC = {curve.auc:.4f} over {len(curve.thresholds)} thresholds")
print("first points (threshold, fpr, tpr):")
for t, f, s in list(zip(curve.thresholds, curve.fpr, curve.tpr))[:5]:
    print(f"  {t:8.4f} {f:6.3f} {s:6.3f}")

print()
print("global-mode score of all-black vs all-white:",
      ssim(np.zeros((8, 8)), np.ones((8, 8)), SsimParams(aggregation="global")))
