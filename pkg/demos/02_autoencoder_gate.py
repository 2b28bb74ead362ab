#!/usr/bin/env python3
"""Train the tier-1 autoencoder gate and calibrate its threshold.

A small run (reduced image size and epoch count, a few hundred samples) that
still shows the whole mechanism: in-distribution images reconstruct well and
score high, out-of-distribution images score low, and the calibration sweep
recommends a threshold band between the two populations.
"""

from pathlib import Path

import numpy as np

from nnwatchdog import nn
from nnwatchdog.data import SyntheticSpec, synth_in_distribution, synth_ood
from nnwatchdog.gallery import write_triptychs
from nnwatchdog.metrics import SsimParams
from nnwatchdog.tiers import (
    AutoencoderConfig,
    ThresholdConfig,
    calibrate,
    tier1_gate,
    tier1_scores,
    train_autoencoder,
)

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

SIZE = 16
spec = SyntheticSpec(size=SIZE, scale_range=(0.7, 0.75), position_jitter=0.2)
ssim_params = SsimParams(window=5)

print("== generating data and training the autoencoder ==")
train = synth_in_distribution(spec, seed=7, n=600)
config = AutoencoderConfig(
    spec=nn.dense_stack([SIZE * SIZE, 96, 24, 96, SIZE * SIZE], "relu", "sigmoid"),
    epochs=8,
    batch_size=32,
    seed=11,
)
model, history = train_autoencoder(train, config)
for row in history:
    print(f"  epoch {row.epoch:2d}  train mse {row.train_loss:.5f}  val mse {row.val_loss:.5f}")

print()
print("== scoring held-out data ==")
eval_in = synth_in_distribution(spec, seed=8, n=150)
eval_ood = synth_ood("texture-noise", seed=9, n=150, size=SIZE)
s_in = tier1_scores(model, eval_in.images, ssim_params)
s_ood = tier1_scores(model, eval_ood.images, ssim_params)
print(f"in-distribution scores:  mean {s_in.mean():.3f}, min {s_in.min():.3f}")
print(f"out-of-distribution:     mean {s_ood.mean():.3f}, max {s_ood.max():.3f}")

print()
print("== calibrating the acceptance threshold ==")
report = calibrate(model, eval_in, eval_ood, ThresholdConfig(tau=None), ssim_params)
print(f"ROC AUC {report.curve.auc:.4f}")
print(
    f"recommended band [{report.recommended_low:.3f}, {report.recommended_high:.3f}], "
    f"chosen tau {report.chosen_tau:.3f}"
)
for k in sorted(report.class_mean_scores):
    print(f"  class {k}: mean score {report.class_mean_scores[k]:.3f}")

tau = report.chosen_tau
decisions = [tier1_gate(s, tau) for s in np.concatenate([s_in[:3], s_ood[:3]])]
print(f"sample gate decisions at tau={tau:.3f}: {decisions}")

sheet = OUT / "reconstruction_triptychs.pgm"
write_triptychs(model, eval_in.images[:6], sheet, ssim_params)
print(f"wrote original/reconstruction/similarity sheet to {sheet}")
