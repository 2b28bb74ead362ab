#!/usr/bin/env python3
"""The full guarded pipeline, end to end at small scale.

Trains all three networks, composes the two gates in front of the core
classifier, and evaluates on a 1/3 in-distribution mix: the unguarded
accuracy collapses toward the in-distribution fraction while the guarded
pipeline rejects out-of-distribution inputs before they reach the core.
"""

from pathlib import Path

from nnwatchdog import nn
from nnwatchdog.data import SyntheticSpec, mix, synth_in_distribution, synth_ood
from nnwatchdog.generator import GeneratorConfig, batch_generate
from nnwatchdog.metrics import SsimParams
from nnwatchdog.pipeline import PipelineConfig, compare_report, evaluate, guard
from nnwatchdog.tiers import (
    AutoencoderConfig,
    BinaryClassifierConfig,
    CoreClassifierConfig,
    ThresholdConfig,
    calibrate,
    train_autoencoder,
    train_binary,
    train_core,
)

OUT = Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

SIZE = 16
PIXELS = SIZE * SIZE
spec = SyntheticSpec(size=SIZE, scale_range=(0.7, 0.75), position_jitter=0.2)
ssim_params = SsimParams(window=5)

print("== data ==")
train = synth_in_distribution(spec, seed=7, n=600)
eval_in = synth_in_distribution(spec, seed=8, n=150)
ood_a = synth_ood("texture-noise", seed=9, n=150, size=SIZE)
ood_b = synth_ood("alien-glyphs", seed=10, n=150, size=SIZE)
mixed = mix(eval_in, [ood_a, ood_b], seed=1, name="demo-mix")
print(f"mixed evaluation set: {len(mixed)} samples, "
      f"{mixed.in_distribution.mean():.2f} in-distribution")

print()
print("== training all three networks ==")
ae, _ = train_autoencoder(
    train,
    AutoencoderConfig(
        spec=nn.dense_stack([PIXELS, 96, 24, 96, PIXELS], "relu", "sigmoid"),
        epochs=8, batch_size=32, seed=11,
    ),
)
calibration = calibrate(ae, eval_in, ood_a, ThresholdConfig(tau=None), ssim_params)
print(f"calibrated tau = {calibration.chosen_tau:.3f} "
      f"(band [{calibration.recommended_low:.3f}, {calibration.recommended_high:.3f}])")

boundary = batch_generate(
    ae, GeneratorConfig(seed=13), 100, seed_images=train.images,
    ssim_params=ssim_params,
)
binary, _ = train_binary(
    train, boundary,
    BinaryClassifierConfig(
        spec=nn.dense_stack([PIXELS, 48, 16, 1], "relu", "sigmoid"),
        epochs=6, batch_size=16, seed=17,
    ),
)
core, _ = train_core(
    train,
    CoreClassifierConfig(
        spec=nn.dense_stack([PIXELS, 96, 24, 10], "relu", "softmax"),
        epochs=10, batch_size=32, seed=19,
    ),
)

pipeline = PipelineConfig(
    core=core, autoencoder=ae, binary=binary,
    tau=calibration.chosen_tau, ssim_params=ssim_params,
)

print()
print("== single-input verdicts ==")
for label, image in (
    ("clean glyph", eval_in.images[0]),
    ("texture noise", ood_a.images[0]),
    ("alien glyph", ood_b.images[0]),
):
    verdict = guard(pipeline, image)
    extras = f"tier1={verdict.tier1_score:.3f}"
    if verdict.tier2_p_in is not None:
        extras += f", tier2 p_in={verdict.tier2_p_in:.3f}"
    if verdict.accepted:
        extras += f", class={verdict.predicted_class}"
    print(f"  {label:14s} -> {verdict.outcome:15s} ({extras})")

print()
print("== guarded vs unguarded on the mixed set ==")
report = evaluate(pipeline, mixed)
for mode in (report.unguarded, report.guarded, report.baseline):
    print(f"  {mode.label:10s} end-to-end accuracy {mode.end_to_end_accuracy:.4f}  "
          f"pooled AUC {mode.auc:.4f}")
print(f"  tier-1 rejections: {report.rejected_tier1_out} out-of-distribution, "
      f"{report.rejected_tier1_in} in-distribution")
print(f"  tier-2 rejections: {report.rejected_tier2_out} / {report.rejected_tier2_in}")

csv_path, json_path = OUT / "comparison.csv", OUT / "comparison_summary.json"
compare_report(report.unguarded, report.guarded, report.baseline,
               csv_path=csv_path, json_path=json_path)
report.to_json(OUT / "evaluation.json")
print(f"wrote {csv_path.name}, {json_path.name}, evaluation.json to {OUT}")
