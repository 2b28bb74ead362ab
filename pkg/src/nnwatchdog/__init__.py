"""Multi-tiered out-of-distribution watchdog for image classifiers.

The package trains an autoencoder whose reconstruction similarity gates
inputs (tier 1), synthesizes near-threshold boundary images to train a
binary in/out-of-distribution classifier (tier 2), and composes both gates
in front of a multi-class core classifier.  Everything runs on a small
self-contained float64 network substrate with reverse-mode autodiff, and
every stochastic step is seeded, so experiments reproduce bit for bit.

Typical flow:

    from nnwatchdog import data, tiers, generator, pipeline

    spec   = data.SyntheticSpec()
    train  = data.synth_in_distribution(spec, seed=7, n=4000)
    ae, _  = tiers.train_autoencoder(train, tiers.AutoencoderConfig(seed=11))
    bound  = generator.batch_generate(ae, generator.GeneratorConfig(seed=13),
                                      600, seed_images=train.images)
    binc, _ = tiers.train_binary(train, bound, tiers.BinaryClassifierConfig(seed=17))
    core, _ = tiers.train_core(train, tiers.CoreClassifierConfig(seed=19))
    guard  = pipeline.PipelineConfig(core=core, autoencoder=ae, binary=binc, tau=0.85)
    report = pipeline.evaluate(guard, mixed_dataset)
"""

from . import data, experiment, gallery, generator, metrics, nn, pipeline, tiers
from .rng import Rng, derive_stream

__version__ = "0.1.0"

__all__ = [
    "Rng",
    "data",
    "derive_stream",
    "experiment",
    "gallery",
    "generator",
    "metrics",
    "nn",
    "pipeline",
    "tiers",
    "__version__",
]
