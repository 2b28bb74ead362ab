"""Boundary-sample generation by gradient descent on the input image.

Given a trained autoencoder, each sample starts from a seed image (an
in-distribution image, uniform noise, or a 50/50 blend) and descends

    f(x) = (similarity(x, autoencoder(x)) - target)^2

with steps projected back into [0, 1] and a backtracking line search that
halves the step until f decreases.  The walk stops as soon as the
reconstruction-similarity score is within tolerance of the target, so the
output sits near the gate's acceptance boundary while remaining
off-manifold; the samples are labeled out-of-distribution and feed the
tier-2 binary classifier.

The gradient flows through the autoencoder and through the windowed
similarity statistics; the differentiable graph mirrors the scored
implementation expression for expression, and the achieved score recorded
on each sample comes from a fresh scored evaluation at return time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data.dataset import NO_CLASS, Dataset, make_dataset
from .metrics.ssim import SsimParams, window_index
from .nn import autodiff as ad
from .nn.autodiff import Var
from .nn.network import Model, forward_vars
from .rng import Rng, derive_stream
from .tiers.autoencoder import tier1_score

SEED_MODES = ("in-distribution-image", "uniform-noise", "blend")


class GenerationError(Exception):
    pass


class GenerationFailed(GenerationError):
    """Tolerance not reached; carries the best score seen."""

    def __init__(self, best_score: float, iterations: int):
        self.best_score = best_score
        self.iterations = iterations
        super().__init__(
            f"no sample within tolerance after {iterations} iterations "
            f"(best score {best_score:.4f})"
        )


@dataclass(frozen=True)
class GeneratorConfig:
    target_score: float = 0.90
    tolerance: float = 0.02
    max_iterations: int = 500
    step_size: float = 0.05
    max_halvings: int = 10
    seed_mode: str = "blend"
    seed: int = 0
    attempts_per_sample: int = 3  # batch retry budget

    def __post_init__(self):
        if not (0.0 < self.target_score <= 1.0):
            raise GenerationError("target score must be in (0, 1]")
        if self.tolerance <= 0.0:
            raise GenerationError("tolerance must be positive")
        if self.max_iterations < 1:
            raise GenerationError("max iterations must be at least 1")
        if self.seed_mode not in SEED_MODES:
            raise GenerationError(f"unknown seed mode {self.seed_mode!r}")


@dataclass(frozen=True)
class GeneratedSample:
    image: np.ndarray  # (h, w, c) in [0, 1]
    achieved_score: float
    iterations: int
    seed_provenance: str
    objective_trace: tuple[float, ...]


def _ssim_score_var(x: Var, y: Var, shape: tuple[int, ...], p: SsimParams) -> Var:
    """Differentiable similarity of two flattened images.

    Expression order matches the scored implementation so forward values
    agree bitwise.
    """
    h, w = shape[0], shape[1]
    channels = shape[2] if len(shape) > 2 else 1
    if p.aggregation == "global":
        idx = np.arange(h * w)[None, :]
    else:
        idx = window_index(h, w, p.window)
    plane = h * w
    scores: list[Var] = []
    for c in range(channels):
        lo, hi = c * plane, (c + 1) * plane
        xc = ad.reshape(x, (x.value.size,))
        yc = ad.reshape(y, (y.value.size,))
        if channels > 1:
            # channel planes are interleaved in (h, w, c) layout; gather via
            # per-channel index into the flat image
            cidx = idx * channels + c
        else:
            cidx = idx
        mu_x = ad.window_mean(xc, cidx)
        mu_y = ad.window_mean(yc, cidx)
        xx = ad.window_mean(xc * xc, cidx)
        yy = ad.window_mean(yc * yc, cidx)
        xy = ad.window_mean(xc * yc, cidx)
        var_x = xx - mu_x * mu_x
        var_y = yy - mu_y * mu_y
        cov = xy - mu_x * mu_y
        lum = 2.0 * mu_x * mu_y + p.c1
        struct = 2.0 * cov + p.c2
        denom = (mu_x * mu_x + mu_y * mu_y + p.c1) * (var_x + var_y + p.c2)
        scores.append(ad.mean_all(lum * struct / denom))
    total = scores[0]
    for s in scores[1:]:
        total = total + s
    return total * (1.0 / channels) if channels > 1 else total


def objective_gradient(
    model: Model,
    image: np.ndarray,
    target: float,
    p: SsimParams = SsimParams(),
) -> tuple[float, float, np.ndarray]:
    """(score, objective, d objective/d image) through AE + similarity."""
    shape = image.shape
    x = Var(image.reshape(1, -1))
    param_vars = {
        i: (Var(model.params.weights[i]), Var(model.params.biases[i]))
        for i in model.spec.dense_indices()
    }
    recon = forward_vars(model.spec, param_vars, x)
    score = _ssim_score_var(
        ad.reshape(x, (x.value.size,)),
        ad.reshape(recon, (recon.value.size,)),
        shape,
        p,
    )
    f = ad.square(score - target)
    ad.backward(f)
    grad = x.grad.reshape(shape) if x.grad is not None else np.zeros(shape)
    return float(score.value), float(f.value), grad


def _seed_image(
    config: GeneratorConfig,
    rng: Rng,
    seed_images: np.ndarray | None,
    dims: tuple[int, ...] | None,
) -> tuple[np.ndarray, str]:
    mode = config.seed_mode
    if mode in ("in-distribution-image", "blend"):
        if seed_images is None or len(seed_images) == 0:
            raise GenerationError(f"seed mode {mode!r} needs seed images")
        pick = rng.below(len(seed_images))
        base = seed_images[pick]
        if mode == "in-distribution-image":
            return base.copy(), f"{mode}[{pick}]"
        noise = rng.random(base.shape)
        return 0.5 * base + 0.5 * noise, f"{mode}[{pick}]"
    if dims is None:
        if seed_images is None or len(seed_images) == 0:
            raise GenerationError("uniform-noise mode needs dims or seed images")
        dims = seed_images.shape[1:]
    return rng.random(dims), mode


def generate_boundary(
    model: Model,
    config: GeneratorConfig,
    rng: Rng,
    *,
    seed_images: np.ndarray | None = None,
    dims: tuple[int, ...] | None = None,
    ssim_params: SsimParams = SsimParams(),
) -> GeneratedSample:
    """Optimize one image until its reconstruction score hits the target band.

    Raises GenerationFailed (carrying the best score) when the iteration or
    line-search budget runs out first.
    """
    x, provenance = _seed_image(config, rng, seed_images, dims)
    x = np.clip(x, 0.0, 1.0)
    target, tol = config.target_score, config.tolerance

    def scored(img: np.ndarray) -> tuple[float, float]:
        s = tier1_score(model, img, ssim_params)
        return s, (s - target) ** 2

    score, f = scored(x)
    trace = [f]
    best_score = score
    if abs(score - target) <= tol:
        achieved = tier1_score(model, x, ssim_params)
        return GeneratedSample(x, achieved, 0, provenance, tuple(trace))

    for iteration in range(1, config.max_iterations + 1):
        _, _, grad = objective_gradient(model, x, target, ssim_params)
        # Steps are taken along the max-norm-normalized direction, so
        # step_size is a per-pixel magnitude independent of gradient scale.
        peak = np.abs(grad).max()
        if peak == 0.0:
            raise GenerationFailed(best_score, iteration)
        direction = grad / peak
        step = config.step_size
        accepted = None
        for _ in range(config.max_halvings):
            candidate = np.clip(x - step * direction, 0.0, 1.0)
            cand_score, cand_f = scored(candidate)
            if cand_f < f:
                accepted = (candidate, cand_score, cand_f)
                break
            step /= 2.0
        if accepted is None:
            raise GenerationFailed(best_score, iteration)
        x, score, f = accepted
        trace.append(f)
        if abs(score - target) < abs(best_score - target):
            best_score = score
        if abs(score - target) <= tol:
            achieved = tier1_score(model, x, ssim_params)
            if abs(achieved - target) > tol:
                raise GenerationFailed(achieved, iteration)
            return GeneratedSample(x, achieved, iteration, provenance, tuple(trace))
    raise GenerationFailed(best_score, config.max_iterations)


def batch_generate(
    model: Model,
    config: GeneratorConfig,
    n: int,
    *,
    seed_images: np.ndarray | None = None,
    dims: tuple[int, ...] | None = None,
    ssim_params: SsimParams = SsimParams(),
    name: str = "generated-boundary",
) -> Dataset:
    """n successful boundary samples as an out-of-distribution dataset.

    Each attempt draws from its own stream derived from (config.seed,
    attempt index), so results are reproducible and independent of retry
    history.  Fails once the retry budget is spent.
    """
    if n < 1:
        raise GenerationError("need n >= 1 samples")
    budget = n * config.attempts_per_sample
    images: list[np.ndarray] = []
    attempt = 0
    while len(images) < n:
        if attempt >= budget:
            raise GenerationError(
                f"retry budget exhausted: {len(images)}/{n} samples "
                f"after {attempt} attempts"
            )
        rng = Rng(derive_stream(config.seed, attempt))
        attempt += 1
        try:
            sample = generate_boundary(
                model,
                config,
                rng,
                seed_images=seed_images,
                dims=dims,
                ssim_params=ssim_params,
            )
        except GenerationFailed:
            continue
        images.append(sample.image)
    stack = np.stack(images)
    return make_dataset(
        stack,
        np.full(n, NO_CLASS, dtype=np.int64),
        np.zeros(n, dtype=bool),
        name=name,
        classes=0,
        seed=config.seed,
        provenance="generated-boundary",
    )
