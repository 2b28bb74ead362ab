"""Config-driven experiment stages with a checksummed run manifest.

A run lives in one output directory.  The stages mirror the training
order of the system: synthesize data, train the autoencoder, calibrate its
threshold, generate boundary data, train the binary tier, train the core
classifier, then evaluate guarded vs unguarded performance.  Later stages
refuse to run until their dependencies' artifacts exist.

Every stage is a deterministic function of the config file, so rerunning a
stage reproduces its artifacts byte for byte.  After each stage the run
manifest records the artifacts written, their SHA-256 checksums, and wall
time; `verify_manifest` re-audits a directory offline.
"""

from __future__ import annotations

import configparser
import hashlib
import json
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .data.dataset import mix
from .data.dataset_io import import_directory, load_dataset, save_dataset
from .data.synthetic import OOD_KINDS, SyntheticSpec, synth_in_distribution, synth_ood
from .gallery import write_contact_sheet, write_triptychs
from .generator import GeneratorConfig, batch_generate
from .nn.network import dense_stack
from .nn.serialize import load_model, save_model
from .nn.training import write_history_csv
from .pipeline import (
    REJECTED_TIER1,
    REJECTED_TIER2,
    PipelineConfig,
    compare_report,
    evaluate,
    guard_batch,
)
from .tiers.autoencoder import (
    AutoencoderConfig,
    ThresholdConfig,
    calibrate,
    train_autoencoder,
)
from .tiers.classifiers import (
    BinaryClassifierConfig,
    CoreClassifierConfig,
    train_binary,
    train_core,
)

TOOL_VERSION = "0.1.0"

STAGES = (
    "synth-data",
    "train-ae",
    "calibrate",
    "gen-boundary",
    "train-binary",
    "train-core",
    "evaluate",
)


class ConfigError(Exception):
    """Broken experiment config; message names the offending section.key."""


class MissingDependencyError(Exception):
    """A stage ran before the stage it depends on."""

    def __init__(self, stage: str, missing_stage: str, artifact: Path):
        self.stage = stage
        self.missing_stage = missing_stage
        super().__init__(
            f"stage {stage!r} needs artifact {artifact} from stage {missing_stage!r}; "
            f"run that first"
        )


@dataclass(frozen=True)
class DatasetSection:
    seed: int
    classes: int = 10
    image_size: int = 32
    train_count: int = 4000
    eval_in_count: int = 1000
    ood_eval_count: int = 2000
    ood_kinds: tuple[str, ...] = ("texture-noise", "alien-glyphs")
    mix_seed: int = 1
    # directories of netpbm images to import instead of synthesizing;
    # either all three are set or none
    import_train: str | None = None
    import_eval_in: str | None = None
    import_eval_ood: str | None = None


@dataclass(frozen=True)
class GeneratorSection:
    config: GeneratorConfig
    train_count: int = 600
    eval_count: int = 500
    eval_seed: int = 1


@dataclass(frozen=True)
class PipelineSection:
    tau: float | None = None  # None: use the calibrated threshold
    tier2_threshold: float = 0.5
    tier1_enabled: bool = True
    tier2_enabled: bool = True


@dataclass(frozen=True)
class ExperimentConfig:
    dataset: DatasetSection
    autoencoder: AutoencoderConfig
    generator: GeneratorSection
    binary: BinaryClassifierConfig
    core: CoreClassifierConfig
    pipeline: PipelineSection
    threshold: ThresholdConfig
    raw_text: str

    def config_hash(self) -> str:
        return hashlib.sha256(self.raw_text.encode("utf-8")).hexdigest()


DEFAULT_CONFIG = """\
[dataset]
seed = 7
classes = 10
image_size = 32
train_count = 4000
eval_in_count = 1000
ood_eval_count = 2000
ood_kinds = texture-noise, alien-glyphs
mix_seed = 1

[autoencoder]
seed = 11
epochs = 15
batch_size = 64
learning_rate = 0.001
optimizer = adam

[threshold]
tau = calibrated
sweep_step = 0.005

[generator]
seed = 13
target_score = 0.90
tolerance = 0.02
max_iterations = 500
step_size = 0.05
seed_mode = blend
train_count = 600
eval_count = 500

[binary]
seed = 17
epochs = 12
batch_size = 64
learning_rate = 0.001
optimizer = adam
decision_threshold = 0.5

[core]
seed = 19
epochs = 20
batch_size = 64
learning_rate = 0.001
optimizer = adam

[pipeline]
tau = calibrated
tier2_threshold = 0.5
tier1 = true
tier2 = true
"""


_REQUIRED = object()


def _get(parser, section: str, key: str, cast, default=_REQUIRED):
    if not parser.has_section(section):
        if default is not _REQUIRED:
            return default
        raise ConfigError(f"{section}: missing section")
    if not parser.has_option(section, key):
        if default is not _REQUIRED:
            return default
        raise ConfigError(f"{section}.{key}: missing key")
    raw = parser.get(section, key)
    try:
        return cast(raw)
    except (ValueError, TypeError):
        raise ConfigError(f"{section}.{key}: cannot parse {raw!r}")


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("true", "yes", "1", "on"):
        return True
    if low in ("false", "no", "0", "off"):
        return False
    raise ValueError(raw)


def _tau(raw: str) -> float | None:
    if raw.strip().lower() == "calibrated":
        return None
    return float(raw)


def parse_config(text: str, seed_override: int | None = None) -> ExperimentConfig:
    """Parse the INI experiment config; every section must carry its seed."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config: {exc}") from exc

    def seed(section: str) -> int:
        value = _get(parser, section, "seed", int)
        return seed_override if seed_override is not None else value

    ds = DatasetSection(
        seed=seed("dataset"),
        classes=_get(parser, "dataset", "classes", int, 10),
        image_size=_get(parser, "dataset", "image_size", int, 32),
        train_count=_get(parser, "dataset", "train_count", int, 4000),
        eval_in_count=_get(parser, "dataset", "eval_in_count", int, 1000),
        ood_eval_count=_get(parser, "dataset", "ood_eval_count", int, 2000),
        ood_kinds=tuple(
            k.strip()
            for k in _get(parser, "dataset", "ood_kinds", str, "texture-noise, alien-glyphs").split(",")
        ),
        mix_seed=_get(parser, "dataset", "mix_seed", int, 1),
        import_train=_get(parser, "dataset", "import_train", str, None),
        import_eval_in=_get(parser, "dataset", "import_eval_in", str, None),
        import_eval_ood=_get(parser, "dataset", "import_eval_ood", str, None),
    )
    for kind in ds.ood_kinds:
        if kind not in OOD_KINDS:
            raise ConfigError(f"dataset.ood_kinds: unknown kind {kind!r}")
    imports = (ds.import_train, ds.import_eval_in, ds.import_eval_ood)
    if any(imports) and not all(imports):
        raise ConfigError(
            "dataset.import_train/import_eval_in/import_eval_ood: "
            "set all three or none"
        )
    for key, path in zip(
        ("import_train", "import_eval_in", "import_eval_ood"), imports
    ):
        if path is not None and not Path(path).is_dir():
            raise ConfigError(f"dataset.{key}: directory {path} does not exist")

    pixels = ds.image_size * ds.image_size

    ae = AutoencoderConfig(
        spec=dense_stack([pixels, 256, 64, 256, pixels], "relu", "sigmoid"),
        epochs=_get(parser, "autoencoder", "epochs", int, 15),
        batch_size=_get(parser, "autoencoder", "batch_size", int, 64),
        learning_rate=_get(parser, "autoencoder", "learning_rate", float, 0.001),
        optimizer=_get(parser, "autoencoder", "optimizer", str, "adam"),
        seed=seed("autoencoder"),
    )

    threshold = ThresholdConfig(
        tau=_get(parser, "threshold", "tau", _tau, None),
        sweep_step=_get(parser, "threshold", "sweep_step", float, 0.005),
    )

    gen = GeneratorSection(
        config=GeneratorConfig(
            target_score=_get(parser, "generator", "target_score", float, 0.90),
            tolerance=_get(parser, "generator", "tolerance", float, 0.02),
            max_iterations=_get(parser, "generator", "max_iterations", int, 500),
            step_size=_get(parser, "generator", "step_size", float, 0.05),
            seed_mode=_get(parser, "generator", "seed_mode", str, "blend"),
            seed=seed("generator"),
        ),
        train_count=_get(parser, "generator", "train_count", int, 600),
        eval_count=_get(parser, "generator", "eval_count", int, 500),
        eval_seed=_get(parser, "generator", "eval_seed", int, 1),
    )

    binary = BinaryClassifierConfig(
        spec=dense_stack([pixels, 128, 32, 1], "relu", "sigmoid"),
        epochs=_get(parser, "binary", "epochs", int, 12),
        batch_size=_get(parser, "binary", "batch_size", int, 64),
        learning_rate=_get(parser, "binary", "learning_rate", float, 0.001),
        optimizer=_get(parser, "binary", "optimizer", str, "adam"),
        decision_threshold=_get(parser, "binary", "decision_threshold", float, 0.5),
        seed=seed("binary"),
    )

    core = CoreClassifierConfig(
        spec=dense_stack([pixels, 256, 64, ds.classes], "relu", "softmax"),
        classes=ds.classes,
        epochs=_get(parser, "core", "epochs", int, 20),
        batch_size=_get(parser, "core", "batch_size", int, 64),
        learning_rate=_get(parser, "core", "learning_rate", float, 0.001),
        optimizer=_get(parser, "core", "optimizer", str, "adam"),
        seed=seed("core"),
    )

    pipe = PipelineSection(
        tau=_get(parser, "pipeline", "tau", _tau, None),
        tier2_threshold=_get(parser, "pipeline", "tier2_threshold", float, 0.5),
        tier1_enabled=_get(parser, "pipeline", "tier1", _bool, True),
        tier2_enabled=_get(parser, "pipeline", "tier2", _bool, True),
    )

    return ExperimentConfig(
        dataset=ds,
        autoencoder=ae,
        generator=gen,
        binary=binary,
        core=core,
        pipeline=pipe,
        threshold=threshold,
        raw_text=text,
    )


def load_config(path: str | Path, seed_override: int | None = None) -> ExperimentConfig:
    p = Path(path)
    if not p.exists():
        raise ConfigError(f"config: file {p} does not exist")
    return parse_config(p.read_text(encoding="utf-8"), seed_override)


# -- run directory layout ----------------------------------------------------


class RunLayout:
    def __init__(self, out: str | Path):
        self.out = Path(out)
        self.data = self.out / "data"
        self.models = self.out / "models"
        self.reports = self.out / "reports"
        self.galleries = self.out / "galleries"

    @property
    def train_in(self) -> Path:
        return self.data / "train_in"

    @property
    def eval_in(self) -> Path:
        return self.data / "eval_in"

    @property
    def eval_ood(self) -> Path:
        return self.data / "eval_ood"

    @property
    def eval_mixed(self) -> Path:
        return self.data / "eval_mixed"

    @property
    def generated_train(self) -> Path:
        return self.data / "generated_train"

    @property
    def generated_eval(self) -> Path:
        return self.data / "generated_eval"

    @property
    def autoencoder_model(self) -> Path:
        return self.models / "autoencoder.nnwd"

    @property
    def binary_model(self) -> Path:
        return self.models / "binary.nnwd"

    @property
    def core_model(self) -> Path:
        return self.models / "core.nnwd"

    @property
    def calibration_json(self) -> Path:
        return self.reports / "calibration.json"

    @property
    def manifest(self) -> Path:
        return self.out / "run_manifest.json"


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _files_under(*paths: Path) -> list[Path]:
    out: list[Path] = []
    for p in paths:
        if p.is_dir():
            out.extend(sorted(q for q in p.rglob("*") if q.is_file()))
        elif p.is_file():
            out.append(p)
    return out


def _record_stage(
    layout: RunLayout, config: ExperimentConfig, stage: str, seconds: float,
    artifacts: list[Path],
) -> None:
    manifest = {"config_hash": config.config_hash(), "tool_version": TOOL_VERSION, "stages": {}}
    if layout.manifest.exists():
        manifest = json.loads(layout.manifest.read_text(encoding="utf-8"))
        manifest["config_hash"] = config.config_hash()
        manifest["tool_version"] = TOOL_VERSION
    checksums = {
        str(p.relative_to(layout.out)): _sha256(p) for p in _files_under(*artifacts)
    }
    manifest.setdefault("stages", {})[stage] = {
        "wall_seconds": round(seconds, 3),
        "artifacts": checksums,
    }
    layout.manifest.write_text(
        json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def verify_manifest(out: str | Path) -> list[str]:
    """Audit a run directory; returns a list of problems (empty when clean)."""
    layout = RunLayout(out)
    if not layout.manifest.exists():
        return ["run_manifest.json missing"]
    manifest = json.loads(layout.manifest.read_text(encoding="utf-8"))
    problems = []
    for stage, info in manifest.get("stages", {}).items():
        for rel, digest in info.get("artifacts", {}).items():
            path = layout.out / rel
            if not path.exists():
                problems.append(f"{stage}: {rel} missing")
            elif _sha256(path) != digest:
                problems.append(f"{stage}: {rel} checksum mismatch")
    return problems


def _require(stage: str, needs_stage: str, path: Path) -> None:
    if not path.exists():
        raise MissingDependencyError(stage, needs_stage, path)


# -- stages ------------------------------------------------------------------


def synthetic_spec(ds: DatasetSection) -> SyntheticSpec:
    return SyntheticSpec(classes=ds.classes, size=ds.image_size)


def stage_synth_data(config: ExperimentConfig, out: str | Path) -> None:
    layout = RunLayout(out)
    t0 = time.perf_counter()
    ds = config.dataset
    if ds.import_train is not None:
        train = import_directory(ds.import_train, distribution="IN")
        eval_in = import_directory(ds.import_eval_in, distribution="IN")
        ood_sets = [import_directory(ds.import_eval_ood, distribution="OUT")]
    else:
        spec = synthetic_spec(ds)
        train = synth_in_distribution(spec, ds.seed, ds.train_count)
        eval_in = synth_in_distribution(spec, ds.seed + 1, ds.eval_in_count)
        per_kind = ds.ood_eval_count // len(ds.ood_kinds)
        remainder = ds.ood_eval_count - per_kind * len(ds.ood_kinds)
        ood_sets = []
        for j, kind in enumerate(ds.ood_kinds):
            count = per_kind + (remainder if j == 0 else 0)
            ood_sets.append(synth_ood(kind, ds.seed + 2 + j, count, size=ds.image_size))
    ood_all = mix(ood_sets[0], ood_sets[1:], seed=ds.mix_seed, name="eval-ood") if len(
        ood_sets
    ) > 1 else ood_sets[0]
    mixed = mix(eval_in, ood_sets, seed=ds.mix_seed, name="eval-mixed")

    save_dataset(train, layout.train_in)
    save_dataset(eval_in, layout.eval_in)
    save_dataset(ood_all, layout.eval_ood)
    save_dataset(mixed, layout.eval_mixed)
    _record_stage(
        layout,
        config,
        "synth-data",
        time.perf_counter() - t0,
        [layout.train_in, layout.eval_in, layout.eval_ood, layout.eval_mixed],
    )


def stage_train_ae(config: ExperimentConfig, out: str | Path) -> None:
    layout = RunLayout(out)
    _require("train-ae", "synth-data", layout.train_in / "manifest.json")
    t0 = time.perf_counter()
    train = load_dataset(layout.train_in)
    model, history = train_autoencoder(train, config.autoencoder)
    layout.models.mkdir(parents=True, exist_ok=True)
    layout.reports.mkdir(parents=True, exist_ok=True)
    save_model(model, layout.autoencoder_model)
    history_csv = layout.reports / "autoencoder_history.csv"
    write_history_csv(history, history_csv)
    _record_stage(
        layout, config, "train-ae", time.perf_counter() - t0,
        [layout.autoencoder_model, history_csv],
    )


def stage_calibrate(config: ExperimentConfig, out: str | Path) -> None:
    layout = RunLayout(out)
    _require("calibrate", "train-ae", layout.autoencoder_model)
    _require("calibrate", "synth-data", layout.eval_in / "manifest.json")
    t0 = time.perf_counter()
    model = load_model(layout.autoencoder_model)
    eval_in = load_dataset(layout.eval_in)
    eval_ood = load_dataset(layout.eval_ood)
    report = calibrate(model, eval_in, eval_ood, config.threshold)
    layout.reports.mkdir(parents=True, exist_ok=True)
    report.to_json(layout.calibration_json)
    roc_csv = layout.reports / "calibration_roc.csv"
    report.curve.to_csv(roc_csv)
    triptychs = layout.galleries / "reconstruction_triptychs.pgm"
    layout.galleries.mkdir(parents=True, exist_ok=True)
    write_triptychs(model, eval_in.images[:8], triptychs)
    _record_stage(
        layout, config, "calibrate", time.perf_counter() - t0,
        [layout.calibration_json, roc_csv, triptychs],
    )


def stage_gen_boundary(config: ExperimentConfig, out: str | Path) -> None:
    layout = RunLayout(out)
    _require("gen-boundary", "train-ae", layout.autoencoder_model)
    _require("gen-boundary", "synth-data", layout.train_in / "manifest.json")
    t0 = time.perf_counter()
    model = load_model(layout.autoencoder_model)
    train = load_dataset(layout.train_in)
    gen = config.generator
    train_set = batch_generate(
        model, gen.config, gen.train_count,
        seed_images=train.images, name="generated-train",
    )
    eval_cfg = replace(gen.config, seed=gen.config.seed + gen.eval_seed)
    eval_set = batch_generate(
        model, eval_cfg, gen.eval_count,
        seed_images=train.images, name="generated-eval",
    )
    save_dataset(train_set, layout.generated_train)
    save_dataset(eval_set, layout.generated_eval)
    layout.galleries.mkdir(parents=True, exist_ok=True)
    sheet = layout.galleries / "generated_samples.pgm"
    write_contact_sheet(train_set.images[:32], sheet)
    _record_stage(
        layout, config, "gen-boundary", time.perf_counter() - t0,
        [layout.generated_train, layout.generated_eval, sheet],
    )


def stage_train_binary(config: ExperimentConfig, out: str | Path) -> None:
    layout = RunLayout(out)
    _require("train-binary", "gen-boundary", layout.generated_train / "manifest.json")
    _require("train-binary", "synth-data", layout.train_in / "manifest.json")
    t0 = time.perf_counter()
    train = load_dataset(layout.train_in)
    generated = load_dataset(layout.generated_train)
    model, history = train_binary(train, generated, config.binary)
    layout.models.mkdir(parents=True, exist_ok=True)
    layout.reports.mkdir(parents=True, exist_ok=True)
    save_model(model, layout.binary_model)
    history_csv = layout.reports / "binary_history.csv"
    write_history_csv(history, history_csv)
    _record_stage(
        layout, config, "train-binary", time.perf_counter() - t0,
        [layout.binary_model, history_csv],
    )


def stage_train_core(config: ExperimentConfig, out: str | Path) -> None:
    layout = RunLayout(out)
    _require("train-core", "synth-data", layout.train_in / "manifest.json")
    t0 = time.perf_counter()
    train = load_dataset(layout.train_in)
    model, history = train_core(train, config.core)
    layout.models.mkdir(parents=True, exist_ok=True)
    layout.reports.mkdir(parents=True, exist_ok=True)
    save_model(model, layout.core_model)
    history_csv = layout.reports / "core_history.csv"
    write_history_csv(history, history_csv)
    _record_stage(
        layout, config, "train-core", time.perf_counter() - t0,
        [layout.core_model, history_csv],
    )


def chosen_tau(config: ExperimentConfig, layout: RunLayout, stage: str = "evaluate") -> float:
    if config.pipeline.tau is not None:
        return config.pipeline.tau
    _require(stage, "calibrate", layout.calibration_json)
    calibration = json.loads(layout.calibration_json.read_text(encoding="utf-8"))
    return float(calibration["chosen_tau"])


def build_pipeline(
    config: ExperimentConfig, out: str | Path, stage: str = "evaluate"
) -> PipelineConfig:
    layout = RunLayout(out)
    _require(stage, "train-core", layout.core_model)
    autoencoder = binary = None
    if config.pipeline.tier1_enabled:
        _require(stage, "train-ae", layout.autoencoder_model)
        autoencoder = load_model(layout.autoencoder_model)
    if config.pipeline.tier2_enabled:
        _require(stage, "train-binary", layout.binary_model)
        binary = load_model(layout.binary_model)
    return PipelineConfig(
        core=load_model(layout.core_model),
        autoencoder=autoencoder,
        binary=binary,
        tau=chosen_tau(config, layout, stage),
        tier2_threshold=config.pipeline.tier2_threshold,
        tier1_enabled=config.pipeline.tier1_enabled,
        tier2_enabled=config.pipeline.tier2_enabled,
    )


def stage_evaluate(config: ExperimentConfig, out: str | Path) -> None:
    layout = RunLayout(out)
    _require("evaluate", "synth-data", layout.eval_mixed / "manifest.json")
    pipeline = build_pipeline(config, out)
    t0 = time.perf_counter()
    mixed = load_dataset(layout.eval_mixed)
    report = evaluate(pipeline, mixed)
    layout.reports.mkdir(parents=True, exist_ok=True)
    eval_json = layout.reports / "evaluation.json"
    report.to_json(eval_json)
    comparison_csv = layout.reports / "comparison.csv"
    comparison_json = layout.reports / "comparison_summary.json"
    compare_report(
        report.unguarded, report.guarded, report.baseline,
        csv_path=comparison_csv, json_path=comparison_json,
    )
    layout.galleries.mkdir(parents=True, exist_ok=True)
    verdicts, _ = guard_batch(pipeline, mixed.images)
    outcomes = np.array([v.outcome for v in verdicts])
    g1 = layout.galleries / "rejected_tier1.pgm"
    g2 = layout.galleries / "rejected_tier2.pgm"
    write_contact_sheet(mixed.images[outcomes == REJECTED_TIER1][:32], g1)
    write_contact_sheet(mixed.images[outcomes == REJECTED_TIER2][:32], g2)
    artifacts = [eval_json, comparison_csv, comparison_json, g1, g2]
    if pipeline.autoencoder is not None:
        triptychs = layout.galleries / "evaluation_triptychs.pgm"
        write_triptychs(
            pipeline.autoencoder,
            mixed.images[mixed.in_distribution][:8],
            triptychs,
            pipeline.ssim_params,
        )
        artifacts.append(triptychs)
    _record_stage(
        layout, config, "evaluate", time.perf_counter() - t0, artifacts,
    )


STAGE_RUNNERS = {
    "synth-data": stage_synth_data,
    "train-ae": stage_train_ae,
    "calibrate": stage_calibrate,
    "gen-boundary": stage_gen_boundary,
    "train-binary": stage_train_binary,
    "train-core": stage_train_core,
    "evaluate": stage_evaluate,
}
