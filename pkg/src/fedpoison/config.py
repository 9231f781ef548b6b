"""Run configuration: key=value config files, CLI overrides, validation.

A config file holds one ``key=value`` pair per line; ``#`` starts a comment.
CLI flags override file values, which override the documented defaults. The
key set below is exhaustive: unknown keys are rejected with their line number.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path

from .errors import ConfigError

DATA_ROOT_ENV = "FEDPOISON_DATA_ROOT"


def parse_bool(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _choice(*options: str):
    def parse(text: str) -> str:
        value = text.strip()
        if value not in options:
            raise ValueError(f"must be one of {', '.join(options)}; got {value!r}")
        return value

    parse.__name__ = "|".join(options)
    return parse


@dataclass(frozen=True)
class ConfigField:
    name: str
    parse: callable
    default: object
    help: str


CONFIG_FIELDS: tuple[ConfigField, ...] = (
    ConfigField("dataset", _choice("mnist", "fashionmnist", "cifar10"), "mnist",
                "dataset family; mnist/fashionmnist read IDX pairs, cifar10 reads binary batches"),
    ConfigField("data_root", str, "",
                f"directory for dataset files (default: ${DATA_ROOT_ENV} or the working directory)"),
    ConfigField("train_images", str, "train-images-idx3-ubyte", "IDX training image file"),
    ConfigField("train_labels", str, "train-labels-idx1-ubyte", "IDX training label file"),
    ConfigField("test_images", str, "t10k-images-idx3-ubyte", "IDX test image file"),
    ConfigField("test_labels", str, "t10k-labels-idx1-ubyte", "IDX test label file"),
    ConfigField("cifar_train", str,
                "data_batch_1.bin,data_batch_2.bin,data_batch_3.bin,data_batch_4.bin,data_batch_5.bin",
                "comma-separated CIFAR-10 training batch files"),
    ConfigField("cifar_test", str, "test_batch.bin", "CIFAR-10 test batch file"),
    ConfigField("train_cap", int, 2000, "training samples to keep (0 = all)"),
    ConfigField("test_cap", int, 1000, "test samples to keep (0 = all)"),
    ConfigField("J", int, 5, "number of benign client devices"),
    ConfigField("T_L", int, 10, "local training iterations per communication round"),
    ConfigField("T_FL", int, 50, "number of communication rounds"),
    ConfigField("eta", float, 0.01, "local learning rate"),
    ConfigField("mu", float, 1.0, "regularizer coefficient in [0, 1]"),
    ConfigField("seed", int, 0, "master seed; fixes partitioning and every attacker stream"),
    ConfigField("attack", _choice("none", "gae", "mp"), "none", "attacker type"),
    ConfigField("attackers", int, 1, "number of attacker instances (attack != none)"),
    ConfigField("eavesdrop_count", int, 0,
                "benign uploads each attacker observes per round (0 = all J)"),
    ConfigField("objective", _choice("surrogate", "oracle"), "surrogate",
                "attack gain term: data-free surrogate or probe-set loss oracle"),
    ConfigField("gae_hidden", int, 32, "GCN hidden width"),
    ConfigField("gae_embed", int, 16, "GCN embedding width"),
    ConfigField("gae_dropout", float, 0.1, "dropout rate between encoder layers in [0, 1)"),
    ConfigField("gae_epochs", int, 20, "encoder training epochs per round"),
    ConfigField("gae_lr", float, 0.01, "encoder learning rate (adaptive-moment ascent)"),
    ConfigField("gae_probes", int, 4, "two-point perturbation probes per epoch"),
    ConfigField("gae_perturbation", float, 1e-3, "perturbation radius of the probes"),
    ConfigField("d_T_policy", _choice("adaptive", "fixed"), "adaptive",
                "distance budget: per-round max benign displacement, or a fixed value"),
    ConfigField("d_T_value", float, 1.0, "distance budget when d_T_policy=fixed"),
    ConfigField("claimed_size", int, 0,
                "data size the attacker claims (0 = rounded mean of observed sizes)"),
    ConfigField("dual_sign", _choice("standard", "paper"), "standard",
                "sign of the dual subgradient step"),
    ConfigField("dual_step", float, 0.1, "dual subgradient step size"),
    ConfigField("lambda_init", float, 0.0, "initial dual multiplier (>= 0)"),
    ConfigField("target_mode", _choice("clamp", "affine"), "clamp",
                "cosine-to-edge-probability mapping for the reconstruction likelihood"),
    ConfigField("laplacian", _choice("degree", "elementwise"), "degree",
                "Laplacian diagonal: row-sum degrees or the adjacency's own diagonal"),
    ConfigField("mp_scale", float, 3.0, "fake-model offset scale"),
    ConfigField("mp_scale_mode", _choice("relative", "fixed"), "relative",
                "offset scale relative to the benign spread, or absolute"),
    ConfigField("defense", _choice("none", "distance", "multi_krum"), "none",
                "server-side defense"),
    ConfigField("detect_policy", _choice("mean_plus_k_std", "fixed"), "mean_plus_k_std",
                "distance-detector threshold policy"),
    ConfigField("detect_k", float, 2.0, "k of the mean_plus_k_std policy"),
    ConfigField("detect_threshold", float, 1.0, "threshold of the fixed policy"),
    ConfigField("exclude_flagged", parse_bool, False,
                "drop flagged models from aggregation (default: report-only)"),
    ConfigField("krum_f", int, 1, "byzantine tolerance f of multi-Krum"),
    ConfigField("krum_m", int, 1, "models multi-Krum averages"),
    ConfigField("output_dir", str, "runs", "directory for metrics, summary, and snapshot"),
)

_FIELD_MAP = {f.name: f for f in CONFIG_FIELDS}


@dataclass(frozen=True)
class RunConfig:
    dataset: str
    data_root: str
    train_images: str
    train_labels: str
    test_images: str
    test_labels: str
    cifar_train: str
    cifar_test: str
    train_cap: int
    test_cap: int
    J: int
    T_L: int
    T_FL: int
    eta: float
    mu: float
    seed: int
    attack: str
    attackers: int
    eavesdrop_count: int
    objective: str
    gae_hidden: int
    gae_embed: int
    gae_dropout: float
    gae_epochs: int
    gae_lr: float
    gae_probes: int
    gae_perturbation: float
    d_T_policy: str
    d_T_value: float
    claimed_size: int
    dual_sign: str
    dual_step: float
    lambda_init: float
    target_mode: str
    laplacian: str
    mp_scale: float
    mp_scale_mode: str
    defense: str
    detect_policy: str
    detect_k: float
    detect_threshold: float
    exclude_flagged: bool
    krum_f: int
    krum_m: int
    output_dir: str

    def validate(self) -> None:
        checks = (
            (self.J >= 1, "J >= 1"),
            (self.T_L >= 1, "T_L >= 1"),
            (self.T_FL >= 1, "T_FL >= 1"),
            (self.eta > 0, "eta > 0"),
            (0 <= self.mu <= 1, "mu in [0, 1]"),
            (self.train_cap >= 0, "train_cap >= 0"),
            (self.test_cap >= 0, "test_cap >= 0"),
            (self.attack == "none" or self.attackers >= 1,
             "attackers >= 1 when attack != none"),
            (0 <= self.eavesdrop_count <= self.J, "eavesdrop_count <= J"),
            (self.gae_hidden >= 1, "gae_hidden >= 1"),
            (self.gae_embed >= 1, "gae_embed >= 1"),
            (0 <= self.gae_dropout < 1, "gae_dropout in [0, 1)"),
            (self.gae_epochs >= 1, "gae_epochs >= 1"),
            (self.gae_lr > 0, "gae_lr > 0"),
            (self.gae_probes >= 1, "gae_probes >= 1"),
            (self.gae_perturbation > 0, "gae_perturbation > 0"),
            (self.d_T_policy != "fixed" or self.d_T_value > 0,
             "d_T_value > 0 when d_T_policy=fixed"),
            (self.claimed_size >= 0, "claimed_size >= 0"),
            (self.dual_step > 0, "dual_step > 0"),
            (self.lambda_init >= 0, "lambda_init >= 0"),
            (self.mp_scale > 0, "mp_scale > 0"),
            (self.detect_policy != "fixed" or self.detect_threshold > 0,
             "detect_threshold > 0 when detect_policy=fixed"),
            (self.krum_f >= 0, "krum_f >= 0"),
            (self.krum_m >= 1, "krum_m >= 1"),
        )
        for ok, rule in checks:
            if not ok:
                raise ConfigError(f"configuration violates invariant {rule}")

    def resolve_data_path(self, filename: str) -> Path:
        root = self.data_root or os.environ.get(DATA_ROOT_ENV, "") or "."
        path = Path(filename)
        return path if path.is_absolute() else Path(root) / path

    def snapshot_lines(self) -> list[str]:
        """Canonical key=value lines, one per config key, in declaration order."""
        lines = []
        for f in fields(self):
            value = getattr(self, f.name)
            if isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{f.name}={value}")
        return lines


def _parse_value(field: ConfigField, raw, where: str):
    if not isinstance(raw, str):
        return raw
    try:
        return field.parse(raw)
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {field.name}: {exc}") from exc


def parse_config(file_path: str | Path | None = None, cli_overrides: dict | None = None) -> RunConfig:
    """Build a validated RunConfig from defaults, an optional file, and overrides.

    Unknown keys, unparsable values, and violated invariants raise ConfigError
    naming the offending line or rule.
    """
    values = {f.name: f.default for f in CONFIG_FIELDS}
    if file_path is not None:
        path = Path(file_path)
        if not path.is_file():
            raise ConfigError(f"config file {path} does not exist")
        for lineno, line in enumerate(path.read_text().splitlines(), start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, _, raw = stripped.partition("=")
            key = key.strip()
            if key not in _FIELD_MAP:
                raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _parse_value(_FIELD_MAP[key], raw.strip(), f"{path}:{lineno}")
    for key, raw in (cli_overrides or {}).items():
        if key not in _FIELD_MAP:
            raise ConfigError(f"override: unknown key {key!r}")
        if raw is None:
            continue
        values[key] = _parse_value(_FIELD_MAP[key], raw, "override")
    config = RunConfig(**values)
    config.validate()
    return config
