"""Line-oriented run configuration: `section.key = value`.

Sections are dataset, model, hyperparams, and output. `#` starts a comment.
Every key is validated against the tables below; unknown keys (or keys that
only make sense for a different dataset kind / model mode) are errors, not
warnings, so a typo cannot silently fall back to a default.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .baselines import AdmmConfig
from .selfexpr import HyperParams


class ConfigError(ValueError):
    """Bad configuration text; the CLI maps this to exit code 2."""


DEEP_MODES = ("early", "intermediate", "late", "affinity")
BASELINE_MODES = ("ssc", "lrr", "ae_ssc")
DATASET_KINDS = ("synthetic", "idx", "image_dir")

_BOOLS = {"true": True, "false": False, "yes": True, "no": False}


def _parse_bool(s):
    try:
        return _BOOLS[s.lower()]
    except KeyError:
        raise ValueError(f"expected a boolean, got {s!r}")


def _parse_paths(s):
    return tuple(p.strip() for p in s.split(",") if p.strip())


# key -> (parser, applies-to predicate description used in errors)
_DATASET_KEYS = {
    "kind": str,
    "name": str,
    "ambient_dim": int,
    "num_subspaces": int,
    "subspace_dim": int,
    "points_per_subspace": int,
    "noise_sigma": float,
    "num_views": int,
    "view_dim": int,
    "view_scale": float,
    "images": _parse_paths,
    "labels": _parse_paths,
    "root": str,
    "modalities": _parse_paths,
    "samples_per_class": int,
    "num_samples": int,
    "num_clusters": int,
    "seed": int,
}

_MODEL_KEYS = {
    "mode": str,
    "arch": str,
    "fusion": str,
    "modality": int,
}

_HYPER_KEYS = {
    "lambda1": float,
    "lambda2": float,
    "p": float,
    "learning_rate": float,
    "pretrain_epochs": int,
    "train_epochs": int,
    "batch_size": int,
    "seed": int,
    "lambda": float,  # ADMM data-fidelity weight for the baselines
    "rho": float,
    "max_iters": int,
    "abs_tol": float,
    "rel_tol": float,
}

_OUTPUT_KEYS = {
    "report": str,
    "artifacts": str,
    "metrics_csv": str,
    "run_id": str,
}

_SECTIONS = {
    "dataset": _DATASET_KEYS,
    "model": _MODEL_KEYS,
    "hyperparams": _HYPER_KEYS,
    "output": _OUTPUT_KEYS,
}

_KIND_KEYS = {
    "synthetic": {
        "kind", "name", "ambient_dim", "num_subspaces", "subspace_dim",
        "points_per_subspace", "noise_sigma", "num_views", "view_dim",
        "view_scale", "seed", "num_samples", "num_clusters",
    },
    "idx": {
        "kind", "name", "images", "labels", "samples_per_class", "seed",
        "num_samples", "num_clusters",
    },
    "image_dir": {
        "kind", "name", "root", "modalities", "samples_per_class", "seed",
        "num_samples", "num_clusters",
    },
}


@dataclass
class ExperimentConfig:
    dataset: dict
    mode: str
    arch: str = None
    fusion: str = None
    modality: int = 0
    hyperparams: HyperParams = None
    admm: AdmmConfig = None
    output: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @property
    def seed(self):
        return self.hyperparams.seed


def parse_config(text, name="config"):
    """Parse and validate; raises ConfigError with line numbers on trouble."""
    values = {s: {} for s in _SECTIONS}
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{name}:{lineno}: expected 'section.key = value'")
        lhs, rhs = line.split("=", 1)
        lhs, rhs = lhs.strip(), rhs.strip()
        if "." not in lhs:
            raise ConfigError(f"{name}:{lineno}: key {lhs!r} needs a section prefix")
        section, key = lhs.split(".", 1)
        if section not in _SECTIONS:
            raise ConfigError(
                f"{name}:{lineno}: unknown section {section!r} "
                f"(expected one of {sorted(_SECTIONS)})"
            )
        if key not in _SECTIONS[section]:
            raise ConfigError(f"{name}:{lineno}: unknown key {section}.{key!r}")
        if key in values[section]:
            raise ConfigError(f"{name}:{lineno}: duplicate key {section}.{key}")
        if not rhs:
            raise ConfigError(f"{name}:{lineno}: empty value for {section}.{key}")
        try:
            values[section][key] = _SECTIONS[section][key](rhs)
        except ValueError as exc:
            raise ConfigError(f"{name}:{lineno}: bad value for {section}.{key}: {exc}")
    return _validate(values, name)


def load_config(path, seed_override=None):
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    import os

    name = os.path.basename(path)
    cfg = parse_config(text, name=name)
    if seed_override is not None:
        cfg.hyperparams.seed = int(seed_override)
        cfg.raw["hyperparams"]["seed"] = int(seed_override)
    if "run_id" not in cfg.output:
        cfg.output["run_id"] = os.path.splitext(name)[0]
    return cfg


def _validate(values, name):
    ds = dict(values["dataset"])
    model = dict(values["model"])
    hyper = dict(values["hyperparams"])
    output = dict(values["output"])

    kind = ds.get("kind")
    if kind is None:
        raise ConfigError(f"{name}: dataset.kind is required")
    if kind not in DATASET_KINDS:
        raise ConfigError(
            f"{name}: dataset.kind must be one of {DATASET_KINDS}, got {kind!r}"
        )
    allowed = _KIND_KEYS[kind]
    for key in ds:
        if key not in allowed:
            raise ConfigError(
                f"{name}: dataset.{key} does not apply to kind {kind!r}"
            )
    if kind == "synthetic":
        for req in ("ambient_dim", "num_subspaces"):
            if req not in ds:
                raise ConfigError(f"{name}: dataset.{req} is required for synthetic")
    elif kind == "idx":
        for req in ("images", "labels"):
            if req not in ds:
                raise ConfigError(f"{name}: dataset.{req} is required for idx")
        if len(ds["images"]) != len(ds["labels"]):
            raise ConfigError(
                f"{name}: dataset.images lists {len(ds['images'])} files but "
                f"dataset.labels lists {len(ds['labels'])}"
            )
    else:
        if "root" not in ds:
            raise ConfigError(f"{name}: dataset.root is required for image_dir")

    mode = model.get("mode")
    if mode is None:
        raise ConfigError(f"{name}: model.mode is required")
    if mode not in DEEP_MODES + BASELINE_MODES:
        raise ConfigError(
            f"{name}: model.mode must be one of "
            f"{DEEP_MODES + BASELINE_MODES}, got {mode!r}"
        )
    if mode in DEEP_MODES or mode == "ae_ssc":
        if "arch" not in model:
            raise ConfigError(f"{name}: model.arch is required for mode {mode!r}")
    fusion = model.get("fusion")
    if fusion is not None and fusion not in ("sum", "max", "concat"):
        raise ConfigError(
            f"{name}: model.fusion must be sum, max or concat, got {fusion!r}"
        )
    if mode in BASELINE_MODES and "lambda" not in hyper:
        raise ConfigError(
            f"{name}: hyperparams.lambda is required for mode {mode!r} "
            "(no default is claimed)"
        )
    if mode in ("ssc", "lrr"):
        for key in ("lambda1", "lambda2", "train_epochs"):
            if key in hyper:
                raise ConfigError(
                    f"{name}: hyperparams.{key} does not apply to mode {mode!r}"
                )

    admm = None
    if "lambda" in hyper:
        admm = AdmmConfig(
            lam=hyper["lambda"],
            rho=hyper.get("rho"),
            max_iters=hyper.get("max_iters", 1000),
            abs_tol=hyper.get("abs_tol", 1e-6),
            rel_tol=hyper.get("rel_tol", 1e-4),
        )
    elif any(k in hyper for k in ("rho", "max_iters", "abs_tol", "rel_tol")):
        raise ConfigError(
            f"{name}: ADMM keys (rho/max_iters/abs_tol/rel_tol) need "
            "hyperparams.lambda"
        )

    hp_kwargs = {
        k: hyper[k]
        for k in (
            "lambda1", "lambda2", "p", "learning_rate",
            "pretrain_epochs", "train_epochs", "batch_size", "seed",
        )
        if k in hyper
    }
    try:
        hp = HyperParams(**hp_kwargs)
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}")

    return ExperimentConfig(
        dataset=ds,
        mode=mode,
        arch=model.get("arch"),
        fusion=fusion,
        modality=model.get("modality", 0),
        hyperparams=hp,
        admm=admm,
        output=output,
        raw={
            "dataset": ds,
            "model": model,
            "hyperparams": hyper,
            "output": output,
        },
    )
