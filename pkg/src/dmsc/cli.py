"""The `dmsc` command line: run, dry-run, eval, heatmap.

`run` executes a full experiment from a config file: load and preprocess the
dataset, train (or solve a baseline), cluster, score, and write the report
plus artifacts. `dry-run` resolves the architecture and prints layer shapes
and parameter counts without touching data or training. `eval` scores two
label files; `heatmap` renders an affinity dump as a PGM.

Exit codes: 0 success, 2 configuration error, 3 runtime failure. The
environment variable DMSC_SEED overrides the config seed for run/dry-run.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

import numpy as np

from . import __version__, baselines, fileio, metrics, network, selfexpr, spectral
from .config import BASELINE_MODES, DEEP_MODES, ConfigError, load_config
from .data import (
    SynthSpec,
    generate_union_of_subspaces,
    load_image_directory,
    preprocess_bundle,
)


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime/numeric/IO failures
        print(f"error: {exc}", file=sys.stderr)
        return 3


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="dmsc", description="deep multimodal subspace clustering"
    )
    sub = parser.add_subparsers(required=True, metavar="command")

    p_run = sub.add_parser("run", help="run an experiment from a config file")
    p_run.add_argument("config")
    p_run.add_argument(
        "--dry-run", action="store_true",
        help="resolve the architecture and print parameter counts only",
    )
    p_run.set_defaults(func=cmd_run)

    p_dry = sub.add_parser("dry-run", help="print the resolved architecture")
    p_dry.add_argument("config")
    p_dry.set_defaults(func=cmd_dry_run)

    p_eval = sub.add_parser("eval", help="score predicted labels against truth")
    p_eval.add_argument("pred")
    p_eval.add_argument("truth")
    p_eval.set_defaults(func=cmd_eval)

    p_heat = sub.add_parser("heatmap", help="render an affinity dump as PGM")
    p_heat.add_argument("matrix")
    p_heat.add_argument("out")
    p_heat.set_defaults(func=cmd_heatmap)
    return parser


def cmd_run(args):
    cfg = _load(args.config)
    if getattr(args, "dry_run", False):
        print(describe_architecture(cfg))
        return 0
    report = run_experiment(cfg)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def cmd_dry_run(args):
    cfg = _load(args.config)
    print(describe_architecture(cfg))
    return 0


def cmd_eval(args):
    pred = _read_label_file(args.pred)
    truth = _read_label_file(args.truth)
    scores = metrics.evaluate_clustering(pred, truth)
    print(json.dumps(scores, indent=2, sort_keys=True))
    return 0


def cmd_heatmap(args):
    w = fileio.load_matrix(args.matrix)
    _ensure_parent(args.out)
    fileio.write_pgm(args.out, spectral.heatmap_image(w))
    return 0


def _ensure_parent(path):
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)


def _load(path):
    return load_config(path, seed_override=os.environ.get("DMSC_SEED"))


def _read_label_file(path):
    labels = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                labels.append(int(line))
            except ValueError:
                raise ValueError(f"{path}:{lineno}: expected an integer label")
    return np.asarray(labels, dtype=np.int64)


# -- dataset loading ----------------------------------------------------------------


def load_dataset(cfg):
    """Build the preprocessed ModalityBundle the config describes."""
    ds = cfg.dataset
    kind = ds["kind"]
    seed = ds.get("seed", cfg.seed)
    if kind == "synthetic":
        spec = SynthSpec(
            ambient_dim=ds["ambient_dim"],
            num_subspaces=ds["num_subspaces"],
            subspace_dim=ds.get("subspace_dim", 3),
            points_per_subspace=ds.get("points_per_subspace", 50),
            noise_sigma=ds.get("noise_sigma", 0.0),
            num_views=ds.get("num_views", 2),
            seed=seed,
            view_dim=ds.get("view_dim", 1024),
            view_scale=ds.get("view_scale", 255.0),
        )
        bundle = generate_union_of_subspaces(spec).bundle
        bundle.name = ds.get("name", "synthetic")
        return bundle
    if kind == "idx":
        images = {}
        labels = {}
        for i, (img_path, lab_path) in enumerate(zip(ds["images"], ds["labels"])):
            mod = f"image{i + 1}"
            stack = fileio.read_idx(img_path)
            if stack.ndim != 3:
                raise ValueError(
                    f"{img_path}: expected rank-3 IDX images, got rank {stack.ndim}"
                )
            images[mod] = stack.astype(np.float64)
            labels[mod] = fileio.read_idx(lab_path).astype(np.int64)
        if len(images) == 1:
            labels = labels["image1"]
        return preprocess_bundle(
            images,
            labels,
            samples_per_class=ds.get("samples_per_class"),
            seed=seed,
            name=ds.get("name", "idx"),
        )
    images, labels = load_image_directory(ds["root"], ds.get("modalities"))
    first = next(iter(labels))
    aligned = all(np.array_equal(labels[m], labels[first]) for m in labels)
    return preprocess_bundle(
        images,
        labels[first] if aligned else labels,
        samples_per_class=ds.get("samples_per_class"),
        seed=seed,
        name=ds.get("name", "image_dir"),
    )


def _load_arch(cfg):
    arch = cfg.arch
    if arch is None:
        raise ConfigError("model.arch is required for this mode")
    if os.path.sep in arch or arch.endswith(".spec") or os.path.exists(arch):
        return network.load_network_spec(arch)
    return network.load_builtin_spec(arch)


def _sample_count(cfg):
    ds = cfg.dataset
    if "num_samples" in ds:
        return ds["num_samples"]
    if ds["kind"] == "synthetic":
        return ds["num_subspaces"] * ds.get("points_per_subspace", 50)
    raise ConfigError(
        "dataset.num_samples is required to size the self-expressive layer "
        "without loading the dataset"
    )


def _cluster_count(cfg, bundle=None):
    if bundle is not None and bundle.labels is not None:
        return bundle.num_clusters()
    ds = cfg.dataset
    if "num_clusters" in ds:
        return ds["num_clusters"]
    if ds["kind"] == "synthetic":
        return ds["num_subspaces"]
    raise ConfigError("dataset.num_clusters is required for unlabeled data")


# -- dry run ---------------------------------------------------------------------


def describe_architecture(cfg):
    """Human-readable architecture summary with parameter counts."""
    n = _sample_count(cfg)
    k = _cluster_count(cfg)
    lines = [f"mode: {cfg.mode}", f"samples: {n}", f"clusters: {k}"]
    if cfg.mode in ("ssc", "lrr"):
        lines.append(f"coefficients: {n} x {n} = {n * n} parameters (ADMM)")
        lines.append(f"total parameters: {n * n}")
        return "\n".join(lines)
    spec = _load_arch(cfg)
    net = network.resolve_network(spec, fusion_kind=cfg.fusion)
    counts = network.num_parameters(net, n_samples=n)
    lines.append(
        f"architecture: {net.name} ({len(net.modalities)} modalities, "
        f"fusion {cfg.fusion or 'per spec file'})"
    )
    for mod in net.modalities:
        h, w, c = net.shapes[mod]
        lines.append(f"  input {mod}: {h}x{w}x{c}")
    for layer in net.layers:
        h, w, c = net.shapes[layer.name]
        extra = f" [{layer.fusion_kind}]" if layer.kind == "fusion" else ""
        lines.append(
            f"  {layer.name} {layer.kind}{extra} <- {','.join(layer.inputs)} "
            f"out {h}x{w}x{c} params {counts[layer.name]}"
        )
    for name in net.latents:
        h, w, c = net.shapes[name]
        lines.append(f"  latent {name}: {h}x{w}x{c} = {h * w * c} per sample")
    hp = cfg.hyperparams
    lines.append(f"  self-expressive: {n} x {n} = {counts['self_expressive']} parameters")
    lines.append(f"lambda1: {hp.lambda1!r}")
    lines.append(f"lambda2: {hp.resolved_lambda2(k)!r}")
    lines.append(f"total parameters: {sum(counts.values())}")
    return "\n".join(lines)


# -- full pipeline ------------------------------------------------------------------


def run_experiment(cfg):
    """Load, train/solve, cluster, score, and emit artifacts.

    Returns the report dict (already written to output.report when set).
    """
    t0 = time.perf_counter()
    bundle = load_dataset(cfg)
    k = _cluster_count(cfg, bundle)
    hp = cfg.hyperparams
    histories = {}

    if cfg.mode in DEEP_MODES:
        coeffs, histories, params, theta = _run_deep(cfg, bundle, hp)
    elif cfg.mode == "ae_ssc":
        coeffs, histories, params, theta = _run_ae_ssc(cfg, bundle, hp)
    else:
        coeffs, params, theta = _run_admm_baseline(cfg, bundle), None, None

    cnorm = spectral.normalize_coefficients(coeffs)
    w = spectral.build_affinity(cnorm)
    labeling = spectral.spectral_cluster(w, k, seed=hp.seed)
    scores = None
    if bundle.labels is not None:
        scores = metrics.evaluate_clustering(labeling.labels, bundle.labels)
    seconds = time.perf_counter() - t0

    report = {
        "run_id": cfg.output.get("run_id", "run"),
        "version": __version__,
        "mode": cfg.mode,
        "dataset": bundle.name,
        "n": bundle.n,
        "num_clusters": k,
        "seed": hp.seed,
        "lambda2": hp.resolved_lambda2(k) if cfg.mode not in ("ssc", "lrr") else None,
        "metrics": scores,
        "seconds": seconds,
        "config": cfg.raw,
    }
    emit_outputs(cfg, report, coeffs, w, labeling, bundle, histories, params, theta)
    return report


def _run_deep(cfg, bundle, hp):
    spec = _load_arch(cfg)
    net = network.resolve_network(
        spec, input_hw=bundle.views()[0].shape[1:3], fusion_kind=cfg.fusion
    )
    if len(net.modalities) != len(bundle.modalities):
        raise ValueError(
            f"architecture {net.name} expects {len(net.modalities)} modalities, "
            f"bundle has {len(bundle.modalities)}"
        )
    mode_kind = "affinity" if cfg.mode == "affinity" else "spatial"
    if mode_kind == "spatial" and len(net.latents) != 1:
        raise ValueError(
            f"mode {cfg.mode!r} needs an architecture with one fused latent; "
            f"{net.name} has {len(net.latents)}"
        )
    if mode_kind == "affinity" and len(net.latents) != len(net.modalities):
        raise ValueError(
            f"mode 'affinity' needs one latent per modality; "
            f"{net.name} has {len(net.latents)} for {len(net.modalities)}"
        )
    params = network.build_network(net, seed=hp.seed)
    histories = {}
    if hp.pretrain_epochs > 0:
        histories["pretrain"] = selfexpr.pretrain(net, params, bundle, hp)
    theta = selfexpr.SelfExpressiveLayer(bundle.n)
    histories["train"] = selfexpr.train_self_expressive(
        net, params, theta, bundle, hp, mode_kind
    )
    return theta.coeffs.data.copy(), histories, params, theta


def _run_ae_ssc(cfg, bundle, hp):
    spec = _load_arch(cfg)
    net = network.resolve_network(
        spec, input_hw=bundle.views()[0].shape[1:3], fusion_kind=cfg.fusion
    )
    params = network.build_network(net, seed=hp.seed)
    histories = {}
    if hp.pretrain_epochs > 0:
        histories["pretrain"] = selfexpr.pretrain(net, params, bundle, hp)
    latents = selfexpr.latent_features(net, params, bundle)
    z = latents[min(cfg.modality, len(latents) - 1)]
    result = baselines.ssc_solve(z.T, cfg.admm)
    return result.coeffs, histories, params, None


def _run_admm_baseline(cfg, bundle):
    views = bundle.views()
    if not 0 <= cfg.modality < len(views):
        raise ValueError(
            f"model.modality {cfg.modality} out of range for "
            f"{len(views)} modalities"
        )
    x = views[cfg.modality].reshape(bundle.n, -1).T  # D x N, columns = samples
    solve = baselines.ssc_solve if cfg.mode == "ssc" else baselines.lrr_solve
    return solve(x, cfg.admm).coeffs


def emit_outputs(cfg, report, coeffs, w, labeling, bundle, histories, params, theta):
    """Write the report JSON and, when configured, the artifacts directory
    (coefficient/affinity dumps, heatmap, loss histories, checkpoint,
    predicted labels) and the cumulative metrics CSV row."""
    out = cfg.output
    if "report" in out:
        _ensure_parent(out["report"])
        with open(out["report"], "w", encoding="ascii") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
    if "artifacts" in out:
        art = out["artifacts"]
        os.makedirs(art, exist_ok=True)
        fileio.save_matrix(os.path.join(art, "coeffs.bin"), coeffs)
        fileio.save_matrix(os.path.join(art, "affinity.bin"), w)
        order = None
        if bundle.labels is not None:
            order = np.argsort(bundle.labels, kind="stable")
        fileio.write_pgm(
            os.path.join(art, "heatmap.pgm"), spectral.heatmap_image(w, order)
        )
        with open(os.path.join(art, "labels.csv"), "w", encoding="ascii") as fh:
            for lab in labeling.labels:
                fh.write(f"{int(lab)}\n")
        for phase, hist in histories.items():
            fileio.write_loss_history(
                os.path.join(art, f"loss_{phase}.csv"), hist
            )
        if params is not None:
            tensors = dict(params)
            if theta is not None:
                tensors["theta_s"] = theta.coeffs
            fileio.save_checkpoint(os.path.join(art, "params.ckpt"), tensors)
    if "metrics_csv" in out and report["metrics"] is not None:
        path = out["metrics_csv"]
        _ensure_parent(path)
        header = "run_id,mode,dataset,acc,nmi,ari,seconds,seed\n"
        fresh = not os.path.exists(path)
        with open(path, "a", encoding="ascii") as fh:
            if fresh:
                fh.write(header)
            m = report["metrics"]
            fh.write(
                f"{report['run_id']},{report['mode']},{report['dataset']},"
                f"{m['acc']:.6f},{m['nmi']:.6f},{m['ari']:.6f},"
                f"{report['seconds']:.3f},{report['seed']}\n"
            )


if __name__ == "__main__":
    sys.exit(main())
