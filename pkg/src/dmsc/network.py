"""Fused multimodal convolutional autoencoders.

Architectures are declared in small text files, one layer per line:

    name kind input[,input ...] kh kw din dout stride [fusion_kind]

`kind` is conv, deconv or fusion. `#` starts a comment. Input names that no
line defines are modality sources, numbered in order of first appearance.
A din/dout of 0 means "infer from the graph" (fusion rows and layers whose
channel count depends on the fusion kind use this). Fusion rows may leave
`fusion_kind` out or write `-`; the run supplies one at build time.

The latents are the non-deconv nodes consumed by deconv nodes; the decoder
branches end in terminal deconvs, matched to the modalities in declaration
order. Encoders apply relu after every conv; decoders apply relu after every
deconv except the terminal one, which stays linear so reconstructions can
reach the full pixel range.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from importlib import resources

import numpy as np

from .tensor import (
    Tensor,
    concat_channels,
    conv_output_size,
    deconv_output_size,
    elementwise_max,
    elementwise_sum,
)

FUSION_KINDS = ("sum", "max", "concat")


@dataclass(frozen=True)
class LayerSpec:
    name: str
    kind: str
    inputs: tuple
    kh: int
    kw: int
    din: int
    dout: int
    stride: int
    fusion_kind: str = None


@dataclass(frozen=True)
class NetworkSpec:
    name: str
    modalities: tuple
    layers: tuple


@dataclass(frozen=True)
class ResolvedNetwork:
    """A `NetworkSpec` with every channel count and shape pinned down."""

    name: str
    modalities: tuple
    layers: tuple
    shapes: dict  # name -> (h, w, c), includes modality sources
    latents: tuple
    outputs: tuple  # terminal deconvs, index-aligned with modalities
    input_hw: tuple


def fuse(kind, maps):
    """Combine same-spatial-shape feature maps.

    sum/max need equal channel counts; concat stacks channels in list order.
    """
    if kind not in FUSION_KINDS:
        raise ValueError(f"fuse: unknown kind {kind!r}, expected one of {FUSION_KINDS}")
    if len(maps) < 2:
        raise ValueError("fuse: needs at least two inputs")
    if kind == "sum":
        return elementwise_sum(maps)
    if kind == "max":
        return elementwise_max(maps)
    return concat_channels(maps)


# -- spec files ---------------------------------------------------------------


def parse_network_spec(text, name="network"):
    """Parse the layer-per-line architecture format into a `NetworkSpec`."""
    layers = []
    defined = {}
    sources = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if len(tok) not in (8, 9):
            raise ValueError(
                f"{name}:{lineno}: expected 8 or 9 fields "
                f"(name kind inputs kh kw din dout stride [fusion]), got {len(tok)}"
            )
        lname, kind = tok[0], tok[1]
        if kind not in ("conv", "deconv", "fusion"):
            raise ValueError(f"{name}:{lineno}: unknown layer kind {kind!r}")
        if lname in defined:
            raise ValueError(f"{name}:{lineno}: duplicate layer name {lname!r}")
        if lname in sources:
            raise ValueError(
                f"{name}:{lineno}: layer {lname!r} was already used as a "
                "modality input above; layers must be declared before use"
            )
        inputs = tuple(tok[2].split(","))
        try:
            kh, kw, din, dout, stride = (int(v) for v in tok[3:8])
        except ValueError:
            raise ValueError(f"{name}:{lineno}: non-integer field in {tok[3:8]}")
        fusion_kind = None
        if len(tok) == 9 and tok[8] != "-":
            fusion_kind = tok[8]
            if fusion_kind not in FUSION_KINDS:
                raise ValueError(
                    f"{name}:{lineno}: unknown fusion kind {fusion_kind!r}"
                )
        if kind == "fusion":
            if len(inputs) < 2:
                raise ValueError(f"{name}:{lineno}: fusion needs >= 2 inputs")
        else:
            if len(inputs) != 1:
                raise ValueError(f"{name}:{lineno}: {kind} takes exactly one input")
            if kh < 1 or kw < 1:
                raise ValueError(f"{name}:{lineno}: kernel dims must be >= 1")
            if stride not in (1, 2):
                raise ValueError(f"{name}:{lineno}: stride must be 1 or 2")
            if dout < 1:
                raise ValueError(f"{name}:{lineno}: {kind} needs dout >= 1")
        for inp in inputs:
            if inp not in defined and inp not in sources:
                sources.append(inp)
        defined[lname] = kind
        layers.append(
            LayerSpec(lname, kind, inputs, kh, kw, din, dout, stride, fusion_kind)
        )
    if not layers:
        raise ValueError(f"{name}: no layers declared")
    return NetworkSpec(name=name, modalities=tuple(sources), layers=tuple(layers))


def load_network_spec(path):
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    import os

    return parse_network_spec(text, name=os.path.splitext(os.path.basename(path))[0])


def builtin_spec_names():
    root = resources.files("dmsc") / "specs"
    return sorted(p.name[: -len(".spec")] for p in root.iterdir() if p.name.endswith(".spec"))


def load_builtin_spec(name):
    """Load one of the architecture files shipped inside the package."""
    ref = resources.files("dmsc") / "specs" / f"{name}.spec"
    if not ref.is_file():
        raise FileNotFoundError(
            f"no builtin architecture {name!r}; available: {builtin_spec_names()}"
        )
    return parse_network_spec(ref.read_text(encoding="utf-8"), name=name)


# -- shape inference ------------------------------------------------------------


def resolve_network(spec, input_hw=(32, 32), in_channels=1, fusion_kind=None):
    """Infer every shape, fill in din/dout, and classify latents/outputs.

    Raises ValueError with the offending layer named for any inconsistency:
    channel mismatches, fusion over unequal spatial dims, decoder outputs not
    matching their modality, or a graph whose decoder count differs from the
    modality count.
    """
    shapes = {m: (input_hw[0], input_hw[1], in_channels) for m in spec.modalities}
    consumers = {}
    resolved = []
    kinds = {m: "source" for m in spec.modalities}
    for layer in spec.layers:
        for inp in layer.inputs:
            consumers.setdefault(inp, []).append(layer)
        in_shapes = [shapes[i] for i in layer.inputs]
        if layer.kind != "deconv":
            for inp in layer.inputs:
                if kinds[inp] == "deconv":
                    raise ValueError(
                        f"{spec.name}: layer {layer.name!r} ({layer.kind}) reads "
                        f"decoder output {inp!r}; only deconvs may"
                    )
        if layer.kind == "fusion":
            h, w, c0 = in_shapes[0]
            for inp, (hh, ww, _) in zip(layer.inputs, in_shapes):
                if (hh, ww) != (h, w):
                    raise ValueError(
                        f"{spec.name}: fusion {layer.name!r} mixes spatial dims "
                        f"{(h, w)} and {(hh, ww)} (input {inp!r})"
                    )
            kind = layer.fusion_kind or fusion_kind
            if kind is None:
                raise ValueError(
                    f"{spec.name}: fusion {layer.name!r} has no fusion kind in the "
                    "file and none was supplied at build time"
                )
            if kind in ("sum", "max"):
                for inp, (_, _, cc) in zip(layer.inputs, in_shapes):
                    if cc != c0:
                        raise ValueError(
                            f"{spec.name}: {kind} fusion {layer.name!r} mixes channel "
                            f"counts {c0} and {cc} (input {inp!r})"
                        )
                cout = c0
            else:
                cout = sum(s[2] for s in in_shapes)
            if layer.dout not in (0, cout):
                raise ValueError(
                    f"{spec.name}: fusion {layer.name!r} declares dout={layer.dout} "
                    f"but {kind} of {[s[2] for s in in_shapes]} gives {cout}"
                )
            resolved.append(
                replace(layer, din=in_shapes[0][2], dout=cout, fusion_kind=kind)
            )
            shapes[layer.name] = (h, w, cout)
        else:
            h, w, cin = in_shapes[0]
            if layer.din not in (0, cin):
                raise ValueError(
                    f"{spec.name}: {layer.kind} {layer.name!r} declares din="
                    f"{layer.din} but its input {layer.inputs[0]!r} has {cin} channels"
                )
            if layer.dout < 1:
                raise ValueError(
                    f"{spec.name}: {layer.kind} {layer.name!r} needs dout >= 1"
                )
            if layer.kind == "conv":
                ho = conv_output_size(h, layer.stride)
                wo = conv_output_size(w, layer.stride)
            else:
                ho = deconv_output_size(h, layer.stride)
                wo = deconv_output_size(w, layer.stride)
            resolved.append(replace(layer, din=cin))
            shapes[layer.name] = (ho, wo, layer.dout)
        kinds[layer.name] = layer.kind

    latents = []
    for layer in resolved:
        if layer.kind == "deconv":
            continue
        feeds = consumers.get(layer.name, [])
        if any(c.kind == "deconv" for c in feeds):
            latents.append(layer.name)
    outputs = [l.name for l in resolved if l.kind == "deconv" and l.name not in consumers]
    if not latents:
        raise ValueError(f"{spec.name}: no latent (no conv/fusion feeds a deconv)")
    if len(outputs) != len(spec.modalities):
        raise ValueError(
            f"{spec.name}: {len(outputs)} decoder outputs for "
            f"{len(spec.modalities)} modalities"
        )
    for out, mod in zip(outputs, spec.modalities):
        if shapes[out] != shapes[mod]:
            raise ValueError(
                f"{spec.name}: decoder output {out!r} has shape {shapes[out]} but "
                f"modality {mod!r} expects {shapes[mod]}"
            )
    return ResolvedNetwork(
        name=spec.name,
        modalities=spec.modalities,
        layers=tuple(resolved),
        shapes=shapes,
        latents=tuple(latents),
        outputs=tuple(outputs),
        input_hw=tuple(input_hw),
    )


def num_parameters(net, n_samples=None):
    """Per-layer kernel parameter counts, plus the N*N self-expressive block."""
    counts = {}
    for layer in net.layers:
        if layer.kind == "fusion":
            counts[layer.name] = 0
        else:
            counts[layer.name] = layer.kh * layer.kw * layer.din * layer.dout
    if n_samples is not None:
        counts["self_expressive"] = n_samples * n_samples
    return counts


# -- parameters and forward pass ----------------------------------------------


def build_network(net, seed=0):
    """Initialize kernels for a resolved network.

    Uniform in [-sqrt(1/fan_in), sqrt(1/fan_in)] with fan_in = kh*kw*din,
    drawn in declaration order from one seeded generator, so a given
    (spec, seed) pair always yields the same parameters.
    """
    rng = np.random.default_rng(seed)
    params = {}
    for layer in net.layers:
        if layer.kind == "fusion":
            continue
        if layer.kind == "conv":
            shape = (layer.kh, layer.kw, layer.din, layer.dout)
        else:
            shape = (layer.kh, layer.kw, layer.dout, layer.din)
        bound = np.sqrt(1.0 / (layer.kh * layer.kw * layer.din))
        params[layer.name] = Tensor(
            rng.uniform(-bound, bound, size=shape), name=layer.name
        )
    return params


def autoencode(net, params, inputs, self_expr=None):
    """Run the fused autoencoder on a batch.

    Parameters
    ----------
    net : ResolvedNetwork
    params : dict of layer name -> Tensor kernel
    inputs : list/dict of modality batches, NHWC, one per modality
    self_expr : SelfExpressiveLayer, optional
        When given, every latent Z (flattened per sample) is replaced by
        Theta_s^T Z before the decoders run.

    Returns
    -------
    (latents, recons) : latents are the raw flattened N x D tensors in
    latent declaration order; recons are NHWC tensors index-aligned with
    the modalities.
    """
    if isinstance(inputs, dict):
        inputs = [inputs[m] for m in net.modalities]
    if len(inputs) != len(net.modalities):
        raise ValueError(
            f"{net.name}: got {len(inputs)} modality batches, "
            f"expected {len(net.modalities)}"
        )
    vals = {}
    n = None
    for mod, x in zip(net.modalities, inputs):
        t = x if isinstance(x, Tensor) else Tensor(x)
        if t.ndim != 4 or t.shape[1:] != net.shapes[mod]:
            raise ValueError(
                f"{net.name}: modality {mod!r} batch has shape {t.shape}, "
                f"expected (N, {', '.join(map(str, net.shapes[mod]))})"
            )
        if n is None:
            n = t.shape[0]
        elif t.shape[0] != n:
            raise ValueError(f"{net.name}: modality batch sizes disagree")
        vals[mod] = t

    for layer in net.layers:  # encoder half: convs and fusions
        if layer.kind == "conv":
            vals[layer.name] = (
                vals[layer.inputs[0]].conv2d(params[layer.name], layer.stride).relu()
            )
        elif layer.kind == "fusion":
            vals[layer.name] = fuse(
                layer.fusion_kind, [vals[i] for i in layer.inputs]
            )

    latents = [vals[name].reshape(n, -1) for name in net.latents]
    if self_expr is not None:
        for name, z in zip(net.latents, latents):
            h, w, c = net.shapes[name]
            vals[name] = self_expr.apply(z).reshape(n, h, w, c)

    for layer in net.layers:  # decoder half
        if layer.kind != "deconv":
            continue
        y = vals[layer.inputs[0]].deconv2d(params[layer.name], layer.stride)
        if layer.name not in net.outputs:
            y = y.relu()
        vals[layer.name] = y

    recons = [vals[name] for name in net.outputs]
    return latents, recons
