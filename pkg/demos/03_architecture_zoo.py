"""Resolve every shipped architecture and print its shape/parameter table.

Nothing is trained here: this is the same machinery behind `dmsc dry-run`,
exercised across the whole spec library. Architectures whose fusion kind is
chosen per run (late/intermediate fusion) are resolved with concat.

Run:  python3 demos/03_architecture_zoo.py
"""

from dmsc import network

# sample counts at which the self-expressive layer is sized, per family
FAMILY_N = {"digits": 2000, "arl": 2160, "yaleb": 2432, "synth": 250}


def main():
    for name in network.builtin_spec_names():
        spec = network.load_builtin_spec(name)
        needs_kind = any(
            l.kind == "fusion" and l.fusion_kind is None for l in spec.layers
        )
        net = network.resolve_network(
            spec, fusion_kind="concat" if needs_kind else None
        )
        n = FAMILY_N[name.split("_")[0]]
        counts = network.num_parameters(net, n_samples=n)
        conv = sum(v for k, v in counts.items() if k != "self_expressive")
        print(f"\n=== {name} ({len(net.modalities)} modalities, "
              f"latents {list(net.latents)}) ===")
        for layer in net.layers:
            h, w, c = net.shapes[layer.name]
            kind = layer.kind
            if kind == "fusion":
                kind = f"fusion[{layer.fusion_kind}]"
            print(f"  {layer.name:<12} {kind:<13} <- {','.join(layer.inputs):<22}"
                  f" out {h:>2}x{w:>2}x{c:<3} params {counts[layer.name]}")
        print(f"  conv parameters: {conv}")
        print(f"  self-expressive at N={n}: {counts['self_expressive']}")


if __name__ == "__main__":
    main()
