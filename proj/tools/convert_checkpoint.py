#!/usr/bin/env python3
"""Convert a PyTorch ViT-S/16 state dict to the TARC archive read by `crs`.

Accepts timm / DINO style key names. LayerScale factors (blocks.N.ls1.gamma,
blocks.N.ls2.gamma) are folded into the preceding projection, since the C++
encoder has no separate scale. Keys the encoder does not use (classification
head, mask token) are dropped.

    python tools/convert_checkpoint.py vit_small.pth encoder.tarc
"""

import argparse
import struct
import sys

import numpy as np
import torch

WRAPPERS = ("state_dict", "model", "teacher", "student")
PREFIXES = ("module.", "backbone.", "encoder.")
DROPPED = ("head.", "mask_token", "fc_norm.", "pre_logits.")


def unwrap(obj):
    while isinstance(obj, dict):
        inner = next((obj[k] for k in WRAPPERS if k in obj and isinstance(obj[k], dict)), None)
        if inner is None:
            return obj
        obj = inner
    raise SystemExit("checkpoint does not contain a state dict")


def strip(name):
    changed = True
    while changed:
        changed = False
        for p in PREFIXES:
            if name.startswith(p):
                name, changed = name[len(p):], True
    return name


def fold_layer_scale(tensors):
    for key in [k for k in tensors if k.endswith((".ls1.gamma", ".ls2.gamma"))]:
        gamma = tensors.pop(key)
        block = key.rsplit(".", 2)[0]
        target = "attn.proj" if ".ls1." in key else "mlp.fc2"
        tensors[f"{block}.{target}.weight"] = tensors[f"{block}.{target}.weight"] * gamma[:, None]
        tensors[f"{block}.{target}.bias"] = tensors[f"{block}.{target}.bias"] * gamma


def write_tarc(path, tensors):
    with open(path, "wb") as out:
        out.write(b"TARC0001")
        out.write(struct.pack("<I", len(tensors)))
        for name in sorted(tensors):
            data = np.ascontiguousarray(tensors[name], dtype="<f4")
            encoded = name.encode("utf-8")
            out.write(struct.pack("<I", len(encoded)) + encoded)
            out.write(struct.pack("<I", data.ndim))
            out.write(struct.pack(f"<{data.ndim}I", *data.shape))
            out.write(struct.pack("<I", 3) + b"f32")
            out.write(data.tobytes())


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("checkpoint", help="PyTorch checkpoint (.pth/.pt)")
    parser.add_argument("output", help="TARC file to write")
    args = parser.parse_args(argv)

    state = unwrap(torch.load(args.checkpoint, map_location="cpu", weights_only=True))
    tensors = {}
    for name, value in state.items():
        name = strip(name)
        if name.startswith(DROPPED) or not torch.is_tensor(value):
            continue
        tensors[name] = value.detach().to(torch.float32).numpy()
    fold_layer_scale(tensors)

    patch = tensors.get("patch_embed.proj.weight")
    if patch is None:
        raise SystemExit("no patch_embed.proj.weight; is this a ViT checkpoint?")
    if patch.shape[1:] != (3, 16, 16) or patch.shape[0] != 384:
        raise SystemExit(f"expected a ViT-S/16 patch embedding (384, 3, 16, 16), got {patch.shape}")

    write_tarc(args.output, tensors)
    print(f"wrote {len(tensors)} tensors to {args.output}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
