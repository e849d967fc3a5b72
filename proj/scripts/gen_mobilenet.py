#!/usr/bin/env python3
"""Write the MobileNet V1/V2 network descriptions (224x224 input, 100-class head)."""

import argparse
import pathlib


def layer(name, kind, c, m, p, r, stride):
    fields = [f"name: {name}", f"kind: {kind}", f"c: {c}"]
    if kind != "depthwise":
        fields.append(f"m: {m}")
    if kind != "fc":
        fields += [f"p: {p}", f"q: {p}", f"r: {r}", f"s: {r}"]
        if stride != 1:
            fields.append(f"stride: {stride}")
    return "  - {" + ", ".join(fields) + "}"


def v1(classes):
    rows = [layer("conv1", "standard", 3, 32, 112, 3, 2)]
    size, c = 112, 32
    cfg = [(64, 1), (128, 2), (128, 1), (256, 2), (256, 1), (512, 2)] + [(512, 1)] * 5 + [(1024, 2), (1024, 1)]
    for i, (m, s) in enumerate(cfg, start=1):
        size //= s
        rows.append(layer(f"dw{i}", "depthwise", c, c, size, 3, s))
        rows.append(layer(f"pw{i}", "standard", c, m, size, 1, 1))
        c = m
    rows.append(layer("fc", "fc", c, classes, 1, 1, 1))
    return rows


def v2(classes):
    rows = [layer("conv1", "standard", 3, 32, 112, 3, 2)]
    size, c = 112, 32
    blocks = [(1, 16, 1, 1), (6, 24, 2, 2), (6, 32, 3, 2), (6, 64, 4, 2), (6, 96, 3, 1), (6, 160, 3, 2), (6, 320, 1, 1)]
    idx = 0
    for t, out, n, s in blocks:
        for k in range(n):
            stride = s if k == 0 else 1
            idx += 1
            hidden = c * t
            if t != 1:
                rows.append(layer(f"b{idx}_expand", "standard", c, hidden, size, 1, 1))
            size //= stride
            rows.append(layer(f"b{idx}_dw", "depthwise", hidden, hidden, size, 3, stride))
            rows.append(layer(f"b{idx}_project", "standard", hidden, out, size, 1, 1))
            c = out
    rows.append(layer("conv_last", "standard", c, 1280, size, 1, 1))
    rows.append(layer("fc", "fc", 1280, classes, 1, 1, 1))
    return rows


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=pathlib.Path(__file__).resolve().parent.parent / "data" / "net", type=pathlib.Path)
    ap.add_argument("--classes", type=int, default=100)
    args = ap.parse_args()
    for name, rows, note in [
        ("mobilenet_v1", v1(args.classes), "28 quantizable layers: conv1, 13 depthwise/pointwise pairs, fc."),
        ("mobilenet_v2", v2(args.classes), "Residual adds are flattened; layers follow execution order."),
    ]:
        text = f"# MobileNet {name[-2:].upper()} at 224x224, {args.classes}-class head. {note}\n"
        text += f"name: {name}\nlayers:\n" + "\n".join(rows) + "\n"
        (args.out / f"{name}.net").write_text(text)
        print(f"{name}: {len(rows)} layers")


if __name__ == "__main__":
    main()
