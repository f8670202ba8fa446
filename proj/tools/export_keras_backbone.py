#!/usr/bin/env python3
# SPDX-License-Identifier: Apache-2.0
"""Export Keras application backbones to the .hwts weight format.

    export_keras_backbone.py --arch mobilenet --out assets/
        writes assets/mobilenet_backbone.hwts from ImageNet weights.

    export_keras_backbone.py --arch resnet50 --out dir/ --random --seed 3 --reference
        randomizes every weight (including BN statistics) and also writes
        dir/resnet50_reference.hwts holding an input batch and the Keras
        backbone output, for numerical parity checks.
"""

import argparse
import os
import struct
import sys

import numpy as np

MAGIC = b"HEMAWTS1"
ARCHS = ("mobilenet", "resnet50", "vgg19")

WEIGHT_NAMES = {
    "Conv2D": ("kernel", "bias"),
    "DepthwiseConv2D": ("depthwise_kernel", "bias"),
    "BatchNormalization": ("gamma", "beta", "moving_mean", "moving_variance"),
}


def encode(tag, arrays):
    out = bytearray(MAGIC)
    tag_bytes = tag.encode()
    out += struct.pack("<I", len(tag_bytes)) + tag_bytes
    out += struct.pack("<I", len(arrays))
    for name, value in arrays:
        value = np.ascontiguousarray(value, dtype="<f4")
        name_bytes = name.encode()
        out += struct.pack("<I", len(name_bytes)) + name_bytes
        out += struct.pack("<I", value.ndim)
        out += struct.pack("<%dI" % value.ndim, *value.shape)
        out += value.tobytes()
    return bytes(out)


def build(arch, weights):
    import keras  # noqa: deferred so --help works without TensorFlow

    shape = (224, 224, 3)
    if arch == "mobilenet":
        return keras.applications.MobileNet(input_shape=shape, include_top=False, weights=weights)
    if arch == "resnet50":
        return keras.applications.ResNet50(input_shape=shape, include_top=False, weights=weights)
    return keras.applications.VGG19(input_shape=shape, include_top=False, weights=weights)


def randomize(model, rng):
    for layer in model.layers:
        kind = type(layer).__name__
        values = []
        for i, w in enumerate(layer.get_weights()):
            if kind == "BatchNormalization" and i == 3:
                values.append(rng.uniform(0.5, 1.5, w.shape).astype("f4"))
            elif kind == "BatchNormalization" and i == 0:
                values.append(rng.uniform(0.5, 1.5, w.shape).astype("f4"))
            else:
                fan_in = max(1, int(np.prod(w.shape[:-1])))
                scale = np.sqrt(3.0 / fan_in) if w.ndim > 1 else 0.1
                values.append(rng.uniform(-scale, scale, w.shape).astype("f4"))
        if values:
            layer.set_weights(values)


def named_arrays(model):
    arrays = []
    for layer in model.layers:
        kind = type(layer).__name__
        weights = layer.get_weights()
        if not weights:
            continue
        if kind not in WEIGHT_NAMES:
            sys.exit("unsupported layer with weights: %s (%s)" % (layer.name, kind))
        for name, value in zip(WEIGHT_NAMES[kind], weights):
            arrays.append(("%s/%s" % (layer.name, name), value))
    return arrays


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--arch", choices=ARCHS + ("all",), required=True)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--random", action="store_true", help="random weights instead of ImageNet")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--reference", action="store_true", help="also write an input/output reference pair")
    parser.add_argument("--batch", type=int, default=2)
    args = parser.parse_args()

    try:
        import keras  # noqa: F401
    except ImportError:
        print("keras is not installed; nothing exported", file=sys.stderr)
        return 77
    os.makedirs(args.out, exist_ok=True)
    archs = ARCHS if args.arch == "all" else (args.arch,)
    for arch in archs:
        rng = np.random.default_rng(args.seed)
        model = build(arch, None if args.random else "imagenet")
        if args.random:
            randomize(model, rng)
        path = os.path.join(args.out, "%s_backbone.hwts" % arch)
        with open(path, "wb") as f:
            f.write(encode("%s_backbone" % arch, named_arrays(model)))
        print(path)
        if args.reference:
            x = rng.uniform(0.0, 1.0, (args.batch, 224, 224, 3)).astype("f4")
            y = np.asarray(model(x, training=False))
            ref = os.path.join(args.out, "%s_reference.hwts" % arch)
            with open(ref, "wb") as f:
                f.write(encode("%s_reference" % arch, [("input", x), ("features", y)]))
            print(ref)


if __name__ == "__main__":
    os.environ.setdefault("TF_CPP_MIN_LOG_LEVEL", "3")
    sys.exit(main())
