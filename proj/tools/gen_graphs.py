#!/usr/bin/env python3
# Copyright 2026 The mpai-sim Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Generates the bundled network graph files under data/graphs/.

Layer configurations follow the published architectures at their standard
input sizes. Activations are fused into the producing convolution, as the
accelerator toolchains do, so no separate Activation layers are emitted.
"""

import json
import math
import os
import sys


class Builder:
    def __init__(self, name, input_dims):
        self.name = name
        self.input_dims = list(input_dims)
        self.layers = []
        self.shapes = {"input": list(input_dims)}
        self.group = "BACKBONE"

    def _add(self, layer):
        layer["group"] = self.group
        self.layers.append(layer)
        self.shapes[layer["id"]] = layer["output_shape"]
        return layer["id"]

    def conv(self, lid, src, out_c, k, s=1, groups=1, pad="same"):
        kh, kw = (k, k) if isinstance(k, int) else k
        sh, sw = (s, s) if isinstance(s, int) else s
        h, w, c = self.shapes[src]
        if pad == "same":
            oh, ow = math.ceil(h / sh), math.ceil(w / sw)
        else:
            oh, ow = (h - kh) // sh + 1, (w - kw) // sw + 1
        return self._add({
            "id": lid, "kind": "Convolution", "inputs": [src],
            "kernel": [kh, kw], "stride": [sh, sw],
            "in_channels": c, "out_channels": out_c, "groups": groups,
            "output_shape": [oh, ow, out_c]})

    def pool(self, lid, src, mode, k, s, pad="same"):
        h, w, c = self.shapes[src]
        if k is None:
            kh, kw, oh, ow = h, w, 1, 1
            sh = sw = 1
        else:
            kh = kw = k
            sh = sw = s
            if pad == "same":
                oh, ow = math.ceil(h / s), math.ceil(w / s)
            else:
                oh, ow = (h - k) // s + 1, (w - k) // s + 1
        return self._add({
            "id": lid, "kind": "Pooling", "inputs": [src], "mode": mode,
            "kernel": [kh, kw], "stride": [sh, sw],
            "output_shape": [oh, ow, c]})

    def add(self, lid, a, b):
        return self._add({"id": lid, "kind": "ElementwiseAdd",
                          "inputs": [a, b],
                          "output_shape": list(self.shapes[a])})

    def concat(self, lid, srcs):
        h, w, _ = self.shapes[srcs[0]]
        c = sum(self.shapes[x][2] for x in srcs)
        return self._add({"id": lid, "kind": "Concat", "inputs": list(srcs),
                          "output_shape": [h, w, c]})

    def fc(self, lid, src, out_f):
        in_f = 1
        for d in self.shapes[src]:
            in_f *= d
        return self._add({"id": lid, "kind": "FullyConnected",
                          "inputs": [src], "in_features": in_f,
                          "out_features": out_f, "output_shape": [out_f]})

    def resample(self, lid, src, dims):
        return self._add({"id": lid, "kind": "Resample", "inputs": [src],
                          "output_shape": list(dims)})

    def doc(self):
        return {"name": self.name, "input_shape": self.input_dims,
                "layers": self.layers}


def resnet50_trunk(b, src):
    x = b.conv("conv1", src, 64, 7, 2)
    x = b.pool("pool1", x, "max", 3, 2)
    widths = [64, 128, 256, 512]
    blocks = [3, 4, 6, 3]
    for stage, (width, n) in enumerate(zip(widths, blocks), start=2):
        for i in range(n):
            tag = f"res{stage}{chr(ord('a') + i)}"
            stride = 2 if (i == 0 and stage > 2) else 1
            y = b.conv(f"{tag}_branch2a", x, width, 1)
            y = b.conv(f"{tag}_branch2b", y, width, 3, stride)
            y = b.conv(f"{tag}_branch2c", y, width * 4, 1)
            if i == 0:
                sc = b.conv(f"{tag}_branch1", x, width * 4, 1, stride)
            else:
                sc = x
            x = b.add(tag, sc, y)
    return x


def resnet50():
    b = Builder("resnet50", [224, 224, 3])
    x = resnet50_trunk(b, "input")
    x = b.pool("pool5", x, "avg", None, None)
    b.group = "HEAD"
    b.fc("fc1000", x, 1000)
    return b.doc()


def mobilenet_v2():
    b = Builder("mobilenet_v2", [224, 224, 3])
    x = b.conv("conv_stem", "input", 32, 3, 2)
    settings = [(1, 16, 1, 1), (6, 24, 2, 2), (6, 32, 3, 2), (6, 64, 4, 2),
                (6, 96, 3, 1), (6, 160, 3, 2), (6, 320, 1, 1)]
    idx = 0
    for t, c, n, s in settings:
        for i in range(n):
            stride = s if i == 0 else 1
            in_c = b.shapes[x][2]
            hidden = in_c * t
            tag = f"block{idx:02d}"
            y = x
            if t != 1:
                y = b.conv(f"{tag}_expand", y, hidden, 1)
            y = b.conv(f"{tag}_dw", y, hidden, 3, stride, groups=hidden)
            y = b.conv(f"{tag}_project", y, c, 1)
            if stride == 1 and in_c == c:
                y = b.add(f"{tag}_add", x, y)
            x = y
            idx += 1
    x = b.conv("conv_last", x, 1280, 1)
    x = b.pool("pool_global", x, "avg", None, None)
    b.group = "HEAD"
    b.fc("fc1000", x, 1000)
    return b.doc()


def inception_v4():
    b = Builder("inception_v4", [299, 299, 3])
    x = b.conv("stem_conv1", "input", 32, 3, 2, pad="valid")
    x = b.conv("stem_conv2", x, 32, 3, 1, pad="valid")
    x = b.conv("stem_conv3", x, 64, 3, 1)
    p = b.pool("stem_mix1_pool", x, "max", 3, 2, pad="valid")
    c = b.conv("stem_mix1_conv", x, 96, 3, 2, pad="valid")
    x = b.concat("stem_mix1", [p, c])
    a = b.conv("stem_mix2_a1", x, 64, 1)
    a = b.conv("stem_mix2_a2", a, 96, 3, pad="valid")
    d = b.conv("stem_mix2_b1", x, 64, 1)
    d = b.conv("stem_mix2_b2", d, 64, (1, 7))
    d = b.conv("stem_mix2_b3", d, 64, (7, 1))
    d = b.conv("stem_mix2_b4", d, 96, 3, pad="valid")
    x = b.concat("stem_mix2", [a, d])
    c = b.conv("stem_mix3_conv", x, 192, 3, 2, pad="valid")
    p = b.pool("stem_mix3_pool", x, "max", 3, 2, pad="valid")
    x = b.concat("stem_mix3", [c, p])

    for i in range(4):
        t = f"inc_a{i}"
        b0 = b.conv(f"{t}_b0", x, 96, 1)
        b1 = b.conv(f"{t}_b1_1", x, 64, 1)
        b1 = b.conv(f"{t}_b1_2", b1, 96, 3)
        b2 = b.conv(f"{t}_b2_1", x, 64, 1)
        b2 = b.conv(f"{t}_b2_2", b2, 96, 3)
        b2 = b.conv(f"{t}_b2_3", b2, 96, 3)
        b3 = b.pool(f"{t}_b3_pool", x, "avg", 3, 1)
        b3 = b.conv(f"{t}_b3_conv", b3, 96, 1)
        x = b.concat(t, [b0, b1, b2, b3])

    b0 = b.conv("red_a_b0", x, 384, 3, 2, pad="valid")
    b1 = b.conv("red_a_b1_1", x, 192, 1)
    b1 = b.conv("red_a_b1_2", b1, 224, 3)
    b1 = b.conv("red_a_b1_3", b1, 256, 3, 2, pad="valid")
    b2 = b.pool("red_a_b2_pool", x, "max", 3, 2, pad="valid")
    x = b.concat("red_a", [b0, b1, b2])

    for i in range(7):
        t = f"inc_b{i}"
        b0 = b.conv(f"{t}_b0", x, 384, 1)
        b1 = b.conv(f"{t}_b1_1", x, 192, 1)
        b1 = b.conv(f"{t}_b1_2", b1, 224, (1, 7))
        b1 = b.conv(f"{t}_b1_3", b1, 256, (7, 1))
        b2 = b.conv(f"{t}_b2_1", x, 192, 1)
        b2 = b.conv(f"{t}_b2_2", b2, 192, (7, 1))
        b2 = b.conv(f"{t}_b2_3", b2, 224, (1, 7))
        b2 = b.conv(f"{t}_b2_4", b2, 224, (7, 1))
        b2 = b.conv(f"{t}_b2_5", b2, 256, (1, 7))
        b3 = b.pool(f"{t}_b3_pool", x, "avg", 3, 1)
        b3 = b.conv(f"{t}_b3_conv", b3, 128, 1)
        x = b.concat(t, [b0, b1, b2, b3])

    b0 = b.conv("red_b_b0_1", x, 192, 1)
    b0 = b.conv("red_b_b0_2", b0, 192, 3, 2, pad="valid")
    b1 = b.conv("red_b_b1_1", x, 256, 1)
    b1 = b.conv("red_b_b1_2", b1, 256, (1, 7))
    b1 = b.conv("red_b_b1_3", b1, 320, (7, 1))
    b1 = b.conv("red_b_b1_4", b1, 320, 3, 2, pad="valid")
    b2 = b.pool("red_b_b2_pool", x, "max", 3, 2, pad="valid")
    x = b.concat("red_b", [b0, b1, b2])

    for i in range(3):
        t = f"inc_c{i}"
        b0 = b.conv(f"{t}_b0", x, 256, 1)
        b1 = b.conv(f"{t}_b1_1", x, 384, 1)
        b1a = b.conv(f"{t}_b1_2a", b1, 256, (1, 3))
        b1b = b.conv(f"{t}_b1_2b", b1, 256, (3, 1))
        b2 = b.conv(f"{t}_b2_1", x, 384, 1)
        b2 = b.conv(f"{t}_b2_2", b2, 448, (3, 1))
        b2 = b.conv(f"{t}_b2_3", b2, 512, (1, 3))
        b2a = b.conv(f"{t}_b2_4a", b2, 256, (1, 3))
        b2b = b.conv(f"{t}_b2_4b", b2, 256, (3, 1))
        b3 = b.pool(f"{t}_b3_pool", x, "avg", 3, 1)
        b3 = b.conv(f"{t}_b3_conv", b3, 256, 1)
        x = b.concat(t, [b0, b1a, b1b, b2a, b2b, b3])

    x = b.pool("pool_global", x, "avg", None, None)
    b.group = "HEAD"
    b.fc("fc1000", x, 1000)
    return b.doc()


def ursonet_proxy():
    # ResNet-50 trunk on a half-resolution frame, a strided bottleneck
    # conv, and two fully-connected branches (location, orientation bins).
    b = Builder("ursonet_proxy", [1280, 960, 3])
    b.group = "PRE"
    x = b.resample("pre_resample", "input", [640, 480, 3])
    b.group = "BACKBONE"
    x = resnet50_trunk(b, x)
    x = b.conv("bottleneck", x, 128, 3, 2)
    b.group = "HEAD"
    loc = b.fc("loc_fc1", x, 1024)
    b.fc("loc_fc2", loc, 3)
    ori = b.fc("ori_fc1", x, 1024)
    b.fc("ori_fc2", ori, 1000)
    return b.doc()


def main():
    out_dir = sys.argv[1] if len(sys.argv) > 1 else os.path.join(
        os.path.dirname(os.path.abspath(__file__)), "..", "data", "graphs")
    os.makedirs(out_dir, exist_ok=True)
    for doc in (resnet50(), mobilenet_v2(), inception_v4(), ursonet_proxy()):
        path = os.path.join(out_dir, doc["name"] + ".json")
        with open(path, "w") as f:
            json.dump(doc, f, indent=1)
            f.write("\n")


if __name__ == "__main__":
    main()
