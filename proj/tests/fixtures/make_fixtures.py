"""Writes the checked-in fixture directories with the Python standard library.

Run from this directory: python3 make_fixtures.py
"""

import json
import math
import os
import random
import struct


def put(name, manifest, values):
    os.makedirs(name, exist_ok=True)
    with open(os.path.join(name, "manifest.json"), "w", encoding="utf-8") as f:
        f.write(json.dumps(manifest, indent=2) + "\n")
    with open(os.path.join(name, manifest["data_file"]), "wb") as f:
        f.write(struct.pack("<%df" % len(values), *values))


def manifest(kind, shape, labels=None, steps=None):
    m = {"version": 1, "kind": kind, "dtype": "f32le", "shape": shape}
    if labels is not None:
        m["labels"] = labels
    if steps is not None:
        m["steps"] = steps
    m["data_file"] = "data.f32"
    return m


put("golden_matrix", manifest("embedding_set", [2, 3]), [1, 2, 3, 4, 5, 6])

put(
    "golden_vocab",
    manifest("vocab_matrix", [4, 2], labels=["<|startoftext|>", "man", "dog", "sks"]),
    [0.5, -0.25, 3.0, 4.0, -1.5, 2.0, 0.125, 1024.0],
)

put(
    "golden_series",
    manifest("checkpoint_series", [3, 2, 4], labels=["v_star", "concept"], steps=[0, 100, 200]),
    [float(i) - 11.5 for i in range(24)],
)

put("golden_prompt", manifest("prompt_embedding", [3, 2]), [1, 0, 0, 1, 0.5, 0.5])

# Index-paired sets for CLI runs. Values are rounded through float32 by pack.
rng = random.Random(20240601)
n, d = 12, 6
a = [rng.gauss(0.0, 1.0) for _ in range(n * d)]
b = [x + 0.3 * rng.gauss(0.0, 1.0) + (0.5 if i % d == 0 else 0.0) for i, x in enumerate(a)]
c = [1.5 * x for x in a]
put("set_a", manifest("embedding_set", [n, d]), a)
put("set_b", manifest("embedding_set", [n, d]), b)
put("set_c", manifest("embedding_set", [n, d]), c)

with open("templates.txt", "w", encoding="utf-8") as f:
    f.write("# paired context templates\n")
    f.write("A photo of a {} wearing glasses\n")
    f.write("\n")
    f.write("a {} sitting on a park bench\n")
    f.write("An oil painting of a {} in the rain\n")

assert not any(math.isnan(x) for x in a + b + c)
