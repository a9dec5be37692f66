#!/usr/bin/env python3
"""Generates the toy transplant fixture and its expected embeddings.

Everything here is computed independently of the C++ library: a naive BPE
encoder, exact kNN by full sort, and all softmaxes and weighted sums in
50-digit mpmath arithmetic. Re-run after changing the fixture:

    python3 tests/fixtures/golden/make_golden.py
"""
import json
import struct
from pathlib import Path

import mpmath
import numpy as np

mpmath.mp.dps = 50
HERE = Path(__file__).resolve().parent

OLD_VOCAB = ["a", "b", "c", "d", "ab", "cd"]
OLD_MERGES = [("a", "b"), ("c", "d")]
# Deliberately not in the same order as the old vocabulary.
NEW_VOCAB = ["ab", "b", "a", "abc", "c", "bd", "d", "abcd"]
NEW_MERGES = [("a", "b"), ("ab", "c"), ("abc", "d"), ("b", "d")]

# "d" has no auxiliary vector: it is dropped from local decompositions and
# never appears as a neighbor.
AUX = {
    "a": [1.0, 0.2, 0.1],
    "b": [0.1, 1.0, 0.3],
    "c": [0.2, 0.1, 1.0],
    "ab": [0.8, 0.7, 0.15],
    "cd": [0.3, 0.2, 0.9],
    "abc": [0.6, 0.5, 0.6],
    "abcd": [1.1, 0.9, 1.4],
    "bd": [0.2, 0.9, 0.5],
}

E_IN = [
    [0.5, -0.25, 1.0, 0.125],
    [-0.75, 0.5, 0.25, 2.0],
    [1.5, 1.0, -0.5, -1.0],
    [0.0, -1.5, 0.75, 0.5],
    [0.3, 0.6, -0.9, 1.2],
    [-0.4, 0.8, 1.6, -0.2],
]
E_OUT = [
    [0.1, 0.2, 0.3, 0.4],
    [-0.3, 0.7, -0.1, 0.9],
    [0.05, -0.6, 1.1, 0.2],
    [1.3, 0.4, -0.7, -0.5],
    [-0.9, 0.15, 0.35, 0.6],
    [0.45, -0.2, 0.8, -1.1],
]

TAU = mpmath.mpf("0.6")
K = 3


def f32(x):
    return float(np.float32(x))


def naive_bpe(text, merges):
    """Repeatedly merge the lowest-ranked adjacent pair (leftmost on ties)."""
    rank = {m: i for i, m in enumerate(merges)}
    syms = list(text)
    while True:
        best = None
        for i in range(len(syms) - 1):
            r = rank.get((syms[i], syms[i + 1]))
            if r is not None and (best is None or r < best[0]):
                best = (r, i)
        if best is None:
            return syms
        i = best[1]
        syms = syms[:i] + [syms[i] + syms[i + 1]] + syms[i + 2 :]


def unit(v):
    v = [mpmath.mpf(f32(x)) for x in v]
    n = mpmath.sqrt(sum(x * x for x in v))
    return [x / n for x in v]


AUX_UNIT = {k: unit(v) for k, v in AUX.items()}


def dot(a, b):
    return sum(x * y for x, y in zip(a, b))


def softmax(xs, tau=mpmath.mpf(1)):
    zs = [x / tau for x in xs]
    m = max(zs)
    es = [mpmath.exp(z - m) for z in zs]
    s = sum(es)
    return [e / s for e in es]


def rows_of(matrix):
    return [[mpmath.mpf(f32(x)) for x in row] for row in matrix]


def weighted(ids, weights, matrix):
    out = [mpmath.mpf(0)] * len(matrix[0])
    for i, w in zip(ids, weights):
        out = [o + w * x for o, x in zip(out, matrix[i])]
    return out


def local(token):
    if token not in AUX_UNIT:
        return None
    target = AUX_UNIT[token]
    parts = [p for p in naive_bpe(token, OLD_MERGES) if p in AUX_UNIT]
    if not parts:
        return None
    sims = [dot(target, AUX_UNIT[p]) for p in parts]
    sem = softmax(sims)
    lam = [mpmath.mpf(len(p)) / max(1, len(token)) for p in parts]
    c = [(s + l) / 2 for s, l in zip(sem, lam)]
    return [OLD_VOCAB.index(p) for p in parts], softmax(c, TAU)


def global_(token, threshold=None):
    if token not in AUX_UNIT:
        return None
    target = AUX_UNIT[token]
    scored = [(dot(target, AUX_UNIT[t]), i) for i, t in enumerate(OLD_VOCAB) if t in AUX_UNIT]
    scored.sort(key=lambda p: (-p[0], p[1]))
    kept = [(s, i) for s, i in scored[:K] if threshold is None or s >= threshold]
    if not kept:
        return None
    return [i for _, i in kept], softmax([s for s, _ in kept], TAU)


def synth(token, method, w_glob, matrix):
    if token in OLD_VOCAB:
        return matrix[OLD_VOCAB.index(token)]
    if method == "mean":
        return [sum(col) / len(matrix) for col in zip(*matrix)]
    if method == "retok":
        parts = naive_bpe(token, OLD_MERGES)
        ids = [OLD_VOCAB.index(p) for p in parts]
        return weighted(ids, [mpmath.mpf(1) / len(ids)] * len(ids), matrix)
    lw, gw = local(token), global_(token)
    lv = weighted(*lw, matrix) if lw else None
    gv = weighted(*gw, matrix) if gw else None
    if lv and gv:
        return [(1 - w_glob) * l + w_glob * g for l, g in zip(lv, gv)]
    if lv or gv:
        return lv or gv
    raise RuntimeError("fixture must not need the random fallback: " + token)


def tokenizer_json(vocab, merges):
    return {
        "version": 1,
        "byte_level": True,
        "specials": [],
        "vocab": {t: i for i, t in enumerate(vocab)},
        "merges": [list(m) for m in merges],
    }


def write_safetensors(path, tensors):
    header, payload, offset = {}, b"", 0
    for name in sorted(tensors):
        arr = np.asarray(tensors[name], dtype="<f4")
        data = arr.tobytes()
        header[name] = {"dtype": "F32", "shape": list(arr.shape),
                        "data_offsets": [offset, offset + len(data)]}
        payload += data
        offset += len(data)
    head = json.dumps(header, separators=(",", ":")).encode()
    head += b" " * ((8 - len(head) % 8) % 8)
    path.write_bytes(struct.pack("<Q", len(head)) + head + payload)


def write_auxv1(path, vectors, dim):
    out = b"AUXV1\0" + struct.pack("<IQ", dim, len(vectors))
    for key, vec in vectors.items():
        kb = key.encode()
        out += struct.pack("<I", len(kb)) + kb + struct.pack("<%df" % dim, *vec)
    path.write_bytes(out)


def main():
    (HERE / "old_tokenizer.json").write_text(json.dumps(tokenizer_json(OLD_VOCAB, OLD_MERGES), indent=1))
    (HERE / "new_tokenizer.json").write_text(json.dumps(tokenizer_json(NEW_VOCAB, NEW_MERGES), indent=1))
    write_safetensors(HERE / "embeddings.safetensors", {"embed.input": E_IN, "embed.output": E_OUT})
    write_auxv1(HERE / "aux.auxv1", AUX, 3)

    e_in, e_out = rows_of(E_IN), rows_of(E_OUT)
    methods = {
        "tokenadapt_w0": ("tokenadapt", mpmath.mpf(0)),
        "tokenadapt_w0.3": ("tokenadapt", mpmath.mpf("0.3")),
        "tokenadapt_w1": ("tokenadapt", mpmath.mpf(1)),
        "retok": ("retok", None),
        "mean": ("mean", None),
    }
    expected = {"temperature": 0.6, "k": K, "new_vocab": NEW_VOCAB, "methods": {}}
    for name, (method, w) in methods.items():
        expected["methods"][name] = {
            "method": method,
            "global_weight": float(w) if w is not None else None,
            "input": [[float(x) for x in synth(t, method, w, e_in)] for t in NEW_VOCAB],
            "output": [[float(x) for x in synth(t, method, w, e_out)] for t in NEW_VOCAB],
        }
    # Intermediate weights, for the unit tests of the two heuristics.
    expected["weights"] = {}
    for t in ("abc", "abcd", "bd"):
        lw, gw = local(t), global_(t)
        expected["weights"][t] = {
            "local_ids": lw[0], "local": [float(x) for x in lw[1]],
            "global_ids": gw[0], "global": [float(x) for x in gw[1]],
        }
    (HERE / "expected.json").write_text(json.dumps(expected, indent=1) + "\n")


if __name__ == "__main__":
    main()
