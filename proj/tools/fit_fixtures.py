#!/usr/bin/env python3
"""Regenerate the dense-model fixtures shipped under runes/.

  sine.rmodel     1 -> 16 (tanh) -> 16 (tanh) -> 1 (linear), fit to sin(x) on [-pi, pi]
  example.rmodel  150 -> 8 (relu) -> 1 (tanh), fixed-seed weights for the audio pipeline

Output is deterministic for a given numpy version. Usage:
  python3 tools/fit_fixtures.py [runes-dir]
"""
import struct
import sys
import zlib
from pathlib import Path

import numpy as np

LINEAR, RELU, TANH = 0, 1, 2


def write_rmodel(path, layers):
    body = bytearray(b"RMDL")
    body += struct.pack("<H", len(layers))
    for w, b, act in layers:
        out_dim, in_dim = w.shape
        body += struct.pack("<IIB", in_dim, out_dim, act)
        body += np.asarray(w, dtype="<f4").tobytes(order="C")
        body += np.asarray(b, dtype="<f4").tobytes()
    body += struct.pack("<I", zlib.crc32(bytes(body)) & 0xFFFFFFFF)
    Path(path).write_bytes(bytes(body))


def fit_sine(seed=7, steps=6000, lr=0.01):
    rng = np.random.default_rng(seed)
    x = np.linspace(-np.pi, np.pi, 512).reshape(1, -1)
    y = np.sin(x)
    params = [
        rng.normal(0, 1.0, (16, 1)), np.zeros((16, 1)),
        rng.normal(0, 1 / 4, (16, 16)), np.zeros((16, 1)),
        rng.normal(0, 1 / 4, (1, 16)), np.zeros((1, 1)),
    ]
    m = [np.zeros_like(p) for p in params]
    v = [np.zeros_like(p) for p in params]
    b1, b2, eps = 0.9, 0.999, 1e-8
    for t in range(1, steps + 1):
        w1, c1, w2, c2, w3, c3 = params
        h1 = np.tanh(w1 @ x + c1)
        h2 = np.tanh(w2 @ h1 + c2)
        out = w3 @ h2 + c3
        d_out = 2 * (out - y) / x.shape[1]
        g_w3 = d_out @ h2.T
        g_c3 = d_out.sum(axis=1, keepdims=True)
        d_h2 = (w3.T @ d_out) * (1 - h2 ** 2)
        g_w2 = d_h2 @ h1.T
        g_c2 = d_h2.sum(axis=1, keepdims=True)
        d_h1 = (w2.T @ d_h2) * (1 - h1 ** 2)
        g_w1 = d_h1 @ x.T
        g_c1 = d_h1.sum(axis=1, keepdims=True)
        grads = [g_w1, g_c1, g_w2, g_c2, g_w3, g_c3]
        for i, g in enumerate(grads):
            m[i] = b1 * m[i] + (1 - b1) * g
            v[i] = b2 * v[i] + (1 - b2) * g * g
            mh = m[i] / (1 - b1 ** t)
            vh = v[i] / (1 - b2 ** t)
            params[i] -= lr * mh / (np.sqrt(vh) + eps)
    w1, c1, w2, c2, w3, c3 = params
    mse = float(np.mean((w3 @ np.tanh(w2 @ np.tanh(w1 @ x + c1) + c2) + c3 - y) ** 2))
    print(f"sine fit mse={mse:.2e}")
    return [(w1, c1.ravel(), TANH), (w2, c2.ravel(), TANH), (w3, c3.ravel(), LINEAR)]


def example_classifier(seed=1500):
    rng = np.random.default_rng(seed)
    w1 = rng.normal(0, 0.05, (8, 150))
    b1 = np.zeros(8)
    w2 = rng.normal(0, 0.3, (1, 8))
    b2 = np.zeros(1)
    return [(w1, b1, RELU), (w2, b2, TANH)]


def main():
    root = Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "runes"
    write_rmodel(root / "sine" / "sine.rmodel", fit_sine())
    write_rmodel(root / "audio" / "example.rmodel", example_classifier())


if __name__ == "__main__":
    main()
