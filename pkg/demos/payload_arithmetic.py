"""Payload sizes for every sensing mode, plus a VQ encode round trip.

No arguments. The byte counts come straight from the mode parameters:
raw is width x height x 3, jpeg is a measured table, a feature vector is
dim x bits / 8, and a token payload is tiles x ceil(1024 tokens x 13 bits
/ 8) plus a 56-byte header per tile.
"""

import numpy as np

from r2xsim.sensing import (
    Codebook,
    PayloadParams,
    SenseConfig,
    index_bits,
    payload_bytes,
    vq_decode,
    vq_encode,
)


def main():
    p = PayloadParams()
    rows = [
        ("raw 1920x1080", SenseConfig(mode="raw")),
        ("jpeg q95", SenseConfig(mode="jpeg", jpeg_quality=95)),
        ("jpeg q80", SenseConfig(mode="jpeg", jpeg_quality=80)),
        ("jpeg q60", SenseConfig(mode="jpeg", jpeg_quality=60)),
        ("feature 512x8b", SenseConfig(mode="semantic_feature", feature_dim=512, feature_bits=8)),
        ("vq 1x1", SenseConfig(mode="vq", vit_grid=(1, 1))),
        ("vq 1x2", SenseConfig(mode="vq", vit_grid=(1, 2))),
        ("vq 1x3", SenseConfig(mode="vq", vit_grid=(1, 3))),
    ]
    print(f"{'mode':<16} {'bytes':>9} {'vs raw':>10}")
    raw = payload_bytes(SenseConfig(mode="raw"), p)
    for name, cfg in rows:
        b = payload_bytes(cfg, p)
        print(f"{name:<16} {b:>9} {raw / b:>9.0f}x")
    bare = payload_bytes(SenseConfig(mode="vq", vit_grid=(1, 1)), p, include_overhead=False)
    print()
    print(f"one tile is {p.tokens_per_tile} tokens x {index_bits(p.codebook_size)} bits"
          f" = {bare} B of indices + {p.tile_overhead_bytes} B header")

    print()
    print("tiny encode/decode round trip (8 codewords, 3 dims):")
    rng = np.random.default_rng(0)
    cb = Codebook(rng.normal(size=(8, 3)).round(2))
    vectors = rng.normal(size=(4, 3)).round(2)
    for v in vectors:
        idx = vq_encode(v, cb)
        rec = vq_decode(idx, cb)
        err = float(np.linalg.norm(np.asarray(rec) - v))
        print(f"  {np.array2string(v, precision=2):<24} -> index {idx} "
              f"-> {np.array2string(np.asarray(rec), precision=2):<24} |err| {err:.3f}")


if __name__ == "__main__":
    main()
