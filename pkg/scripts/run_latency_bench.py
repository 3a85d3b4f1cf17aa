#!/usr/bin/env python3
"""Single-inference latency comparison between two encoder architectures.

Reproduces the small-vs-base CPU latency experiment with randomly
initialized weights: per seed the model is re-initialized, warmed up and
timed over repeated single-sequence forwards.
"""

import argparse

from hapstack.encoder import EncoderConfig
from hapstack.pipeline import bench_latency


def parse_arch(spec: str) -> tuple[int, int, int, int]:
    layers, heads, hidden, inter = (int(p) for p in spec.split(","))
    return layers, heads, hidden, inter


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--arch-a", default="4,12,576,768",
                        help="layers,heads,hidden,intermediate (default: small)")
    parser.add_argument("--arch-b", default="12,12,768,3072",
                        help="layers,heads,hidden,intermediate (default: base)")
    parser.add_argument("--vocab-size", type=int, default=30000)
    parser.add_argument("--runs", type=int, default=100)
    parser.add_argument("--seeds", type=int, default=5)
    parser.add_argument("--seq-len", type=int, default=32)
    args = parser.parse_args()

    def build(spec):
        layers, heads, hidden, inter = parse_arch(spec)
        return EncoderConfig(num_layers=layers, num_heads=heads, hidden_size=hidden,
                             intermediate_size=inter, vocab_size=args.vocab_size,
                             max_positions=512)

    report_a, report_b, speedup = bench_latency(build(args.arch_a), build(args.arch_b),
                                                n_runs=args.runs, n_seeds=args.seeds,
                                                seq_len=args.seq_len)
    for report in (report_a, report_b):
        print(f"{report.model_label}: {report.mean_latency_ms:.3f} ms "
              f"+- {report.stddev_ms:.3f} (over {report.seeds} seeds)")
    print(f"speedup: {speedup:.2f}x")


if __name__ == "__main__":
    main()
