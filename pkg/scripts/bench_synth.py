#!/usr/bin/env python3
"""Benchmark the synth pipeline: generate, synthesize, compile, count tokens.

Reports wall time, throughput, and peak RSS. Streaming end to end, so memory
stays flat regardless of --n.
"""

import argparse
import resource
import sys
import time

from layoutir.sampledocs import make_demo_doc
from layoutir.seq import compile_constraints, render_constraint_tokens
from layoutir.synth import SynthParams, synthesize_ir
from layoutir.vocab import VOCABS


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100_000)
    ap.add_argument("--domain", choices=sorted(VOCABS) + ["mixed"], default="mixed")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--r", type=float, default=0.1)
    args = ap.parse_args()

    params = SynthParams(discard_rate=args.r, seed=args.seed)
    domains = sorted(VOCABS) if args.domain == "mixed" else [args.domain]
    t0 = time.monotonic()
    tokens = 0
    for i in range(args.n):
        doc = make_demo_doc(i, domains[i % len(domains)], seed=args.seed)
        cs = compile_constraints(synthesize_ir(doc, params).ir)
        tokens += len(render_constraint_tokens(cs))
    dt = time.monotonic() - t0
    rss_mb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024.0
    print(
        f"{args.n} docs in {dt:.2f}s  ({args.n / dt:,.0f} docs/s), "
        f"{tokens:,} constraint chars, peak rss {rss_mb:.0f} MB"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
