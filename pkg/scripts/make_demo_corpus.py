#!/usr/bin/env python3
"""Write a deterministic demo corpus as JSONL.

The same (seed, domain, n) always produces the same bytes, so generated
corpora are safe to use as fixtures in differential tests.
"""

import argparse
import sys

from layoutir.corpus import save_layout_jsonl
from layoutir.sampledocs import make_demo_docs
from layoutir.vocab import VOCABS


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=100, help="number of documents")
    ap.add_argument("--domain", choices=sorted(VOCABS), default="webui")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", required=True, help="output JSONL path")
    args = ap.parse_args()
    n = save_layout_jsonl(make_demo_docs(args.n, args.domain, args.seed), args.out)
    print(f"wrote {n} {args.domain} documents to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
