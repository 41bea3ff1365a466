#!/usr/bin/env python3
"""Measure knowledge-map scan throughput (not asserted in CI).

Builds a matcher of --terms random dictionary entries and scans --mb of
synthetic ad-like text, reporting MB/s. The single-pass automaton makes
throughput independent of dictionary size; absolute speed is bounded by
the Python token loop, so treat the number as a floor for what a native
port of the same automaton would do.

Usage: python scripts/bench_scan.py [--terms 20000] [--mb 20]
"""

from __future__ import annotations

import argparse
import random
import time

from jobsift import knowledge_map as km

WORDS = (
    "customer service team work experience required skills ability microsoft "
    "office excel forklift register cook clean maintain prepare schedule "
    "union benefits insurance retirement health dental salary hourly weekly "
    "monthly annually apply today join our growing company location remote"
).split()


def build_entries(n_terms: int, rng: random.Random) -> list[km.MapEntry]:
    entries = []
    for i in range(n_terms):
        if i % 2000 == 0:
            # a sprinkling of multi-word phrases that actually occur
            term = " ".join(rng.choice(WORDS) for _ in range(3))
        else:
            length = rng.choice((1, 2, 2, 3))
            term = " ".join(
                f"{rng.choice(WORDS)}{rng.randrange(1000)}" for _ in range(length)
            )
        entries.append(km.MapEntry.from_terms([term], uci=str(43000000 + i)))
    return entries


def build_text(megabytes: float, rng: random.Random) -> str:
    chunks = []
    size = 0
    target = int(megabytes * 1_000_000)
    while size < target:
        sentence = " ".join(rng.choice(WORDS) for _ in range(rng.randrange(6, 18))) + ". "
        chunks.append(sentence)
        size += len(sentence)
    return "".join(chunks)


def main() -> None:
    parser = argparse.ArgumentParser()
    parser.add_argument("--terms", type=int, default=20_000)
    parser.add_argument("--mb", type=float, default=20.0)
    args = parser.parse_args()
    rng = random.Random(1)

    started = time.perf_counter()
    matcher = km.compile(build_entries(args.terms, rng))
    compile_s = time.perf_counter() - started
    print(f"compiled {args.terms} terms in {compile_s:.2f}s")

    text = build_text(args.mb, rng)
    started = time.perf_counter()
    hits = km.scan(matcher, text)
    elapsed = time.perf_counter() - started
    mb = len(text) / 1_000_000
    print(f"scanned {mb:.1f} MB in {elapsed:.2f}s "
          f"({mb / elapsed:.1f} MB/s, {len(hits)} hits)")


if __name__ == "__main__":
    main()
