"""Deterministic keyword-corpus generator for desk-scale pipeline runs.

Each class draws content words from its own pool (class 0: Greek
letters, class 1: radio alphabet, class 2: gemstones) mixed with shared
filler words, so a bag-of-words model can separate the classes while
the texts still flow through the full preprocessing pipeline. Document
counts are balanced: n_docs is rounded down to a multiple of three.
"""

from __future__ import annotations

import csv
import random
from pathlib import Path

CLASS_POOLS = (
    ("alpha", "beta", "gamma", "delta", "epsilon", "zeta",
     "theta", "kappa", "sigma", "omega"),
    ("bravo", "charlie", "foxtrot", "hotel", "juliet", "quebec",
     "romeo", "tango", "victor", "yankee"),
    ("amber", "beryl", "coral", "garnet", "jasper", "opal",
     "pearl", "quartz", "topaz", "zircon"),
)

FILLER_WORDS = (
    "morning", "coffee", "window", "river", "garden",
    "travel", "music", "painting", "market", "weather",
)


def generate_keyword_corpus(n_docs: int = 3000, seed: int = 42) -> list[tuple[int, str]]:
    """(class_value, text) pairs; class_value uses the 0/1/2 CSV coding."""
    rng = random.Random(seed)
    per_class = n_docs // 3
    rows: list[tuple[int, str]] = []
    for class_value, pool in enumerate(CLASS_POOLS):
        for _ in range(per_class):
            words = rng.choices(pool, k=rng.randint(3, 8))
            words += rng.choices(FILLER_WORDS, k=rng.randint(2, 5))
            rng.shuffle(words)
            rows.append((class_value, " ".join(words)))
    rng.shuffle(rows)
    return rows


def write_keyword_csv(path: str | Path, n_docs: int = 3000, seed: int = 42) -> int:
    """Write the generated corpus in the default CSV layout; returns row count."""
    rows = generate_keyword_corpus(n_docs=n_docs, seed=seed)
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class", "tweet"])
        writer.writerows(rows)
    return len(rows)
