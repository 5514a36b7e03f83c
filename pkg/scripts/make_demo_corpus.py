#!/usr/bin/env python3
"""Generate a synthetic imbalanced corpus for demo runs of the CLI.

Positive documents carry a few terms from a signal vocabulary mixed
into filler; negatives occasionally carry a single decoy signal term.

Usage:
    python3 scripts/make_demo_corpus.py data/demo.jsonl [n_docs] [pos_share] [seed]
"""

import json
import sys
from pathlib import Path

import numpy as np


def main(argv):
    if len(argv) < 2:
        print(__doc__)
        return 2
    dest = Path(argv[1])
    n_docs = int(argv[2]) if len(argv) > 2 else 5000
    pos_share = float(argv[3]) if len(argv) > 3 else 0.05
    seed = int(argv[4]) if len(argv) > 4 else 0

    rng = np.random.default_rng(seed)
    filler = [f"filler{i:03d}" for i in range(300)]
    signal = [f"signal{i:03d}" for i in range(60)]
    n_pos = int(round(n_docs * pos_share))
    labels = np.zeros(n_docs, dtype=int)
    labels[rng.choice(n_docs, size=n_pos, replace=False)] = 1

    dest.parent.mkdir(parents=True, exist_ok=True)
    with open(dest, "w", encoding="utf-8") as out:
        for i in range(n_docs):
            words = list(rng.choice(filler, size=10, replace=True))
            if labels[i]:
                words += list(rng.choice(signal, size=3, replace=False))
            elif rng.random() < 0.3:
                words.append(str(rng.choice(signal)))
            rng.shuffle(words)
            out.write(json.dumps({"id": f"d{i:05d}", "text": " ".join(words),
                                  "label": int(labels[i])}) + "\n")
    print(f"wrote {n_docs} docs ({n_pos} relevant, {n_pos / n_docs:.3f}) to {dest}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
