#!/usr/bin/env python3
"""Convert a Reuters-21578 distribution into the crude-oil retrieval corpus.

Reads the 22 reut2-*.sgm files, keeps the articles that carry at least
one TOPICS category (the topic-annotated subset), and labels an article
relevant iff its topics include "crude". Writes JSONL rows
{"id", "text", "label"} ready for `needle --config`.

Usage:
    python3 scripts/prepare_reuters.py /path/to/reuters21578/ data/reuters_crude.jsonl

The distribution itself (reuters21578.tar.gz) is not bundled; it is
available from the UCI / David D. Lewis archives.
"""

import json
import re
import sys
from pathlib import Path

DOC_RE = re.compile(r"<REUTERS[^>]*NEWID=\"(\d+)\"[^>]*>(.*?)</REUTERS>",
                    re.DOTALL)
TOPICS_RE = re.compile(r"<TOPICS>(.*?)</TOPICS>", re.DOTALL)
D_RE = re.compile(r"<D>(.*?)</D>")
TITLE_RE = re.compile(r"<TITLE>(.*?)</TITLE>", re.DOTALL)
BODY_RE = re.compile(r"<BODY>(.*?)</BODY>", re.DOTALL)

ENTITIES = {"&amp;": "&", "&lt;": "<", "&gt;": ">", "&quot;": '"',
            "&apos;": "'", "&#3;": "", "&#5;": "", "&#22;": "", "&#27;": "",
            "&#30;": "", "&#31;": "", "&#127;": ""}


def unescape(text: str) -> str:
    for entity, char in ENTITIES.items():
        text = text.replace(entity, char)
    return re.sub(r"\s+", " ", text).strip()


def parse_file(path: Path):
    raw = path.read_text(encoding="latin-1")
    for match in DOC_RE.finditer(raw):
        newid, chunk = match.group(1), match.group(2)
        topics_block = TOPICS_RE.search(chunk)
        topics = D_RE.findall(topics_block.group(1)) if topics_block else []
        if not topics:
            continue  # only the topic-annotated subset is used
        title = TITLE_RE.search(chunk)
        body = BODY_RE.search(chunk)
        text = " ".join(part for part in
                        [unescape(title.group(1)) if title else "",
                         unescape(body.group(1)) if body else ""] if part)
        yield newid, topics, text


def main(argv):
    if len(argv) != 3:
        print(__doc__)
        return 2
    src, dest = Path(argv[1]), Path(argv[2])
    files = sorted(src.glob("reut2-*.sgm"))
    if not files:
        print(f"no reut2-*.sgm files under {src}", file=sys.stderr)
        return 1
    dest.parent.mkdir(parents=True, exist_ok=True)
    n_docs = n_crude = n_empty = 0
    with open(dest, "w", encoding="utf-8") as out:
        for path in files:
            for newid, topics, text in parse_file(path):
                n_docs += 1
                label = int("crude" in topics)
                n_crude += label
                if not text.strip():
                    n_empty += 1
                out.write(json.dumps({"id": newid, "text": text,
                                      "label": label},
                                     ensure_ascii=False) + "\n")
    share = n_crude / n_docs if n_docs else 0.0
    print(f"wrote {n_docs} topic-annotated articles to {dest}")
    print(f"  crude-oil relevant: {n_crude} ({share:.4f}); "
          f"{n_empty} with empty text (loader will report them)")
    print("  expected from the source distribution: 10377 docs, 566 relevant")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
