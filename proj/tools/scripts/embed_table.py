#!/usr/bin/env python3
"""Build a LookupEmbeddingBackend table (JSONL {"text", "embedding"}) from text files.

    embed_table.py --model all-MiniLM-L6-v2 --out table.jsonl texts1.txt texts2.txt
"""

import argparse
import json

from sentence_transformers import SentenceTransformer


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("files", nargs="+", help="one sentence per line")
    parser.add_argument("--model", default="all-MiniLM-L6-v2")
    parser.add_argument("--out", required=True)
    args = parser.parse_args()

    texts = []
    for path in args.files:
        with open(path, encoding="utf-8") as f:
            texts.extend(line.rstrip("\n") for line in f)
    unique = list(dict.fromkeys(texts))
    vectors = SentenceTransformer(args.model).encode(unique)
    with open(args.out, "w", encoding="utf-8") as out:
        for text, vec in zip(unique, vectors):
            out.write(json.dumps({"text": text, "embedding": [float(x) for x in vec]}) + "\n")


if __name__ == "__main__":
    main()
