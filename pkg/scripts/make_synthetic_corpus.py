#!/usr/bin/env python3
"""Generate a synthetic corpus file for pipeline experiments.

Each document is N short random sentences; output is the pipeline's
tab-separated record format (one ``<id>\\t<text>`` line per document,
newlines in the text escaped as ``\\n``).
"""

import argparse

import numpy as np

from hapstack.pipeline import escape_text


def random_sentence(rng: np.random.Generator, n_words: int) -> str:
    words = []
    for _ in range(n_words):
        length = int(rng.integers(1, 8))
        words.append("".join(chr(c) for c in rng.integers(ord("a"), ord("z") + 1,
                                                          size=length)))
    return " ".join(words) + "."


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("output", help="corpus file to write")
    parser.add_argument("--docs", type=int, default=50)
    parser.add_argument("--sentences-per-doc", type=int, default=100)
    parser.add_argument("--words-per-sentence", type=int, default=5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    with open(args.output, "w", encoding="utf-8", newline="\n") as f:
        for i in range(args.docs):
            text = " ".join(random_sentence(rng, args.words_per_sentence)
                            for _ in range(args.sentences_per_doc))
            f.write(f"doc{i}\t{escape_text(text)}\n")
    print(f"wrote {args.docs} documents to {args.output}")


if __name__ == "__main__":
    main()
