#!/usr/bin/env python3
"""Generates a small synthetic dependency-parsed corpus for trying the
pipeline end to end without hunting for real parsed data.

Writes demo.conllu (about 2500 sentences over a maritime micro-world: ships
sink and capsize, captains steer and board them, icebergs drift) and
demo_gazetteer.tsv mapping the ship names to /product/ship.

    python3 tools/make_demo_corpus.py [outdir]
    selpref extract --corpus demo.conllu --gazetteer demo_gazetteer.tsv --out demo_pairs.tsv
    selpref train --pairs demo_pairs.tsv --out demo.spm --dim 50 --epochs 12 \
        --negatives 8 --min-count-term 1 --min-count-context 1 --subsample 0 --seed 3
    selpref plausibility --model demo.spm ship sank@nsubj      # vs. iceberg
    selpref query --model demo.spm Titanic
"""
import os
import random
import sys

SHIPS = ["Titanic", "Lusitania", "Bismarck", "Estonia", "Oriskany", "Prestige"]
VESSELS = ["ship", "freighter", "tanker", "ferry", "warship", "vessel"]
FLIERS = ["airplane", "jet", "glider"]
PEOPLE = ["captain", "pilot", "sailor", "navigator"]
BERGS = ["iceberg", "floe", "berg"]


def tok(i, form, lemma, pos, head, rel):
    return "\t".join([str(i), form, lemma, pos, "_", "_", str(head), rel,
                      f"{head}:{rel}", "_"])


def main():
    outdir = sys.argv[1] if len(sys.argv) > 1 else "."
    os.makedirs(outdir, exist_ok=True)
    random.seed(11)
    out = []

    def sent(rows):
        out.extend(rows + [""])

    for _ in range(2500):
        r = random.random()
        if r < 0.25:
            s = random.choice(SHIPS + VESSELS)
            verb = random.choice([("sank", "sink"), ("capsized", "capsize")])
            pos = "PROPN" if s in SHIPS else "NOUN"
            sent([tok(1, "The", "the", "DET", 2, "det"),
                  tok(2, s, s, pos, 3, "nsubj"),
                  tok(3, verb[0], verb[1], "VERB", 0, "root"),
                  tok(4, ".", ".", "PUNCT", 3, "punct")])
        elif r < 0.45:
            p = random.choice(PEOPLE)
            d = random.choice(VESSELS + FLIERS)
            sent([tok(1, "The", "the", "DET", 2, "det"),
                  tok(2, p, p, "NOUN", 3, "nsubj"),
                  tok(3, "steers", "steer", "VERB", 0, "root"),
                  tok(4, "the", "the", "DET", 5, "det"),
                  tok(5, d, d, "NOUN", 3, "dobj"),
                  tok(6, ".", ".", "PUNCT", 3, "punct")])
        elif r < 0.65:
            b = random.choice(BERGS)
            sent([tok(1, "The", "the", "DET", 2, "det"),
                  tok(2, b, b, "NOUN", 3, "nsubj"),
                  tok(3, "drifted", "drift", "VERB", 0, "root"),
                  tok(4, ".", ".", "PUNCT", 3, "punct")])
        elif r < 0.85:
            p = random.choice(PEOPLE)
            d = random.choice(VESSELS)
            sent([tok(1, "The", "the", "DET", 2, "det"),
                  tok(2, p, p, "NOUN", 3, "nsubj"),
                  tok(3, "boards", "board", "VERB", 0, "root"),
                  tok(4, "the", "the", "DET", 5, "det"),
                  tok(5, d, d, "NOUN", 3, "dobj"),
                  tok(6, ".", ".", "PUNCT", 3, "punct")])
        else:
            m = random.choice(["cargo", "cruise", "container"])
            sent([tok(1, "The", "the", "DET", 3, "det"),
                  tok(2, m, m, "NOUN", 3, "compound"),
                  tok(3, "ship", "ship", "NOUN", 4, "nsubj"),
                  tok(4, "docked", "dock", "VERB", 0, "root"),
                  tok(5, ".", ".", "PUNCT", 4, "punct")])

    with open(os.path.join(outdir, "demo.conllu"), "w") as f:
        f.write("\n".join(out))
    with open(os.path.join(outdir, "demo_gazetteer.tsv"), "w") as f:
        f.write("\n".join(s + "\t/product/ship" for s in SHIPS) + "\n")
    print(f"wrote demo.conllu and demo_gazetteer.tsv to {outdir}")


if __name__ == "__main__":
    main()
