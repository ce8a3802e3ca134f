#!/usr/bin/env python3
"""Writes the toy corpus under data/toy: 8 enzymes with Cα traces, one
aligned family per EC number, substrates, pairings and an all-train split.

The output is committed; rerun only to regenerate it. Deterministic."""

import argparse
import math
import pathlib
import random

AMINO = "ACDEFGHIKLMNPQRSTVWY"
EC_NUMBERS = ["1.1.1.1", "1.1.1.2", "1.2.1.3", "2.7.1.1", "2.7.2.4", "3.1.1.1", "4.2.1.1", "6.3.2.1"]
ROWS_PER_FAMILY = 10
CONSERVED_COPIES = 7  # homologs that keep each planted site
SITE_COUNT = 6  # conserved sites planted per family


def ca_trace(rng, n):
    """Self-avoiding-ish walk with 3.75 Å steps and some persistence."""
    pts = [(0.0, 0.0, 0.0)]
    d = (1.0, 0.0, 0.0)
    while len(pts) < n:
        v = [d[k] + 0.9 * rng.gauss(0, 1) for k in range(3)]
        norm = math.sqrt(sum(x * x for x in v))
        v = [x / norm for x in v]
        p = tuple(pts[-1][k] + 3.75 * v[k] for k in range(3))
        if all(sum((p[k] - q[k]) ** 2 for k in range(3)) > 3.75**2 * 0.9 for q in pts[:-1]):
            pts.append(p)
            d = tuple(v)
    return pts


def fmt(x):
    return repr(round(x, 3))


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default=str(pathlib.Path(__file__).resolve().parent.parent / "data" / "toy"))
    ap.add_argument("--seed", type=int, default=7)
    ap.add_argument("--sites", type=int, default=SITE_COUNT)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    out = pathlib.Path(args.out)
    for sub in ("structures", "alignments", "substrates"):
        (out / sub).mkdir(parents=True, exist_ok=True)

    pairings = []
    split_lines = []
    for e, ec in enumerate(EC_NUMBERS):
        rid = f"enz{e + 1:02d}"
        n = rng.randint(30, 40)
        seq = "".join(rng.choice(AMINO) for _ in range(n))
        with open(out / "structures" / f"{rid}.tsv", "w") as f:
            for letter, p in zip(seq, ca_trace(rng, n)):
                f.write(f"{rid}\t{letter}\t{fmt(p[0])}\t{fmt(p[1])}\t{fmt(p[2])}\n")

        sites = sorted(rng.sample(range(n), args.sites))
        # Alignment columns: the structured sequence plus one insertion column
        # where only homologs have residues.
        insert_at = rng.randrange(1, n)
        rows = [(rid, seq[:insert_at] + "-" + seq[insert_at:])]
        for h in range(ROWS_PER_FAMILY - 1):
            letters = [rng.choice(AMINO) for _ in range(n)]
            if h < CONSERVED_COPIES:
                for s in sites:
                    letters[s] = seq[s]
            for _ in range(2):
                g = rng.randrange(n)
                if g not in sites:
                    letters[g] = "-"
            ins = rng.choice(AMINO) if h % 2 == 0 else "-"
            rows.append((f"{rid}_h{h + 1}", "".join(letters[:insert_at]) + ins + "".join(letters[insert_at:])))
        with open(out / "alignments" / f"{ec}.fasta", "w") as f:
            for name, row in rows:
                f.write(f">{name}\n{row}\n")
        split_lines.append(f"{rid}\t{e}\ttrain\n")
        pairings.append((rid, f"sub{e % 4 + 1}", 1))

    for s in range(4):
        m = rng.randint(6, 12)
        with open(out / "substrates" / f"sub{s + 1}.sub", "w") as f:
            f.write(f"{m}\tsub{s + 1}\n")
            for _ in range(m):
                feats = [rng.randint(1, 4), rng.choice([-1, 0, 0, 1]), rng.randint(0, 1), rng.randint(1, 3),
                         rng.randint(1, 4)]
                xyz = [rng.uniform(-3, 3) for _ in range(3)]
                f.write("\t".join(str(v) for v in feats) + "\t" + "\t".join(fmt(v) for v in xyz) + "\n")

    with open(out / "pairings.tsv", "w") as f:
        for a, b, y in pairings:
            f.write(f"{a}\t{b}\t{y}\n")
    with open(out / "splits.tsv", "w") as f:
        f.writelines(split_lines)


if __name__ == "__main__":
    main()
