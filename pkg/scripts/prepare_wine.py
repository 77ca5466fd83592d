"""Rewrite the UCI red-wine-quality table into the column naming used here.

The UCI file uses lowercase names with spaces ("volatile acidity") and either
';' or ',' as the delimiter. Output is a comma-separated CSV with
Title_Case_Underscore names (``Volatile_Acidity``), ``pH`` kept as is.

    python scripts/prepare_wine.py winequality-red.csv[.gz] data/winequality-red.csv
"""

import csv
import gzip
import sys


def rename(col):
    col = col.strip().strip('"')
    if col == "pH":
        return col
    return "_".join(w.capitalize() for w in col.split())


def main(src, dst):
    opener = gzip.open if src.endswith(".gz") else open
    with opener(src, "rt", newline="") as fh:
        text = fh.read()
    delim = ";" if text.splitlines()[0].count(";") > 0 else ","
    rows = list(csv.reader(text.splitlines(), delimiter=delim))
    header, body = [rename(c) for c in rows[0]], rows[1:]
    with open(dst, "w", newline="") as out:
        w = csv.writer(out, lineterminator="\n")
        w.writerow(header)
        w.writerows(r for r in body if r)
    print(f"wrote {len(body)} rows x {len(header)} columns to {dst}")


if __name__ == "__main__":
    main(*sys.argv[1:3])
