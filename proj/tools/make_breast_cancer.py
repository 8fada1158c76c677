#!/usr/bin/env python3
"""Rebuild breast-cancer_scale from the MASS `biopsy` table.

Rows with missing values are dropped (683 remain). Features are ID then
V1..V9, each min-max scaled to [-1, 1] the way svm-scale does, with zero
entries omitted. Labels: 2 = benign, 4 = malignant.

usage: make_breast_cancer.py biopsy.csv > breast-cancer_scale
"""
import csv
import sys


def main(path):
    rows = []
    with open(path, newline="") as f:
        for rec in csv.DictReader(f):
            vals = [rec["ID"]] + [rec[f"V{i}"] for i in range(1, 10)]
            if any(v in ("", "NA") for v in vals):
                continue
            label = "2" if rec["class"] == "benign" else "4"
            rows.append((label, [float(v) for v in vals]))
    lo = [min(r[1][j] for r in rows) for j in range(10)]
    hi = [max(r[1][j] for r in rows) for j in range(10)]
    out = sys.stdout
    for label, x in rows:
        parts = [label]
        for j, v in enumerate(x):
            if hi[j] == lo[j]:
                continue
            s = -1.0 + 2.0 * (v - lo[j]) / (hi[j] - lo[j])
            if s != 0.0:
                parts.append(f"{j + 1}:{s:g}")
        out.write(" ".join(parts) + " \n")


if __name__ == "__main__":
    if len(sys.argv) != 2:
        sys.exit(__doc__)
    main(sys.argv[1])
