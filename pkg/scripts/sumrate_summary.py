"""Print mean sum rate per method and N as a share of the full-dimension rate.

Reads a CSV written by ``cran-dimred sumrate-vs-n`` that includes the
``full`` method.
"""

import argparse
from collections import defaultdict

from cran_dimred.harness import read_csv


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("csv")
    args = ap.parse_args()
    rows = [r for r in read_csv(args.csv) if r.metric == "sum_rate"]
    table = defaultdict(dict)
    for r in rows:
        table[r.method][int(r.param)] = r
    if "full" not in table:
        raise SystemExit("CSV has no 'full' rows; rerun with --methods full,...")
    full = next(iter(table["full"].values())).mean
    dims = sorted({n for m in table.values() for n in m})
    print("method    " + "".join(f"{'N=' + str(n):>16}" for n in dims))
    for method in sorted(table):
        cells = []
        for n in dims:
            r = table[method].get(n)
            cells.append(f"{r.mean:7.2f} ({100 * r.mean / full:5.1f}%)" if r else " " * 16)
        print(f"{method:<10}" + "".join(f"{c:>16}" for c in cells))


if __name__ == "__main__":
    main()
