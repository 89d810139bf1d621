#!/usr/bin/env python3
"""Encode the UCI breast-cancer (Ljubljana) data as ordinal/categorical integer codes.

Input is the tab-separated file distributed with Orange 2.x (three header rows),
or the original comma-separated breast-cancer.data. Missing cells stay as "?".
"""
import csv
import sys

AGE = {"10-19": 10, "20-29": 20, "30-39": 30, "40-49": 40, "50-59": 50,
       "60-69": 60, "70-79": 70, "80-89": 80, "90-99": 90}
MENOPAUSE = {"premeno": 0, "ge40": 1, "lt40": 2}
TUMOR_SIZE = {f"{lo}-{lo + 4}": i for i, lo in enumerate(range(0, 60, 5))}
INV_NODES = {f"{lo}-{lo + 2}": i for i, lo in enumerate(range(0, 40, 3))}
YES_NO = {"no": 0, "yes": 1}
BREAST = {"left": 0, "right": 1}
QUAD = {"left_up": 0, "left_low": 1, "right_up": 2, "right_low": 3, "central": 4}
CLASS = {"no-recurrence-events": 0, "recurrence-events": 1}

COLUMNS = [("age", AGE), ("menopause", MENOPAUSE), ("tumor-size", TUMOR_SIZE),
           ("inv-nodes", INV_NODES), ("node-caps", YES_NO), ("deg-malig", None),
           ("breast", BREAST), ("breast-quad", QUAD), ("irradiat", YES_NO)]


def code(mapping, cell):
    if cell == "?":
        return "?"
    return str(mapping[cell]) if mapping else cell


def main(src, dst):
    with open(src) as fh:
        text = fh.read().splitlines()
    if "\t" in text[0]:
        rows = [line.split("\t") for line in text[3:] if line.strip()]
    else:
        # breast-cancer.data puts the class first as well
        rows = [line.split(",") for line in text if line.strip()]
    with open(dst, "w", newline="") as out:
        w = csv.writer(out, lineterminator="\n")
        w.writerow([name for name, _ in COLUMNS] + ["recurrence"])
        for r in rows:
            cells = [c.strip().strip("'") for c in r]
            w.writerow([code(m, c) for (_, m), c in zip(COLUMNS, cells[1:])]
                       + [CLASS[cells[0]]])


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
