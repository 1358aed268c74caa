#!/usr/bin/env python3
"""Regenerate the vendored Lebedev node tables in data/lebedev/.

Each file lebedev_<n>.txt holds one node per line as "x y z w" with the
weights normalized to sum to one. Requires SciPy >= 1.15.
"""
import pathlib
import sys

from scipy.integrate import lebedev_rule

# quadrature degree -> node count
DEGREES = {3: 6, 5: 14, 7: 26, 9: 38, 11: 50, 13: 74, 15: 86, 17: 110,
           19: 146, 21: 170, 23: 194, 25: 230, 27: 266, 29: 302, 31: 350,
           35: 434, 41: 590, 89: 2702, 131: 5810}


def main(out_dir):
    out = pathlib.Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for degree, count in DEGREES.items():
        x, w = lebedev_rule(degree)
        assert x.shape[1] == count
        w = w / w.sum()
        with open(out / f"lebedev_{count}.txt", "w") as fh:
            fh.write(f"# Lebedev rule, degree {degree}, {count} nodes: x y z w (sum w = 1)\n")
            for i in range(count):
                fh.write(f"{x[0, i]:.17e} {x[1, i]:.17e} {x[2, i]:.17e} {w[i]:.17e}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else pathlib.Path(__file__).resolve().parent.parent / "data" / "lebedev")
