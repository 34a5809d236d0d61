#!/usr/bin/env python3
"""Generate the reference bellow calibration set (data/bellow_calibration.csv).

The backbone is integrated from a smooth, non-constant-curvature tangent
field, then ten points per pressure are "annotated" at roughly even arc
spacing and rounded to whole pixels, the way a manual segmentation of a
camera frame would be exported. Coordinates are pixels in the bending plane,
base at the origin, base tangent along +x.
"""
import argparse

import numpy as np

LENGTH_PX = 450.0
PRESSURES = [0.0, 6.0, 10.0, 15.0, 21.0]
POINTS = 10


def tip_angle(q):
    # quadratic in pressure, ~2.3 rad at 21 Psi
    return 0.075 * q + 0.0016 * q * q


def shape(u):
    # tangent profile along normalized arc length, shape(0)=0, shape(1)=1
    raw = 0.55 * u + 0.75 * u**2 - 0.30 * u**3 + 0.035 * np.sin(2.0 * np.pi * u)
    return raw / (0.55 + 0.75 - 0.30)


def backbone(q, s):
    fine = np.linspace(0.0, LENGTH_PX, 20001)
    th = tip_angle(q) * shape(fine / LENGTH_PX)
    ds = fine[1] - fine[0]
    cx = np.concatenate([[0.0], np.cumsum(0.5 * (np.cos(th[1:]) + np.cos(th[:-1])) * ds)])
    cz = np.concatenate([[0.0], np.cumsum(0.5 * (np.sin(th[1:]) + np.sin(th[:-1])) * ds)])
    return np.interp(s, fine, cx), np.interp(s, fine, cz)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", default="bellow_calibration.csv")
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    rng = np.random.default_rng(args.seed)
    rows = ["pressure_psi,point_index,x,z"]
    for q in PRESSURES:
        u = np.linspace(0.0, 1.0, POINTS)
        u[1:-1] += rng.uniform(-0.01, 0.01, POINTS - 2)
        x, z = backbone(q, u * LENGTH_PX)
        x, z = np.rint(x), np.rint(z)
        x[0], z[0] = 0.0, 0.0
        for i in range(POINTS):
            rows.append(f"{q:g},{i},{x[i]:g},{z[i]:g}")
    with open(args.out, "w", newline="\n") as fh:
        fh.write("\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
