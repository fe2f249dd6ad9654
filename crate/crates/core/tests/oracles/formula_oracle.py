"""Regenerate tests/data/formula_oracle.csv with 50-digit mpmath arithmetic.

Inputs are drawn as IEEE doubles and written with repr() so the Rust side
parses exactly the same values.
"""
import csv
import random
import sys

import mpmath as mp

mp.mp.dps = 50

FIELDS = [
    "waist", "length", "wavelength", "theta0", "prefactor", "focal_length",
    "pixel_pitch", "width", "height", "qx", "qy",
    "gaussian_hwhm", "sinc_noncollinear", "sinc_collinear",
    "radius_q", "radius_pixels", "col", "row",
]


def row(rng):
    w = rng.uniform(0.2e-3, 3e-3)
    l = rng.uniform(1e-3, 2e-2)
    lam = rng.uniform(600e-9, 1100e-9)
    th = 10 ** rng.uniform(-3.5, -1)
    p = rng.uniform(2.0, 3.0)
    f = rng.uniform(0.05, 0.5)
    pitch = rng.uniform(5e-6, 30e-6)
    width = rng.randrange(64, 2049)
    height = rng.randrange(64, 2049)
    qx = rng.uniform(-2e5, 2e5)
    qy = rng.uniform(-2e5, 2e5)

    W, L, LAM, TH, P, F, PITCH = map(mp.mpf, (w, l, lam, th, p, f, pitch))
    gauss = mp.sqrt(2 * mp.log(2)) / W
    nc = P / (L * mp.tan(TH))
    col = P * mp.sqrt(2 * mp.pi / (LAM * L))
    sinc = nc if nc <= col else col
    rq = min(gauss, sinc)
    scale = LAM * F / (2 * mp.pi) / PITCH
    rpix = rq * scale
    c = (width // 2) + mp.mpf(qx) * scale
    r = (height // 2) + mp.mpf(qy) * scale
    vals = [w, l, lam, th, p, f, pitch, width, height, qx, qy]
    return [repr(v) for v in vals] + [mp.nstr(v, 30) for v in (gauss, nc, col, rq, rpix, c, r)]


def main():
    rng = random.Random(20240611)
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(FIELDS)
    for _ in range(100):
        out.writerow(row(rng))


if __name__ == "__main__":
    main()
