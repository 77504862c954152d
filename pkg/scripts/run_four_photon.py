#!/usr/bin/env python3
"""Collinear versus off-axis phase matching for the four-photon ladder.

Compares the stored-excitation period and the motional coherence time of the
collinear geometry, the solved zero-mismatch off-axis geometry, and the
two-photon counter-propagating reference.
"""

import argparse
import sys

import numpy as np

from ryddephase.phasematch import (
    Beam,
    PhaseMatchInfeasible,
    motional_coherence_time,
    solve_offaxis,
    spinwave_period,
    wavevector_mismatch,
)

Z = np.array([0.0, 0.0, 1.0])


def describe(label, beams, speed):
    dk = wavevector_mismatch(beams)
    period = spinwave_period(dk)
    tau = motional_coherence_time(period, speed)
    print(
        f"{label:>10}: |dk| = {np.linalg.norm(dk):.6g} rad/um, period = "
        f"{period:.6g} um, coherence = {tau:.6g} us"
    )


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument(
        "--wavelengths", type=float, nargs="+", default=[795.0, 1475.0, 2294.0, 1005.0]
    )
    ap.add_argument("--signs", type=int, nargs="+", default=[1, -1, 1, -1])
    ap.add_argument("--speed", type=float, default=0.1, help="thermal speed, m/s")
    args = ap.parse_args(argv)

    collinear = [Beam(w, s, Z) for w, s in zip(args.wavelengths, args.signs)]
    describe("collinear", collinear, args.speed)

    try:
        directions, angles, _ = solve_offaxis(args.wavelengths, args.signs)
    except PhaseMatchInfeasible as exc:
        print(f"off-axis: {exc}")
        return 1
    offaxis = [
        Beam(w, s, d) for w, s, d in zip(args.wavelengths, args.signs, directions)
    ]
    describe("off-axis", offaxis, args.speed)
    print(f"           tilt angles: {np.round(np.degrees(angles), 3)} deg")

    describe("two-photon", [Beam(780.0, 1, Z), Beam(480.0, -1, Z)], args.speed)
    return 0


if __name__ == "__main__":
    sys.exit(main())
