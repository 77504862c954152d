#!/usr/bin/env python3
"""Repeated dressing cycles: g2 after each cycle against the e^(-T/tau) reference.

Each cycle couples the target level to a fresh p-level; with the default
settings the sequence is (100,1/2), (99,1/2), (100,3/2), (99,3/2) at
delta T = 1 us and Omega = 10 rad/us, so tau = delta T + 2 pi / Omega.
"""

import argparse
import sys

import numpy as np

from ryddephase.atomdata import InteractionModel, Level, MicrowaveSpec, RydbergChannel, c3_of
from ryddephase.correlation import g2_after_cycles
from ryddephase.ensemble import EnsembleSpec
from ryddephase.pairdyn import CycleSpec
from ryddephase.protocol import decay_reference, make_schedule


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--atoms", type=int, default=100)
    ap.add_argument("--box", type=float, default=60.0)
    ap.add_argument("--seed", type=int, default=20260810)
    ap.add_argument("--reference-c3", type=float, default=2.6e4)
    ap.add_argument("--delta-t", type=float, default=1.0)
    ap.add_argument("--rabi", type=float, default=10.0)
    ap.add_argument("--realizations", type=int, default=100)
    args = ap.parse_args(argv)

    model = InteractionModel(args.reference_c3, 60, 4.0)
    c3 = c3_of(args.n, model)
    cycles = []
    for p_n, p_j in [(args.n, 0.5), (args.n - 1, 0.5), (args.n, 1.5), (args.n - 1, 1.5)]:
        channel = RydbergChannel(Level(args.n, "s", 0.5), Level(p_n, "p", p_j), c3)
        cycles.append(CycleSpec(channel, args.delta_t, MicrowaveSpec(rabi=args.rabi)))
    schedule = make_schedule(cycles)
    tau = schedule.total_time / len(schedule)

    ensemble = EnsembleSpec(args.atoms, args.box, args.seed)
    trace = g2_after_cycles(ensemble, schedule, realizations=args.realizations)

    print(f"tau = {tau:.4f} us (delta T + 2 pi / Omega)")
    print(f"{'cycle':>5} {'T_us':>8} {'g2':>10} {'stderr':>9} {'e^(-T/tau)':>11}")
    for q, t in enumerate(trace.grid, start=1):
        print(
            f"{q:>5} {t:>8.3f} {trace.g2_mean[q-1]:>10.5f} "
            f"{trace.g2_stderr[q-1]:>9.5f} {decay_reference(tau, float(t)):>11.5f}"
        )
    slope = np.polyfit(trace.grid, np.log(trace.g2_mean), 1)[0]
    print(f"log-linear fit decay constant: {-1.0 / slope:.3f} us")
    return 0


if __name__ == "__main__":
    sys.exit(main())
