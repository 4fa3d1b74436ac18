#!/usr/bin/env python3
"""Generate the bundled 1-minute residential demand profiles.

Usage: generate_profiles.py <feeder-dir> [seed]

The published feeder ships measured load shapes that are not redistributed
here. This script writes a deterministic synthetic stand-in with the same
file layout (LoadShapes.csv plus "Load Profiles/Load_profile_<n>.csv", kW at
one-minute resolution): standby and cold-appliance cycling, occupancy-driven
appliance events, and a dinner-time peak.
"""
import csv
import pathlib
import sys

import numpy as np

MINUTES = 1440

# name, kW low/high, duration min low/high, relative weight
APPLIANCES = [
    ("kettle", 1.8, 3.0, 2, 5, 3.0),
    ("microwave", 0.8, 1.3, 2, 8, 2.0),
    ("cooker", 1.0, 2.6, 20, 60, 1.5),
    ("washer", 0.4, 2.0, 50, 90, 0.4),
    ("dishwasher", 1.0, 1.9, 50, 90, 0.4),
    ("tv", 0.08, 0.25, 40, 180, 1.5),
    ("vacuum", 0.7, 1.4, 10, 30, 0.3),
    ("iron", 0.9, 1.6, 10, 35, 0.3),
]


def hours(h):
    return int(round(h * 60))


def profile(rng):
    t = np.arange(MINUTES)
    scale = rng.uniform(0.6, 1.4)
    load = np.full(MINUTES, rng.uniform(0.06, 0.16))

    period = rng.integers(35, 60)
    on = rng.integers(10, 20)
    offset = rng.integers(0, period)
    load += np.where(((t + offset) % period) < on, rng.uniform(0.08, 0.15), 0.0)

    wake = hours(np.clip(rng.normal(6.8, 0.5), 5.5, 8.5))
    sleep = hours(np.clip(rng.normal(23.0, 0.6), 21.5, 24.0))
    home = (t >= wake) & (t < min(sleep, MINUTES))
    if rng.random() < 0.6:
        leave = hours(np.clip(rng.normal(8.4, 0.4), 7.5, 9.5))
        back = hours(np.clip(rng.normal(17.2, 0.6), 15.5, 19.0))
        home &= ~((t >= leave) & (t < back))

    rate = np.full(MINUTES, 1.0 / 240.0)
    rate += 1.0 / 70.0 * np.exp(-0.5 * ((t - hours(7.4)) / 35.0) ** 2)
    rate += 1.0 / 150.0 * np.exp(-0.5 * ((t - hours(12.6)) / 40.0) ** 2)
    rate += 1.0 / 55.0 * np.exp(-0.5 * ((t - hours(18.5)) / 50.0) ** 2)
    rate *= home

    weights = np.array([a[5] for a in APPLIANCES])
    dinner = np.exp(-0.5 * ((t - hours(18.5)) / 50.0) ** 2)
    starts = np.nonzero(rng.random(MINUTES) < rate)[0]
    for s in starts:
        w = weights.copy()
        w[2] *= 1.0 + 3.0 * dinner[s]
        name, lo, hi, dlo, dhi, _ = APPLIANCES[rng.choice(len(APPLIANCES), p=w / w.sum())]
        dur = rng.integers(dlo, dhi + 1)
        load[s:s + dur] += rng.uniform(lo, hi)

    dusk = hours(rng.normal(17.6, 0.3))
    load += np.where(home & (t >= dusk), rng.uniform(0.1, 0.3), 0.0)
    load += np.where(home & (t < hours(8.0)), rng.uniform(0.05, 0.15), 0.0)
    return np.round(load * scale, 3)


def main(feeder_dir, seed):
    feeder = pathlib.Path(feeder_dir)
    with open(feeder / "Loads.csv") as f:
        rows = list(csv.reader(f))
    header = next(i for i, r in enumerate(rows) if r and r[0] == "Name")
    shapes = [r[9] for r in rows[header + 1:] if r]

    out = feeder / "Load Profiles"
    out.mkdir(exist_ok=True)
    rng = np.random.default_rng(seed)
    with open(feeder / "LoadShapes.csv", "w", newline="\n") as f:
        f.write("Load Shapes,,,,\nName,npts,minterval,File,useactual\n")
        for shape in shapes:
            n = int(shape.split("_")[1])
            f.write(f"{shape},{MINUTES},1,Load_profile_{n}.csv,TRUE\n")
            values = profile(rng)
            with open(out / f"Load_profile_{n}.csv", "w", newline="\n") as p:
                p.write("time,mult\n")
                for m, v in enumerate(values, start=1):
                    p.write(f"{m // 60:02d}:{m % 60:02d}:00,{v:.3f}\n")


if __name__ == "__main__":
    if len(sys.argv) not in (2, 3):
        sys.exit(__doc__)
    main(sys.argv[1], int(sys.argv[2]) if len(sys.argv) == 3 else 20211)
