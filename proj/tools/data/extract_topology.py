#!/usr/bin/env python3
"""Write the European LV test feeder topology tables from the copy shipped
inside the pandapower wheel (pandapower/networks/IEEE_European_LV_*.json).

Usage: extract_topology.py <pandapower-wheel-or-site-packages-dir> <out-dir>

Produces Buscoords.csv, LineCodes.csv, Lines.csv and Loads.csv in the
published CSV layout. Load shapes are not part of that copy; see
generate_profiles.py.
"""
import io
import json
import pathlib
import sys
import zipfile

import pandas as pd

SNAPSHOTS = ("On_Peak_566", "Off_Peak_1", "Off_Peak_1440")
CODE_NAMES = {"2c_007": "2c_.007", "2c_0225": "2c_.0225", "4c_06": "4c_.06",
              "4c_1": "4c_.1", "4c_35": "4c_.35"}


def read_snapshot(src, name):
    member = f"pandapower/networks/IEEE_European_LV_{name}.json"
    src = pathlib.Path(src)
    if src.is_file():
        raw = zipfile.ZipFile(src).read(member)
    else:
        raw = (src / member).read_bytes()
    return json.loads(raw)["_object"]


def frame(obj, key):
    return pd.read_json(io.StringIO(obj[key]["_object"]), orient="split")


def main(src, out):
    out = pathlib.Path(out)
    out.mkdir(parents=True, exist_ok=True)
    snaps = {n: read_snapshot(src, n) for n in SNAPSHOTS}
    base = snaps["On_Peak_566"]
    buses = frame(base, "bus")
    lines = frame(base, "line")
    codes = base["std_types"]["line"]

    with open(out / "Buscoords.csv", "w", newline="\n") as f:
        f.write("Bus Coordinates,,\nBusname,x,y\n")
        for _, b in buses.iterrows():
            if b["name"] == "SOURCEBUS":
                continue
            x, y = json.loads(b["geo"])["coordinates"]
            f.write(f"{b['name']},{x:.3f},{y:.3f}\n")

    used = sorted(set(lines["std_type"]))
    with open(out / "LineCodes.csv", "w", newline="\n") as f:
        f.write("Line Codes,,,,,,,,\nName,nphases,R1,X1,R0,X0,C1,C0,Units\n")
        for code in used:
            c = codes[code]
            f.write(f"{CODE_NAMES.get(code, code)},3,{c['r_ohm_per_km']:.5g},"
                    f"{c['x_ohm_per_km']:.5g},{c['r0_ohm_per_km']:.5g},"
                    f"{c['x0_ohm_per_km']:.5g},0,0,km\n")

    name_of = dict(zip(buses.index, buses["name"]))
    with open(out / "Lines.csv", "w", newline="\n") as f:
        f.write("Lines,,,,,,\nUnits: Length (m),,,,,,\n")
        f.write("Name,Bus1,Bus2,Phases,Length,Units,LineCode\n")
        for _, l in lines.iterrows():
            f.write(f"{l['name']},{name_of[l['from_bus']]},{name_of[l['to_bus']]},ABC,"
                    f"{l['length_km'] * 1000.0:.3f},m,{CODE_NAMES.get(l['std_type'], l['std_type'])}\n")

    loads = [frame(s, "asymmetric_load") for s in snaps.values()]
    with open(out / "Loads.csv", "w", newline="\n") as f:
        f.write("LOADS,,,,,,,,,\nUnits: kW/kVar,,,,,,,,,\n")
        f.write("Name,numPhases,Bus,phases,kV,Model,Connection,kW,PF,Yearly\n")
        for i, row in loads[0].iterrows():
            phase = next(p for p in "abc" for df in loads if abs(df.iloc[i][f"p_{p}_mw"]) > 0)
            shape = f"Shape_{i + 1}"
            f.write(f"{row['name']},1,{name_of[row['bus']]},{phase.upper()},0.23,1,wye,1,0.95,{shape}\n")


if __name__ == "__main__":
    if len(sys.argv) != 3:
        sys.exit(__doc__)
    main(sys.argv[1], sys.argv[2])
