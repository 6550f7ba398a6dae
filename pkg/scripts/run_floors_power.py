#!/usr/bin/env python3
"""Error-floor grids and power-allocation tables.

Sweeps the closed-form error floor against normalized Doppler for the
detectors that admit one, then solves the analytic power split for the
dual-hop and selection-combining links under asymmetric channel
variances.  Emits CSV files only.
"""

import argparse
import json
import subprocess
import sys

from pathlib import Path


def cli(*args):
    subprocess.run([sys.executable, "-m", "relaysim.cli", *args],
                   check=True)


def write(outdir, name, doc):
    path = outdir / f"{name}.json"
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return path


def dualhop_doc(order, var_sr=1.0, var_rd=1.0, snr_db=35.0, alloc=0.5):
    return {
        "topology": "dualhop",
        "detector": "cdd",
        "modulation_order": order,
        "fading": {"sr": {"variance": var_sr, "normalized_doppler": 0.01},
                   "rd": {"variance": var_rd, "normalized_doppler": 0.01}},
        "budget": {"total_power_db": [snr_db], "alloc_factor": alloc},
        "stop": {"min_bit_errors": 100},
        "seed": 1,
    }


def sc_doc(variances, snr_db=25.0):
    names = ("sd", "sr", "rd")
    return {
        "topology": "threenode",
        "detector": "sc",
        "modulation_order": 4,
        "fading": {n: {"variance": float(v), "normalized_doppler": 0.001}
                   for n, v in zip(names, variances)},
        "budget": {"total_power_db": [snr_db], "alloc_factor": 0.5},
        "stop": {"min_bit_errors": 100},
        "seed": 1,
    }


def tvd_doc():
    return {
        "topology": "threenode",
        "detector": "tvd_mrc",
        "modulation_order": 2,
        "fading": {n: {"variance": 1.0, "normalized_doppler": 0.01}
                   for n in ("sd", "sr", "rd")},
        "budget": {"total_power_db": [40.0]},
        "stop": {"min_bit_errors": 100},
        "seed": 1,
    }


def dstc_doc():
    return {
        "topology": "dstc",
        "detector": "two_codeword",
        "modulation_order": 2,
        "relay_count": 2,
        "fading": {"sr": {"variance": 1.0, "normalized_doppler": 0.01},
                   "rd": {"variance": 1.0, "normalized_doppler": 0.01}},
        "budget": {"total_power_db": [40.0]},
        "stop": {"min_bit_errors": 100},
        "seed": 1,
    }


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--outdir", type=Path,
                        default=Path("results/floors_power"))
    parser.add_argument("--points", type=int, default=25)
    args = parser.parse_args()
    args.outdir.mkdir(parents=True, exist_ok=True)
    grid = ["--doppler-min", "1e-3", "--doppler-max", "1e-1",
            "--points", str(args.points)]

    floors = {
        "floor_dualhop_dbpsk": dualhop_doc(2),
        "floor_dualhop_dqpsk": dualhop_doc(4),
        "floor_tvd_mrc": tvd_doc(),
        "floor_dstc": dstc_doc(),
        "floor_sc_dqpsk": sc_doc((1.0, 1.0, 1.0)),
    }
    for name, doc in floors.items():
        path = write(args.outdir, name, doc)
        cli("floors", str(path), *grid,
            "-o", str(args.outdir / f"{name}.floors.csv"))

    popt_dualhop = {
        "popt_dualhop_sym": dualhop_doc(4, 1.0, 1.0),
        "popt_dualhop_strong_sr": dualhop_doc(4, 10.0, 1.0),
        "popt_dualhop_strong_rd": dualhop_doc(4, 1.0, 10.0),
    }
    popt_sc = {
        "popt_sc_sym": sc_doc((1.0, 1.0, 1.0)),
        "popt_sc_strong_sr": sc_doc((1.0, 10.0, 1.0)),
        "popt_sc_strong_rd": sc_doc((1.0, 1.0, 10.0)),
    }
    for name, doc in {**popt_dualhop, **popt_sc}.items():
        path = write(args.outdir, name, doc)
        cli("power-opt", str(path),
            "-o", str(args.outdir / f"{name}.popt.csv"))


if __name__ == "__main__":
    main()
