"""Quartic with A = 100: damped EGM converges from an 81-point grid, vanilla EGM cycles.

Writes results/fig1/{fig1_summary.csv, meta.json, trajectories/}.
"""
import sys

from minimax_egm.cli import main

if __name__ == "__main__":
    sys.exit(main(["fig1", "--out", "results/fig1", *sys.argv[1:]]))
