"""Quadratic rho = 0.1, A = 10: closed-form convergence criterion against 400 runs."""
import sys

from minimax_egm.cli import main

if __name__ == "__main__":
    sys.exit(main(["tightness", "--out", "results/tightness", *sys.argv[1:]]))
