"""Order in s of the gap between one damped PPM step and one damped EGM step."""
import sys

from minimax_egm.cli import main

if __name__ == "__main__":
    codes = [
        main(["approx-order", "--problem", which, "--out", f"results/approx_order_{which}", *sys.argv[1:]])
        for which in ("quadratic", "quartic")
    ]
    sys.exit(max(codes))
