"""Write the three figure datasets (c_n(a), epsilon-outage bounds, CSIT gap) as CSV.

    python3 scripts/reproduce_figures.py [--out-dir results] [--format csv|json]
"""

import argparse
import sys
from pathlib import Path

from outagebounds import cli

FIGURES = {
    "fig1": ("cmin", "fig1_cmin"),
    "fig2": ("bounds", "fig2_eps_outage_bounds"),
    "fig3": ("csit", "fig3_csit_gap"),
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out-dir", default="results")
    parser.add_argument("--format", choices=("csv", "json"), default="csv")
    args = parser.parse_args(argv)

    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for preset, (command, stem) in FIGURES.items():
        path = out_dir / f"{stem}.{args.format}"
        code = cli.main([command, "--preset", preset, "--format", args.format, "--out", str(path)])
        if code != cli.EXIT_OK:
            print(f"{preset}: failed with exit code {code}", file=sys.stderr)
            return code
        print(f"{preset}: wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
