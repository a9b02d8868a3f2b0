"""Spectral gap and structural checks over a viscosity/density sweep.

    python scripts/spectrum_sweep.py --cells 16 --values 0.5 1 2
"""
import argparse
import itertools
import time

from msns.geometry import DomainSpec, GridSpec
from msns.spectral import spectrum, verify_spectrum
from msns.state import FluidParams


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, default=16)
    ap.add_argument("--values", type=float, nargs="+", default=[0.5, 1.0, 2.0])
    args = ap.parse_args()
    n = args.cells
    g = GridSpec(DomainSpec(), n, n // 2, n // 2)
    print(f"{'mu+':>5s} {'mu-':>5s} {'rho+':>5s} {'rho-':>5s} {'gap':>9s} checks")
    t0 = time.perf_counter()
    for mp, mm, rp, rm in itertools.product(args.values, repeat=4):
        res = spectrum(FluidParams(rho_plus=rp, rho_minus=rm, mu_plus=mp, mu_minus=mm), g)
        rep = verify_spectrum(res, ms_cells=None)
        bad = [k for k, v in rep.checks.items() if not v]
        print(f"{mp:5g} {mm:5g} {rp:5g} {rm:5g} {res.gap:9.4f} {'ok' if not bad else 'FAIL ' + ','.join(bad)}")
    print(f"{time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
