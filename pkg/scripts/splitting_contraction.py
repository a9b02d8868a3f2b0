"""Sweep-to-sweep contraction of the block Gauss-Seidel splitting against dt.

    python scripts/splitting_contraction.py --cells 16
"""
import argparse

import numpy as np

from msns.coupled import LinearData, splitting_step
from msns.geometry import DomainSpec, GridSpec
from msns.state import FluidParams, State


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, default=16)
    ap.add_argument("--dts", type=float, nargs="+", default=[1e-1, 1e-2, 1e-3, 1e-4])
    args = ap.parse_args()
    n = args.cells
    g = GridSpec(DomainSpec(), n, n // 2, n // 2)
    prev = State(g)
    prev["h"] = 1e-2 * np.random.default_rng(0).standard_normal(n)
    prev["h"] -= prev.h.mean()
    print(f"{'dt':>8s} {'first factor':>13s} {'sweeps':>7s}")
    for dt in args.dts:
        _, info = splitting_step(LinearData.zeros(g, prev), FluidParams(), g, dt, sweeps=12)
        f = info.factors[0] if info.factors else float("nan")
        print(f"{dt:8.0e} {f:13.3e} {len(info.updates):7d}")


if __name__ == "__main__":
    main()
