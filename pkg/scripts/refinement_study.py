"""Single-mode amplification error of the decoupled interface problem under refinement.

    python scripts/refinement_study.py --cells 32 64 128 --modes 1 2 3
"""
import argparse

import numpy as np

from msns.coupled import LinearData, linear_step
from msns.geometry import DomainSpec, GridSpec
from msns.spectral import ms_dispersion
from msns.state import FluidParams, State


def amplification_error(n, m, params, domain):
    g = GridSpec(domain, n, n // 2, n // 2)
    k = m * np.pi / domain.width
    lam = ms_dispersion(k, params, domain)
    dt = 1.0 / lam
    mode = np.cos(k * g.x_centers)
    st = State(g)
    st["h"] = 1e-3 * mode
    new = linear_step(LinearData.zeros(g, st), params, g, dt, couple_stokes=False)
    amp = float(new.h @ mode) / float(st.h @ mode)
    return abs(amp * (1.0 + dt * lam) - 1.0)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cells", type=int, nargs="+", default=[16, 32, 64, 128])
    ap.add_argument("--modes", type=int, nargs="+", default=[1, 2, 3])
    args = ap.parse_args()
    P, D = FluidParams(), DomainSpec()
    errs = np.array([[amplification_error(n, m, P, D) for m in args.modes] for n in args.cells])
    print("cells " + " ".join(f"{'mode ' + str(m):>20s}" for m in args.modes))
    for i, n in enumerate(args.cells):
        cols = []
        for j in range(len(args.modes)):
            order = np.log2(errs[i - 1, j] / errs[i, j]) if i else np.nan
            cols.append(f"{errs[i, j]:10.3e} ({order:5.2f})")
        print(f"{n:5d} " + " ".join(f"{c:>20s}" for c in cols))


if __name__ == "__main__":
    main()
