#!/usr/bin/env python3
"""Portrait of the zero-energy threshold for the scaled sech^2 well.

Sweeps the coupling through criticality, printing the exterior-slope
classification, and shows the momentum-space singularity developing in the
outgoing state of a Gaussian packet.
"""

import numpy as np

from fasbench.lsradial import (
    bargmann_potential,
    classification_scan,
    outgoing_state_potential,
    scaled_potential,
)
from fasbench.pointmodel import WavePacket


def main():
    V = bargmann_potential(1.0)
    lams = np.round(np.arange(0.85, 1.16, 0.05), 3)
    rows, lam_crit = classification_scan(V, lams)
    print(f"{'lambda':>8} {'class':>14} {'exterior slope b':>18} {'ratio':>10}")
    for row in rows:
        print(f"{row['lambda']:8.3f} {row['classification']:>14} "
              f"{row['b']:18.3e} {row['ratio']:10.2e}")
    print(f"\ncritical coupling by bisection: {lam_crit:.6f}")

    packet = WavePacket.gaussian(1.0)
    for lam in (0.9, 1.0):
        spec = outgoing_state_potential(scaled_potential(V, lam) if lam != 1.0 else V,
                                        packet)
        k = spec.grid.nodes
        inner = k < 0.05
        print(f"\nlambda = {lam}: |r| = {abs(spec.r):.4f}; "
              f"|psi_hat| at k ~ {k[0]:.1e}: {abs(spec.psi_hat[0]):.3e}")
        print("  inner spectrum:", ", ".join(f"{abs(v):.2e}" for v in spec.psi_hat[:4]))


if __name__ == "__main__":
    main()
