#!/usr/bin/env python3
"""Run the three flux/cone-probability comparisons (free, resonant point,
sech^2 well) and print their convergence tables.

Equivalent to running the CLI on the three sample configs; kept as a script
for quick interactive tweaking of packets and windows.
"""

import math
import time

from fasbench.fluxfas import ConeSurface, fas_verify
from fasbench.lsradial import bargmann_potential, outgoing_state_potential
from fasbench.pointmodel import PointInteraction, WavePacket


def show(tag, rep):
    print(f"\n{tag}: rhs = {rep.rhs:.6f} (spectral norm {rep.notes['spectral_norm']:.8f})")
    print(f"{'R':>6} {'lhs+tail':>12} {'rel_error':>11} {'cross':>11} {'tail':>10}")
    for e in rep.entries:
        print(f"{e.R:6.0f} {e.lhs_total:12.6f} {e.rel_error:11.3e} "
              f"{e.lhs_abs_cross:11.3e} {e.tail_estimate:10.2e}")


def main():
    radii = [20.0, 40.0, 80.0]
    half = ConeSurface(theta=math.pi / 2)
    boosted = WavePacket.gaussian(1.0, boost=1.0)
    radial = WavePacket.gaussian(1.0)

    t0 = time.perf_counter()
    show("free model, boosted packet",
         fas_verify(PointInteraction(math.inf), boosted, half, radii, 0.0, 400.0))

    t2_point = [400.0 * (R / 20.0) ** 1.2 for R in radii]
    show("resonant point interaction, boosted packet",
         fas_verify(PointInteraction(0.0), boosted, half, radii, 0.0, t2_point))

    V = bargmann_potential(1.0)
    spec = outgoing_state_potential(V, radial)
    t2_pot = [25.0 * R ** 1.5 for R in radii]
    show("resonant sech^2 well, radial packet",
         fas_verify(V, radial, ConeSurface(), radii, 0.0, t2_pot, spec=spec))

    print(f"\ntotal: {time.perf_counter() - t0:.1f} s")


if __name__ == "__main__":
    main()
