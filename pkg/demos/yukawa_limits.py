"""Turn a residual pressure band into limits on a Yukawa force.

Any hypothetical potential alpha_G G m1 m2 e^{-r/lambda}/r between
the sphere and plate would add pressure that the measured band does
not show.  For each range lambda the strongest allowed strength is
the alpha that would just touch the band at its most sensitive
separation.  Longer ranges are constrained harder, and the most
sensitive separation moves outward with lambda.
"""

import numpy as np

from casimetry.hypforce import (
    coated_plate_stack,
    coated_sphere_stack,
    constraint_curve,
    density_factor,
)
from casimetry.metrology import ConfidenceBand


def main():
    sphere = coated_sphere_stack()
    plate = coated_plate_stack()

    # residual band shaped like a short-separation experiment:
    # tight floor at small z, relaxing as the signal dies away
    z = np.geomspace(160e-9, 750e-9, 40)
    half_width = 2e-3 * (z / 300e-9) ** -3.3
    band = ConfidenceBand(z, half_width, 0.95)

    lambdas = np.geomspace(40e-9, 370e-9, 10)
    curve = constraint_curve(band, sphere, plate, lambdas)

    print("strongest Yukawa strength compatible with the band\n")
    print(f"{'lambda (nm)':>12} {'alpha_max':>12} {'z_best (nm)':>12}")
    for lam, alpha, z_best in zip(curve.lambdas, curve.alpha_max,
                                  curve.z_best):
        print(f"{lam * 1e9:>12.1f} {alpha:>12.3e} {z_best * 1e9:>12.1f}")

    doubled = constraint_curve(ConfidenceBand(z, 2 * half_width, 0.95),
                               sphere, plate, lambdas)
    ratio = doubled.alpha_max / curve.alpha_max
    print(f"\ndoubling the band rescales alpha_max by "
          f"{ratio.min():.6f} .. {ratio.max():.6f}")

    lam = 100e-9
    print(f"\nlayer screening at lambda = {lam * 1e9:.0f} nm:")
    print(f"  sphere stack density factor {density_factor(sphere, lam):,.0f}"
          f" kg/m^3 (bulk gold would be 19,280)")
    print(f"  plate stack density factor  {density_factor(plate, lam):,.0f}"
          f" kg/m^3")


if __name__ == "__main__":
    main()
