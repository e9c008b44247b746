"""Squeezing projection: what the measured destructivity buys.

kappa^2 = phi^2 N_at N_s / 2 ties the per-atom dispersive phase, the atom
number, and the detected photon number to the conditional variance
reduction xi^2 = 1/(1 + kappa^2). The sweep shows the photon-number
budget, then the sqrt(F) SNR gain from putting the probe in the resonator.
"""
import math

from qndsim.atoms import cavity_enhancement, squeezing_estimate
from qndsim.heterodyne import atomic_phase


def main():
    n_at = 1e6
    # per-atom phase: one atom in the probe beam, half a linewidth out
    phi1 = abs(atomic_phase(0.5 * 6.0666e6, 1.0, 245e-6, 0.0))
    print(f"per-atom dispersive phase: {phi1:.2e} rad")

    print("\nphoton budget at 1e6 atoms:")
    print("  N_s        kappa^2     xi^2      dB")
    for n_s in (1e3, 1e4, 1e5, 1e6):
        k2, x2 = squeezing_estimate(phi1, n_at, n_s)
        db = 10 * math.log10(x2)
        print(f"  {n_s:8.0e}  {k2:9.3g}  {x2:8.4f}  {db:6.1f}")

    k2, x2 = squeezing_estimate(phi1, n_at, 1e5)
    snr = math.sqrt(k2)
    print(f"\nfree-space SNR at 1e5 photons: {snr:.2f}")
    for f in (1788.0, 102000.0):
        boosted = cavity_enhancement(f, snr)
        k2c = boosted**2
        print(f"  finesse {f:6.0f}: SNR {boosted:7.1f}, "
              f"xi^2 {1 / (1 + k2c):.2e} ({10 * math.log10(1 / (1 + k2c)):.0f} dB)")


if __name__ == "__main__":
    main()
