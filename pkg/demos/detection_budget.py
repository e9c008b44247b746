"""Detection chain numbers: signal, noise floor, and what probing costs.

Three short sections. First the demodulated signal for a known atomic
phase and how a path-length error leaks the wrong quadrature in. Then the
detector noise floor and the shot-noise crossover. Last the destructivity
of a unit-SNR probe pulse, which is the figure the whole heterodyne
scheme is built to minimize.
"""
import math

from qndsim.atoms import EnsembleState, ProbeTuning
from qndsim.harness import ProbeGate, destructivity_at_unit_snr
from qndsim.heterodyne import (
    DetectorModel,
    ModulatedProbe,
    PhaseShiftTriple,
    atomic_phase,
    demodulated_signal,
    noise_rejection_ratio,
    noise_sigma,
    shot_noise_psd,
)


def main():
    det = DetectorModel()
    probe = ModulatedProbe()

    # a million atoms at 100 um rms, probed 4.81 linewidths out: phi stays
    # inside the small-phase regime the calibration assumes
    phi = atomic_phase(4.81 * 6.0666e6, 1e6, 245e-6, 100e-6)
    print(f"dispersive phase of the probed cloud: {phi * 1e3:.2f} mrad")

    triple = PhaseShiftTriple(phi_plus=phi)
    s0 = demodulated_signal(probe, triple, det)
    print(f"demodulated signal at matched phase:  {s0 * 1e3:.3f} mV")

    print("\npath-error leakage (signal change, uV):")
    for dl_um in (0.0, 10.0, 100.0, 1000.0):
        s = demodulated_signal(probe, triple, det, path_error=dl_um * 1e-6)
        print(f"  dL={dl_um:7.1f} um   {(s - s0) * 1e6:10.3f}")
    rej = noise_rejection_ratio(probe, abs(phi))
    print(f"rejection vs 1 um interferometer: {rej:.2e} "
          f"({-math.log10(rej):.1f} orders)")

    print("\nnoise floor:")
    print(f"  PSD dark          {shot_noise_psd(det, 0.0):.3e} V^2/Hz")
    print(f"  PSD at kappa_e    {shot_noise_psd(det, det.kappa_e):.3e}"
          "  (double the dark value)")
    sig = noise_sigma(det, probe, 1.25e-6)
    print(f"  rms per 1.25 us pulse  {sig * 1e6:.2f} uV")

    # probing cost: scattering events per atom at unit SNR, for the wide
    # probe driving the microwave experiments
    tuning = ProbeTuning.from_powers(70e-6, 90e-9, 800e-6,
                                     sideband_detuning=7.9,
                                     modulation_frequency=2.5e9)
    gate = ProbeGate(tuning=tuning)
    wide = ModulatedProbe(carrier_power=70e-6,
                          modulation_depth=math.sqrt(90e-9 / 70e-6),
                          modulation_frequency=2 * math.pi * 2.5e9,
                          carrier_detuning=-2.5e9, sideband_power=90e-9,
                          beam_waist=800e-6)
    ens = EnsembleState.all_upper(1e7)
    eta = destructivity_at_unit_snr(gate, ens, wide, det)
    print(f"\ndestructivity at unit SNR, 1e7 atoms: {eta:.2e}"
          f"  ({1 / eta:.0f} measurements before an atom scatters once)")


if __name__ == "__main__":
    main()
