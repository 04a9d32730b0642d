"""How much the per-frequency optimal combiner gains over the best fixed readout.

For the middle case (idler detuned, signal on resonance) the cross-spectra turn
complex, so no real equal-weight combination reaches the squeezed level. Prints
a table at a few frequencies.

    python scripts/wiener_vs_fixed.py [--config fig2_middle]
"""

import argparse

import numpy as np

from eprnoise.cli import load_config
from eprnoise.network import build_covariance
from eprnoise.readout import optimal_readout_angle, to_db, wiener_conditional
from eprnoise.spectral import FrequencyGrid


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", default="fig2_middle")
    ap.add_argument("--ratios", default="0.01,0.1,0.3,1,3,10",
                    help="frequencies in units of the test-cavity HWHM")
    args = ap.parse_args()

    cfg = load_config(args.config)
    f = cfg.cavity.hwhm_hz * np.array([float(r) for r in args.ratios.split(",")])
    s = build_covariance(cfg, FrequencyGrid(2 * np.pi * f))
    _, fixed = optimal_readout_angle(s, cfg.readout.signal_lo_phase_rad)
    w = wiener_conditional(s, cfg.readout.signal_lo_phase_rad)
    print(f"{'f/f_tc':>8} {'fixed dB':>9} {'wiener dB':>10} {'|g|':>7} {'arg g':>7} {'phi_i':>7}")
    for k, r in enumerate(f / cfg.cavity.hwhm_hz):
        print(f"{r:8.3g} {to_db(fixed[k]):9.3f} {to_db(w.variance[k]):10.3f} "
              f"{abs(w.gain[k]):7.3f} {np.angle(w.gain[k]):7.3f} {w.idler_angle[k]:7.3f}")


if __name__ == "__main__":
    main()
