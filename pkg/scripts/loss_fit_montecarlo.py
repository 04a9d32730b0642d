"""Monte Carlo study of the detection-loss fit under Gaussian dB noise.

    python scripts/loss_fit_montecarlo.py --trials 1000 --noise-db 0.1
"""

import argparse
import time

import numpy as np

from eprnoise.analysis import DEFAULT_THRESHOLD_MW, LossFitInput, LossRecord, fit_detection_loss, methods_loss_oracle
from eprnoise.errors import FitFailure


def trial(rng, loss, xs, noise_db, threshold_mw, float_threshold):
    recs = []
    for x in xs:
        vp, vm = methods_loss_oracle(x, loss, 0.0)
        vp *= 10 ** (rng.normal(0, noise_db) / 10)
        vm *= 10 ** (rng.normal(0, noise_db) / 10)
        recs.append(LossRecord(threshold_mw * x**2, float(vp), float(min(vm, 1.0))))
    fit = fit_detection_loss(LossFitInput(recs, None if float_threshold else threshold_mw))
    return fit.loss, fit.threshold_mw


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--trials", type=int, default=1000)
    ap.add_argument("--loss", type=float, default=0.49)
    ap.add_argument("--x", default="0.2,0.4,0.6", help="comma list of pump parameters")
    ap.add_argument("--noise-db", type=float, default=0.1)
    ap.add_argument("--tolerance", type=float, default=0.02)
    ap.add_argument("--float-threshold", action="store_true")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    xs = [float(v) for v in args.x.split(",")]
    rng = np.random.default_rng(args.seed)
    t0 = time.perf_counter()
    losses, thresholds, failures = [], [], 0
    for _ in range(args.trials):
        try:
            l, pth = trial(rng, args.loss, xs, args.noise_db, DEFAULT_THRESHOLD_MW, args.float_threshold)
        except FitFailure:
            failures += 1
            continue
        losses.append(l)
        thresholds.append(pth)
    err = np.asarray(losses) - args.loss
    hits = int(np.sum(np.abs(err) <= args.tolerance))
    print(f"trials {args.trials}, x = {xs}, noise {args.noise_db} dB, threshold "
          f"{'floated' if args.float_threshold else 'fixed'}")
    print(f"within +-{args.tolerance}: {hits}/{args.trials}   failures: {failures}")
    print(f"loss error mean {err.mean():+.5f}, std {err.std():.5f}, "
          f"5/50/95 % {np.percentile(err, [5, 50, 95]).round(5).tolist()}")
    if args.float_threshold:
        print(f"threshold mean {np.mean(thresholds):.2f} mW, std {np.std(thresholds):.2f} mW")
    print(f"{time.perf_counter() - t0:.2f} s")


if __name__ == "__main__":
    main()
