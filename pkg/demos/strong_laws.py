"""Pathwise strong laws: SLLN decay, QSL trace, and the LIL envelope.

Three almost-sure statements about the center of mass G_n, each checked
on seeded paths. The strong-law percentile must shrink along a
geometric horizon grid; the quadratic-strong-law running average drifts
toward its closed-form trace at a 1/log(n) rate with path-to-path
spread comparable to the limit itself (so the demo shows the drift
rather than asserting the limit); and the iterated-logarithm statistic
should sit below its envelope constant on most paths.
"""

import argparse

import numpy as np

from erwalk import ModelParams, ensemble_functionals, limit_constants, slln_check


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--d", type=int, default=1)
    ap.add_argument("--p", type=float, default=0.5)
    ap.add_argument("--steps", type=int, default=10 ** 5)
    ap.add_argument("--paths", type=int, default=100)
    ap.add_argument("--seed", type=int, default=20240814)
    args = ap.parse_args()

    params = ModelParams.create(args.d, args.p)
    consts = limit_constants(args.d, args.p)
    print(f"d={args.d} p={args.p} a={params.a:+.4f} ({params.regime.value})\n")

    horizons = [args.steps // 100, args.steps // 10, args.steps]
    slln = slln_check(params, horizons, R=200, base_seed=args.seed)
    print(f"strong law: 99th percentile of ||G_m|| / ({slln.normalizer})")
    for m, q in zip(horizons, slln.q99):
        print(f"  m = {m:>8d}   q99 = {q:.5f}")
    print(f"  decreasing along the grid: {slln.decreasing}\n")

    fe = ensemble_functionals(params, args.steps, args.paths, args.seed,
                              horizons=horizons)
    target = consts.qsl_trace
    print(f"quadratic strong law: trace of the running average, limit {target:.4f}")
    for m, t in zip(fe.horizons, fe.mean_qsl_trace):
        print(f"  n = {int(m):>8d}   mean trace = {t:.4f} "
              f"(rel dev {t / target - 1.0:+.1%})")
    print("  the mean approaches the limit like 1/log(n); per-path spread "
          "is comparable to the limit itself, so small ensembles are noisy\n")

    bound = consts.lil_bound
    kind = "exact constant" if consts.lil_bound_is_exact else "upper bound"
    below = float(np.mean(fe.lil_max <= bound))
    print(f"iterated logarithm: envelope {kind} {bound:.4f}")
    print(f"  paths with max statistic below the envelope: {below:.0%}")
    print(f"  largest observed statistic: {fe.lil_max.max():.4f}")


if __name__ == "__main__":
    main()
