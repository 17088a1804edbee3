"""Render the planar walk, its center of mass, and the convex hull.

Produces one SVG per regime: the walk path in blue, the center-of-mass
path in black, and the convex hull of the visited points in red. The
hull is computed with exact integer arithmetic, so collinear boundary
points never create spurious vertices no matter how far the walk
wanders.
"""

import argparse
import os

from erwalk import ModelParams, convex_hull_2d, render_figure, run_path

REGIME_PS = (("diffusive", 0.55), ("critical", 0.625), ("superdiffusive", 0.8))


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--steps", type=int, default=10 ** 6)
    ap.add_argument("--seed", type=int, default=3)
    ap.add_argument("--outdir", default="demo_output")
    args = ap.parse_args()
    os.makedirs(args.outdir, exist_ok=True)

    for name, p in REGIME_PS:
        params = ModelParams.create(2, p)
        rec = run_path(params, args.steps, seed=args.seed)
        hull = convex_hull_2d(rec.S)
        svg = render_figure(rec, hull)
        path = os.path.join(args.outdir, f"walk_{name}.svg")
        with open(path, "w") as fh:
            fh.write(svg)
        print(f"{name:>14} (p={p}): |S_n| = "
              f"{float((rec.terminal.S ** 2).sum()) ** 0.5:9.1f}, "
              f"hull has {hull.n_vertices} vertices, "
              f"perimeter {hull.perimeter:.1f} -> {path}")


if __name__ == "__main__":
    main()
