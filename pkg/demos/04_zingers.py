"""Where adapted filters hurt: zingers.

A handful of saturated detector pixels is enough to make the least-squares
fit chase the outliers.  The adapted filter then amplifies streaks, and its
Otsu segmentation is worse than the plain Shepp-Logan one.

Run: python demos/04_zingers.py [N] [N_angles]
"""

import sys

from adaptomo import FoamSpec, generate_foam, make_geometry, slice_phantom
from adaptomo.experiments import simulate_slice, zinger_demo

n = int(sys.argv[1]) if len(sys.argv) > 1 else 96
n_angles = int(sys.argv[2]) if len(sys.argv) > 2 else 256

slc = slice_phantom(generate_foam(FoamSpec(seed=0)), 0.0)
g = make_geometry(n_angles, n, n)
for fraction in (1e-3, 0.0):
    zingers = (fraction, 10.0, 3) if fraction else None
    p, gt = simulate_slice(slc, g, zingers=zingers)
    print(f"zinger fraction {fraction:g} ({int(fraction * p.values.size)} pixels)")
    for name, r in zinger_demo(p, gt, sirt_iterations=200, n_l=max(2, n // 16)).items():
        print(f"  {name:>12s}: Otsu {r['otsu']:.3f}  F1 {r['f1']:.4f}  Jaccard {r['jaccard']:.4f}")
