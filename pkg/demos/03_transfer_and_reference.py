"""Reusing fitted filters: across slices, and towards a reference image.

Part 1 fits filters on the central slice of a small stack and applies them to
every slice.  Part 2 fits line and fouriergrid filters so that they reproduce
a strip + Shepp-Logan reconstruction, then checks the filters on another
slice.

Run: python demos/03_transfer_and_reference.py
"""

import numpy as np

from adaptomo import FoamSpec, IMPLEMENTATIONS, generate_foam, make_geometry, slice_phantom
from adaptomo.experiments import reference_transfer, simulate_slice, transfer

foam = generate_foam(FoamSpec(seed=0))
zs = np.linspace(-0.4, 0.4, 9)
g = make_geometry(32, 96, 96)

res = transfer([slice_phantom(foam, z) for z in zs], g, IMPLEMENTATIONS, central=4, n_l=6)
x, y, s = res["slice_specific"], res["central"], res["shepp-logan"]
slope, intercept = np.polyfit(x, y, 1)
print(f"central-slice vs slice-specific std: slope {slope:.3f}, intercept {intercept:.2e}")
print(f"pixels where Shepp-Logan spread >= slice-specific spread: {np.mean(s >= x):.1%}")
for i, z in enumerate(zs):
    sel = res["slice"] == i
    print(f"  z={z:+.2f}  mean std own {x[sel].mean():.4f}  central {y[sel].mean():.4f}  "
          f"Shepp-Logan {s[sel].mean():.4f}")

g = make_geometry(32, 128, 128)
p_train, _ = simulate_slice(slice_phantom(foam, 0.0), g)
p_test, _ = simulate_slice(slice_phantom(foam, 0.3), g)
print("\nRMSE to strip + Shepp-Logan reference (before -> after)")
for impl, r in reference_transfer(p_train, p_test, ("line", "fouriergrid"), n_l=8).items():
    print(f"  {impl:>11s}: " + ", ".join(f"{k} {b:.4f} -> {a:.4f}" for k, (b, a) in r.items()))
