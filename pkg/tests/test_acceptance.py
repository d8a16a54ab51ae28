"""Acceptance criteria 1-10.

Every test records one ``CRITERION n: PASS|FAIL`` line (printed in the
terminal summary) before asserting, so failing criteria still report the
measured quantities.
"""

import numpy as np
import pytest

from adaptomo import experiments as ex
from adaptomo.filterbank import (apply_filter, compute_adapted_filter, expbin_basis,
                                 filter_matrix, filter_real_space, projection_residual,
                                 ramlak_kernel, standard_filter)
from adaptomo.metrics import (OTSU_BINS, ReconSet, f1_jaccard, rmse, segment, squared_bias)
from adaptomo.phantoms import FoamSpec, generate_foam, single_pixel_phantom, slice_phantom
from adaptomo.raster import ImageGrid, Sinogram, make_geometry
from adaptomo.reconstructors import (IMPLEMENTATIONS, Reconstructor, backproject, fbp,
                                     forward_project, reconstruct)

RESULTS: dict[int, str] = {}


def report(n: int, ok: bool, detail: str):
    line = f"CRITERION {n}: {'PASS' if ok else 'FAIL'} - {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def foam():
    return generate_foam(FoamSpec())


@pytest.fixture(scope="module")
def central_slice(foam):
    return slice_phantom(foam, 0.0)


@pytest.fixture(scope="module")
def foam32(central_slice):
    """Foam slice, N = N_d = 256, 32 angles, noise-free; all implementations and families."""
    g = make_geometry(32, 256, 256)
    p, gt = ex.simulate_slice(central_slice, g)
    basis = expbin_basis(256, 16)
    return p, gt, basis, ex.compare(p, IMPLEMENTATIONS, gt, basis=basis)


# --------------------------------------------------------------------------- 1

def test_criterion_1_implementation_discrepancy():
    g = make_geometry(8, 33, 33)
    p = forward_project(single_pixel_phantom(33), g)
    d_bp = np.abs(backproject("line", p).values - backproject("pixel", p).values).max()
    rec = Reconstructor("pixel", g)
    real = reconstruct(rec, filter_real_space(p, ramlak_kernel(33)))
    fourier = fbp(rec, p, standard_filter("ram-lak", 33))
    d_filt = np.abs(real.values - fourier.values).max()
    report(1, d_bp > 1e-3 and d_filt > 1e-3,
           f"line vs pixel backprojection max|d| = {d_bp:.3g} (> 1e-3); "
           f"real-space Ram-Lak vs Fourier ramp (pixel) max|d| = {d_filt:.3g} (> 1e-3)")


# --------------------------------------------------------------------------- 2

def test_criterion_2_least_squares_optimality(foam32):
    p, _, basis, res = foam32
    pv = p.values.ravel()
    rng = np.random.default_rng(2)
    worst_gap, order_ok, parts = np.inf, True, []
    for impl in IMPLEMENTATIONS:
        rec = Reconstructor(impl, p.geometry)
        F = filter_matrix(p, rec, basis)
        c_star = res["adapted"][0].filters[impl].coeffs
        best = np.linalg.norm(pv - F @ c_star)
        scale = np.abs(c_star).max()
        for k in range(100):
            # half anywhere in coefficient space, half close to the optimum at
            # relative distances 1 .. 1e-6
            if k % 2:
                c = c_star + rng.standard_normal(basis.n_b) * scale * 10.0 ** -(k // 2 % 7)
            else:
                c = rng.standard_normal(basis.n_b) * scale
            gap = np.linalg.norm(pv - F @ c) + 1e-8 * np.linalg.norm(pv) - best
            worst_gap = min(worst_gap, gap)
        r_rl = res["ram-lak"][0].residuals[impl]
        r_sl = res["shepp-logan"][0].residuals[impl]
        r_ad = res["adapted"][0].residuals[impl]
        order_ok &= r_ad < r_sl <= r_rl
        parts.append(f"{impl} {r_ad:.1f}<{r_sl:.1f}<={r_rl:.1f}")
    report(2, worst_gap >= 0 and order_ok,
           f"min optimality margin {worst_gap:.3g} (>= 0); residuals adapted<SL<=RL: "
           + ", ".join(parts))


# --------------------------------------------------------------------------- 3

def test_criterion_3_variability_reduction(foam32):
    res = foam32[3]
    s = {f: res[f][1] for f in ex.FAMILIES}
    ms = {f: s[f].mean_std for f in s}
    mode = {f: s[f].histogram.mode_bin for f in s}
    mx = {f: s[f].set_metrics["max_std"] for f in s}
    ok = (ms["adapted"] < ms["shepp-logan"] and ms["adapted"] < ms["ram-lak"]
          and mode["adapted"] <= mode["shepp-logan"] and mx["adapted"] < mx["shepp-logan"])
    report(3, ok, "mean_std RL/SL/adapted = " + "/".join(f"{ms[f]:.4f}" for f in ex.FAMILIES)
           + f"; mode bin SL {mode['shepp-logan']} vs adapted {mode['adapted']}"
           + f"; max std SL {mx['shepp-logan']:.3f} vs adapted {mx['adapted']:.3f}")


# --------------------------------------------------------------------------- 4

def test_criterion_4_sweep_trends(central_slice):
    impls = IMPLEMENTATIONS
    angles = ex.angle_sweep(central_slice, 256, (16, 32, 64, 128, 256), impls)
    fluxes = ex.flux_sweep(central_slice, 256, 64, (1e3, 1e4, 1e5, 1e6), 0, impls)

    def table(rows, key):
        out = {}
        for r in rows:
            out.setdefault(r[key], {})[r["family"]] = r
        return out

    bad, parts = [], []
    for key, rows in (("n_angles", angles), ("flux", fluxes)):
        for point, fam in table(rows, key).items():
            a, sl, rl = fam["adapted"], fam["shepp-logan"], fam["ram-lak"]
            tag = f"{key}={point:g}"
            parts.append(f"{tag}: {a['mean_std']:.4f} vs SL {sl['mean_std']:.4f}")
            if not (a["mean_std"] < sl["mean_std"] and a["mean_std"] < rl["mean_std"]):
                bad.append(f"{tag} mean_std")
            if key == "flux" and not (a["squared_bias"] <= rl["squared_bias"]
                                      and a["mean_rmse"] <= rl["mean_rmse"]):
                bad.append(f"{tag} bias/rmse")
    report(4, not bad, "mean_std adapted vs SL: " + "; ".join(parts)
           + (f" | violated at {', '.join(bad)}" if bad else ""))


# --------------------------------------------------------------------------- 5

def test_criterion_5_tiny_oracle(central_slice):
    g = make_geometry(4, 8, 8)
    p, _ = ex.simulate_slice(central_slice, g)
    rec = Reconstructor("strip", g)
    basis = expbin_basis(8, 2)
    F = filter_matrix(p, rec, basis)
    # brute-force per-basis pipeline, one column at a time
    exact = True
    for j in range(basis.n_b):
        col = forward_project(reconstruct(rec, apply_filter(p, basis.vector(j))), g).values.ravel()
        exact &= col.tobytes() == F[:, j].tobytes()
    # dense normal equations, assembled from explicit dot products
    FtF = np.array([[np.dot(F[:, i], F[:, j]) for j in range(basis.n_b)]
                    for i in range(basis.n_b)])
    Ftp = np.array([np.dot(F[:, i], p.values.ravel()) for i in range(basis.n_b)])
    c_oracle = np.linalg.solve(FtF, Ftp)
    c = compute_adapted_filter(p, rec, basis).coeffs
    rel = np.linalg.norm(c - c_oracle) / np.linalg.norm(c_oracle)
    report(5, exact and rel <= 1e-8,
           f"coefficients vs normal equations rel. error {rel:.2e} (<= 1e-8); "
           f"columns bit-exact: {exact}")


# --------------------------------------------------------------------------- 6

def test_criterion_6_filter_transfer(foam):
    zs = [-0.5 + (i + 0.5) / 64 for i in range(64)]
    g = make_geometry(32, 128, 128)
    res = ex.transfer([slice_phantom(foam, z) for z in zs], g, IMPLEMENTATIONS, central=32,
                      n_l=8)
    x, y, s = res["slice_specific"], res["central"], res["shepp-logan"]
    slope, intercept = np.polyfit(x, y, 1)
    bound = 0.02 * max(x.max(), y.max())
    frac = float(np.mean(s >= x))
    report(6, 0.9 <= slope <= 1.1 and abs(intercept) <= bound and frac >= 0.6,
           f"slope {slope:.3f} in [0.9, 1.1]; |intercept| {abs(intercept):.2e} <= {bound:.2e}; "
           f"fraction sigma_SL >= sigma_own {frac:.3f} (>= 0.6)")


# --------------------------------------------------------------------------- 7

def test_criterion_7_segmentation_reproducibility(foam32):
    res = foam32[3]

    def spread(fam, key):
        v = [m[key] for m in res[fam][1].member_metrics.values()]
        return max(v) - min(v)

    ok, parts = True, []
    for key in ("otsu", "f1", "jaccard"):
        a, b = spread("adapted", key), spread("shepp-logan", key)
        ok &= a < b
        parts.append(f"range {key} adapted {a:.4f} < SL {b:.4f}")
    f1 = {f: np.mean([m["f1"] for m in res[f][1].member_metrics.values()])
          for f in ("adapted", "shepp-logan")}
    ok &= f1["adapted"] > f1["shepp-logan"]
    report(7, ok, "; ".join(parts)
           + f"; mean F1 adapted {f1['adapted']:.4f} > SL {f1['shepp-logan']:.4f}")


# --------------------------------------------------------------------------- 8

def test_criterion_8_reference_mode(foam):
    g = make_geometry(32, 256, 256)
    p_train, _ = ex.simulate_slice(slice_phantom(foam, 0.0), g)
    p_test, _ = ex.simulate_slice(slice_phantom(foam, 0.3), g)
    res = ex.reference_transfer(p_train, p_test, ("line", "fouriergrid"))
    ok = all(after < before for r in res.values() for before, after in r.values())
    report(8, ok, "; ".join(f"{impl} {split} RMSE_r {b:.4f} -> {a:.4f}"
                            for impl, r in res.items() for split, (b, a) in r.items()))


# --------------------------------------------------------------------------- 9

def _f1_tie_tolerance(img, gt_mask, t):
    """Largest F1 change caused by moving the Otsu threshold by one histogram bin."""
    width = (img.values.max() - img.values.min()) / OTSU_BINS
    f0 = f1_jaccard(segment(img, t), gt_mask)[0]
    return max(abs(f1_jaccard(segment(img, t + d), gt_mask)[0] - f0) for d in (-width, width))


def test_criterion_9_zinger_failure_mode(foam):
    # N = 128 keeps the 512-angle SIRT system matrix within desk memory
    slc = slice_phantom(foam, 0.0)
    g = make_geometry(512, 128, 128)
    p_z, gt = ex.simulate_slice(slc, g, zingers=(1e-3, 10.0, 3))
    z = ex.zinger_demo(p_z, gt, sirt_iterations=800, n_l=16)
    p_0, _ = ex.simulate_slice(slc, g)
    clean = ex.zinger_demo(p_0, gt, sirt_iterations=1, n_l=16)
    f1 = {k: v["f1"] for k, v in z.items()}
    f1_0 = {k: clean[k]["f1"] for k in ("shepp-logan", "adapted")}
    tol = _f1_tie_tolerance(clean["shepp-logan"]["image"], ex.binary_truth(gt),
                            clean["shepp-logan"]["otsu"])
    corrupted_ok = f1["shepp-logan"] > f1["adapted"] and f1["shepp-logan"] > f1["sirt"]
    clean_ok = f1_0["adapted"] >= f1_0["shepp-logan"] - tol
    report(9, corrupted_ok and clean_ok,
           f"zingers: F1 SL {f1['shepp-logan']:.4f} > adapted {f1['adapted']:.4f} and "
           f"> SIRT-800 {f1['sirt']:.4f}; no zingers: F1 adapted {f1_0['adapted']:.4f} vs "
           f"SL {f1_0['shepp-logan']:.4f} (tie tolerance {tol:.4f})")


# --------------------------------------------------------------------------- 10

def test_criterion_10_numerical_foundations(central_slice):
    rng = np.random.default_rng(10)
    g = make_geometry(16, 48, 40)
    worst = {}
    # strip adjoint identity
    adj = 0.0
    for _ in range(5):
        x = ImageGrid(40, rng.standard_normal((40, 40)))
        q = Sinogram(g, rng.standard_normal((16, 48)))
        lhs = np.vdot(forward_project(x, g).values, q.values)
        rhs = np.vdot(x.values, backproject("strip", q).values) / (np.pi / 16)
        adj = max(adj, abs(lhs - rhs) / abs(lhs))
    worst["adjoint"] = (adj, 1e-10)
    # linearity of every reconstructor and of apply_filter
    q1, q2 = (Sinogram(g, rng.standard_normal((16, 48))) for _ in range(2))
    a, b = 1.7, -0.4
    q12 = q1.with_values(a * q1.values + b * q2.values)
    lin = 0.0
    for impl in IMPLEMENTATIONS:
        rec = Reconstructor(impl, g)
        want = a * reconstruct(rec, q1).values + b * reconstruct(rec, q2).values
        lin = max(lin, np.linalg.norm(reconstruct(rec, q12).values - want) / np.linalg.norm(want))
    h = standard_filter("shepp-logan", 48)
    want = a * apply_filter(q1, h).values + b * apply_filter(q2, h).values
    lin = max(lin, np.linalg.norm(apply_filter(q12, h).values - want) / np.linalg.norm(want))
    worst["linearity"] = (lin, 1e-9)
    # scaling invariance of the adapted filter
    p, _ = ex.simulate_slice(central_slice, g)
    basis = expbin_basis(48, 4)
    sc = 0.0
    for impl in IMPLEMENTATIONS:
        rec = Reconstructor(impl, g)
        c1 = compute_adapted_filter(p, rec, basis).coeffs
        c2 = compute_adapted_filter(p.with_values(3.7 * p.values), rec, basis).coeffs
        sc = max(sc, np.linalg.norm(c1 - c2) / np.linalg.norm(c1))
    worst["scaling"] = (sc, 1e-8)
    # metric identities
    ident = 0.0
    for _ in range(20):
        s1 = ImageGrid(40, (rng.random((40, 40)) < 0.4).astype(float))
        s2 = ImageGrid(40, (rng.random((40, 40)) < 0.5).astype(float))
        f1, j = f1_jaccard(s1, s2)
        ident = max(ident, abs(f1 - 2 * j / (1 + j)))
        r, t = ImageGrid(40, rng.random((40, 40))), ImageGrid(40, rng.random((40, 40)))
        ident = max(ident, abs(rmse(r, t) ** 2 - squared_bias(ReconSet((("r", r),)), t)[1]))
    worst["metric identities"] = (ident, 1e-12)
    report(10, all(v <= tol for v, tol in worst.values()),
           "; ".join(f"{k} {v:.1e} (<= {tol:.0e})" for k, (v, tol) in worst.items()))
