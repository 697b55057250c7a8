"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line
and enforcing its runtime budget.  Run with ``pytest tests/test_acceptance.py -v -s``."""

import math
import time
from fractions import Fraction

import mpmath as mp
import numpy as np

from carpetlab import (
    ApproxSquare,
    DiscreteMeasure,
    Line,
    RotationOrbit,
    SymbolWord,
    box_packing_dimension,
    condition_rescale,
    dimension_report,
    empirical_measures_linear,
    estimate_slice_dimension,
    exact_cover_cells,
    hausdorff_chain,
    hausdorff_dimension,
    magnify_step,
    new_carpet,
    optimize_tradeoff,
    packing_chain,
    slice_counts,
    slice_cover,
    star_dimension,
)
from carpetlab.proptest import example_carpet, family_3x2, interior_word, random_carpet
from carpetlab.scenery import SceneryState

THETA = math.log(2) / math.log(3)


def report(num, name, ok, elapsed, budget, detail=""):
    status = "PASS" if ok else "FAIL"
    extra = f" {detail}" if detail else ""
    print(f"ACCEPTANCE {num} {name}: {status} ({elapsed:.1f}s / budget {budget}s){extra}")


def mp_dimension_triple(c):
    with mp.workdps(60):
        log_m, log_n = mp.log(c.m), mp.log(c.n)
        theta = log_n / log_m
        total = mp.fsum(mp.mpf(a) ** theta for a in c.row_count.values())
        r = len(c.rows)
        dim_h = mp.log(total) / log_n
        dim_bp = mp.log(r) / log_n + (mp.log(c.size) - mp.log(r)) / log_m
        dim_star = mp.log(r) / log_n + mp.log(max(c.row_count.values())) / log_m
        return float(dim_h), float(dim_bp), float(dim_star)


def test_criterion_1_formula_fidelity():
    budget = 10.0
    t0 = time.monotonic()
    rng = np.random.default_rng(101)
    carpets = family_3x2() + [random_carpet(rng) for _ in range(1000)]
    worst = 0.0
    for c in carpets:
        dh, dbp, ds = mp_dimension_triple(c)
        worst = max(
            worst,
            abs(hausdorff_dimension(c) - dh),
            abs(box_packing_dimension(c) - dbp),
            abs(star_dimension(c) - ds),
        )
    elapsed = time.monotonic() - t0
    ok = worst <= 1e-12 and elapsed < budget
    report(1, "formula fidelity", ok, elapsed, budget, f"max |err| = {worst:.2e}")
    assert worst <= 1e-12
    assert elapsed < budget


def test_criterion_2_ordering_chain():
    budget = 10.0
    t0 = time.monotonic()
    tol = 1e-12
    ok = True
    for c in family_3x2():
        dh, dbp, ds = (
            hausdorff_dimension(c),
            box_packing_dimension(c),
            star_dimension(c),
        )
        if not (dh <= dbp + tol and dbp <= ds + tol):
            ok = False
        equal = abs(dh - dbp) <= tol and abs(dbp - ds) <= tol
        if equal != c.uniform_rows:
            ok = False
    elapsed = time.monotonic() - t0
    report(2, "ordering chain", ok, elapsed, budget)
    assert ok
    assert elapsed < budget


def test_criterion_3_bound_improvement():
    budget = 10.0
    t0 = time.monotonic()
    rng = np.random.default_rng(103)
    ok = True
    for c in family_3x2() + [random_carpet(rng) for _ in range(1000)]:
        rep = dimension_report(c)
        if not (
            rep.slice_bound_h <= rep.slice_bound_p + 1e-12
            and rep.slice_bound_p <= rep.prior_bound + 1e-12
        ):
            ok = False
    # grid-search oracle for the weight optimization, step 1e-6
    grid = np.arange(0.0, 1.0 + 1e-6, 1e-6)
    worst = 0.0
    pairs = [(1.63093, 1.36907), (2.0, 2.0), (1.0, 0.7)]
    pairs += [(d := rng.uniform(1e-3, 2.0), rng.uniform(0.0, d)) for _ in range(50)]
    for ds, dx in pairs:
        _, value = optimize_tradeoff(ds, dx)
        oracle = float(np.max(np.minimum(grid * (ds - 1.0), dx - grid)))
        worst = max(worst, abs(value - oracle))
    elapsed = time.monotonic() - t0
    ok = ok and worst <= 1e-6 and elapsed < budget
    report(3, "bound improvement", ok, elapsed, budget, f"grid-oracle gap = {worst:.2e}")
    assert ok
    assert elapsed < budget


def test_criterion_4_gibbs_chains():
    budget = 30.0
    t0 = time.monotonic()
    rng = np.random.default_rng(104)
    tol = 1e-9
    worst_slack = 0.0
    worst_equality = 0.0
    for c in family_3x2():
        v = rng.dirichlet(np.ones(len(c.rows)), size=10_000)
        dbp, dh = box_packing_dimension(c), hausdorff_dimension(c)
        worst_slack = min(
            worst_slack,
            float(np.min(dbp - packing_chain(c, v))),
            float(np.min(dh - hausdorff_chain(c, v))),
        )
        a = np.array([float(c.row_count[j]) for j in c.rows])
        eq_p = a / a.sum()
        eq_h = a**c.theta / (a**c.theta).sum()
        worst_equality = max(
            worst_equality,
            abs(dbp - float(packing_chain(c, eq_p))),
            abs(dh - float(hausdorff_chain(c, eq_h))),
        )
    elapsed = time.monotonic() - t0
    ok = worst_slack >= -tol and worst_equality <= tol and elapsed < budget
    report(
        4,
        "entropy chain domination",
        ok,
        elapsed,
        budget,
        f"min slack = {worst_slack:.2e}, equality gap = {worst_equality:.2e}",
    )
    assert ok
    assert elapsed < budget


def test_criterion_5_return_time_bounds():
    budget = 60.0
    t0 = time.monotonic()
    k_max = 100_000
    ks = np.arange(k_max + 1, dtype=np.float64)
    floor_tk = np.floor(THETA * ks)
    c_small = 0.0
    c_large = 0.0
    sup_dev = 0.0
    for i in range(1000):
        orbit = RotationOrbit(THETA, i / 1000.0)
        counts = orbit.return_counts(k_max)
        dev = np.abs(counts - floor_tk)
        c_small = max(c_small, float(dev[: 10_001].max()))
        c_large = max(c_large, float(dev.max()))
        sup_dev = max(sup_dev, float(np.abs(counts - THETA * ks).max()))
    elapsed = time.monotonic() - t0
    ok = c_small == c_large and sup_dev <= c_large + 1.0 and elapsed < budget
    report(
        5,
        "return-time bounds",
        ok,
        elapsed,
        budget,
        f"C = {c_large:.0f} stable from k<=1e4 to k<=1e5, sup|R - theta k| = {sup_dev:.3f}",
    )
    assert ok
    assert elapsed < budget


def test_criterion_6_magnification_identity():
    budget = 60.0
    t0 = time.monotonic()
    rng = np.random.default_rng(106)
    worst = 0.0
    ok = True
    for _ in range(100):
        c = random_carpet(rng, m_max=5)
        word = interior_word(rng, c, 20)
        x = sum(a / c.m ** (i + 1) for i, (a, _) in enumerate(word))
        y = sum(b / c.n ** (i + 1) for i, (_, b) in enumerate(word))
        pts = np.vstack([[x, y], rng.random((int(rng.integers(3, 40)), 2))])
        mu = DiscreteMeasure(pts, rng.dirichlet(np.ones(len(pts))))
        u0 = float(rng.random())
        xw = SymbolWord(c.m, tuple(a for a, _ in word))
        yw = SymbolWord(c.n, tuple(b for _, b in word))
        state0 = SceneryState(mu=mu, x_word=xw, y_word=yw, u=u0, omega=yw)
        orbit = RotationOrbit(c.theta, u0)
        state = state0
        for k in range(1, 13):
            state = magnify_step(state, c.theta)
            square = ApproxSquare(xw.prefix(orbit.return_count(k - 1)), yw.prefix(k))
            direct = condition_rescale(mu, square)
            if len(direct) != len(state.mu):
                ok = False
                break
            worst = max(
                worst,
                float(np.max(np.abs(direct.points - state.mu.points))),
                float(np.max(np.abs(direct.weights - state.mu.weights))),
            )
    elapsed = time.monotonic() - t0
    ok = ok and worst <= 1e-9 and elapsed < budget
    report(6, "magnification identity", ok, elapsed, budget, f"max atom gap = {worst:.2e}")
    assert ok
    assert elapsed < budget


def test_criterion_7_window_decomposition():
    budget = 30.0
    t0 = time.monotonic()
    rng = np.random.default_rng(107)
    c = example_carpet()
    ok = True
    worst_large = 0.0
    for _ in range(20):
        symbols = tuple(int(s) for s in rng.choice(c.rows, size=10_008))
        word = SymbolWord(c.n, symbols)
        r_small = empirical_measures_linear(word, 100, c.theta, block=6).residual_tv
        r_large = empirical_measures_linear(word, 10_000, c.theta, block=6).residual_tv
        worst_large = max(worst_large, r_large)
        if not (r_large < r_small and r_large < 0.05):
            ok = False
    elapsed = time.monotonic() - t0
    ok = ok and elapsed < budget
    report(
        7,
        "window decomposition residual",
        ok,
        elapsed,
        budget,
        f"max residual at N=1e4: {worst_large:.4f}",
    )
    assert ok
    assert elapsed < budget


def test_criterion_8_slice_sanity():
    budget = 120.0
    t0 = time.monotonic()
    full = new_carpet(3, 2, [(x, y) for x in range(3) for y in range(2)])
    line = Line(slope=1.0, intercept=0.0)
    counts = slice_counts(full, line, range(4, 13))
    est = estimate_slice_dimension(full, counts, drop_head=3)
    slope_ok = abs(est.slope - 1.0) <= 0.05

    rng = np.random.default_rng(108)
    example = example_carpet()
    superset_ok = True
    for i in range(100):
        c = example if i % 2 else full
        depth = int(rng.integers(3, 7))
        slope = float(c.m) ** float(rng.uniform(0.0, 1.0)) * (1 if rng.random() < 0.8 else -1)
        t = float(rng.uniform(-0.5, 1.2))
        fline = Line(slope=slope, intercept=t)
        cover = slice_cover(c, fline, depth)
        got = {(sq.x_word.symbols, sq.y_word.symbols) for sq in cover.cells}
        exact = exact_cover_cells(c, Fraction(slope), Fraction(t), depth, fline.exponent(c.m))
        if not exact <= got:
            superset_ok = False
    elapsed = time.monotonic() - t0
    ok = slope_ok and superset_ok and elapsed < budget
    report(
        8,
        "slice sanity",
        ok,
        elapsed,
        budget,
        f"diagonal slope = {est.slope:.3f}, conservative on 100 rational lines: {superset_ok}",
    )
    assert ok
    assert elapsed < budget


def test_criterion_9_bound_diagnostic():
    # report-only: slopes of random slices are tabulated against the packing
    # slice bound; exceedances are flagged for inspection, never asserted
    budget = 120.0
    t0 = time.monotonic()
    rng = np.random.default_rng(109)
    c = example_carpet()
    bound = dimension_report(c).slice_bound_p
    rows = []
    flagged = 0
    for _ in range(50):
        u0 = float(rng.uniform(0.001, 0.999))
        t = float(rng.uniform(-0.5, 1.0))
        sign = 1 if rng.random() < 0.8 else -1
        line = Line.from_exponent(c.m, u0, t, sign=sign)
        counts = slice_counts(c, line, range(6, 14))
        try:
            est = estimate_slice_dimension(c, counts, drop_head=0)
            slope = est.slope
        except Exception:
            slope = 0.0
        exceeds = slope > bound + 0.15
        flagged += exceeds
        rows.append((u0, t, slope, exceeds))
    elapsed = time.monotonic() - t0
    print(f"\n  slice-slope diagnostic vs packing bound {bound:.4f} (+0.15 slack):")
    print("  u0        t         slope     flag")
    for u0, t, slope, exceeds in rows:
        mark = "CHECK" if exceeds else ""
        print(f"  {u0:8.4f}  {t:8.4f}  {slope:8.4f}  {mark}")
    ok = elapsed < budget
    report(
        9,
        "slice-bound diagnostic (report-only)",
        ok,
        elapsed,
        budget,
        f"{flagged}/50 lines flagged above bound + 0.15",
    )
    assert len(rows) == 50
    assert elapsed < budget
