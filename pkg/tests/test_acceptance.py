"""Acceptance criteria. Each test prints one PASS/FAIL line (visible with -v or -s)."""

import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from tracerdeconv.perfusion import (
    ForwardModelConfig,
    cbf_from_k,
    fit_gamma_variate,
    mtt_from_k,
    recover_curves,
    recover_h,
    recover_k,
    synthesize,
    tth_from_k,
)
from tracerdeconv.signals import (
    NoiseSpec,
    TimeGrid,
    TimeSeries,
    add_noise,
    finite_diff_derivative,
    gamma_pdf,
    gamma_residue,
)
from tracerdeconv.spectral import (
    ExtensionMode,
    FilterSpec,
    convolve_direct,
    convolve_fft,
    low_pass_filter,
    spectral_derivative,
)

from tests.oracles import AIF, GRID, IMPULSE, rel_l2

pytestmark = pytest.mark.acceptance

SEEDS = [2 * i for i in range(10)]  # C_a uses seed, C_t uses seed + 1


def report(capsys, number, ok, detail):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
    assert ok, detail


def noisy(curves, seed, sigma=0.01):
    return add_noise(curves.c_a, NoiseSpec(sigma, seed)), add_noise(curves.c_t, NoiseSpec(sigma, seed + 1))


def test_1_noiseless_round_trip(capsys):
    start = time.perf_counter()
    s = synthesize(ForwardModelConfig(1.0, AIF, IMPULSE, GRID))
    k = recover_k(s.c_a, s.c_t)
    elapsed = time.perf_counter() - start
    err = rel_l2(k.values, s.k.values)
    report(capsys, 1, err <= 1e-8 and elapsed < 1.0,
           f"k relative L2 error {err:.2e} (<= 1e-8), synthesis + recovery {elapsed * 1e3:.1f} ms (< 1 s)")


def test_2_metric_recovery(capsys, curves):
    k = recover_k(curves.c_a, curves.c_t)
    cbf = cbf_from_k(k)
    mtt = mtt_from_k(k, cbf)
    tth = tth_from_k(k, cbf, mtt)
    ok = abs(cbf - 1.0) <= 0.01 and abs(mtt / 5.0 - 1) <= 0.01 and abs(tth / 2.5 - 1) <= 0.02
    report(capsys, 2, ok, f"cbf {cbf:.6f} (1 +- 1%), mtt {mtt:.6f} (5 +- 1%), tth {tth:.6f} (2.5 +- 2%)")


def test_3_spectral_derivative_exactness(capsys):
    n = 128
    g = TimeGrid(0.0, 2 * np.pi / n, n)
    t = g.times
    worst = 0.0
    for m in range(n // 2):
        for f, df in ((np.sin(m * t), m * np.cos(m * t)), (np.cos(m * t), -m * np.sin(m * t))):
            d = spectral_derivative(TimeSeries(g, f), ExtensionMode.NONE).values
            worst = max(worst, float(np.max(np.abs(d - df))))
    report(capsys, 3, worst <= 1e-10, f"max error {worst:.2e} over sin/cos modes 0..{n // 2 - 1}, n = {n}")


def test_4_even_extension_necessity(capsys, curves):
    k = recover_k(curves.c_a, curves.c_t)
    cbf = cbf_from_k(k)
    even = rel_l2(recover_h(k, cbf, mode=ExtensionMode.EVEN_MIRROR).values, curves.h.values)
    none = rel_l2(recover_h(k, cbf, mode=ExtensionMode.NONE).values, curves.h.values)
    ratio = none / even
    report(capsys, 4, even <= 1e-6 and ratio >= 1e4,
           f"h error even {even:.2e} (<= 1e-6), none {none:.2e}, ratio {ratio:.1e} (>= 1e4)")


def test_5_noise_sensitivity(capsys, curves):
    clean = rel_l2(recover_k(curves.c_a, curves.c_t).values, curves.k.values)
    errs, flagged = [], []
    for seed in SEEDS:
        c_a, c_t = noisy(curves, seed)
        rc = recover_curves(c_a, c_t)
        errs.append(rel_l2(rc.k.values, curves.k.values))
        flagged.append(not rc.quality_ok)
    ok = min(errs) >= 10 * clean and all(flagged)
    report(capsys, 5, ok,
           f"noiseless k error {clean:.1e}; noisy (10 seeds) min {min(errs):.2f}, "
           f"ratio >= {min(errs) / clean:.1e}; flagged {sum(flagged)}/10")


def test_6_filtered_recovery(capsys, curves):
    filt = FilterSpec(0.05)
    fits, gibbs = [], []
    for seed in SEEDS:
        c_a, c_t = noisy(curves, seed)
        rc = recover_curves(c_a, c_t, filter=filt)
        p = fit_gamma_variate(rc.h)
        fits.append((p.shape_k, p.scale_q))
        # Gibbs indicator on the plain brick-wall residue
        dev = np.abs(low_pass_filter(rc.k_raw, filt).values - curves.k.values)
        n = dev.size
        edge = max(dev[: n // 20].max(), dev[-(n // 20):].max())
        interior = np.sqrt(np.mean(dev[n // 5: 4 * n // 5] ** 2))
        gibbs.append(edge / interior)
    fits = np.array(fits)
    k_mean, q_mean = fits.mean(axis=0)
    single = np.mean((np.abs(fits[:, 0] / 10 - 1) <= 0.1) & (np.abs(fits[:, 1] / 0.5 - 1) <= 0.1))
    ok = abs(k_mean / 10 - 1) <= 0.1 and abs(q_mean / 0.5 - 1) <= 0.1 and min(gibbs) >= 3
    report(capsys, 6, ok,
           f"10-seed mean fit K {k_mean:.3f}, Q {q_mean:.4f} (within 10% of 10, 0.5; "
           f"single runs within 10%: {single:.0%}); Gibbs endpoint/interior ratio min {min(gibbs):.1f} (>= 3)")


def test_7_oracle_equivalence(capsys):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 513))
        g = TimeGrid(0.0, float(rng.uniform(0.01, 1.0)), n)
        a, b = TimeSeries(g, rng.normal(size=n)), TimeSeries(g, rng.normal(size=n))
        ref = convolve_direct(a, b).values
        worst = max(worst, rel_l2(convolve_fft(a, b).values, ref))
    steps = (0.1, 0.05, 0.025)
    fd = []
    for dt in steps:
        g = TimeGrid.spanning(40.0, dt)
        h = -finite_diff_derivative(gamma_residue(IMPULSE, g)).values
        fd.append(np.max(np.abs(h - gamma_pdf(IMPULSE, g).values)))
    slope = float(np.polyfit(np.log(steps), np.log(fd), 1)[0])
    ok = worst <= 1e-10 and abs(slope - 2.0) <= 0.2
    report(capsys, 7, ok, f"fft vs direct worst {worst:.1e} (<= 1e-10, 100 cases); finite-difference order {slope:.3f} (2 +- 0.2)")


def test_8_property_suite(capsys):
    root = Path(__file__).resolve().parents[1]
    start = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-p", "no:cacheprovider", "-m", "not acceptance", "tests"],
        cwd=root, capture_output=True, text=True,
    )
    elapsed = time.perf_counter() - start
    tail = proc.stdout.strip().splitlines()[-1] if proc.stdout.strip() else proc.stderr[-200:]
    report(capsys, 8, proc.returncode == 0 and elapsed < 60,
           f"module and property suite: '{tail}', wall time {elapsed:.1f} s (< 60 s)")
