"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run ``pytest tests/test_acceptance.py -s`` to see the lines inline; they are
also collected into an "acceptance criteria" section of the terminal summary.
"""
import math
import time

import numpy as np
import pytest

from oracles import (betti_numbers, bottleneck_bruteforce, kth_tent, random_diagram, random_distance_matrix,
                     sublevel_components, wasserstein_bruteforce)
from tdats.embed import local_minima_count, sublevel_persistence
from tdats.homology import betti_curve, bottleneck, rips_persistence, wasserstein
from tdats.inference import GroupSample, permutation_test
from tdats.landscape import landscape_from_diagram, lp_norm
from tdats.homology import PersistenceDiagram
from tdats.pipeline import analyze_panel, load_config, run_pipeline
from tdats.sim import Ar2Spec, TimeSeriesPanel, preset_example, simulate_ar2
from tdats.spectral import smoothed_cross_spectrum

pytestmark = pytest.mark.slow


def test_criterion_01_betti_oracle(criterion):
    rng = np.random.default_rng(20240101)
    t0 = time.perf_counter()
    mismatches, probes_checked = 0, 0
    for trial in range(100):
        P = int(rng.integers(3, 9))
        max_dim = int(rng.integers(2, 4))
        D = random_distance_matrix(rng, P, ties=trial % 4 == 0)
        curve = betti_curve(rips_persistence(D, max_dim))
        th = np.unique(D[np.triu_indices(P, 1)])
        for eps in np.concatenate([[0.0], th, (th[:-1] + th[1:]) / 2, [th[-1] + 1]]):
            probes_checked += 1
            if [curve(k, eps) for k in range(max_dim)] != betti_numbers(D, eps, max_dim):
                mismatches += 1
    elapsed = time.perf_counter() - t0
    ok = mismatches == 0 and elapsed < 60
    criterion(1, ok, f"100 matrices, {probes_checked} thresholds, {mismatches} mismatches, {elapsed:.1f}s (< 60s)")
    assert ok


def test_criterion_02_geometry_fixtures(criterion):
    sq = np.array([[0, 0], [1, 0], [1, 1], [0, 1.0]])
    D = np.linalg.norm(sq[:, None] - sq[None], axis=-1)
    h1 = rips_persistence(D).finite(1).tolist()
    tri = np.array([[0, 0], [1, 0], [0.5, math.sqrt(3) / 2]])
    pts = np.vstack([tri, tri + [11.0, 0]])
    pd = rips_persistence(np.linalg.norm(pts[:, None] - pts[None], axis=-1))
    deaths = sorted(pd.finite(0)[:, 1])
    ok = (h1 == [[1.0, math.sqrt(2)]]
          and np.allclose(deaths, [1, 1, 1, 1, 10], atol=1e-12)
          and len(pd.infinite(0)) == 1 and pd.finite(1).shape == (0, 2))
    criterion(2, ok, f"square H1={h1}; triangles H0 deaths={np.round(deaths, 12).tolist()}, "
                     f"H1 bars={len(pd.finite(1))}")
    assert ok


def test_criterion_03_diagram_metrics(criterion):
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(50):
        a = random_diagram(rng, int(rng.integers(0, 6)))
        b = random_diagram(rng, int(rng.integers(0, 6)))
        worst = max(worst, abs(bottleneck(a, b) - bottleneck_bruteforce(a, b)))
        for p in (1, 2):
            worst = max(worst, abs(wasserstein(a, b, p=p) - wasserstein_bruteforce(a, b, p)))
    ok = worst <= 1e-10
    criterion(3, ok, f"50 pairs, max |fast - exhaustive| = {worst:.2e} (<= 1e-10)")
    assert ok


def test_criterion_04_stability(criterion):
    rng = np.random.default_rng(4)
    delta = 0.01
    worst = 0.0
    for _ in range(50):
        P = int(rng.integers(4, 13))
        D = random_distance_matrix(rng, P)
        E = np.triu(rng.uniform(-delta, delta, D.shape), 1)
        D2 = np.clip(D + E + E.T, 0, None)
        a, b = rips_persistence(D), rips_persistence(D2)
        worst = max(worst, *(bottleneck(a, b, k) for k in (0, 1)))
    ok = worst <= delta + 1e-12
    criterion(4, ok, f"50 matrices, max bottleneck displacement {worst:.4g} (<= {delta})")
    assert ok


def test_criterion_05_ar2_peak(criterion):
    SR, T = 100.0, 2**14
    spec = Ar2Spec(M=1.05, psi=10 / 100)
    peaks = []
    for seed in range(20):
        S = smoothed_cross_spectrum(TimeSeriesPanel(simulate_ar2(spec, T, seed=seed)[None, :], SR=SR))
        peaks.append(S.freqs_hz[np.argmax(S.values[:, 0, 0].real)])
    peaks = np.array(peaks)
    ok = bool(np.all((peaks >= 8) & (peaks <= 12)))
    criterion(5, ok, f"20 seeds, peaks {peaks.min():.2f}-{peaks.max():.2f} Hz (inside 8-12 Hz)")
    assert ok


def test_criterion_06_example1_two_cycles(criterion):
    cfg = load_config(data={"preset": "1", "T": 2**13, "bands": {"beta": [12, 30]}})
    factors = []
    for seed in range(20):
        panel, _ = preset_example("1", seed=seed, T=2**13, SR=cfg.SR)
        p = np.sort(analyze_panel(panel, cfg).diagrams["beta"].persistence(1))[::-1]
        third = p[2] if p.size > 2 else 0.0
        factors.append(np.inf if third == 0 else p[1] / third if p.size >= 2 else 0.0)
    factors = np.array(factors)
    hits = int(np.sum(factors >= 2))
    ok = hits >= 18
    criterion(6, ok, f"{hits}/20 seeds with top-two H1 persistence >= 2x the third "
                     f"(min factor {factors.min():.3g}; need >= 18)")
    assert ok


def _subject_landscapes(preset, c, seeds, cfg):
    out = []
    for s in seeds:
        panel, _ = preset_example(preset, c=c, seed=int(s), T=cfg.T, SR=cfg.SR)
        out.append(analyze_panel(panel, cfg).landscapes["alpha", 1])
    return out


def test_criterion_07_example3_discrimination(criterion):
    cfg = load_config(data={"preset": "3-cyclic", "T": 2048, "bands": {"alpha": [8, 12]}})
    t0 = time.perf_counter()
    power = []
    for rep in range(50):
        seeds = 100_000 + 40 * rep + np.arange(40)
        g1 = GroupSample(_subject_landscapes("3-cyclic", 0.5, seeds[:20], cfg), "cyclic")
        g2 = GroupSample(_subject_landscapes("3-random", 0.5, seeds[20:], cfg), "random")
        power.append(permutation_test(g1, g2, B=999, alpha=0.05, seed=rep).reject)
    size = []
    for rep in range(200):
        seeds = 500_000 + 40 * rep + np.arange(40)
        g1 = GroupSample(_subject_landscapes("3-cyclic", 1.0, seeds[:20], cfg), "a")
        g2 = GroupSample(_subject_landscapes("3-cyclic", 1.0, seeds[20:], cfg), "b")
        size.append(permutation_test(g1, g2, B=999, alpha=0.05, seed=rep).reject)
    elapsed = time.perf_counter() - t0
    pw, sz = float(np.mean(power)), float(np.mean(size))
    ok = pw >= 0.8 and 0.02 <= sz <= 0.09 and elapsed < 600
    criterion(7, ok, f"power {pw:.2f} over 50 (>= 0.80), null rejection {sz:.3f} over 200 (in [0.02, 0.09]), "
                     f"{elapsed:.0f}s (< 600s)")
    assert ok


def test_criterion_08_landscapes(criterion):
    rng = np.random.default_rng(8)
    probes, bad = 0, 0
    while probes < 1000:
        pairs = random_diagram(rng, int(rng.integers(1, 9)))
        l = landscape_from_diagram(PersistenceDiagram({1: pairs}), 1, max_levels=16)
        t = rng.uniform(-0.2, 2.2, 10)
        vals = l.evaluate(t)
        for i, x in enumerate(t):
            for k in range(len(pairs)):
                bad += vals[k, i] != kth_tent(pairs, x, k)
            probes += 1
    norm = lp_norm(landscape_from_diagram(PersistenceDiagram({1: [[0.0, 2.0]]}), 1), 2, levels=1)
    err = abs(norm - math.sqrt(2 / 3))
    ok = bad == 0 and err <= 1e-12
    criterion(8, ok, f"{probes} probes, {bad} inexact values; |L2 - sqrt(2/3)| = {err:.1e} (<= 1e-12)")
    assert ok


def test_criterion_09_morse(criterion):
    pd = sublevel_persistence([3.0, 0.0, 2.0, 1.0, 3.0])
    w_ok = pd.finite(0).tolist() == [[1.0, 2.0]] and pd.infinite(0).tolist() == [0.0]
    rng = np.random.default_rng(9)
    bad = 0
    for _ in range(100):
        y = rng.standard_normal(200)
        d = sublevel_persistence(y)
        f = d.finite(0)
        bad += len(f) + 1 != local_minima_count(y)
        for a in np.unique(y):
            bad += int(np.sum((f[:, 0] <= a) & (f[:, 1] > a))) + 1 != sublevel_components(y, a)
    ok = w_ok and bad == 0
    criterion(9, ok, f"W-shape bars {pd.finite(0).tolist()} + (0, inf); 100 series, {bad} count mismatches")
    assert ok


def _scale_config(tmp_path):
    P = 19
    ring = np.zeros((P, P))
    for i in range(P):
        ring[i, i] = ring[i, (i + 1) % P] = 1.0
    rng = np.random.default_rng(2024)
    rand = np.zeros((P, P))
    for i in range(P):
        rand[i, rng.choice(P, size=int(rng.integers(1, 4)), replace=False)] = 1.0
    return {"T": 4096, "seed": 1,
            "groups": {"ring": {"mixing": {"A": ring.tolist(), "c": 0.5}, "n_subjects": 50},
                       "random": {"mixing": {"A": rand.tolist(), "c": 0.5}, "n_subjects": 50}},
            "test": {"B": 100_000, "seed": 0}}


def test_criterion_10_scale(criterion, tmp_path):
    cfg = load_config(data=_scale_config(tmp_path), output=str(tmp_path / "scale"))
    t0 = time.perf_counter()
    manifest = run_pipeline(cfg)
    elapsed = time.perf_counter() - t0
    n_reports = sum(len(d) for d in manifest["reports"].values())
    B_ok = all(r["B"] == 100_000 for d in manifest["reports"].values() for r in d.values())
    ok = elapsed < 900 and n_reports == 10 and B_ok and len(cfg.bands) == 5
    criterion(10, ok, f"P=19, 2x50 subjects, 5 bands, B=100000: {n_reports} reports in {elapsed:.0f}s (< 900s)")
    assert ok
