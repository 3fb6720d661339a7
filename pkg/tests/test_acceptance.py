"""Acceptance gate: ten end-to-end checks with pinned tolerances.

Each test prints one `ACCEPTANCE <n> <name>: PASS|FAIL (<detail>)` line
(visible with -s) and then asserts, so a red run still shows which gate
broke and by how much. The two expensive fixtures (the 5-seed comparison
run and the 20-seed epsilon sweep) are shared across criteria.
"""

import math
import time
from dataclasses import replace

import mpmath as mp
import numpy as np
import pytest
import scipy.stats

from fedsilo import (
    Dataset,
    ExperimentConfig,
    FederationConfig,
    LossKind,
    OptimizerConfig,
    SiteUpdate,
    SyntheticSpec,
    aggregate,
    compute_slack,
    f1_score,
    generate_synthetic,
    generate_synthetic_raw,
    make_perturbation,
    minimize,
    objective,
    objective_grad,
    run_experiment,
    run_federation,
    sample_noise,
    save_csv,
    write_results_csv,
)
from fedsilo.experiments import expected_row_count
from fedsilo.privacy import PrivacyParams


def report(number, name, ok, detail):
    print(f"ACCEPTANCE {number} {name}: {'PASS' if ok else 'FAIL'} ({detail})")
    assert ok, f"criterion {number} {name}: {detail}"


SWEEP_OPT = OptimizerConfig(learning_rate=0.1, epochs=20, batch_size=64,
                            tolerance=1e-4)


@pytest.fixture(scope="module")
def comparison_run():
    """Criterion 1 workload: centralized vs federated, 5 seeds, no DP."""
    cfg = ExperimentConfig(
        synthetic="separable",
        modes=("CENTRALIZED", "FEDERATED"),
        losses=(LossKind.logistic(),),
        lam=0.01,
        optimizer=SWEEP_OPT,
        seeds=(0, 1, 2, 3, 4),
        cv_folds=0,
    )
    start = time.monotonic()
    rows = run_experiment(cfg)
    return rows, time.monotonic() - start


@pytest.fixture(scope="module")
def sweep_run():
    """Criteria 2 and 3 workload: 20 seeds across the epsilon grid."""
    cfg = ExperimentConfig(
        synthetic="separable",
        modes=("FEDERATED", "FEDERATED_DP"),
        losses=(LossKind.logistic(),),
        lam=0.01,
        epsilon_grid=(0.01, 0.05, 0.1, 0.25, 0.5),
        optimizer=SWEEP_OPT,
        seeds=tuple(range(20)),
        cv_folds=0,
    )
    start = time.monotonic()
    rows = run_experiment(cfg)
    return rows, time.monotonic() - start


def mean_f1(rows, mode, epsilon=None):
    scores = [
        r.f1
        for r in rows
        if r.mode == mode and r.fold == "holdout" and r.epsilon == epsilon
    ]
    assert scores
    return float(np.mean(scores)), len(scores)


def test_criterion_01_federated_matches_centralized(comparison_run):
    rows, elapsed = comparison_run
    central, n_c = mean_f1(rows, "CENTRALIZED")
    federated, n_f = mean_f1(rows, "FEDERATED")
    diff = abs(federated - central)
    ok = diff <= 0.03 and elapsed <= 60.0 and n_c == n_f == 5
    report(
        1, "federated-vs-centralized", ok,
        f"central={central:.4f} federated={federated:.4f} |diff|={diff:.4f} "
        f"<= 0.03, {elapsed:.1f}s <= 60s, 5 seeds",
    )


def test_criterion_02_epsilon_monotonicity(sweep_run):
    rows, elapsed = sweep_run
    grid = (0.01, 0.05, 0.1, 0.25, 0.5)
    means = []
    for eps in grid:
        mean, count = mean_f1(rows, "FEDERATED_DP", epsilon=eps)
        assert count == 20
        means.append(mean)
    drops = [a - b for a, b in zip(means, means[1:]) if b < a]
    ok_trend = len(drops) == 0 or (len(drops) == 1 and drops[0] <= 0.01)
    ok = ok_trend and elapsed <= 600.0
    report(
        2, "epsilon-monotonicity", ok,
        "means=" + "/".join(f"{m:.4f}" for m in means)
        + f", inversions={len(drops)} (allowed: one <= 0.01), "
        f"{elapsed:.1f}s <= 600s",
    )


def test_criterion_03_dp_utility_degradation(sweep_run):
    rows, _ = sweep_run
    fed, n_fed = mean_f1(rows, "FEDERATED")
    dp, n_dp = mean_f1(rows, "FEDERATED_DP", epsilon=0.01)
    gap = fed - dp
    ok = gap >= 0.05 and n_fed == 20 and n_dp == 20
    report(
        3, "dp-utility-degradation", ok,
        f"federated={fed:.4f} dp(eps=0.01)={dp:.4f} gap={gap:.4f} >= 0.05, "
        "20 seeds each",
    )


def test_criterion_04_one_site_equivalence():
    data = generate_synthetic(
        SyntheticSpec(n=400, dim=6, positive_rate=0.4, class_separation=3.0,
                      seed=17)
    )
    epochs_per_round, rounds = 5, 4
    fed_cfg = FederationConfig(
        num_sites=1,
        rounds=rounds,
        optimizer=OptimizerConfig(learning_rate=0.2, epochs=epochs_per_round,
                                  batch_size=None, tolerance=0.0, seed=9),
        master_seed=123,
    )
    w_fed, logs = run_federation(data, LossKind.logistic(), 0.01, fed_cfg)
    central = minimize(
        data, LossKind.logistic(), 0.01, None, np.zeros(data.dim),
        OptimizerConfig(learning_rate=0.2, epochs=epochs_per_round * rounds,
                        batch_size=None, tolerance=0.0, seed=777),
    )
    same_weights = np.array_equal(w_fed, central.weights)
    same_trace = all(
        logs[r - 1].global_loss == central.loss_history[epochs_per_round * r - 1]
        for r in range(1, rounds + 1)
    )
    ok = same_weights and same_trace
    report(
        4, "one-site-equivalence", ok,
        f"weights bit-identical={same_weights}, "
        f"round losses match epoch trace={same_trace}",
    )


def test_criterion_05_slack_formula_oracle():
    def oracle(eps, c, n, lam):
        with mp.workdps(50):
            q = mp.mpf(c) / (mp.mpf(n) * mp.mpf(lam))
            eps_p = mp.mpf(eps) - 2 * mp.log1p(q)
            if eps_p > 0:
                return eps_p, mp.mpf(0)
            delta = mp.mpf(c) / (mp.mpf(n) * mp.expm1(mp.mpf(eps) / 4)) - mp.mpf(lam)
            return mp.mpf(eps) / 2, delta

    rng = np.random.default_rng(2718)
    worst = 0.0
    branches = {1: 0, 2: 0}
    for i in range(100):
        c = float(rng.choice([0.25, 1.0, 2.0]))
        n = int(rng.integers(10, 100_000))
        lam = float(10 ** rng.uniform(-4, 0))
        threshold = 2.0 * math.log1p(c / (n * lam))
        if i % 2 == 0:  # first branch, safely above the threshold
            eps = threshold * float(rng.uniform(1.5, 10.0)) + float(rng.uniform(0, 1))
            branches[1] += 1
        else:  # second branch, safely below
            eps = threshold * float(rng.uniform(0.1, 0.7))
            branches[2] += 1
        got_eff, got_delta = compute_slack(eps, c, n, lam)
        want_eff, want_delta = oracle(eps, c, n, lam)
        with mp.workdps(50):
            rel_eff = abs(mp.mpf(got_eff) - want_eff) / abs(want_eff)
            if want_delta == 0:
                rel_delta = mp.mpf(0) if got_delta == 0.0 else mp.inf
            else:
                rel_delta = abs(mp.mpf(got_delta) - want_delta) / abs(want_delta)
            worst = max(worst, float(rel_eff), float(rel_delta))
    ok = worst <= 1e-12 and branches[1] == 50 and branches[2] == 50
    report(
        5, "slack-formula-oracle", ok,
        f"worst relative error {worst:.2e} <= 1e-12 over 100 points "
        f"({branches[1]} first-branch, {branches[2]} second-branch)",
    )


def test_criterion_06_noise_sampler_statistics():
    dim, eps_eff = 10, 0.05
    draws = sample_noise(dim, eps_eff, seed=606, size=100_000)
    norms = np.linalg.norm(draws, axis=1)
    mean_norm = float(norms.mean())
    ks_stat, _ = scipy.stats.kstest(norms, "gamma", args=(dim, 0.0, 2.0 / eps_eff))
    dirs = draws / norms[:, None]
    mean_dir = float(np.linalg.norm(dirs.mean(axis=0)))
    ok = (
        abs(mean_norm - 400.0) <= 0.02 * 400.0
        and ks_stat <= 0.01
        and mean_dir <= 0.02
    )
    report(
        6, "noise-sampler-statistics", ok,
        f"mean||b||={mean_norm:.2f} (target 400 +- 2%), KS={ks_stat:.4f} <= 0.01, "
        f"||mean direction||={mean_dir:.4f} <= 0.02",
    )


def test_criterion_07_gradient_correctness():
    rng = np.random.default_rng(7777)
    kinds = [LossKind.logistic(), LossKind.huber_hinge(),
             LossKind.smoothed_perceptron()]
    worst = 0.0
    for i in range(50):
        n = int(rng.integers(5, 51))
        d = int(rng.integers(2, 11))
        X = rng.standard_normal((n, d))
        X /= np.linalg.norm(X, axis=1).max()
        y = rng.choice([-1.0, 1.0], n)
        data = Dataset(X, y)
        w = rng.standard_normal(d) * 0.8
        lam = float(10 ** rng.uniform(-3, -1))
        kind = kinds[i % 3]
        perturb = None
        if i % 2 == 1:
            perturb = make_perturbation(
                PrivacyParams(epsilon=0.5, lam=lam), kind, n, d, seed=i
            )
        grad = objective_grad(w, data, kind, lam, perturb)
        step = 1e-6
        fd = np.empty(d)
        for j in range(d):
            wp, wm = w.copy(), w.copy()
            wp[j] += step
            wm[j] -= step
            fd[j] = (
                objective(wp, data, kind, lam, perturb)
                - objective(wm, data, kind, lam, perturb)
            ) / (2 * step)
        rel = float(np.linalg.norm(grad - fd) / max(np.linalg.norm(fd), 1e-12))
        worst = max(worst, rel)
    ok = worst <= 1e-5
    report(
        7, "gradient-correctness", ok,
        f"worst relative error {worst:.2e} <= 1e-5 over 50 instances, "
        "3 losses, with and without perturbation",
    )


def test_criterion_08_aggregation_algebra():
    equal = aggregate([
        SiteUpdate(site=0, weights=np.array([0.0, 2.0]), sample_count=10, local_loss=0.0),
        SiteUpdate(site=1, weights=np.array([2.0, 0.0]), sample_count=10, local_loss=0.0),
    ])
    weighted = aggregate([
        SiteUpdate(site=0, weights=np.array([8.0]), sample_count=100, local_loss=0.0),
        SiteUpdate(site=1, weights=np.array([8.0 / 3.0]), sample_count=300, local_loss=0.0),
    ])
    rng = np.random.default_rng(88)
    counts = rng.integers(1, 1000, size=12)
    fracs = counts / counts.sum()
    ok = (
        float(np.max(np.abs(equal - 1.0))) <= 1e-12
        and abs(float(weighted[0]) - 4.0) <= 1e-12
        and abs(float(fracs.sum()) - 1.0) <= 1e-12
    )
    report(
        8, "aggregation-algebra", ok,
        "equal-count average exact, 1:3 count weighting exact, "
        "weights sum to 1 within 1e-12",
    )


def test_criterion_09_metric_oracle():
    rng = np.random.default_rng(909)
    mismatches = 0
    for _ in range(1000):
        n = int(rng.integers(1, 40))
        pred = rng.choice([-1, 1], size=n)
        truth = rng.choice([-1, 1], size=n)
        tp = int(np.sum((pred == 1) & (truth == 1)))
        fp = int(np.sum((pred == 1) & (truth == -1)))
        fn = int(np.sum((pred == -1) & (truth == 1)))
        want = 0.0 if 2 * tp + fp + fn == 0 else 2 * tp / (2 * tp + fp + fn)
        if f1_score(pred, truth) != want:
            mismatches += 1
    ok = mismatches == 0
    report(
        9, "metric-oracle", ok,
        f"{mismatches} mismatches vs confusion-matrix oracle over 1000 pairs",
    )


def test_criterion_10_protocol_accounting(tmp_path):
    csv_path = str(tmp_path / "cohort.csv")
    save_csv(
        generate_synthetic_raw(
            SyntheticSpec(n=600, dim=5, positive_rate=0.3, class_separation=4.0,
                          seed=21)
        ),
        csv_path,
    )
    cfg = ExperimentConfig(
        data_path=csv_path,
        modes=("CENTRALIZED", "FEDERATED", "FEDERATED_DP"),
        losses=(LossKind.logistic(), LossKind.huber_hinge()),
        lam=0.01,
        epsilon_grid=(0.01, 0.05, 0.1, 0.25, 0.5),
        num_sites=10,
        rounds=3,
        optimizer=OptimizerConfig(learning_rate=0.1, epochs=3, batch_size=16),
        seeds=(0, 1, 2),
        cv_folds=5,
    )
    expected = expected_row_count(cfg)
    # (1 + 1 + 5) modes-x-grid, 2 losses, 3 seeds, 5 folds + holdout
    assert expected == 7 * 2 * 3 * 6

    def run_to_text(path):
        rows = run_experiment(cfg)
        write_results_csv(rows, path)
        return rows, open(path).read()

    rows_a, text_a = run_to_text(str(tmp_path / "a.csv"))
    rows_b, text_b = run_to_text(str(tmp_path / "b.csv"))

    def strip_wall_ms(text):
        lines = text.strip().split("\n")
        header = lines[0].split(",")
        drop = header.index("wall_ms")
        return "\n".join(
            ",".join(cell for i, cell in enumerate(line.split(",")) if i != drop)
            for line in lines
        )

    count_ok = len(rows_a) == expected
    rerun_ok = strip_wall_ms(text_a) == strip_wall_ms(text_b)
    ok = count_ok and rerun_ok
    report(
        10, "protocol-accounting", ok,
        f"rows={len(rows_a)} expected={expected}, "
        f"rerun byte-identical modulo wall_ms={rerun_ok}",
    )
