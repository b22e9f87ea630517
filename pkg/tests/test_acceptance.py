"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

Run with ``pytest tests/test_acceptance.py -v -s``.  Criteria that depend on
the (unshipped) microfinance dataset skip when it is absent.
"""
import functools
import os
import time
from pathlib import Path

import numpy as np
import pytest

from sbm import (
    FitConfig,
    Graph,
    MonteCarloConfig,
    SbmParams,
    beta_min_threshold,
    brute_force_l0,
    er_mle,
    excess_risk_bound,
    fit_support,
    gradient,
    moments,
    neg_log_lik,
    run_monte_carlo,
    sample_sbm,
    solution_path,
    theorem1_se,
)
from sbm.cli import main as cli_main
from sbm.likelihood import Reparam, SuffStats, population_risk

import oracles

TIGHT = FitConfig(tol=1e-11)


def criterion(num, name):
    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                detail = fn(*args, **kwargs)
            except pytest.skip.Exception as exc:
                print(f"criterion {num:>2} [{name}]: SKIP ({exc})")
                raise
            except BaseException as exc:
                print(f"criterion {num:>2} [{name}]: FAIL ({exc})")
                raise
            suffix = f" ({detail})" if detail else ""
            print(f"criterion {num:>2} [{name}]: PASS{suffix}")

        return wrapper

    return decorate


def random_instance(rng, n_max=30):
    n = int(rng.integers(4, n_max + 1))
    g = Graph(n, oracles.random_graph(rng, n))
    s = int(rng.integers(0, max(1, n // 3)))
    support = tuple(sorted(rng.choice(n, size=s, replace=False).tolist()))
    beta = np.zeros(n)
    beta[list(support)] = rng.uniform(0.1, 3.0, size=s)
    params = SbmParams(rng.uniform(-3, 1), beta)
    return g, params, support


@criterion(1, "monotonicity-lemma oracle")
def test_01_solution_path_matches_brute_force():
    start = time.time()
    rng = np.random.default_rng(20240301)
    checked = 0
    for i in range(500):
        n = int(rng.integers(4, 9))
        if i % 3 == 0:
            truth = SbmParams.planted(n, float(rng.uniform(-1.5, 0.5)),
                                      float(rng.uniform(0.5, 2.0)), 1)
            g = sample_sbm(truth, seed=int(rng.integers(1 << 31)))
        else:
            g = Graph(n, oracles.random_graph(rng, n))
        path = solution_path(g, max_size=n - 1, cfg=TIGHT)
        for entry in path.admissible:
            res = brute_force_l0(g, entry.s, TIGHT)
            assert abs(entry.fit.nll - res.fit.nll) <= 1e-8, (
                f"nll gap {entry.fit.nll - res.fit.nll:.3g} at n={n}, s={entry.s}"
            )
            beta = entry.fit.params.beta
            for a in range(n):
                for b in range(n):
                    if g.degrees[a] < g.degrees[b]:
                        assert beta[a] <= beta[b] + 1e-9
            for a in entry.support:
                for b in entry.support:
                    if g.degrees[a] == g.degrees[b]:
                        assert abs(beta[a] - beta[b]) <= 1e-9
            checked += 1
    elapsed = time.time() - start
    assert elapsed < 120, f"runtime {elapsed:.0f}s exceeds 2 minutes"
    return f"{checked} (graph, s) cells, {elapsed:.0f}s"


@criterion(2, "gradient vs finite differences")
def test_02_gradient_correctness():
    rng = np.random.default_rng(7011)
    worst = 0.0
    for _ in range(100):
        g, params, support = random_instance(rng, n_max=20)
        stats = SuffStats.from_graph(g, support)
        grad = gradient(stats, params)

        def fun(theta):
            beta = np.zeros(g.n)
            beta[list(support)] = theta[1:]
            return oracles.naive_nll(g, theta[0], beta)

        theta0 = np.concatenate([[params.mu], params.beta[list(support)]])
        fd = oracles.finite_difference_gradient(fun, theta0, step=1e-5)
        rel = np.abs(grad - fd) / np.maximum(np.abs(fd), 1e-2)
        worst = max(worst, float(rel.max()))
    assert worst < 1e-6, f"max relative error {worst:.3g}"
    return f"max rel err {worst:.2g}"


@criterion(3, "grouped vs naive evaluation")
def test_03_grouped_vs_naive():
    rng = np.random.default_rng(301)
    for _ in range(100):
        g, params, support = random_instance(rng, n_max=30)
        stats = SuffStats.from_graph(g, support)
        nll = neg_log_lik(stats, params)
        ref = oracles.naive_nll(g, params.mu, params.beta)
        assert abs(nll - ref) <= 1e-10 * max(1.0, abs(ref))
        grad = gradient(stats, params)
        gref = oracles.naive_gradient(g, params.mu, params.beta, support)
        assert np.all(np.abs(grad - gref) <= 1e-10 * np.maximum(1.0, np.abs(gref)))
        mom = moments(params)
        E_d, E_plus, V_d, V_plus = oracles.naive_moments(params.mu, params.beta)
        assert np.allclose(mom.E_d, E_d, rtol=1e-10)
        assert abs(mom.E_dplus - E_plus) <= 1e-10 * max(1.0, E_plus)
        assert np.allclose(mom.Var_d, V_d, rtol=1e-10)
        assert abs(mom.Var_dplus - V_plus) <= 1e-10 * max(1.0, V_plus)
    return "100 instances at 1e-10"


@criterion(4, "Erdos-Renyi coverage")
def test_04_er_coverage():
    start = time.time()
    n, gamma, reps = 100, 1.0, 2000
    mu0 = -np.log(n)  # mu_dagger = 0
    truth = SbmParams(mu0, np.zeros(n))
    cover = used = 0
    for seed in range(reps):
        g = sample_sbm(truth, seed=seed)
        fit = er_mle(g, gamma=gamma)
        if fit.boundary:
            continue
        used += 1
        cover += abs(fit.mu_hat - mu0) <= 1.96 * fit.se_mu_asymptotic
    rate = cover / used
    elapsed = time.time() - start
    assert elapsed < 60, f"runtime {elapsed:.0f}s exceeds 1 minute"
    assert 0.93 <= rate <= 0.97, f"coverage {rate:.4f} outside [0.93, 0.97]"
    return f"coverage {rate:.3f} over {used} reps, {elapsed:.0f}s"


def _known_support_run(n, reps, gamma=1.0, alpha=0.5):
    logn = np.log(n)
    truth = SbmParams.planted(n, -gamma * logn, alpha * logn, 2)
    cover_mu = cover_b = total_b = used = 0
    max_errors = []
    for seed in range(reps):
        g = sample_sbm(truth, seed=seed)
        fit = fit_support(g, (0, 1), FitConfig())
        if not fit.converged:
            continue
        used += 1
        mu_dag = fit.params.mu + gamma * logn
        b_dag = fit.params.beta[:2] - alpha * logn
        se = theorem1_se(Reparam(gamma, alpha, mu_dag, b_dag, (0, 1)), [0, 1], n)
        cover_mu += abs(mu_dag) <= 1.96 * se[0]
        for k in range(2):
            cover_b += abs(b_dag[k]) <= 1.96 * se[1 + k]
            total_b += 1
        max_errors.append(float(np.abs(b_dag).max()))
    return cover_mu / used, cover_b / total_b, float(np.median(max_errors)), used


@criterion(5, "known-support inference")
def test_05_known_support_inference():
    start = time.time()
    mu_rate, b_rate, med400, used = _known_support_run(400, 1000)
    _, _, med100, _ = _known_support_run(100, 1000)
    elapsed = time.time() - start
    assert elapsed < 600, f"runtime {elapsed:.0f}s exceeds 10 minutes"
    assert 0.92 <= mu_rate <= 0.98, f"mu coverage {mu_rate:.4f}"
    assert 0.92 <= b_rate <= 0.98, f"beta coverage {b_rate:.4f}"
    assert med400 < med100, f"median max beta error {med400:.4f} !< {med100:.4f}"
    return (
        f"mu {mu_rate:.3f}, beta {b_rate:.3f}, median err {med400:.3f} < {med100:.3f}, "
        f"{used} reps, {elapsed:.0f}s"
    )


@criterion(6, "Figure-3 cell: correct-support frequency")
def test_06_selection_frequency():
    start = time.time()
    cfg = MonteCarloConfig(n=200, s0=2, mu0=-1.5, beta0="log_n",
                           reps=200, seed=1828)
    summary, _ = run_monte_carlo(cfg, threads=4)
    elapsed = time.time() - start
    assert elapsed < 600, f"runtime {elapsed:.0f}s exceeds 10 minutes"
    freq = summary.correct_support_freq
    assert freq >= 0.9, (
        f"correct-support frequency {freq:.3f} < 0.9: the likelihood-ratio "
        f"statistic of the largest-degree noise node grows like 2 log n, the "
        f"same rate as the penalty log(n(n-1)/2), so one-node overselection "
        f"keeps a constant probability ~0.15 and exact recovery plateaus "
        f"near 0.85 at every n (selected supports still contain the truth)"
    )
    return f"frequency {freq:.3f}, {elapsed:.0f}s"


@criterion(7, "Figure-4 trend: l1 error decreasing in n")
def test_07_l1_error_trend():
    medians = {}
    for n, seed in ((100, 901), (400, 902)):
        cfg = MonteCarloConfig(n=n, s0=2, mu0=-1.5, beta0="log_n",
                               reps=200, seed=seed)
        summary, _ = run_monte_carlo(cfg, threads=4)
        medians[n] = summary.l1_beta_error["median"]
    assert medians[400] < medians[100], f"medians {medians}"
    return f"median l1: n=400 {medians[400]:.3f} < n=100 {medians[100]:.3f}"


@criterion(8, "beta-min condition (Corollary 2)")
def test_08_beta_min_condition():
    n, tau, s0 = 102, 0.1, 2
    # The threshold is smallest at mu = 0 and with all nonzero betas equal
    # (beta_bar enters only adversely), so search that one-dimensional family
    # for a level satisfying its own bound.
    grid = np.linspace(1e-3, 8.0, 4000)
    feasible = [b for b in grid
                if b > beta_min_threshold(n, tau, 0.0, b, union_bound=True)]
    if not feasible:
        c = np.sqrt(2.0 / (n - 2) * np.log(2.0 * n * (n - 1) / tau))
        pytest.fail(
            f"no parameters at n={n} satisfy the union-bound beta-min "
            f"condition at tau={tau}: it needs c < (sqrt(2)-1)/4 ~ 0.1036 "
            f"but c_(n, tau/(n(n-1))) = {c:.4f}; the condition first becomes "
            f"satisfiable around n ~ 3700 at this tau"
        )
    b = feasible[0]
    truth = SbmParams.planted(n, 0.0, float(b), s0)
    hits = 0
    for seed in range(500):
        g = sample_sbm(truth, seed=seed)
        hits += g.degrees[:s0].min() > g.degrees[s0:].max()
    assert hits >= 450, f"separation in {hits}/500 draws"
    return f"separation in {hits}/500 draws at beta={b:.3f}"


@criterion(9, "excess-risk bound (two-sided moments)")
def test_09_excess_risk_bound():
    n, s0, tau = 50, 2, 0.1
    m1 = m2 = 3.0
    truth = SbmParams.planted(n, -1.5, 1.5, s0)
    bound = excess_risk_bound(truth, s=s0, m1=m1, m2=m2, tau=tau).bound
    cfg = FitConfig(m1=m1, m2=m2)
    base_risk = None
    hold = 0
    reps = 500
    worst = -np.inf
    for seed in range(reps):
        g = sample_sbm(truth, seed=seed)
        order = np.lexsort((np.arange(n), -g.degrees))
        fitted = fit_support(g, tuple(sorted(order[:s0].tolist())), cfg).params
        reference = fit_support(g, tuple(range(s0)), cfg).params
        excess = population_risk(truth, fitted) - population_risk(truth, reference)
        worst = max(worst, excess)
        hold += excess <= bound
    assert hold >= (1 - tau) * reps, f"bound held in {hold}/{reps} draws"
    return f"bound {bound:.3f} held in {hold}/{reps} draws (worst excess {worst:.3g})"


@criterion(10, "mc determinism across thread counts")
def test_10_mc_determinism(tmp_path):
    cfg = tmp_path / "mc.toml"
    cfg.write_text(
        "n = 80\ns0 = 2\nmu0 = -1.0\nbeta0 = log_n\nreps = 12\nseed = 99\n"
    )
    outputs = []
    for threads in ("1", "5"):
        out = tmp_path / f"summary_{threads}.csv"
        rec = tmp_path / f"records_{threads}.csv"
        code = cli_main(["mc", "--config", str(cfg), "--out", str(out),
                         "--records", str(rec), "--threads", threads,
                         "--no-plot"])
        assert code == 0
        outputs.append((out.read_bytes(), rec.read_bytes()))
    assert outputs[0][0] == outputs[1][0], "summary CSVs differ across threads"
    assert outputs[0][1] == outputs[1][1], "records CSVs differ across threads"
    return "byte-identical summary and records"


def _dataset_dir():
    env = os.environ.get("SBM_MICROFINANCE_DIR")
    candidates = [Path(env)] if env else []
    candidates.append(Path(__file__).resolve().parent.parent / "data" / "microfinance")
    for cand in candidates:
        if cand and (cand / "outcomes.csv").exists():
            return cand
    return None


@criterion(11, "microfinance reproduction")
def test_11_microfinance(tmp_path):
    data = _dataset_dir()
    if data is None:
        pytest.skip("microfinance dataset not present "
                    "(set SBM_MICROFINANCE_DIR or populate data/microfinance)")
    from sbm import build_node_table, fit_by_group, load_edge_list, run_takeup_models
    from sbm.cli import _read_outcomes

    graphs = {
        p.stem: load_edge_list(p)
        for p in sorted(data.iterdir())
        if p.is_file() and p.suffix == ".tsv"
    }
    assert len(graphs) == 43, f"expected 43 villages, found {len(graphs)}"
    v60 = next(g for name, g in graphs.items() if name.endswith("60"))
    assert v60.n == 356
    assert round(2 * v60.d_plus / v60.n, 2) == 7.98
    assert int(v60.degrees.max()) == 39
    assert int((v60.degrees == 0).sum()) == 15

    fits = fit_by_group(graphs, cap_fraction=0.5)
    fractions = [len(e.support) / graphs[name].n for name, e in fits.items()]
    avg_nonzero = float(np.mean(fractions))
    assert abs(avg_nonzero - 0.26) <= 0.03, f"nonzero-beta fraction {avg_nonzero:.3f}"

    outcomes = _read_outcomes(data / "outcomes.csv")
    rows = build_node_table(fits, graphs, outcomes)
    models = run_takeup_models(rows)
    beta_coef = models[2].fit.coefficients[1]
    leader_coef = models[3].fit.coefficients[1]
    assert abs(beta_coef - 0.198) <= 0.06, f"model (3) Beta {beta_coef:.3f}"
    assert abs(leader_coef - 0.316) <= 0.07, f"model (4) Leader {leader_coef:.3f}"
    return (
        f"village 60 stats exact; nonzero fraction {avg_nonzero:.2f}; "
        f"Beta {beta_coef:.3f}, Leader {leader_coef:.3f}"
    )
