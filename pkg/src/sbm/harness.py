"""Reproducible Monte Carlo experiments and degree-distribution reports.

Every replication derives its RNG stream from (seed, rep) through a seed
sequence, so results are a pure function of the configuration no matter how
many worker threads run the replications.
"""
from __future__ import annotations

import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from math import lgamma

import numpy as np

from .errors import DataFormatError
from .graph import Graph, sample_sbm
from .likelihood import SbmParams
from .path import select, solution_path
from .solver import FitConfig, FitResult

PARAM_TOKENS = ("log_n", "sqrt_log_n", "-log_n", "-sqrt_log_n")


def resolve_param_spec(spec, n: int) -> float:
    """Turn a parameter spec into a number at sample size n.

    Accepts a float (used as is) or one of the tokens log_n, sqrt_log_n and
    their negations.
    """
    if isinstance(spec, (int, float)):
        return float(spec)
    text = str(spec).strip()
    sign = 1.0
    if text.startswith("-") and text[1:] in ("log_n", "sqrt_log_n"):
        sign, text = -1.0, text[1:]
    if text == "log_n":
        return sign * math.log(n)
    if text == "sqrt_log_n":
        return sign * math.sqrt(math.log(n))
    try:
        return float(text)
    except ValueError:
        raise DataFormatError(
            f"bad parameter spec {spec!r}; expected a number or one of {PARAM_TOKENS}"
        )


def default_level_cap(n: int) -> int:
    """Default cap on the number of nonzero betas examined: max(40, 4 sqrt(n))."""
    return max(40, int(4 * math.sqrt(n)))


@dataclass(frozen=True)
class MonteCarloConfig:
    n: int
    s0: int
    mu0: float | str
    beta0: float | str
    reps: int
    seed: int
    max_size: int | None = None
    criterion: str = "bic"
    include_null: bool = False

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not 0 <= self.s0 <= self.n - 1:
            raise ValueError("s0 must be in [0, n-1]")
        if self.criterion not in ("bic", "bic_star"):
            raise ValueError("criterion must be bic or bic_star")

    def truth(self) -> SbmParams:
        return SbmParams.planted(
            self.n,
            resolve_param_spec(self.mu0, self.n),
            resolve_param_spec(self.beta0, self.n),
            self.s0,
        )

    def level_cap(self) -> int:
        return self.max_size if self.max_size is not None else default_level_cap(self.n)


_CONFIG_FIELDS = {
    "n": int,
    "s0": int,
    "mu0": str,
    "beta0": str,
    "reps": int,
    "seed": int,
    "max_size": int,
    "criterion": str,
    "include_null": lambda v: v.lower() in ("1", "true", "yes"),
}


def parse_mc_config(text: str) -> MonteCarloConfig:
    """Parse ``key = value`` lines (flat TOML-style) into a config."""
    values: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataFormatError(f"config line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip().strip("\"'")
        if key not in _CONFIG_FIELDS:
            raise DataFormatError(f"config line {lineno}: unknown key {key!r}")
        try:
            values[key] = _CONFIG_FIELDS[key](value)
        except ValueError:
            raise DataFormatError(f"config line {lineno}: bad value for {key}")
    missing = {"n", "s0", "mu0", "beta0", "reps", "seed"} - set(values)
    if missing:
        raise DataFormatError(f"config is missing keys: {sorted(missing)}")
    return MonteCarloConfig(**values)


@dataclass(frozen=True)
class RepRecord:
    rep: int
    s_hat: int
    correct: bool
    support_hash: str
    l1_beta_error: float
    abs_mu_error: float
    converged: bool
    error: str = ""


@dataclass(frozen=True)
class MonteCarloSummary:
    config: MonteCarloConfig
    correct_support_freq: float
    mean_s_hat_minus_s0: float
    l1_beta_error: dict[str, float]
    abs_mu_error: dict[str, float]
    reps_completed: int
    failures: int


def _support_hash(support) -> str:
    payload = ",".join(str(i) for i in sorted(support))
    return hashlib.sha1(payload.encode()).hexdigest()[:16]


def rep_seed_sequence(seed: int, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(seed), spawn_key=(int(rep),))


def _run_rep(cfg: MonteCarloConfig, truth: SbmParams, fit_cfg: FitConfig, rep: int) -> RepRecord:
    rng = np.random.Generator(np.random.PCG64(rep_seed_sequence(cfg.seed, rep)))
    g = sample_sbm(truth, rng)
    path = solution_path(g, max_size=cfg.level_cap(), cfg=fit_cfg)
    entry = select(path, variant=cfg.criterion, include_null=cfg.include_null)
    true_support = set(range(cfg.s0))
    beta_hat = entry.fit.params.beta
    return RepRecord(
        rep=rep,
        s_hat=entry.s,
        correct=set(entry.support) == true_support,
        support_hash=_support_hash(entry.support),
        l1_beta_error=float(np.abs(beta_hat - truth.beta).sum()),
        abs_mu_error=abs(entry.fit.params.mu - truth.mu),
        converged=all(e.fit.converged for e in path.entries),
    )


def _stats(values: np.ndarray) -> dict[str, float]:
    if values.size == 0:
        nan = float("nan")
        return {"mean": nan, "median": nan, "p25": nan, "p75": nan}
    return {
        "mean": float(values.mean()),
        "median": float(np.median(values)),
        "p25": float(np.quantile(values, 0.25)),
        "p75": float(np.quantile(values, 0.75)),
    }


def summarize(cfg: MonteCarloConfig, records: list[RepRecord]) -> MonteCarloSummary:
    ok = [r for r in records if not r.error]
    l1 = np.array([r.l1_beta_error for r in ok])
    mu = np.array([r.abs_mu_error for r in ok])
    return MonteCarloSummary(
        config=cfg,
        correct_support_freq=float(np.mean([r.correct for r in ok])) if ok else float("nan"),
        mean_s_hat_minus_s0=float(np.mean([r.s_hat - cfg.s0 for r in ok])) if ok else float("nan"),
        l1_beta_error=_stats(l1),
        abs_mu_error=_stats(mu),
        reps_completed=len(ok),
        failures=len(records) - len(ok),
    )


def run_monte_carlo(
    cfg: MonteCarloConfig,
    threads: int = 1,
    fit_cfg: FitConfig | None = None,
) -> tuple[MonteCarloSummary, list[RepRecord]]:
    """Run the experiment; deterministic in (cfg,) regardless of ``threads``."""
    truth = cfg.truth()
    fit_cfg = fit_cfg or FitConfig()

    def task(rep: int) -> RepRecord:
        try:
            return _run_rep(cfg, truth, fit_cfg, rep)
        except Exception as exc:  # per-rep failures are data, not fatal
            return RepRecord(
                rep=rep, s_hat=-1, correct=False, support_hash="",
                l1_beta_error=float("nan"), abs_mu_error=float("nan"),
                converged=False, error=f"{type(exc).__name__}: {exc}",
            )

    reps = range(cfg.reps)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(task, reps))
    else:
        records = [task(r) for r in reps]
    records.sort(key=lambda r: r.rep)
    return summarize(cfg, records), records


def degree_distribution(g: Graph) -> list[tuple[int, float]]:
    """Relative frequency of each observed degree, ascending, zeros omitted."""
    counts = np.bincount(g.degrees)
    return [(int(k), counts[k] / g.n) for k in np.flatnonzero(counts)]


def poisson_pmf(k: np.ndarray, lam: float) -> np.ndarray:
    k = np.asarray(k, dtype=float)
    if lam <= 0:
        return np.where(k == 0, 1.0, 0.0)
    return np.exp(k * math.log(lam) - lam - np.array([lgamma(v + 1.0) for v in k]))


def poisson_quantile(q: float, lam: float) -> int:
    """Smallest k with P(X <= k) >= q for X ~ Poisson(lam)."""
    total = 0.0
    k = 0
    while True:
        total += float(poisson_pmf(np.array([k]), lam)[0])
        if total >= q:
            return k
        k += 1


@dataclass(frozen=True)
class OverlayRow:
    degree: int
    observed: float
    simulated: float
    poisson: float


def model_fit_overlay(g: Graph, fit: FitResult, reps: int, seed: int) -> list[OverlayRow]:
    """Observed degree distribution next to the average over ``reps``
    simulations from the fitted parameters and the Poisson curve implied by
    the Erdos-Renyi fit (mean = average observed degree)."""
    if not fit.converged:
        raise ValueError("overlay requires a converged fit")
    if reps < 1:
        raise ValueError("reps must be at least 1")
    dists = []
    kmax = int(g.degrees.max()) if g.n else 0
    for rep in range(reps):
        sim = sample_sbm(fit.params, rep_seed_sequence(seed, rep))
        dists.append(np.bincount(sim.degrees) / sim.n)
        kmax = max(kmax, len(dists[-1]) - 1)
    sim_avg = np.zeros(kmax + 1)
    for d in dists:
        sim_avg[: len(d)] += d
    sim_avg /= reps
    obs = np.zeros(kmax + 1)
    counts = np.bincount(g.degrees)
    obs[: len(counts)] = counts / g.n
    pois = poisson_pmf(np.arange(kmax + 1), 2.0 * g.d_plus / g.n)
    return [
        OverlayRow(degree=k, observed=float(obs[k]), simulated=float(sim_avg[k]),
                   poisson=float(pois[k]))
        for k in range(kmax + 1)
    ]
