"""Model parameterization and exact likelihood machinery.

Edges are independent Bernoulli with p_ij = logistic(mu + beta_i + beta_j),
beta >= 0 and at least one beta_i = 0.  The negative log-likelihood

    l(mu, beta) = -d+ mu - sum_i d_i beta_i + sum_{i<j} log(1 + e^{mu+beta_i+beta_j})

depends on the data only through (d+, d_i for i in the support).  With s
nonzero betas, the pair sum splits into three blocks -- both endpoints
outside the support, one inside, both inside -- so every evaluation here is
O(s^2 + s + 1) instead of O(n^2).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def sigmoid(x):
    """Overflow-safe logistic function, elementwise."""
    x = np.asarray(x, dtype=float)
    pos = np.minimum(x, 0.0)
    return np.where(x >= 0.0, 1.0 / (1.0 + np.exp(-np.maximum(x, 0.0))),
                    np.exp(pos) / (1.0 + np.exp(pos)))


def log1pexp(x):
    """log(1 + e^x) without overflow (x + log1p(e^-x) for x > 0)."""
    return np.logaddexp(0.0, x)


def bernoulli_var(x):
    """p(1-p) at p = sigmoid(x)."""
    p = sigmoid(x)
    return p * (1.0 - p)


@dataclass(frozen=True)
class SbmParams:
    """Global intercept mu and nonnegative node effects beta."""

    mu: float
    beta: np.ndarray
    support: tuple[int, ...] = field(init=False)

    def __post_init__(self):
        beta = np.asarray(self.beta, dtype=float)
        if beta.ndim != 1 or beta.size < 1:
            raise ValueError("beta must be a vector of length n >= 1")
        if not np.isfinite(self.mu) or not np.isfinite(beta).all():
            raise ValueError("parameters must be finite")
        if (beta < 0).any():
            raise ValueError("beta entries must be nonnegative")
        support = tuple(int(i) for i in np.flatnonzero(beta))
        if len(support) > beta.size - 1:
            raise ValueError("at least one beta entry must be zero")
        beta = beta.copy()
        beta.setflags(write=False)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "support", support)

    @property
    def n(self) -> int:
        return self.beta.size

    @property
    def s(self) -> int:
        return len(self.support)

    @classmethod
    def planted(cls, n: int, mu: float, beta_value: float, s0: int) -> "SbmParams":
        """beta_value on the first s0 coordinates, zero elsewhere."""
        if not 0 <= s0 <= n - 1:
            raise ValueError("s0 must be in [0, n-1]")
        beta = np.zeros(n)
        beta[:s0] = beta_value
        return cls(mu, beta)


@dataclass(frozen=True)
class Reparam:
    """View of (mu, beta) as mu = -gamma log n + mu_dagger,
    beta_i = alpha log n + beta_dagger_i on the support."""

    gamma: float
    alpha: float
    mu_dagger: float
    beta_dagger: np.ndarray
    support: tuple[int, ...]

    def __post_init__(self):
        check_regime(self.gamma, self.alpha)
        bd = np.asarray(self.beta_dagger, dtype=float)
        if bd.size != len(self.support):
            raise ValueError("beta_dagger and support lengths differ")
        bd = bd.copy()
        bd.setflags(write=False)
        object.__setattr__(self, "beta_dagger", bd)


def check_regime(gamma: float, alpha: float) -> None:
    if not (0.0 <= gamma < 2.0):
        raise ValueError(f"gamma={gamma} outside [0, 2)")
    if not (0.0 <= alpha < 1.0):
        raise ValueError(f"alpha={alpha} outside [0, 1)")
    if not (0.0 <= gamma - alpha < 1.0):
        raise ValueError(f"gamma - alpha = {gamma - alpha} outside [0, 1)")


def to_dagger(params: SbmParams, gamma: float, alpha: float) -> Reparam:
    logn = np.log(params.n)
    support = params.support
    return Reparam(
        gamma=gamma,
        alpha=alpha,
        mu_dagger=params.mu + gamma * logn,
        beta_dagger=params.beta[list(support)] - alpha * logn,
        support=support,
    )


def from_dagger(rep: Reparam, n: int) -> SbmParams:
    logn = np.log(n)
    beta = np.zeros(n)
    beta[list(rep.support)] = rep.alpha * logn + rep.beta_dagger
    return SbmParams(mu=-rep.gamma * logn + rep.mu_dagger, beta=beta)


@dataclass(frozen=True)
class SuffStats:
    """Sufficient statistics for a fixed support: n, d+, and d_i on it."""

    n: int
    d_plus: int
    support: tuple[int, ...]
    d_support: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.d_support, dtype=np.int64)
        if d.size != len(self.support):
            raise ValueError("d_support and support lengths differ")
        d = d.copy()
        d.setflags(write=False)
        object.__setattr__(self, "d_support", d)

    @classmethod
    def from_graph(cls, g, support) -> "SuffStats":
        support = tuple(int(i) for i in sorted(support))
        if len(set(support)) != len(support):
            raise ValueError("support has repeated indices")
        if support and (support[0] < 0 or support[-1] >= g.n):
            raise ValueError("support index out of range")
        return cls(
            n=g.n,
            d_plus=g.d_plus,
            support=support,
            d_support=g.degrees[list(support)],
        )


def _blocks(n: int, mu: float, beta_s: np.ndarray):
    """Logits and multiplicities of the three pair blocks."""
    s = beta_s.size
    c_out = (n - s) * (n - s - 1) // 2
    x_mix = mu + beta_s
    if s >= 2:
        iu, ju = np.triu_indices(s, k=1)
        x_in = mu + beta_s[iu] + beta_s[ju]
    else:
        iu = ju = np.empty(0, dtype=np.int64)
        x_in = np.empty(0)
    return c_out, x_mix, x_in, iu, ju


def _check_inputs(stats: SuffStats, params: SbmParams) -> np.ndarray:
    if stats.n != params.n:
        raise ValueError("stats and params disagree on n")
    if not set(params.support) <= set(stats.support):
        raise ValueError("params support not covered by the stats support")
    return params.beta[list(stats.support)]


def neg_log_lik(stats: SuffStats, params: SbmParams) -> float:
    """Exact negative log-likelihood via the three-block grouping."""
    beta_s = _check_inputs(stats, params)
    return nll_value(stats.n, stats.d_plus, stats.d_support, params.mu, beta_s)


def gradient(stats: SuffStats, params: SbmParams) -> np.ndarray:
    """(d/dmu, d/dbeta_i for i in the stats support)."""
    beta_s = _check_inputs(stats, params)
    return nll_gradient(stats.n, stats.d_plus, stats.d_support, params.mu, beta_s)


def hessian(stats: SuffStats, params: SbmParams) -> np.ndarray:
    beta_s = _check_inputs(stats, params)
    return nll_hessian(stats.n, params.mu, beta_s)


def nll_value(n, d_plus, d_sup, mu, beta_s) -> float:
    beta_s = np.asarray(beta_s, dtype=float)
    c_out, x_mix, x_in, _, _ = _blocks(n, mu, beta_s)
    value = -d_plus * mu - float(np.dot(d_sup, beta_s))
    value += c_out * float(log1pexp(mu))
    value += (n - beta_s.size) * float(np.sum(log1pexp(x_mix)))
    value += float(np.sum(log1pexp(x_in)))
    return value


def nll_gradient(n, d_plus, d_sup, mu, beta_s) -> np.ndarray:
    beta_s = np.asarray(beta_s, dtype=float)
    s = beta_s.size
    c_out, x_mix, x_in, iu, ju = _blocks(n, mu, beta_s)
    p_mix = sigmoid(x_mix)
    p_in = sigmoid(x_in)
    g = np.empty(1 + s)
    g[0] = -d_plus + c_out * float(sigmoid(mu)) + (n - s) * p_mix.sum() + p_in.sum()
    pair_sums = np.zeros(s)
    if p_in.size:
        np.add.at(pair_sums, iu, p_in)
        np.add.at(pair_sums, ju, p_in)
    g[1:] = -d_sup + (n - s) * p_mix + pair_sums
    return g


def nll_hessian(n, mu, beta_s) -> np.ndarray:
    beta_s = np.asarray(beta_s, dtype=float)
    s = beta_s.size
    c_out, x_mix, x_in, iu, ju = _blocks(n, mu, beta_s)
    w_out = float(bernoulli_var(mu))
    w_mix = bernoulli_var(x_mix)
    w_in = bernoulli_var(x_in)
    h = np.zeros((1 + s, 1 + s))
    w_in_mat = np.zeros((s, s))
    if w_in.size:
        w_in_mat[iu, ju] = w_in
        w_in_mat += w_in_mat.T
    row = (n - s) * w_mix + w_in_mat.sum(axis=1)
    h[0, 0] = c_out * w_out + (n - s) * w_mix.sum() + w_in.sum()
    h[0, 1:] = row
    h[1:, 0] = row
    h[1:, 1:] = w_in_mat
    h[np.arange(1, 1 + s), np.arange(1, 1 + s)] = row
    return h


@dataclass(frozen=True)
class Moments:
    """Exact population moments of the degree statistics."""

    E_d: np.ndarray
    E_dplus: float
    Var_d: np.ndarray
    Var_dplus: float


def moments(params: SbmParams) -> Moments:
    """E[d_i], E[d+], Var(d_i), Var(d+) under the model, grouped evaluation."""
    n = params.n
    support = np.asarray(params.support, dtype=np.int64)
    s = len(support)
    beta_s = params.beta[support]
    c_out, x_mix, x_in, iu, ju = _blocks(n, params.mu, beta_s)
    p_out = float(sigmoid(params.mu))
    w_out = float(bernoulli_var(params.mu))
    p_mix = sigmoid(x_mix)
    w_mix = bernoulli_var(x_mix)
    p_in = sigmoid(x_in)
    w_in = bernoulli_var(x_in)

    pair_p = np.zeros(s)
    pair_w = np.zeros(s)
    if p_in.size:
        np.add.at(pair_p, iu, p_in)
        np.add.at(pair_p, ju, p_in)
        np.add.at(pair_w, iu, w_in)
        np.add.at(pair_w, ju, w_in)

    E_d = np.full(n, (n - s - 1) * p_out + p_mix.sum())
    Var_d = np.full(n, (n - s - 1) * w_out + w_mix.sum())
    E_d[support] = (n - s) * p_mix + pair_p
    Var_d[support] = (n - s) * w_mix + pair_w

    E_dplus = c_out * p_out + (n - s) * p_mix.sum() + p_in.sum()
    Var_dplus = c_out * w_out + (n - s) * w_mix.sum() + w_in.sum()
    return Moments(E_d=E_d, E_dplus=float(E_dplus), Var_d=Var_d, Var_dplus=float(Var_dplus))


def population_risk(truth: SbmParams, candidate: SbmParams) -> float:
    """Expected negative log-likelihood of ``candidate`` under ``truth``,
    normalized by the expected edge count of ``truth``."""
    if truth.n != candidate.n:
        raise ValueError("parameter dimensions differ")
    mom = moments(truth)
    if mom.E_dplus <= 0:
        raise ValueError("expected edge count is zero; risk undefined")
    n = candidate.n
    support = np.asarray(candidate.support, dtype=np.int64)
    beta_s = candidate.beta[support]
    c_out, x_mix, x_in, _, _ = _blocks(n, candidate.mu, beta_s)
    expected_nll = -mom.E_dplus * candidate.mu - float(np.dot(mom.E_d[support], beta_s))
    expected_nll += c_out * float(log1pexp(candidate.mu))
    expected_nll += (n - len(support)) * float(np.sum(log1pexp(x_mix)))
    expected_nll += float(np.sum(log1pexp(x_in)))
    return expected_nll / mom.E_dplus
