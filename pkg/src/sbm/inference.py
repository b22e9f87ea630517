"""Asymptotic inference: Erdos-Renyi MLE, plug-in standard errors for the
known-support fit, beta-min thresholds, and the excess-risk bound.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb, exp, log, sqrt

import numpy as np

from .graph import Graph
from .likelihood import Reparam, SbmParams, check_regime, log1pexp, moments


@dataclass(frozen=True)
class ErFit:
    """Erdos-Renyi MLE with plug-in and (optionally) asymptotic variances.

    The asymptotic forms assume the density scales like n^-gamma: with
    p_dagger = n^gamma p_hat and mu_dagger = mu_hat + gamma log n, the MLE
    variance is sigma^2 / n^(2-gamma) where sigma^2 = 2 p(1-p) resp.
    4 + 2e^-mu + 2e^mu in the dense case gamma = 0, and 2 p_dagger resp.
    2 e^-mu_dagger for gamma in (0, 2).
    """

    n: int
    p_hat: float
    mu_hat: float
    se_p_plugin: float | None
    se_mu_plugin: float | None
    boundary: bool
    gamma: float | None = None
    p_dagger: float | None = None
    mu_dagger: float | None = None
    se_p_asymptotic: float | None = None
    se_mu_asymptotic: float | None = None


def er_mle(g: Graph, gamma: float | None = None) -> ErFit:
    """Density MLE p_hat = 2 d+ / (n(n-1)) and its logit."""
    if g.n < 2:
        raise ValueError("Erdos-Renyi MLE needs n >= 2")
    pairs = comb(g.n, 2)
    p_hat = g.d_plus / pairs
    boundary = p_hat in (0.0, 1.0)
    if boundary:
        mu_hat = float("-inf") if p_hat == 0.0 else float("inf")
        return ErFit(
            n=g.n, p_hat=p_hat, mu_hat=mu_hat, se_p_plugin=None,
            se_mu_plugin=None, boundary=True, gamma=gamma,
        )
    mu_hat = log(p_hat / (1.0 - p_hat))
    fisher = pairs * p_hat * (1.0 - p_hat)
    fit = dict(
        n=g.n,
        p_hat=p_hat,
        mu_hat=mu_hat,
        se_p_plugin=sqrt(p_hat * (1.0 - p_hat) / pairs),
        se_mu_plugin=1.0 / sqrt(fisher),
        boundary=False,
        gamma=gamma,
    )
    if gamma is not None:
        if not 0.0 <= gamma < 2.0:
            raise ValueError("gamma must lie in [0, 2)")
        p_dag = g.n**gamma * p_hat
        mu_dag = mu_hat + gamma * log(g.n)
        if gamma == 0.0:
            var_p = 2.0 * p_dag * (1.0 - p_dag)
            var_mu = 4.0 + 2.0 * exp(-mu_dag) + 2.0 * exp(mu_dag)
        else:
            var_p = 2.0 * p_dag
            var_mu = 2.0 * exp(-mu_dag)
        scale = g.n ** (2.0 - gamma)
        fit.update(
            p_dagger=p_dag,
            mu_dagger=mu_dag,
            se_p_asymptotic=sqrt(var_p / scale),
            se_mu_asymptotic=sqrt(var_mu / scale),
        )
    return ErFit(**fit)


def theorem1_se(rep: Reparam, F, n: int) -> np.ndarray:
    """Plug-in standard errors for (mu_dagger, beta_dagger_i for i in F).

    The limiting covariance is diagonal; its entries depend on which of the
    three regimes (alpha < gamma, gamma = alpha > 0, gamma = alpha = 0) the
    identification choice (gamma, alpha) selects.  The rates are
    n^(1-gamma/2) for the global parameter and n^(1/2-(gamma-alpha)/2) for
    the local ones.  These are asymptotic approximations; no sample-size
    condition is enforced here.
    """
    check_regime(rep.gamma, rep.alpha)
    F = [int(i) for i in F]
    pos = {node: k for k, node in enumerate(rep.support)}
    missing = [i for i in F if i not in pos]
    if missing:
        raise ValueError(f"indices {missing} not in the reparameterized support")
    mu = rep.mu_dagger
    b = np.array([rep.beta_dagger[pos[i]] for i in F])
    if rep.alpha < rep.gamma:
        var_mu = 2.0 * exp(-mu)
        var_b = np.exp(-mu - b)
    elif rep.gamma == rep.alpha == 0.0:
        var_mu = 4.0 + 2.0 * exp(-mu) + 2.0 * exp(mu)
        var_b = 2.0 + np.exp(-mu - b) + np.exp(mu + b)
    else:  # gamma = alpha in (0, 1)
        var_mu = 2.0 * exp(-mu)
        var_b = 2.0 + np.exp(-mu - b) + np.exp(mu + b)
    rate_mu = n ** (1.0 - rep.gamma / 2.0)
    rate_b = n ** (0.5 - (rep.gamma - rep.alpha) / 2.0)
    return np.concatenate([[sqrt(var_mu) / rate_mu], np.sqrt(var_b) / rate_b])


def beta_min_threshold(
    n: int, tau: float, mu: float, beta_bar: float, union_bound: bool
) -> float:
    """Signal level above which high-degree sorting recovers the support.

    Returns log(1 + c (1+e^{mu-})(1+e^{2 beta_bar + mu+})) with
    c = sqrt((2/(n-2)) log(2/tau')); tau' is tau itself for the single-pair
    statement and tau/(n(n-1)) under the union bound over all pairs.
    """
    if n < 3:
        raise ValueError("threshold needs n >= 3")
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    tau_eff = tau / (n * (n - 1)) if union_bound else tau
    c = sqrt(2.0 / (n - 2) * log(2.0 / tau_eff))
    mu_plus = max(mu, 0.0)
    mu_minus = max(-mu, 0.0)
    # log(1 + c(1+e^a)(1+e^b)) evaluated in log space to survive large inputs.
    log_term = log(c) + float(log1pexp(mu_minus)) + float(log1pexp(2.0 * beta_bar + mu_plus))
    return float(np.logaddexp(0.0, log_term))


@dataclass(frozen=True)
class RiskBound:
    """High-probability excess-risk bound and the moments it was built from."""

    d_plus_expected: float
    var_dplus: float
    max_var_di: float
    bound: float
    tau: float
    m1: float
    m2: float
    s: int


def excess_risk_bound(
    params: SbmParams, s: int, m1: float, m2: float, tau: float
) -> RiskBound:
    """Bound on the excess normalized risk of the sparsity-s constrained fit.

    bound = (2/D+) [ m1 (sqrt(2 Var(d+) log(4/tau)) + log(4/tau)/3)
                     + m2 s (sqrt(2 max_i Var(d_i) log(4n/tau)) + log(4n/tau)/3) ]

    holding with probability at least 1 - tau, where the moments are exact
    under ``params``.
    """
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    mom = moments(params)
    if mom.E_dplus <= 0:
        raise ValueError("expected edge count is zero; the bound is undefined")
    n = params.n
    lt = log(4.0 / tau)
    ltn = log(4.0 * n / tau)
    max_var = float(mom.Var_d.max())
    bound = (2.0 / mom.E_dplus) * (
        m1 * (sqrt(2.0 * mom.Var_dplus * lt) + lt / 3.0)
        + m2 * s * (sqrt(2.0 * max_var * ltn) + ltn / 3.0)
    )
    return RiskBound(
        d_plus_expected=mom.E_dplus,
        var_dplus=mom.Var_dplus,
        max_var_di=max_var,
        bound=bound,
        tau=tau,
        m1=m1,
        m2=m2,
        s=s,
    )
