"""Independent reference implementations used to check the package.

Everything here is deliberately naive: O(n^2) pairwise sums, finite
differences, grid refinement, IRLS.  None of it shares code with the
implementations under test.
"""
from __future__ import annotations

import math

import numpy as np


def edge_set(g) -> set[tuple[int, int]]:
    return {(int(u), int(v)) for u, v in g.edges}


def naive_nll(g, mu: float, beta: np.ndarray) -> float:
    """-d+ mu - sum_i d_i beta_i + sum_{i<j} log(1 + e^{mu+b_i+b_j})."""
    n = len(beta)
    total = -g.d_plus * mu - float(np.dot(g.degrees, beta))
    for i in range(n):
        for j in range(i + 1, n):
            x = mu + beta[i] + beta[j]
            total += x + math.log1p(math.exp(-x)) if x > 0 else math.log1p(math.exp(x))
    return total


def naive_gradient(g, mu: float, beta: np.ndarray, support) -> np.ndarray:
    n = len(beta)
    p = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                x = mu + beta[i] + beta[j]
                p[i, j] = 1.0 / (1.0 + math.exp(-x))
    g_mu = -g.d_plus + sum(p[i, j] for i in range(n) for j in range(i + 1, n))
    comps = [g_mu]
    for i in support:
        comps.append(-g.degrees[i] + sum(p[i, j] for j in range(n) if j != i))
    return np.array(comps)


def naive_moments(mu: float, beta: np.ndarray):
    n = len(beta)
    E_d = np.zeros(n)
    V_d = np.zeros(n)
    E_plus = 0.0
    V_plus = 0.0
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            x = mu + beta[i] + beta[j]
            p = 1.0 / (1.0 + math.exp(-x))
            E_d[i] += p
            V_d[i] += p * (1.0 - p)
            if j > i:
                E_plus += p
                V_plus += p * (1.0 - p)
    return E_d, E_plus, V_d, V_plus


def finite_difference_gradient(fun, theta: np.ndarray, step: float = 1e-5) -> np.ndarray:
    out = np.zeros_like(theta)
    for k in range(len(theta)):
        hi = theta.copy()
        lo = theta.copy()
        hi[k] += step
        lo[k] -= step
        out[k] = (fun(hi) - fun(lo)) / (2.0 * step)
    return out


def grid_search_2d(fun, mu_range, beta_range, resolution=1e-4, points=41):
    """Coarse-to-fine minimization of a convex function of (mu, beta)."""
    mu_lo, mu_hi = mu_range
    b_lo, b_hi = beta_range
    best = (math.inf, 0.0, 0.0)
    while True:
        mus = np.linspace(mu_lo, mu_hi, points)
        bs = np.linspace(b_lo, b_hi, points)
        for m in mus:
            for b in bs:
                v = fun(m, b)
                if v < best[0]:
                    best = (v, m, b)
        d_mu = mus[1] - mus[0]
        d_b = bs[1] - bs[0]
        if max(d_mu, d_b) <= resolution:
            return best
        _, m0, b0 = best
        mu_lo, mu_hi = m0 - 2 * d_mu, m0 + 2 * d_mu
        b_lo, b_hi = max(0.0, b0 - 2 * d_b), b0 + 2 * d_b


def irls_logistic(x: np.ndarray, y: np.ndarray, iters: int = 200, tol: float = 1e-12):
    """Iteratively reweighted least squares for the logit model."""
    theta = np.zeros(x.shape[1])
    for _ in range(iters):
        eta = x @ theta
        p = 1.0 / (1.0 + np.exp(-eta))
        w = np.clip(p * (1.0 - p), 1e-12, None)
        z = eta + (y - p) / w
        sw = np.sqrt(w)
        theta_new, *_ = np.linalg.lstsq(x * sw[:, None], z * sw, rcond=None)
        if np.max(np.abs(theta_new - theta)) < tol:
            return theta_new
        theta = theta_new
    return theta


def random_graph(rng: np.random.Generator, n: int, p: float | None = None):
    """Plain G(n, p) draw as an edge array (oracle-side sampler)."""
    if p is None:
        p = rng.uniform(0.2, 0.8)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            if rng.random() < p:
                edges.append((i, j))
    return np.array(edges, dtype=np.int64).reshape(-1, 2)


def poisson_cdf_quantile(q: float, lam: float) -> int:
    total = 0.0
    k = 0
    while True:
        total += math.exp(k * math.log(lam) - lam - math.lgamma(k + 1)) if lam > 0 else (1.0 if k == 0 else 0.0)
        if total >= q:
            return k
        k += 1
