"""Degree-sorted solution path for the L0-constrained fit, with BIC selection.

Sorting nodes by degree collapses the combinatorial search: at every
admissible sparsity level s (a cumulative distinct-degree group size) the
constrained optimum assigns nonzero beta exactly to the s largest-degree
nodes.  ``brute_force_l0`` keeps the naive enumeration around as an oracle.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import combinations
from math import log

from .graph import Graph, degree_partition
from .solver import FitConfig, FitResult, fit_support

BRUTE_FORCE_MAX_N = 12
_TIE_TOL = 1e-9


@dataclass(frozen=True)
class PathEntry:
    s: int
    support: tuple[int, ...]
    fit: FitResult
    bic: float
    bic_star: float


@dataclass(frozen=True)
class SolutionPath:
    entries: tuple[PathEntry, ...]  # increasing s; entries[0] is the s=0 fit
    warnings: tuple[str, ...] = ()

    @property
    def null_entry(self) -> PathEntry:
        return self.entries[0]

    @property
    def admissible(self) -> tuple[PathEntry, ...]:
        return self.entries[1:]


def information_criterion(fit: FitResult, n: int, d_plus: int, variant: str) -> float:
    """bic = 2 nll + s log(n(n-1)/2); bic_star penalizes with log(d+)."""
    s = len(fit.support)
    if variant == "bic":
        return 2.0 * fit.nll + s * log(n * (n - 1) / 2)
    if variant == "bic_star":
        if d_plus <= 0:
            raise ValueError("bic_star undefined for a graph without edges")
        return 2.0 * fit.nll + s * log(d_plus)
    raise ValueError(f"unknown criterion {variant!r}")


def _make_entry(g: Graph, s: int, support: tuple[int, ...], fit: FitResult) -> PathEntry:
    bic = information_criterion(fit, g.n, g.d_plus, "bic")
    bic_star = (
        information_criterion(fit, g.n, g.d_plus, "bic_star")
        if g.d_plus > 0
        else float("nan")
    )
    return PathEntry(s=s, support=support, fit=fit, bic=bic, bic_star=bic_star)


def solution_path(
    g: Graph, max_size: int | None = None, cfg: FitConfig | None = None
) -> SolutionPath:
    """Fit the nested degree-sorted supports up to ``max_size`` nonzero betas.

    Each level warm-starts from the previous one with the new coordinates at
    zero.  The s=0 (Erdos-Renyi) fit is always included as the first entry.
    A regular graph has no admissible level, so its path holds only that
    entry and carries a warning.
    """
    cfg = cfg or FitConfig()
    if max_size is None:
        max_size = max(1, g.n // 2)
    if max_size < 1:
        raise ValueError("max_size must be at least 1")
    notes: list[str] = []
    dp = degree_partition(g)

    null_fit = fit_support(g, (), cfg.with_warm_start(None))
    entries = [_make_entry(g, 0, (), null_fit)]
    if g.d_plus == 0:
        notes.append("graph has no edges; bic_star is undefined")

    levels = [c for c in dp.cumulative if c <= max_size]
    if not levels:
        notes.append(
            "regular graph (all degrees equal): only the Erdos-Renyi fit is admissible"
            if dp.m == 1
            else f"no admissible sparsity level within max_size={max_size}"
        )
        warnings.warn(notes[-1], stacklevel=2)
        return SolutionPath(entries=tuple(entries), warnings=tuple(notes))

    support: list[int] = []
    prev = null_fit.params
    for k, level in enumerate(levels):
        support.extend(dp.groups[k])
        fit = fit_support(g, support, cfg.with_warm_start(prev))
        entries.append(_make_entry(g, level, tuple(sorted(support)), fit))
        prev = fit.params
    return SolutionPath(entries=tuple(entries), warnings=tuple(notes))


def select(path: SolutionPath, variant: str = "bic", include_null: bool = False) -> PathEntry:
    """Entry minimizing the chosen criterion, ties broken toward smaller s.

    The s=0 entry competes only when ``include_null`` is set; a path that has
    nothing but the s=0 entry returns it regardless.
    """
    if not path.entries:
        raise ValueError("empty solution path")
    candidates = path.entries if include_null else path.admissible
    if not candidates:
        return path.null_entry
    key = {"bic": lambda e: e.bic, "bic_star": lambda e: e.bic_star}[variant]
    best = candidates[0]
    for entry in candidates[1:]:
        if key(entry) < key(best):
            best = entry
    return best


@dataclass(frozen=True)
class BruteForceResult:
    fit: FitResult
    support: tuple[int, ...]
    tied: bool
    n_supports: int


def brute_force_l0(g: Graph, s: int, cfg: FitConfig | None = None) -> BruteForceResult:
    """Global L0-constrained optimum by fitting every support of size <= s.

    Enlarging a support never hurts the optimum, so enumerating the
    C(n, min(s, n-1)) supports of maximal size is exhaustive.  Guarded to
    n <= 12; meant as a test oracle, not a production path.
    """
    if g.n > BRUTE_FORCE_MAX_N:
        raise ValueError(f"brute force restricted to n <= {BRUTE_FORCE_MAX_N}")
    if s < 0:
        raise ValueError("s must be nonnegative")
    cfg = (cfg or FitConfig()).with_warm_start(None)
    size = min(s, g.n - 1)
    best_fit: FitResult | None = None
    best_support: tuple[int, ...] = ()
    tied = False
    count = 0
    for support in combinations(range(g.n), size):
        count += 1
        fit = fit_support(g, support, cfg)
        if best_fit is None or fit.nll < best_fit.nll - _TIE_TOL:
            best_fit, best_support, tied = fit, support, False
        elif abs(fit.nll - best_fit.nll) <= _TIE_TOL:
            tied = True
    assert best_fit is not None
    return BruteForceResult(fit=best_fit, support=best_support, tied=tied, n_supports=count)
