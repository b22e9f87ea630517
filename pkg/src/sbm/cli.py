"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data/format error, 3 numerical
non-convergence.  Machine-readable output goes only to the designated output
path (or stdout where a subcommand has none); diagnostics go to stderr.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import re
import sys
from pathlib import Path

import numpy as np

from . import plots
from .analysis import build_node_table, fit_by_group, run_takeup_models, takeup_table
from .errors import DataFormatError, NonConvergenceError
from .graph import Graph, degree_partition, load_edge_list, sample_sbm, write_edge_list
from .harness import (
    degree_distribution,
    model_fit_overlay,
    parse_mc_config,
    run_monte_carlo,
)
from .inference import er_mle
from .likelihood import SbmParams
from .path import PathEntry, SolutionPath, select, solution_path
from .solver import FitConfig

class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _fresh_seed() -> int:
    return int.from_bytes(os.urandom(8), "little") % (2**63)


def _resolve_seed(seed: int | None) -> int:
    if seed is None:
        seed = _fresh_seed()
        print(f"seed: {seed}", file=sys.stderr)
    return seed


def _entry_json(entry: PathEntry, n: int) -> dict:
    fit = entry.fit
    beta = {str(i): float(fit.params.beta[i]) for i in entry.support}
    return {
        "n": n,
        "s": entry.s,
        "support": [int(i) for i in entry.support],
        "mu_hat": float(fit.params.mu),
        "beta_hat": beta,
        "nll": float(fit.nll),
        "bic": float(entry.bic),
        "bic_star": None if np.isnan(entry.bic_star) else float(entry.bic_star),
        "converged": bool(fit.converged),
        "at_boundary": bool(fit.any_boundary),
        "existence_ok": bool(fit.existence_ok),
    }


def _require_converged(entries) -> None:
    bad = [e for e in entries if not e.fit.converged]
    if bad:
        worst = max(e.fit.kkt_residual for e in bad)
        raise NonConvergenceError(
            f"{len(bad)} fit(s) did not converge (worst residual {worst:.3g})",
            residual=worst,
        )


def _entry_for_level(g: Graph, s: int, cfg: FitConfig) -> SolutionPath:
    dp = degree_partition(g)
    if s != 0 and s not in dp.cumulative:
        raise DataFormatError(
            f"s={s} is not an admissible sparsity level; admissible: "
            f"{[0, *dp.cumulative]}"
        )
    return solution_path(g, max_size=max(1, s), cfg=cfg)


def _cmd_fit(args) -> int:
    g = load_edge_list(args.input)
    cfg = FitConfig()
    if args.s is not None:
        path = _entry_for_level(g, args.s, cfg)
        entry = next(e for e in path.entries if e.s == args.s)
    else:
        path = solution_path(g, max_size=args.max_size, cfg=cfg)
        entry = select(path, variant=args.select or "bic", include_null=args.include_null)
    _require_converged([entry])
    Path(args.out).write_text(json.dumps(_entry_json(entry, g.n), indent=2) + "\n")
    return 0


def _cmd_path(args) -> int:
    g = load_edge_list(args.input)
    path = solution_path(g, max_size=args.max_size, cfg=FitConfig())
    _require_converged(path.entries)
    doc = {
        "n": g.n,
        "d_plus": g.d_plus,
        "entries": [_entry_json(e, g.n) for e in path.entries],
        "warnings": list(path.warnings),
    }
    Path(args.out).write_text(json.dumps(doc, indent=2) + "\n")
    return 0


def _cmd_generate(args) -> int:
    seed = _resolve_seed(args.seed)
    params = SbmParams.planted(args.n, args.mu, args.beta, args.s0)
    g = sample_sbm(params, seed)
    write_edge_list(g, args.out)
    return 0


def _cmd_er(args) -> int:
    g = load_edge_list(args.input)
    fit = er_mle(g, gamma=args.gamma)
    doc = {
        "n": fit.n,
        "p_hat": fit.p_hat,
        "mu_hat": fit.mu_hat,
        "se_p_plugin": fit.se_p_plugin,
        "se_mu_plugin": fit.se_mu_plugin,
        "boundary": fit.boundary,
    }
    if args.gamma is not None:
        doc.update(
            gamma=fit.gamma,
            p_dagger=fit.p_dagger,
            mu_dagger=fit.mu_dagger,
            se_p_asymptotic=fit.se_p_asymptotic,
            se_mu_asymptotic=fit.se_mu_asymptotic,
        )
    json.dump(doc, sys.stdout, indent=2)
    sys.stdout.write("\n")
    return 0


def _write_csv(path, header, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _cmd_mc(args) -> int:
    cfg = parse_mc_config(Path(args.config).read_text())
    summary, records = run_monte_carlo(cfg, threads=args.threads)
    rec_rows = [
        [r.rep, r.s_hat, int(r.correct), r.support_hash, _fmt(r.l1_beta_error),
         _fmt(r.abs_mu_error), int(r.converged), r.error]
        for r in records
    ]
    _write_csv(
        args.records,
        ["rep", "s_hat", "correct", "support_hash", "l1_beta_error",
         "abs_mu_error", "converged", "error"],
        rec_rows,
    )
    header = [
        "n", "s0", "mu0", "beta0", "reps", "seed", "max_size", "criterion",
        "include_null", "correct_support_freq", "mean_s_hat_minus_s0",
        "l1_mean", "l1_median", "l1_p25", "l1_p75",
        "mu_mean", "mu_median", "mu_p25", "mu_p75",
        "reps_completed", "failures",
    ]
    c = summary.config
    row = [
        c.n, c.s0, c.mu0, c.beta0, c.reps, c.seed,
        c.max_size if c.max_size is not None else "",
        c.criterion, int(c.include_null),
        _fmt(summary.correct_support_freq), _fmt(summary.mean_s_hat_minus_s0),
        _fmt(summary.l1_beta_error["mean"]), _fmt(summary.l1_beta_error["median"]),
        _fmt(summary.l1_beta_error["p25"]), _fmt(summary.l1_beta_error["p75"]),
        _fmt(summary.abs_mu_error["mean"]), _fmt(summary.abs_mu_error["median"]),
        _fmt(summary.abs_mu_error["p25"]), _fmt(summary.abs_mu_error["p75"]),
        summary.reps_completed, summary.failures,
    ]
    _write_csv(args.out, header, [row])
    if not args.no_plot:
        plots.mc_records_figure(records, cfg.s0, plots.figure_path(args.out))
    return 0


def _cmd_degree_dist(args) -> int:
    g = load_edge_list(args.input)
    rows = degree_distribution(g)
    _write_csv(args.out, ["degree", "p_k"], [[k, _fmt(p)] for k, p in rows])
    if not args.no_plot:
        plots.degree_distribution_figure(rows, plots.figure_path(args.out))
    return 0


def _cmd_overlay(args) -> int:
    seed = _resolve_seed(args.seed)
    g = load_edge_list(args.input)
    cfg = FitConfig()
    if args.s is not None:
        path = _entry_for_level(g, args.s, cfg)
        entry = next(e for e in path.entries if e.s == args.s)
    else:
        path = solution_path(g, cfg=cfg)
        entry = select(path, variant=args.select or "bic", include_null=args.include_null)
    _require_converged([entry])
    rows = model_fit_overlay(g, entry.fit, reps=args.reps, seed=seed)
    _write_csv(
        args.out,
        ["degree", "observed", "simulated", "poisson"],
        [[r.degree, _fmt(r.observed), _fmt(r.simulated), _fmt(r.poisson)] for r in rows],
    )
    if not args.no_plot:
        plots.overlay_figure(rows, plots.figure_path(args.out))
    return 0


def _read_outcomes(path) -> dict[str, dict[str, int]]:
    outcomes: dict[str, dict[str, int]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = {"node_id", "group_id", "takeup"}
        if reader.fieldnames is None or not expected <= set(reader.fieldnames):
            raise DataFormatError(
                f"{path}: outcome CSV must have header node_id,group_id,takeup"
            )
        for lineno, row in enumerate(reader, start=2):
            value = row["takeup"].strip()
            if value not in ("0", "1"):
                raise DataFormatError(f"{path}:{lineno}: takeup must be 0 or 1")
            outcomes.setdefault(row["group_id"].strip(), {})[row["node_id"].strip()] = int(value)
    return outcomes


def _cmd_analyze(args) -> int:
    edges_dir = Path(args.edges_dir)
    if not edges_dir.is_dir():
        raise DataFormatError(f"{edges_dir} is not a directory")
    graphs: dict[str, Graph] = {}
    for path in sorted(edges_dir.iterdir()):
        if path.is_file() and not path.name.endswith(".labels"):
            graphs[path.stem] = load_edge_list(path)
    if not graphs:
        raise DataFormatError(f"no edge-list files in {edges_dir}")
    outcomes = _read_outcomes(args.outcomes)
    fits = fit_by_group(
        graphs, cfg=FitConfig(), cap_fraction=args.cap_fraction,
        criterion=args.select or "bic", include_null=args.include_null,
    )
    rows = build_node_table(fits, graphs, outcomes)
    models = run_takeup_models(rows)
    table = takeup_table(models)
    _write_csv(
        args.out,
        ["model", "term", "estimate", "std_error", "z_value", "p_value",
         "converged", "separation", "n_obs"],
        [[r["model"], r["term"], _fmt(r["estimate"]), _fmt(r["std_error"]),
          _fmt(r["z_value"]), _fmt(r["p_value"]), int(r["converged"]),
          int(r["separation"]), r["n_obs"]] for r in table],
    )
    if not args.no_plot:
        plots.takeup_figure(table, plots.figure_path(args.out))
    return 0


def _cmd_convert_microfinance(args) -> int:
    """Convert per-village adjacency-matrix CSVs (adj_*_vilno_<id>.csv) into
    edge lists, taking the union over relation files for each village."""
    raw = Path(args.adjacency_dir)
    if not raw.is_dir():
        raise DataFormatError(f"{raw} is not a directory")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    pattern = re.compile(r"vilno_?(\d+)\.csv$")
    villages: dict[str, list[Path]] = {}
    for path in sorted(raw.iterdir()):
        match = pattern.search(path.name)
        if match:
            villages.setdefault(match.group(1), []).append(path)
    if not villages:
        raise DataFormatError(f"no files matching *vilno_<id>.csv in {raw}")
    for vid, files in sorted(villages.items(), key=lambda kv: int(kv[0])):
        union = None
        for path in files:
            mat = np.loadtxt(path, delimiter=",", dtype=np.int64)
            if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
                raise DataFormatError(f"{path}: adjacency matrix is not square")
            mat = ((mat + mat.T) > 0).astype(np.int64)
            np.fill_diagonal(mat, 0)
            union = mat if union is None else ((union + mat) > 0).astype(np.int64)
        iu, ju = np.nonzero(np.triu(union, k=1))
        g = Graph(union.shape[0], np.column_stack([iu, ju]))
        write_edge_list(g, out_dir / f"village_{vid}.tsv")
    print(f"wrote {len(villages)} village edge lists to {out_dir}", file=sys.stderr)
    return 0


def build_parser() -> Parser:
    parser = Parser(prog="sbm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit at one sparsity level or select by criterion")
    p.add_argument("--input", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--s", type=int)
    group.add_argument("--select", choices=["bic", "bic_star"])
    p.add_argument("--include-null", action="store_true")
    p.add_argument("--max-size", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("path", help="full solution path with criteria")
    p.add_argument("--input", required=True)
    p.add_argument("--max-size", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_path)

    p = sub.add_parser("generate", help="sample a graph from the model")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--mu", type=float, required=True)
    p.add_argument("--s0", type=int, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("er", help="Erdos-Renyi MLE with standard errors")
    p.add_argument("--input", required=True)
    p.add_argument("--gamma", type=float, default=None)
    p.set_defaults(func=_cmd_er)

    p = sub.add_parser("mc", help="Monte Carlo experiment from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--records", required=True)
    p.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=_cmd_mc)

    p = sub.add_parser("degree-dist", help="empirical degree distribution")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=_cmd_degree_dist)

    p = sub.add_parser("overlay", help="observed vs simulated degree distributions")
    p.add_argument("--input", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--s", type=int)
    group.add_argument("--select", choices=["bic", "bic_star"])
    p.add_argument("--include-null", action="store_true")
    p.add_argument("--reps", type=int, default=100)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=_cmd_overlay)

    p = sub.add_parser("analyze", help="per-group fits plus take-up regressions")
    p.add_argument("--edges-dir", required=True)
    p.add_argument("--outcomes", required=True)
    p.add_argument("--cap-fraction", type=float, default=0.5)
    p.add_argument("--select", choices=["bic", "bic_star"])
    p.add_argument("--include-null", action="store_true")
    p.add_argument("--out", required=True)
    p.add_argument("--no-plot", action="store_true")
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser(
        "convert-microfinance",
        help="convert Dataverse-style village adjacency CSVs to edge lists",
    )
    p.add_argument("--adjacency-dir", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=_cmd_convert_microfinance)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(str(exc), file=sys.stderr)
        return 1
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except FileNotFoundError as exc:
        print(f"error: no such file: {exc.filename}", file=sys.stderr)
        return 2
    except (DataFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
