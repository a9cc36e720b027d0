"""Command-line entry point.

Subcommands:
    generate     draw synthetic observations and write data + truth CSVs
    run          sample the posterior; write chain, summary, diagnostics CSVs
    compare      fit several noise models and rank them by WAIC
    sensitivity  refit with the degrees of freedom pinned at several values

Every command reads one JSON config (--config), applies flag overrides,
writes a fully resolved copy of the configuration next to its outputs, and
exits 0 on success, 2 on configuration errors, 3 on data errors, and 4 on
numerical failures (with a state dump when a chain aborted mid-run).
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import config as cfg
from . import tables
from .diagnostics import diagnose_draws, waic
from .exceptions import (
    ChainAbortError,
    ConfigError,
    DataError,
    DecompositionError,
    DegenerateVarianceError,
)
from .model import ObservedData
from .sampler import run_multi

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skewtgibbs",
        description=(
            "Hierarchical Bayesian inference for linear inverse problems "
            "with skew-t noise"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "generate": "write synthetic observations and the ground truth",
        "run": "sample the posterior and write draws, summary, diagnostics",
        "compare": "fit multiple noise models and rank them by WAIC",
        "sensitivity": "sweep fixed degrees of freedom against sampling them",
    }
    for name, help_text in specs.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="path to the JSON run config")
        p.add_argument("--seed", type=int, help="override the sampler seed")
        p.add_argument("--output-dir", help="override the output directory")
        p.add_argument("--iterations", type=int, help="override total sweeps")
        p.add_argument("--chains", type=int, help="override the chain count")
        p.add_argument(
            "--nu-mode",
            help="'sampled' or 'fixed:VALUE' for the degrees of freedom",
        )
        if name == "compare":
            p.add_argument(
                "--models",
                default=",".join(cfg.NOISE_MODELS),
                help="comma-separated noise models to compare",
            )
        if name == "sensitivity":
            p.add_argument(
                "--nu-values",
                help="comma-separated fixed degrees of freedom (each > 2)",
            )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = None
    try:
        overrides = {
            "seed": args.seed,
            "output_dir": args.output_dir,
            "iterations": args.iterations,
            "chains": args.chains,
            "nu_mode": args.nu_mode,
        }
        if getattr(args, "nu_values", None) is not None:
            overrides["nu_values"] = _parse_float_list(args.nu_values, "--nu-values")
        config = cfg.load_config(args.config, overrides=overrides)
        out_dir = Path(config.output_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        _write_json(out_dir / "resolved_config.json", cfg.resolved_dict(config))
        if args.command == "generate":
            _cmd_generate(config, out_dir)
        elif args.command == "run":
            _cmd_run(config, out_dir)
        elif args.command == "compare":
            models = [m.strip() for m in args.models.split(",") if m.strip()]
            _cmd_compare(config, out_dir, models)
        else:
            _cmd_sensitivity(config, out_dir, config.nu_values)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 3
    except ChainAbortError as exc:
        dump_path = _write_state_dump(exc, out_dir)
        print(f"numerical failure: {exc} (state dump: {dump_path})", file=sys.stderr)
        return 4
    except (DecompositionError, DegenerateVarianceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 4


def _parse_float_list(text: str, flag: str) -> list:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"{flag} must be a comma-separated number list") from exc


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2) + "\n")


def _write_state_dump(exc: ChainAbortError, out_dir) -> Path:
    directory = Path(out_dir) if out_dir is not None else Path(".")
    directory.mkdir(parents=True, exist_ok=True)
    dump_path = directory / "state_dump.json"
    _write_json(
        dump_path, {"iteration": exc.iteration, "state": exc.state_dump}
    )
    return dump_path


def _parameter_names(dim: int) -> list:
    return [f"u_{i + 1}" for i in range(dim)] + ["Delta", "tau", "nu"]


def _load_data(config: cfg.RunConfig, operator) -> tuple:
    """Returns (y, true_u or None); synthetic data is drawn deterministically."""
    if config.synthetic is not None:
        y, true_u = cfg.synthesize_data(config, operator)
        return y, true_u
    y = tables.read_data_csv(config.data_path)
    if y.shape[0] != operator.n_obs:
        raise DataError(
            f"data file holds {y.shape[0]} observations but the operator "
            f"produces {operator.n_obs}"
        )
    true_u = None
    if config.truth_path is not None:
        true_u = tables.true_u_from_truth(tables.read_truth_csv(config.truth_path))
        if true_u.shape[0] != operator.dim:
            raise DataError("truth file dimension does not match the operator")
    return y, true_u


def _cmd_generate(config: cfg.RunConfig, out_dir: Path) -> None:
    if config.synthetic is None:
        raise ConfigError("generate requires a synthetic block in the config")
    operator = cfg.build_operator(config.problem)
    y, true_u = cfg.synthesize_data(config, operator)
    tables.write_data_csv(out_dir / "data.csv", y)
    tables.write_truth_csv(
        out_dir / "truth.csv", cfg.truth_parameter_values(config, true_u)
    )
    print(f"wrote {out_dir / 'data.csv'} and {out_dir / 'truth.csv'}")


def _run_chains(config: cfg.RunConfig, sampler_config, operator, y):
    data = ObservedData(y=y, operator=operator)
    prior = cfg.build_priors(config, operator.dim)
    return run_multi(data, prior, sampler_config)


def _cmd_run(config: cfg.RunConfig, out_dir: Path) -> None:
    operator = cfg.build_operator(config.problem)
    y, _ = _load_data(config, operator)
    sampler_config = cfg.sampler_for_model(config, config.noise_model)
    chains = _run_chains(config, sampler_config, operator, y)

    names = _parameter_names(operator.dim)
    for index, chain in enumerate(chains, start=1):
        iters = sampler_config.burn_in + np.arange(chain.n_kept) * sampler_config.thin
        tables.write_draws_csv(
            out_dir / f"chain_{index}.csv",
            iters,
            chain.draws,
            chain.pointwise_loglik.sum(axis=1),
        )
    pooled = np.vstack([chain.draws for chain in chains])
    tables.write_summary_csv(out_dir / "summary.csv", tables.summarize(names, pooled))

    # Diagnostics describe a single chain; the first chain stands in for
    # all of them, and u is additionally tracked through its squared norm.
    first = chains[0].draws
    diag_matrix = np.column_stack(
        [first, np.sum(first[:, : operator.dim] ** 2, axis=1)]
    )
    report = diagnose_draws(diag_matrix, names + ["u_norm_sq"])
    tables.write_diagnostics_csv(out_dir / "diagnostics.csv", report)
    print(
        f"wrote {len(chains)} chain files, {out_dir / 'summary.csv'} and "
        f"{out_dir / 'diagnostics.csv'}"
    )


def _cmd_compare(config: cfg.RunConfig, out_dir: Path, models: list) -> None:
    if len(models) < 2:
        raise ConfigError("compare needs at least two models")
    for model in models:
        if model not in cfg.NOISE_MODELS:
            raise ConfigError(f"unknown noise model {model!r}")
    operator = cfg.build_operator(config.problem)
    y, _ = _load_data(config, operator)

    results = []
    for model in models:
        sampler_config = cfg.sampler_for_model(config, model)
        chains = _run_chains(config, sampler_config, operator, y)
        loglik = np.vstack([chain.pointwise_loglik for chain in chains])
        results.append((model, waic(loglik)))

    order = sorted(range(len(results)), key=lambda i: results[i][1].waic)
    ranks = [0] * len(results)
    for rank, position in enumerate(order, start=1):
        ranks[position] = rank
    rows = [
        (model, res.lppd, res.p_waic, res.waic, ranks[i])
        for i, (model, res) in enumerate(results)
    ]
    tables.write_waic_csv(out_dir / "waic.csv", rows)
    best = results[order[0]][0]
    print(f"wrote {out_dir / 'waic.csv'}; best model by WAIC: {best}")


def _cmd_sensitivity(config: cfg.RunConfig, out_dir: Path, nu_values) -> None:
    if config.noise_model not in ("student_t", "skew_t"):
        raise ConfigError(
            "sensitivity requires a noise model with free degrees of freedom"
        )
    operator = cfg.build_operator(config.problem)
    y, true_u = _load_data(config, operator)
    base = cfg.sampler_for_model(config, config.noise_model)

    runs = [("fixed", float(v)) for v in nu_values] + [("sampled", None)]
    rows = []
    for mode, value in runs:
        sampler_config = replace(base, df_mode=mode, df_fixed=value)
        chains = _run_chains(config, sampler_config, operator, y)
        pooled = np.vstack([chain.draws for chain in chains])
        d = operator.dim
        loading_col = pooled[:, d]
        tau_col = pooled[:, d + 1]
        if true_u is not None:
            recon = float(np.linalg.norm(pooled[:, :d].mean(axis=0) - true_u))
            per_chain = [
                float(np.linalg.norm(chain.draws[:, :d].mean(axis=0) - true_u))
                for chain in chains
            ]
            recon_se = (
                float(np.std(per_chain, ddof=1) / np.sqrt(len(per_chain)))
                if len(per_chain) > 1
                else float("nan")
            )
        else:
            recon = float("nan")
            recon_se = float("nan")
        rows.append(
            (
                cfg.format_nu_mode(mode, value),
                float(loading_col.mean()),
                float(loading_col.std(ddof=1)),
                float(tau_col.mean()),
                float(tau_col.std(ddof=1)),
                recon,
                recon_se,
            )
        )
    tables.write_sensitivity_csv(out_dir / "sensitivity.csv", rows)
    print(f"wrote {out_dir / 'sensitivity.csv'} ({len(rows)} runs)")


if __name__ == "__main__":
    raise SystemExit(main())
