"""Command-line front end.

Subcommands (``simulate``, ``estimate``, ``summarize``, ``benchmark``) are
driven by one JSON config file holding a section per subcommand.  Unknown
keys anywhere in a section are rejected rather than ignored.  Every output
file starts with ``#``-prefixed metadata lines (config hash, seed, code
version); file bodies are deterministic functions of the metadata, so a
rerun with the same config and seed reproduces them byte for byte (the one
exception is the wall-clock Speed column of benchmark metrics).

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from . import __version__, diagnostics, ingest, model, sampler, simulate
from .errors import (
    BayesLPError,
    ChainAborted,
    ConfigError,
    EmptyDraws,
    GapError,
    InsufficientData,
    NonPositiveValue,
    NotPositiveDefinite,
    ParseError,
    SpanMismatch,
)
from .kernel import RngStream

__all__ = ["main"]

_DATA_ERRORS = (ParseError, GapError, NonPositiveValue, SpanMismatch, InsufficientData, EmptyDraws)
_NUMERICAL_ERRORS = (NotPositiveDefinite, ChainAborted)


# ---------------------------------------------------------------------------
# config handling


def _canonical(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _hash(obj) -> str:
    return hashlib.sha256(_canonical(obj).encode()).hexdigest()[:16]


def _check_keys(section: dict, allowed: set[str], where: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be an object")
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in {where}")


def _load_config(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file {path} does not exist")
    try:
        cfg = json.loads(p.read_text())
    except json.JSONDecodeError as err:
        raise ConfigError(f"config file {path} is not valid JSON: {err}") from None
    _check_keys(cfg, {"simulate", "estimate", "summarize", "benchmark"}, "config")
    return cfg


def _section(cfg: dict, name: str) -> dict:
    if name not in cfg:
        raise ConfigError(f"config has no {name!r} section")
    return cfg[name]


def _parse_horizons(value, where: str) -> tuple[int, ...]:
    if isinstance(value, dict):
        _check_keys(value, {"first", "last"}, where)
        try:
            first, last = int(value["first"]), int(value["last"])
        except (KeyError, TypeError, ValueError):
            raise ConfigError(f"{where} needs integer 'first' and 'last'") from None
        if last <= first:
            raise ConfigError(f"{where}: last must exceed first")
        return tuple(range(first, last + 1))
    if isinstance(value, list) and len(value) >= 2:
        return tuple(int(v) for v in value)
    raise ConfigError(f"{where} must be a list of points or an object with first/last")


def _parse_dgp(section: dict, where: str) -> simulate.DgpSpec:
    _check_keys(section, {"kind", "L", "T", "seed", "r_shape"}, where)
    kind = section.get("kind", "linear")
    if kind not in simulate.DGP_KINDS:
        raise ConfigError(f"{where}.kind must be one of {list(simulate.DGP_KINDS)}, got {kind!r}")
    try:
        return simulate.DgpSpec(
            kind=kind,
            L=int(section.get("L", 20)),
            T=int(section.get("T", 50)),
            seed=int(section.get("seed", 0)),
            r_shape=None if section.get("r_shape") is None else float(section["r_shape"]),
        )
    except BayesLPError as err:
        raise ConfigError(f"{where}: {err}") from None


def _parse_spec(section: dict, where: str) -> model.ProjectionSpec:
    _check_keys(
        section,
        {"horizons", "penalty_order", "prior", "normal_variance", "hyper", "spline"},
        where,
    )
    if "horizons" not in section:
        raise ConfigError(f"{where}.horizons is required")
    horizons = _parse_horizons(section["horizons"], f"{where}.horizons")
    hyper_cfg = section.get("hyper", {})
    _check_keys(hyper_cfg, {"nu1", "nu2", "eta1", "eta2", "xi", "xi_scale"}, f"{where}.hyper")
    spline_cfg = section.get("spline")
    spline = None
    if spline_cfg is not None:
        _check_keys(spline_cfg, {"degree", "knot_mode"}, f"{where}.spline")
        spline = model.SplineSettings(
            degree=int(spline_cfg.get("degree", 3)),
            knot_mode=spline_cfg.get("knot_mode", "default"),
        )
    try:
        return model.ProjectionSpec(
            horizons=horizons,
            penalty_order=int(section.get("penalty_order", 2)),
            prior=section.get("prior", "nrp"),
            normal_variance=float(section.get("normal_variance", 100.0)),
            hyper=model.Hyper(
                nu1=float(hyper_cfg.get("nu1", 0.01)),
                nu2=float(hyper_cfg.get("nu2", 0.01)),
                eta1=float(hyper_cfg.get("eta1", 0.5)),
                eta2=float(hyper_cfg.get("eta2", 0.5)),
                xi=None if hyper_cfg.get("xi") is None else float(hyper_cfg["xi"]),
                xi_scale=None if hyper_cfg.get("xi_scale") is None else float(hyper_cfg["xi_scale"]),
            ),
            spline=spline,
        )
    except BayesLPError as err:
        raise ConfigError(f"{where}: {err}") from None


def _parse_sampler(section: dict, where: str, seed_override: int | None) -> sampler.SamplerConfig:
    _check_keys(section, {"draws", "burnin", "thin", "seed", "init"}, where)
    seed = seed_override if seed_override is not None else int(section.get("seed", 0))
    try:
        return sampler.SamplerConfig(
            n_draws=int(section.get("draws", 40000)),
            n_burnin=int(section.get("burnin", 10000)),
            thin=int(section.get("thin", 1)),
            seed=seed,
            init=section.get("init", "ols"),
        )
    except BayesLPError as err:
        raise ConfigError(f"{where}: {err}") from None


# ---------------------------------------------------------------------------
# deterministic file emission


def _format_value(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, meta: dict, columns: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        for key, value in meta.items():
            handle.write(f"# {key}: {value}\n")
        handle.write(",".join(columns) + "\n")
        for row in rows:
            handle.write(",".join(_format_value(v) for v in row) + "\n")


def _write_json(path: Path, meta: dict, payload: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    record = {"meta": meta, **payload}
    path.write_text(json.dumps(record, sort_keys=True, indent=2) + "\n")


def _read_csv(path: Path):
    if not path.is_file():
        raise ParseError(f"file {path} does not exist")
    meta: dict[str, str] = {}
    with open(path) as handle:
        for line in handle:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].partition(":")
            meta[key.strip()] = value.strip()
        else:
            raise ParseError(f"{path} holds no table")
        columns = [c.strip() for c in line.strip().split(",")]
        data = np.loadtxt(handle, delimiter=",", ndmin=2)
    if data.size and data.shape[1] != len(columns):
        raise ParseError(f"{path}: {data.shape[1]} data columns vs {len(columns)} headers")
    return meta, columns, data


def _meta(config_hash: str, seed, extra: dict | None = None) -> dict:
    meta = {"config_hash": config_hash, "seed": seed, "version": __version__}
    if extra:
        meta.update(extra)
    return meta


# ---------------------------------------------------------------------------
# subcommands


def cmd_simulate(cfg: dict, out_dir: Path, seed_override: int | None) -> None:
    section = _section(cfg, "simulate")
    _check_keys(section, {"dgp", "seed", "n_obs", "noise_scale"}, "simulate")
    dgp = _parse_dgp(section.get("dgp", {}), "simulate.dgp")
    seed = seed_override if seed_override is not None else int(section.get("seed", dgp.seed))
    resolved = dict(section)
    resolved["seed"] = seed
    config_hash = _hash(resolved)

    n_obs = None if section.get("n_obs") is None else int(section["n_obs"])
    noise_scale = float(section.get("noise_scale", 1.0))
    sim = simulate.simulate(dgp, RngStream(seed), n_obs=n_obs, noise_scale=noise_scale)

    meta = _meta(config_hash, seed, {"kind": dgp.kind, "L": dgp.L})
    _write_csv(
        out_dir / "series.csv",
        meta,
        ["t", "y", "z"],
        ((t + 1, sim.y[t], sim.z[t]) for t in range(len(sim.y))),
    )
    _write_csv(
        out_dir / "true_irf.csv",
        meta,
        ["lag"] + [f"regime_{r + 1}" for r in range(sim.irf.n_regimes)],
        ((lag, *sim.irf.curves[:, lag]) for lag in range(dgp.L + 1)),
    )
    _write_json(
        out_dir / "simulate_meta.json",
        meta,
        {
            "dgp": {"kind": dgp.kind, "L": dgp.L, "T": dgp.T, "r_shape": dgp.r_shape},
            "n_obs": len(sim.y),
            "noise_scale": noise_scale,
            "presample": {"z_burn": dgp.L, "state_dependent_y": 0.0},
        },
    )


def _resolve_estimate(cfg: dict, seed_override: int | None):
    section = _section(cfg, "estimate")
    _check_keys(section, {"input", "lags", "spec", "sampler", "chains"}, "estimate")
    spec = _parse_spec(_require(section, "spec", "estimate"), "estimate.spec")
    config = _parse_sampler(section.get("sampler", {}), "estimate.sampler", seed_override)
    resolved = json.loads(_canonical(section))
    resolved.setdefault("sampler", {})["seed"] = config.seed
    return section, spec, config, resolved


def _require(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"{where}.{key} is required")
    return section[key]


def _load_estimate_input(section: dict, spec: model.ProjectionSpec):
    input_cfg = _require(section, "input", "estimate")
    _check_keys(input_cfg, {"series", "monthly", "response", "shock", "trend"}, "estimate.input")
    lags = int(section.get("lags", 4))
    if "series" in input_cfg:
        meta, columns, data = _read_csv(Path(input_cfg["series"]))
        if "y" not in columns or "z" not in columns:
            raise ParseError(f"{input_cfg['series']} needs 'y' and 'z' columns, got {columns}")
        bundle = model.SeriesBundle(y=data[:, columns.index("y")], z=data[:, columns.index("z")])
    elif "monthly" in input_cfg:
        series: dict[str, ingest.MonthlySeries] = {}
        for item in input_cfg["monthly"]:
            _check_keys(item, {"path", "name", "transform", "value_col", "date_col"}, "estimate.input.monthly[]")
            loaded = ingest.load_csv_series(
                _require(item, "path", "estimate.input.monthly[]"),
                value_col=item.get("value_col"),
                date_col=item.get("date_col"),
            )
            transform = item.get("transform", "none")
            if transform == "log_diff_annualized":
                loaded = ingest.log_diff_annualized(loaded)
            elif transform != "none":
                raise ConfigError(f"unknown transform {transform!r} in estimate.input.monthly[]")
            series[item.get("name", loaded.name)] = loaded
        inputs = ingest.build_application_design(
            series,
            response=_require(input_cfg, "response", "estimate.input"),
            shock=_require(input_cfg, "shock", "estimate.input"),
            lags=lags,
            trend=bool(input_cfg.get("trend", True)),
        )
        bundle, lags = inputs.bundle, inputs.lags
    else:
        raise ConfigError("estimate.input needs either 'series' or 'monthly'")
    design = model.build_design(bundle, spec, lags=lags)
    if spec.spline is not None:
        return model.build_spline_design(design, spec)
    return design


def _draw_columns(draws: sampler.PosteriorDraws) -> tuple[list[str], np.ndarray]:
    spec = draws.spec
    n_h = spec.n_horizons
    names: list[str] = []
    blocks: list[np.ndarray] = [draws.coeffs]
    if draws.kind == "spline":
        k = draws.seq_len()
        names += [f"vartheta_j{j}_k{i}" for j in range(draws.n_coef) for i in range(k)]
    else:
        names += [f"theta_h{h}_j{j}" for h in spec.horizons for j in range(draws.n_coef)]
    names += [f"sigma_{i}_{ip}" for i in range(n_h) for ip in range(i + 1)]
    tril = np.tril_indices(n_h)
    blocks.append(draws.sigma[:, tril[0], tril[1]])
    if draws.tau is not None:
        names += [f"tau_{j}" for j in range(draws.n_coef)]
        blocks.append(draws.tau)
    if draws.lam is not None:
        n_pen = draws.lam.shape[2]
        names += [f"lambda_{j}_{i}" for j in range(draws.n_coef) for i in range(n_pen)]
        blocks.append(draws.lam.reshape(draws.n_stored, -1))
    return names, np.column_stack(blocks)


def _summary_rows(summary: diagnostics.IrfSummary):
    cols = summary.as_columns()
    names = list(cols)
    matrix = np.column_stack([cols[c] for c in names])
    return names, matrix


def cmd_estimate(cfg: dict, out_dir: Path, seed_override: int | None, chains: int, threads: int) -> None:
    section, spec, config, resolved = _resolve_estimate(cfg, seed_override)
    n_chains = chains if chains is not None else int(section.get("chains", 1))
    config_hash = _hash(resolved)
    spec_hash = _hash({k: resolved[k] for k in resolved if k != "chains"})

    design = _load_estimate_input(section, spec)
    draws = sampler.run_chains(design, spec, config, n_chains=n_chains, n_jobs=threads)

    extra = {
        "spec_hash": spec_hash,
        "kind": draws.kind,
        "prior": spec.prior,
        "n_coef": draws.n_coef,
        "horizons": ",".join(str(h) for h in spec.horizons),
        "chains": n_chains,
    }
    meta = _meta(config_hash, config.seed, extra)
    names, matrix = _draw_columns(draws)
    _write_csv(out_dir / "draws.csv", meta, names, matrix)

    summary = diagnostics.summarize_irf(draws, coeff=0)
    s_names, s_matrix = _summary_rows(summary)
    _write_csv(out_dir / "irf_summary.csv", meta, s_names, s_matrix)

    report = diagnostics.fit_report(draws, design)
    _write_json(
        out_dir / "fit.json",
        meta,
        {"fit": report.as_dict(), "gibbs_seconds": draws.elapsed_seconds},
    )


def cmd_summarize(cfg: dict, out_dir: Path, seed_override: int | None) -> None:
    section = _section(cfg, "summarize")
    _check_keys(section, {"draws", "coeff"}, "summarize")
    draws_path = Path(_require(section, "draws", "summarize"))
    coeff = int(section.get("coeff", 0))

    _, spec, _, resolved = _resolve_estimate(cfg, seed_override)
    expected_hash = _hash({k: resolved[k] for k in resolved if k != "chains"})
    meta, columns, data = _read_csv(draws_path)
    if meta.get("spec_hash") != expected_hash:
        raise ConfigError(
            f"draws file {draws_path} was produced under spec hash "
            f"{meta.get('spec_hash')!r}, but the config's estimate section hashes to "
            f"{expected_hash!r}; refusing to summarize mismatched draws"
        )

    if meta.get("kind") == "spline":
        sb = _rebuild_basis(spec)
        k = sb.n_functions
        cols = [columns.index(f"vartheta_j{coeff}_k{i}") for i in range(k)]
        profile = np.ascontiguousarray(data[:, cols]) @ sb.values.T
    else:
        cols = [columns.index(f"theta_h{h}_j{coeff}") for h in spec.horizons]
        # match the layout the estimate path reduces over, so the emitted
        # summary reproduces it bit for bit
        profile = np.ascontiguousarray(data[:, cols])

    qs = np.quantile(profile, diagnostics.QUANTILE_LEVELS, axis=0)
    out_meta = _meta(meta.get("config_hash", ""), meta.get("seed", ""), {"spec_hash": expected_hash, "coeff": coeff})
    rows = np.column_stack([np.asarray(spec.horizons, float), profile.mean(axis=0), qs[0], qs[1], qs[2], qs[3]])
    _write_csv(out_dir / "plot_data.csv", out_meta, ["horizon", "mean", "q2.5", "q5", "q95", "q97.5"], rows)


def _rebuild_basis(spec: model.ProjectionSpec):
    from .basis import bspline_basis, default_knot_grid

    knots = default_knot_grid(
        spec.horizons[0],
        spec.horizons[-1],
        spec.spline.degree,
        paper_literal=spec.spline.knot_mode == "paper_literal",
    )
    return bspline_basis(knots, spec.spline.degree, np.asarray(spec.horizons, float))


def cmd_benchmark(cfg: dict, out_dir: Path, seed_override: int | None, threads: int) -> None:
    section = _section(cfg, "benchmark")
    _check_keys(section, {"replications", "cells", "seed", "paper_literal_coverage"}, "benchmark")
    cells_cfg = _require(section, "cells", "benchmark")
    if not isinstance(cells_cfg, list) or not cells_cfg:
        raise ConfigError("benchmark.cells must be a non-empty list")
    n_reps = int(section.get("replications", 50))
    base_seed = seed_override if seed_override is not None else int(section.get("seed", 0))
    resolved = json.loads(_canonical(section))
    resolved["seed"] = base_seed
    config_hash = _hash(resolved)

    allowed = {"dgp", "prior", "bspline", "nu", "draws", "burnin", "thin", "lags", "horizons", "normal_variance"}
    rows = []
    for index, cell_cfg in enumerate(cells_cfg):
        _check_keys(cell_cfg, allowed, f"benchmark.cells[{index}]")
        dgp_cfg = dict(cell_cfg.get("dgp", {}))
        dgp_cfg.setdefault("seed", base_seed)
        dgp = _parse_dgp(dgp_cfg, f"benchmark.cells[{index}].dgp")
        prior = cell_cfg.get("prior", "nrp")
        nu = cell_cfg.get("nu")
        horizons = _parse_horizons(
            cell_cfg.get("horizons", {"first": 0, "last": dgp.L}),
            f"benchmark.cells[{index}].horizons",
        )
        hyper_kwargs = {}
        if nu is not None:
            hyper_kwargs = {"nu1": float(nu), "nu2": float(nu)}
        spline = model.SplineSettings() if cell_cfg.get("bspline", False) else None
        try:
            spec = model.ProjectionSpec(
                horizons=horizons,
                prior=prior,
                normal_variance=float(cell_cfg.get("normal_variance", 100.0)),
                hyper=model.Hyper(**hyper_kwargs),
                spline=spline,
            )
            config = sampler.SamplerConfig(
                n_draws=int(cell_cfg.get("draws", 5000)),
                n_burnin=int(cell_cfg.get("burnin", 1000)),
                thin=int(cell_cfg.get("thin", 1)),
                seed=base_seed,
            )
        except BayesLPError as err:
            raise ConfigError(f"benchmark.cells[{index}]: {err}") from None
        cell = simulate.ExperimentCell(
            dgp=dgp,
            spec=spec,
            config=config,
            lags=int(cell_cfg.get("lags", 4)),
            label=f"cell{index}",
        )
        result = simulate.run_experiment_cell(cell, n_reps, n_jobs=threads)
        rows.append(
            (
                dgp.T,
                dgp.kind,
                prior,
                int(bool(spline)),
                "" if prior == "normal" else _format_value(float(nu) if nu is not None else 0.01),
                result.report.mse,
                result.report.coverage,
                result.report.length,
                result.report.speed_seconds,
                len(result.failures),
            )
        )

    meta = _meta(config_hash, base_seed, {"replications": n_reps})
    _write_csv(
        out_dir / "metrics.csv",
        meta,
        ["T", "DGP", "prior", "bspline", "nu", "MSE", "Coverage", "Length", "Speed", "failures"],
        rows,
    )


# ---------------------------------------------------------------------------
# entry point


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bayeslp",
        description="Bayesian local projections with roughness-penalty priors",
    )
    parser.add_argument("command", choices=["simulate", "estimate", "summarize", "benchmark"])
    parser.add_argument("--config", required=True, help="path to the JSON run configuration")
    parser.add_argument("--seed", type=int, default=None, help="override the section's seed")
    parser.add_argument("--out", default=".", help="output directory (created if missing)")
    parser.add_argument("--chains", type=int, default=None, help="number of chains (estimate)")
    parser.add_argument("--threads", type=int, default=1, help="parallel workers")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    out_dir = Path(args.out)
    try:
        cfg = _load_config(args.config)
        if args.command == "simulate":
            cmd_simulate(cfg, out_dir, args.seed)
        elif args.command == "estimate":
            cmd_estimate(cfg, out_dir, args.seed, args.chains, args.threads)
        elif args.command == "summarize":
            cmd_summarize(cfg, out_dir, args.seed)
        else:
            cmd_benchmark(cfg, out_dir, args.seed, args.threads)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    except _DATA_ERRORS as err:
        print(f"data error: {err}", file=sys.stderr)
        return 3
    except _NUMERICAL_ERRORS as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
