# besselab/cli.py
# Purpose: click command group; one reproducible subcommand per pipeline.
# Notes:
# - Values come from `--config FILE` (key=value) overlaid by flags, then one pydantic model.
# - Exit status: 0 ok, 2 validation error, 3 numeric failure (or aliasing under --strict).
# - Every run writes report.csv, optional results.csv, manifest.txt and optional *.blab dumps.

from __future__ import annotations

import logging
import sys
import time
import warnings
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple

import click
import numpy as np
from pydantic import ValidationError

from besselab import config, observability
from besselab.errors import AliasingWarning, NumericFailure
from besselab.schemas import (
    SCHEMAS,
    CounterexampleConfig,
    DecaySweepConfig,
    ExperimentConfig,
    FtCheckConfig,
    GrowthConfig,
    MembershipConfig,
    OpnormConfig,
    UnifNormConfig,
    describe_validation_error,
)
from besselab.services.analysis.besselnorm import (
    SpaceIndex,
    classify_unif_membership,
    decay_ratio_sweep,
    ft_law_check,
    riesz_sampler,
    sweep_points,
    unif_norm_sweep,
)
from besselab.services.analysis.gridfield import Domain, Field, dft, make_grid
from besselab.services.analysis.multiplier import (
    MultiplierProblem,
    estimate_operator_norm,
    growth_slope_experiment,
    radial_lower_bound,
)
from besselab.services.analysis.riesz import (
    RieszParam,
    SingularCellRule,
    riesz_ft_constant,
    sample_f_alpha,
)
from besselab.services.analysis.sharpness import construct_counterexample, verify_counterexample
from besselab.services.artifacts.csv_writer import emit_csv
from besselab.services.artifacts.field_dump import dump_field
from besselab.services.artifacts.manifest import write_manifest

logger = logging.getLogger("besselab.cli")

EXIT_VALIDATION = 2
EXIT_NUMERIC = 3

Rows = List[Dict[str, Any]]
Outcome = Tuple[Rows, Optional[Rows], Dict[str, Field]]


class _RunFailure(Exception):
    def __init__(self, code: int, message: str) -> None:
        super().__init__(message)
        self.code = code
        self.message = message


def _merge(config_path: Optional[str], flags: Dict[str, Any]) -> Dict[str, Any]:
    merged: Dict[str, Any] = {}
    if config_path:
        merged.update(config.read_config_file(config_path))
    for key, value in flags.items():
        if value is None or value is False:
            continue
        merged[key] = value
    # the file may spell the list key either way; the flag spelling wins
    if "m_list" in merged and "m" in merged:
        merged.pop("m_list")
    return merged


def _validate(subcommand: str, raw: Dict[str, Any]) -> ExperimentConfig:
    try:
        return SCHEMAS[subcommand].model_validate(raw)
    except ValidationError as e:
        _, message = describe_validation_error(e)
        raise _RunFailure(EXIT_VALIDATION, message)


def _write_outputs(
    out_dir: Path,
    subcommand: str,
    cfg: ExperimentConfig,
    outcome: Outcome,
    dump_fields: bool,
    started_at: datetime,
    t0: float,
) -> None:
    report, results, fields = outcome
    outputs: Dict[str, str] = {"report": "report.csv"}
    emit_csv(report, out_dir / "report.csv")
    if results:
        emit_csv(results, out_dir / "results.csv")
        outputs["results"] = "results.csv"
    if dump_fields:
        for name, fld in sorted(fields.items()):
            dump_field(fld, out_dir / f"{name}.blab")
            outputs[f"dump.{name}"] = f"{name}.blab"
    params = cfg.model_dump(exclude={"out"})
    write_manifest(
        out_dir / "manifest.txt",
        subcommand=subcommand,
        params=params,
        seed=getattr(cfg, "seed", None),
        started_at=started_at,
        wall_time_s=time.monotonic() - t0,
        outputs=outputs,
    )


def _run(
    subcommand: str,
    config_path: Optional[str],
    strict: bool,
    dump_fields: bool,
    flags: Dict[str, Any],
    body: Callable[[Any], Outcome],
) -> None:
    started_at = datetime.now(timezone.utc)
    t0 = time.monotonic()
    current = "validate"
    try:
        cfg = _validate(subcommand, _merge(config_path, flags))
        out_dir = Path(cfg.out)
        current = "compute"
        with warnings.catch_warnings():
            warnings.simplefilter("error" if strict else "always", AliasingWarning)
            with observability.stage(f"{subcommand}.compute", logger, subcommand=subcommand):
                outcome = body(cfg)
        current = "write"
        out_dir.mkdir(parents=True, exist_ok=True)
        with observability.stage(f"{subcommand}.write", logger, subcommand=subcommand):
            _write_outputs(out_dir, subcommand, cfg, outcome, dump_fields, started_at, t0)
    except _RunFailure as e:
        _fail(subcommand, current, e.code, e.message)
    except AliasingWarning as e:
        _fail(subcommand, current, EXIT_NUMERIC, f"aliasing guard ({current}): {e}")
    except NumericFailure as e:
        _fail(subcommand, current, EXIT_NUMERIC, f"numeric failure ({current}): {e}")
    except ValueError as e:
        _fail(subcommand, current, EXIT_VALIDATION, f"invalid configuration ({current}): {e}")


def _fail(subcommand: str, stage_name: str, code: int, message: str) -> None:
    logger.error(
        "cli.error",
        extra={"event": "cli.error", "stage": stage_name, "subcommand": subcommand, "code": code},
    )
    click.echo(message, err=True)
    sys.exit(code)


def _common(fn: Callable) -> Callable:
    fn = click.option("--dump-fields", is_flag=True, help="Also write .blab field dumps.")(fn)
    fn = click.option("--strict", is_flag=True, help="Aliasing guard exits with status 3.")(fn)
    fn = click.option(
        "--config", "config_path", type=click.Path(dir_okay=False), help="key=value file."
    )(fn)
    fn = click.option("--out", help="Output directory (default: current directory).")(fn)
    return fn


def _opt(*decls: str, **kwargs: Any) -> Callable:
    return click.option(*decls, default=None, show_default=False, **kwargs)


def _param(n: int, alpha: float) -> RieszParam:
    return RieszParam(alpha=alpha, n=n)


# ---------------------- group ----------------------


@click.group()
@click.option("--log-level", default=None, help="Overrides BESSELAB_LOG_LEVEL.")
def cli(log_level: Optional[str]) -> None:
    """Numerical lab for Bessel potential, uniformly localized and multiplier norms."""
    observability.init_logging(log_level)


# ---------------------- ft-check ----------------------


def _ft_check(cfg: FtCheckConfig) -> Outcome:
    param = _param(cfg.n, cfg.alpha)
    rule = SingularCellRule()
    report: Rows = [
        {"key": "n", "value": cfg.n},
        {"key": "alpha", "value": cfg.alpha},
        {"key": "ft_constant", "value": riesz_ft_constant(param)},
        {"key": "dual_alpha", "value": param.dual().alpha},
    ]
    results: Rows = []
    for k, N in enumerate((cfg.N, 2 * cfg.N)):
        cmp = ft_law_check(param, make_grid(cfg.n, cfg.L, N), cfg.xi_max, rule, cfg.near_field)
        report.append({"key": f"rel_linf_error_N{N}", "value": cmp.rel_linf_error})
        if k == 0:
            for xi, d, o in zip(cmp.points, cmp.direct, cmp.oracle):
                results.append(
                    {
                        "xi": xi,
                        "direct_re": d.real,
                        "direct_im": d.imag,
                        "oracle_re": o.real,
                        "oracle_im": o.imag,
                    }
                )
    grid = make_grid(cfg.n, cfg.L, cfg.N)
    u = sample_f_alpha(param, grid, rule, np.zeros(cfg.n))
    return report, results, {"f_alpha": u, "f_alpha_dft": dft(u)}


@cli.command("ft-check")
@_opt("--n", "n", help="Dimension (1..3).")
@_opt("--alpha")
@_opt("--L", "L", help="Half-extent of the grid.")
@_opt("--N", "N", help="Points per axis (power of two); 2N is run as well.")
@_opt("--xi-max")
@_opt("--near-field")
@_common
def ft_check(config_path, strict, dump_fields, **flags) -> None:
    """Fourier law of the Riesz kernel: F f_alpha = C(alpha, n) f_{n-alpha}, 0 < alpha < n."""
    _run("ft-check", config_path, strict, dump_fields, flags, _ft_check)


# ---------------------- decay-sweep ----------------------


def _decay_sweep(cfg: DecaySweepConfig) -> Outcome:
    param = _param(cfg.n, cfg.alpha)
    grid = make_grid(cfg.n, cfg.L, cfg.N)
    zs = sweep_points(cfg.n, cfg.radii, cfg.directions)
    table = decay_ratio_sweep(param, zs, grid)
    values = [r for _, r in table]
    report: Rows = [
        {"key": "n", "value": cfg.n},
        {"key": "alpha", "value": cfg.alpha},
        {"key": "points", "value": len(values)},
        {"key": "ratio_max", "value": max(values)},
        {"key": "ratio_min", "value": min(values)},
        {"key": "ratio_spread", "value": max(values) / min(values)},
    ]
    results: Rows = [{"z": z, "ratio": r} for z, r in table]
    u = sample_f_alpha(param, grid, SingularCellRule(), np.zeros(cfg.n))
    return report, results, {"f_alpha": u}


@cli.command("decay-sweep")
@_opt("--n", "n")
@_opt("--alpha")
@_opt("--L", "L")
@_opt("--N", "N")
@_opt("--radii", help="Comma-separated shift radii.")
@_opt("--directions")
@_common
def decay_sweep(config_path, strict, dump_fields, **flags) -> None:
    """Cutoff decay of f_alpha: sup_z |F(eta_z f_alpha)(xi)| <= C (1+|xi|^2)^((alpha-n)/2)."""
    _run("decay-sweep", config_path, strict, dump_fields, flags, _decay_sweep)


# ---------------------- unif-norm ----------------------


def _unif_norm(cfg: UnifNormConfig) -> Outcome:
    param = _param(cfg.n, cfg.alpha)
    grid = make_grid(cfg.n, cfg.L, cfg.N)
    sampler = riesz_sampler(param, grid)
    sweep = unif_norm_sweep(
        sampler, SpaceIndex(gamma=cfg.gamma, p=cfg.p), grid, cfg.radii, cfg.directions
    )
    report: Rows = [
        {"key": "n", "value": cfg.n},
        {"key": "alpha", "value": cfg.alpha},
        {"key": "gamma", "value": cfg.gamma},
        {"key": "p", "value": cfg.p},
        {"key": "sup", "value": sweep.sup},
        {"key": "argmax_z", "value": sweep.argmax_z},
    ]
    results: Rows = [{"z": z, "norm": v} for z, v in sweep.table]
    return report, results, {"f_alpha": sampler(np.zeros(cfg.n))}


@cli.command("unif-norm")
@_opt("--n", "n")
@_opt("--alpha")
@_opt("--gamma")
@_opt("--p")
@_opt("--L", "L")
@_opt("--N", "N")
@_opt("--radii")
@_opt("--directions")
@_common
def unif_norm(config_path, strict, dump_fields, **flags) -> None:
    """Uniformly localized norm sup_z ||eta_z f_alpha||_{H^gamma_p}, reported over a shift sweep."""
    _run("unif-norm", config_path, strict, dump_fields, flags, _unif_norm)


# ---------------------- membership ----------------------


def _membership(cfg: MembershipConfig) -> Outcome:
    verdict = classify_unif_membership(
        _param(cfg.n, cfg.alpha), cfg.t, cfg.analytic_only, cfg.base_N, cfg.L
    )
    report: Rows = [
        {"key": "n", "value": cfg.n},
        {"key": "t", "value": cfg.t},
        {"key": "alpha", "value": cfg.alpha},
        {"key": "verdict", "value": verdict.verdict.value},
        {"key": "rationale", "value": verdict.rationale},
    ]
    results: Optional[Rows] = None
    if verdict.numeric_evidence is not None:
        fit = verdict.numeric_evidence
        report.extend(
            [
                {"key": "ladder_slope", "value": fit.slope},
                {"key": "ladder_r2", "value": fit.r2},
                {"key": "contracting", "value": bool(verdict.contracting)},
            ]
        )
        results = [{"N": N, "unif_norm": v} for N, v in verdict.ladder]
    return report, results, {}


@cli.command("membership")
@_opt("--n", "n")
@_opt("--t", "t")
@_opt("--alpha")
@_opt("--analytic-only", "analytic_only", is_flag=True, help="Skip the numeric grid ladder.")
@_opt("--base-N", "base_N")
@_opt("--L", "L")
@_common
def membership(config_path, strict, dump_fields, **flags) -> None:
    """Membership criterion: f_alpha in H^{-t}_{2,unif} iff 0 < alpha < min(n, t + n/2)."""
    _run("membership", config_path, strict, dump_fields, flags, _membership)


# ---------------------- growth ----------------------


def _growth(cfg: GrowthConfig) -> Outcome:
    prob = MultiplierProblem(n=cfg.n, s=cfg.s, t=cfg.t)
    exp = growth_slope_experiment(prob, cfg.alpha, cfg.m, cfg.quad_points)
    report: Rows = [
        {"key": "n", "value": cfg.n},
        {"key": "s", "value": cfg.s},
        {"key": "t", "value": cfg.t},
        {"key": "alpha", "value": cfg.alpha},
        {"key": "slope", "value": exp.fit.slope},
        {"key": "r2", "value": exp.fit.r2},
        {"key": "reference_slope", "value": exp.reference_fit.slope},
        {"key": "corrected_slope", "value": exp.corrected_slope},
        {"key": "expected_slope", "value": exp.expected_slope},
        {"key": "witnesses_necessity", "value": exp.witnesses_necessity},
    ]
    results: Rows = [
        {"m": m, "I": v, "lower_bound": radial_lower_bound(prob, cfg.alpha, m)}
        for m, v in zip(exp.m_values, exp.I_values)
    ]
    return report, results, {}


@cli.command("growth")
@_opt("--n", "n")
@_opt("--s", "s")
@_opt("--t", "t")
@_opt("--alpha")
@_opt("--m", "--m-list", "m", help="Comma-separated scales, at least 4.")
@_opt("--quad-points")
@_common
def growth(config_path, strict, dump_fields, **flags) -> None:
    """Necessity of alpha <= s + t: I(m) grows like m^(n+alpha-s-t), beyond m^n once alpha > s+t."""
    _run("growth", config_path, strict, dump_fields, flags, _growth)


# ---------------------- opnorm ----------------------


def _opnorm(cfg: OpnormConfig) -> Outcome:
    grid = make_grid(cfg.n, cfg.L, cfg.N)
    prob = MultiplierProblem(n=cfg.n, s=cfg.s, t=cfg.t)
    if cfg.alpha is not None:
        mu = sample_f_alpha(_param(cfg.n, cfg.alpha), grid, SingularCellRule(), np.zeros(cfg.n))
    else:
        mu = Field(grid, Domain.PHYSICAL, np.full(grid.shape, cfg.c, dtype=complex))
    est = estimate_operator_norm(mu, prob, cfg.max_iters, cfg.tol, cfg.seed)
    report: Rows = [
        {"key": "n", "value": cfg.n},
        {"key": "s", "value": cfg.s},
        {"key": "t", "value": cfg.t},
        {"key": "multiplier", "value": "f_alpha" if cfg.alpha is not None else "constant"},
        {"key": "sigma", "value": est.sigma},
        {"key": "iterations", "value": est.iterations},
        {"key": "converged", "value": est.converged},
    ]
    results: Rows = [{"iteration": k + 1, "sigma": v} for k, v in enumerate(est.history)]
    return report, results, {"mu": mu, "witness_g": est.witness_g}


@cli.command("opnorm")
@_opt("--n", "n")
@_opt("--s", "s")
@_opt("--t", "t")
@_opt("--alpha", help="Use f_alpha as the multiplier; otherwise the constant --c.")
@_opt("--c", "c")
@_opt("--L", "L")
@_opt("--N", "N")
@_opt("--seed")
@_opt("--tol")
@_opt("--max-iters")
@_common
def opnorm(config_path, strict, dump_fields, **flags) -> None:
    """Multiplier norm in M[s, -t]: power iteration for ||J_{-t} M_mu J_{-s}|| on L_2."""
    _run("opnorm", config_path, strict, dump_fields, flags, _opnorm)


# ---------------------- counterexample ----------------------


def _counterexample(cfg: CounterexampleConfig) -> Outcome:
    prob = MultiplierProblem(n=cfg.n, s=cfg.s, t=cfg.t)
    spec = construct_counterexample(prob, cfg.eps)
    grids = [make_grid(cfg.n, cfg.L, cfg.N * 2**k) for k in range(3)]
    report = verify_counterexample(spec, grids, cfg.m)
    results: Rows = [
        {"m": m, "I": v} for m, v in zip(report.growth.m_values, report.growth.I_values)
    ]
    u = sample_f_alpha(_param(cfg.n, spec.alpha), grids[0], SingularCellRule(), np.zeros(cfg.n))
    return report.rows(), results, {"f_alpha": u}


@cli.command("counterexample")
@_opt("--n", "n")
@_opt("--s", "s")
@_opt("--t", "t")
@_opt("--eps")
@_opt("--L", "L")
@_opt("--N", "N", help="Coarsest ladder grid; N, 2N and 4N are run.")
@_opt("--m", "--m-list", "m")
@_common
def counterexample(config_path, strict, dump_fields, **flags) -> None:
    """Sharpness of p1 = n/max(s,t): f_alpha, alpha = s+t+delta(eps), lies in
    H^{-min(s,t)}_{p1-eps,unif} but not in M[s, -t]."""
    _run("counterexample", config_path, strict, dump_fields, flags, _counterexample)


def main() -> None:
    cli(prog_name="besselab")


if __name__ == "__main__":
    main()
