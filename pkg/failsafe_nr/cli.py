"""`failsafe` command line.

Exit codes: 0 on success, 1 when a computation or file write fails (one-line
diagnostic on stderr), 2 on usage errors, including option values that fail
validation before anything is computed.
"""
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List

import click
import numpy as np
from omegaconf import DictConfig, OmegaConf
from pydantic import ValidationError

from failsafe_nr import __version__
from failsafe_nr.config_setup import (
    Approach,
    ApproachChoice,
    ConvergenceConfig,
    OutputFormat,
    Regime,
    RunConfig,
    SimulationConfig,
    SumLaw,
    Truth,
)
from failsafe_nr.convergence import run_convergence, summarize_ratio
from failsafe_nr.core.estimator import fail_safe_n
from failsafe_nr.core.nr_distribution import NrDistribution, nr_pdf_asymptotic
from failsafe_nr.core.quadrature import check_cf
from failsafe_nr.errors import FailsafeError
from failsafe_nr.io import emit, parse_study_csv
from failsafe_nr.loggers import make_logger
from failsafe_nr.montecarlo.goodness_of_fit import histogram, ks_report, overlay_curve
from failsafe_nr.montecarlo.simulate import simulate
from failsafe_nr.normal_kit import normal_sum_params, std_normal_cdf, std_normal_pdf
from failsafe_nr.utils.seed import resolve_seed

logger = logging.getLogger(__name__)

DEFAULTS_PATH = Path(__file__).parent / "configs" / "defaults.yaml"

HISTOGRAM_COLUMNS = ["left", "right", "count", "density"]


class Grid(click.ParamType):
    """LO:HI:N, N evenly spaced points from LO to HI inclusive."""
    name = "LO:HI:N"

    def convert(self, value, param, ctx):
        if isinstance(value, np.ndarray):
            return value
        try:
            lo, hi, n = value.split(":")
            lo, hi, n = float(lo), float(hi), int(n)
        except ValueError:
            self.fail(f"{value!r} is not of the form LO:HI:N", param, ctx)
        if n < 1 or (n > 1 and not hi > lo):
            self.fail(f"{value!r} needs N >= 1 and HI > LO", param, ctx)
        return np.linspace(lo, hi, n)


GRID = Grid()


class FailsafeGroup(click.Group):
    """Turns computation failures into exit code 1 and validation failures into usage errors."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except ValidationError as e:
            first = e.errors()[0]
            where = ".".join(str(p) for p in first["loc"]) or "options"
            raise click.UsageError(f"invalid {where}: {first['msg']}", ctx) from e
        except (FailsafeError, OSError) as e:
            raise click.ClickException(str(e)) from e


def _load_defaults() -> DictConfig:
    return OmegaConf.load(DEFAULTS_PATH)


def _validated(model, cfg: Dict[str, Any]):
    """OmegaConf -> dict -> pydantic, the same path the scripts take."""
    conf = OmegaConf.create({k: v for k, v in cfg.items() if v is not None})
    OmegaConf.resolve(conf)
    return model(**OmegaConf.to_container(conf))


def _run_config(ctx: click.Context, **overrides) -> RunConfig:
    state = ctx.obj
    cfg = {
        "alpha": state["defaults"].alpha,
        "approach": state["defaults"].approach,
        "output_format": state["output_format"] or state["defaults"].output_format,
        "output_path": state["output_path"],
        "workers": state["workers"] or state["defaults"].workers,
        "verbose": state["verbose"],
    }
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    if "seed" not in cfg:
        cfg["seed"] = resolve_seed(None)
    return _validated(RunConfig, cfg)


def _meta(config: RunConfig, command: str, **extra) -> Dict[str, Any]:
    meta = {"command": command, "config": config.model_dump(mode="json"), "seed": config.seed, "version": __version__}
    meta.update(extra)
    return meta


def _emit(config: RunConfig, tables, meta, columns=None) -> None:
    emit(tables, config.output_format, config.output_path, meta=meta, columns=columns)


@click.group(cls=FailsafeGroup)
@click.version_option(__version__, prog_name="failsafe")
@click.option("--format", "output_format", type=click.Choice([f.value for f in OutputFormat]), default=None, help="Output format.")
@click.option("--output", "output_path", type=click.Path(dir_okay=False), default=None, help="Write here instead of stdout.")
@click.option("--workers", type=int, default=None, help="Worker processes for simulations.")
@click.option("--verbose", is_flag=True, default=False, help="Progress bars and INFO logging on stderr.")
@click.pass_context
def cli(ctx, output_format, output_path, workers, verbose):
    """Rosenthal's fail-safe number and the exact distribution of its estimator."""
    defaults = _load_defaults()
    verbose = verbose or bool(defaults.verbose)
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        stream=sys.stderr,
        format="%(levelname)s %(name)s: %(message)s",
        force=True,
    )
    logging.captureWarnings(True)
    ctx.obj = {
        "defaults": defaults,
        "output_format": output_format,
        "output_path": output_path,
        "workers": workers,
        "verbose": verbose,
    }


@cli.command()
@click.option("--alpha", type=float, default=None, help="One-tailed significance level.")
@click.argument("study_file", type=click.Path(exists=True, dir_okay=False, allow_dash=True))
@click.pass_context
def compute(ctx, alpha, study_file):
    """Fail-safe number of the studies in STUDY_FILE (header `z` or `effect,se`)."""
    config = _run_config(ctx, alpha=alpha)
    if study_file == "-":
        table = parse_study_csv(sys.stdin)
    else:
        with open(study_file, encoding="utf-8") as f:
            table = parse_study_csv(f)
    report = fail_safe_n(table.to_study_set(), config.alpha)
    _emit(config, {"report": [report]}, _meta(config, "compute", input=str(study_file)))


def _default_grid(d: NrDistribution, n: int, tail_mass: float) -> np.ndarray:
    lo = d.quantile(tail_mass)
    hi = d.quantile(1.0 - tail_mass)
    if d.support[1]:
        lo = d.support[0]
    return np.linspace(lo, hi, n)


@cli.command()
@click.argument("quantity", type=click.Choice(["pdf", "cdf", "moments", "cf"]))
@click.option("--k", type=int, required=True, help="Number of studies.")
@click.option("--alpha", type=float, default=None)
@click.option("--approach", type=click.Choice([a.value for a in ApproachChoice]), default=None)
@click.option("--t", "t_values", type=float, multiple=True, help="CF frequency; repeatable.")
@click.option("--grid", type=GRID, default=None, help="Evaluation points LO:HI:N.")
@click.option("--asymptotic", is_flag=True, default=False, help="pdf only: large-k truncated density.")
@click.option("--verify", is_flag=True, default=False, help="cf only: add the gap to a numerical Fourier integral of the pdf.")
@click.pass_context
def dist(ctx, quantity, k, alpha, approach, t_values, grid, asymptotic, verify):
    """Exact pdf, cdf, moments or characteristic function of N_R."""
    if t_values and quantity != "cf":
        raise click.UsageError("--t only applies to `dist cf`")
    if t_values and grid is not None:
        raise click.UsageError("give either --t or --grid, not both")
    if asymptotic and quantity != "pdf":
        raise click.UsageError("--asymptotic only applies to `dist pdf`")
    if verify and quantity != "cf":
        raise click.UsageError("--verify only applies to `dist cf`")
    if grid is not None and quantity == "moments":
        raise click.UsageError("--grid does not apply to `dist moments`")

    config = _run_config(ctx, alpha=alpha, approach=approach, k=k)
    defaults = ctx.obj["defaults"].dist
    rows: List[Dict[str, Any]] = []
    for a in config.approach.approaches():
        d = NrDistribution.create(config.k, config.alpha, a)
        if quantity == "moments":
            rows.append({"approach": a.value, **d.moments().model_dump()})
        elif quantity == "cf":
            ts = np.asarray(t_values, dtype=float) if t_values else (grid if grid is not None else GRID.convert(defaults.cf_grid, None, ctx))
            for t, value in zip(ts, np.atleast_1d(d.cf(ts))):
                row = {"approach": a.value, "t": float(t), "re": float(value.real), "im": float(value.imag)}
                if verify:
                    row["residual"] = check_cf(float(t), d)
                rows.append(row)
        else:
            xs = grid if grid is not None else _default_grid(d, int(defaults.grid_points), float(defaults.tail_mass))
            if asymptotic:
                values = np.atleast_1d(nr_pdf_asymptotic(xs, d.params))
                label = "asymptotic"
            else:
                values = np.atleast_1d(d.pdf(xs) if quantity == "pdf" else d.cdf(xs))
                label = a.value
            rows += [{"approach": label, "n_r": float(x), quantity: float(v)} for x, v in zip(xs, values)]
        if asymptotic:
            break
    _emit(config, {quantity: rows}, _meta(config, f"dist {quantity}", asymptotic=asymptotic, verify=verify))


def _histogram_rows(hist) -> List[Dict[str, Any]]:
    return [
        {"left": float(l), "right": float(r), "count": int(c), "density": float(dn)}
        for l, r, c, dn in zip(hist.bin_edges[:-1], hist.bin_edges[1:], hist.counts, hist.density)
    ]


def _simulation_config(ctx, k, reps, seed, bins, sum_law, **extra) -> SimulationConfig:
    defaults = ctx.obj["defaults"].simulate
    cfg = {
        "k": k if k is not None else defaults.k,
        "reps": reps if reps is not None else defaults.reps,
        "seed": resolve_seed(seed),
        "bins": bins,
        "sum_law": sum_law or defaults.sum_law,
        "max_bins": defaults.max_bins,
        "overlay_points": defaults.overlay_points,
        "workers": ctx.obj["workers"] or ctx.obj["defaults"].workers,
    }
    cfg.update(extra)
    return _validated(SimulationConfig, cfg)


def _simulation_options(f):
    f = click.option("--sum-law", type=click.Choice([s.value for s in SumLaw]), default=None, help="How study sums are drawn.")(f)
    f = click.option("--bins", type=int, default=None, help="Histogram bins; default Freedman-Diaconis.")(f)
    f = click.option("--seed", type=int, default=None, help="Master seed; overrides FAILSAFE_SEED.")(f)
    f = click.option("--reps", type=int, default=None)(f)
    f = click.option("--k", type=int, default=None)(f)
    return f


@click.group("simulate")
def simulate_cmd():
    """Monte Carlo draws with histogram, overlay curves and KS reports."""


@simulate_cmd.command("clt")
@_simulation_options
@click.pass_context
def simulate_clt(ctx, k, reps, seed, bins, sum_law):
    """Sums of k half-normals against their normal limit."""
    sim = _simulation_config(ctx, k, reps, seed, bins, sum_law, regime=Regime.SUMS_ONLY.value)
    config = _run_config(ctx, seed=sim.seed, reps=sim.reps, k=sim.k)
    batch = simulate(sim, verbose=config.verbose)
    mean, variance = normal_sum_params(sim.k)
    sd = float(np.sqrt(variance))

    def limit_pdf(x):
        return std_normal_pdf((np.asarray(x) - mean) / sd) / sd

    hist = histogram(batch, bins=sim.bins, max_bins=sim.max_bins)
    x, y = overlay_curve(limit_pdf, float(hist.bin_edges[0]), float(hist.bin_edges[-1]), sim.overlay_points)
    report = ks_report(batch, lambda v: std_normal_cdf((np.asarray(v) - mean) / sd))
    tables = {
        "histogram": _histogram_rows(hist),
        "overlay": [{"x": float(a), "normal_pdf": float(b)} for a, b in zip(x, y)],
        "ks": [{"reference": "normal_limit", **report.model_dump()}],
    }
    _emit(config, tables, _meta(config, "simulate clt", simulation=sim.model_dump(mode="json")), {"histogram": HISTOGRAM_COLUMNS})


@simulate_cmd.command("nr")
@_simulation_options
@click.option("--alpha", type=float, default=None)
@click.option("--regime", type=click.Choice([a.value for a in Approach]), default=Approach.FOLDED.value)
@click.pass_context
def simulate_nr_cmd(ctx, k, reps, seed, bins, sum_law, alpha, regime):
    """Simulated N_R in one regime against both exact densities."""
    regime_enum = Regime.NR_TRUNCATED if regime == Approach.TRUNCATED.value else Regime.NR_FOLDED
    alpha = alpha if alpha is not None else ctx.obj["defaults"].alpha
    sim = _simulation_config(ctx, k, reps, seed, bins, sum_law, regime=regime_enum.value, alpha=alpha)
    config = _run_config(ctx, seed=sim.seed, reps=sim.reps, k=sim.k, alpha=sim.alpha)
    batch = simulate(sim, verbose=config.verbose)

    exact = {a: NrDistribution.create(sim.k, sim.alpha, a) for a in Approach}
    hist = histogram(batch, bins=sim.bins, max_bins=sim.max_bins)
    lo = max(float(hist.bin_edges[0]), float(batch.values.min()))
    hi = float(hist.bin_edges[-1])
    overlay = {a: overlay_curve(exact[a].pdf, lo, hi, sim.overlay_points) for a in Approach}
    x = overlay[Approach.FOLDED][0]
    tables = {
        "histogram": _histogram_rows(hist),
        "overlay": [
            {"x": float(xi), "truncated_pdf": float(overlay[Approach.TRUNCATED][1][i]), "folded_pdf": float(overlay[Approach.FOLDED][1][i])}
            for i, xi in enumerate(x)
        ],
        "ks": [{"reference": a.value, **ks_report(batch, exact[a].cdf).model_dump()} for a in Approach],
        "summary": [{
            "regime": regime,
            "reps_requested": batch.reps_requested,
            "reps_kept": batch.reps_kept,
            "rejection_rate": batch.rejection_rate,
        }],
    }
    _emit(config, tables, _meta(config, "simulate nr", simulation=sim.model_dump(mode="json")), {"histogram": HISTOGRAM_COLUMNS})


cli.add_command(simulate_cmd)


@cli.command()
@click.option("--kmin", "k_min", type=int, default=None)
@click.option("--kmax", "k_max", type=int, default=None)
@click.option("--step", "k_step", type=int, default=None)
@click.option("--reps", "reps_per_k", type=int, default=None, help="Simulated N_R per grid point.")
@click.option("--alpha", type=float, default=None)
@click.option("--seed", type=int, default=None)
@click.option("--truth", type=click.Choice([t.value for t in Truth]), default=None, help="Which closed-form mean is the truth.")
@click.option("--paper-scale", is_flag=True, default=False, help="k = 10..5000 step 10 with 10^4 reps each.")
@click.option("--log-csv", type=click.Path(dir_okay=False), default=None, help="Stream per-k metrics to this CSV.")
@click.pass_context
def converge(ctx, k_min, k_max, k_step, reps_per_k, alpha, seed, truth, paper_scale, log_csv):
    """Convergence of the simulated mean to E[N_R], with a log-log fit of the error."""
    defaults = ctx.obj["defaults"].converge
    cfg = {
        "k_min": k_min if k_min is not None else defaults.k_min,
        "k_max": k_max if k_max is not None else defaults.k_max,
        "k_step": k_step if k_step is not None else defaults.k_step,
        "reps_per_k": reps_per_k if reps_per_k is not None else defaults.reps_per_k,
        "alpha": alpha if alpha is not None else ctx.obj["defaults"].alpha,
        "seed": resolve_seed(seed),
        "truth": truth or defaults.truth,
        "paper_scale": paper_scale,
        "workers": ctx.obj["workers"] or ctx.obj["defaults"].workers,
        "verbose": ctx.obj["verbose"],
        "log_csv": log_csv,
    }
    conv = _validated(ConvergenceConfig, cfg)
    config = _run_config(ctx, alpha=conv.alpha, seed=conv.seed, reps=conv.reps_per_k, k_grid=conv.k_grid)
    records, fit = run_convergence(conv, make_logger(conv))
    fit_row = {**fit.model_dump(), "mean_ratio": summarize_ratio(records)}
    meta = _meta(config, "converge", convergence=conv.model_dump(mode="json", exclude={"k_grid"}))
    _emit(config, {"records": records, "fit": [fit_row]}, meta)


if __name__ == "__main__":
    cli()
