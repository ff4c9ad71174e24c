"""Command-line surface: fit, simulate, ic-check and bench subcommands.

Exit codes: 0 success, 2 malformed input or invalid flags, 3 numerical
failure (the error name is also written to the JSON output when possible).
All user-facing variable indices are 1-based.
"""

import os
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import baselines, diagnostics, pipeline, report, simulation
from .errors import WLassoError
from .fileio import MalformedInputError, read_matrix_csv, read_vector_csv
from .solver import lambda_grid


def _resolve_threads(flag: int | None) -> int:
    if flag is not None:
        return flag
    env = os.environ.get("WLASSO_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise click.UsageError(f"WLASSO_THREADS must be an integer, got {env!r}") from exc
    return os.cpu_count() or 1


def _parse_alphas(text: str):
    if text.strip().lower() == "identity":
        return None
    parts = text.split(",")
    if len(parts) != 3:
        raise click.UsageError("--alphas must be 'identity' or three comma-separated values")
    try:
        return tuple(float(v) for v in parts)
    except ValueError as exc:
        raise click.UsageError(f"bad --alphas value: {text!r}") from exc


def _parse_index_list(text: str) -> np.ndarray:
    try:
        idx = np.array([int(v) for v in text.split(",")], dtype=np.int64)
    except ValueError as exc:
        raise click.UsageError(f"bad index list: {text!r}") from exc
    if idx.size == 0 or np.any(idx < 1):
        raise click.UsageError("indices are 1-based and must be positive")
    return idx - 1


def _fail_numerical(exc: WLassoError, method: str, parameters: dict, out: str | None):
    doc = report.base_document(method, parameters)
    doc["error"] = type(exc).__name__
    doc["message"] = str(exc)
    if out:
        report.write_json(doc, out)
    click.echo(f"numerical failure: {type(exc).__name__}: {exc}", err=True)
    sys.exit(3)


@click.group()
@click.version_option()
def main():
    """Whitening-based variable selection toolkit."""


@main.command()
@click.option("--x", "x_path", required=True, type=click.Path(exists=True), help="design CSV (n x p)")
@click.option("--y", "y_path", required=True, type=click.Path(exists=True), help="response CSV (n x 1)")
@click.option("--sigma", "sigma_path", type=click.Path(exists=True), default=None,
              help="known correlation matrix CSV (p x p); skips estimation")
@click.option("--method", type=click.Choice(["wlasso", "lasso", "holp"]), default="wlasso")
@click.option("--gamma", type=float, default=pipeline.DEFAULT_GAMMA, show_default=True)
@click.option("--grid-count", type=int, default=100, show_default=True)
@click.option("--grid-ratio", type=float, default=1e-3, show_default=True)
@click.option("--sparsity", type=int, default=10, show_default=True,
              help="number of variables kept by the projection baseline")
@click.option("--standardize/--no-standardize", default=True, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--plot", is_flag=True, help="render figures next to the JSON output")
def fit(x_path, y_path, sigma_path, method, gamma, grid_count, grid_ratio,
        sparsity, standardize, out_path, plot):
    """Fit a selector on CSV data and write a JSON result document."""
    parameters = {
        "x": x_path, "y": y_path, "sigma": sigma_path, "gamma": gamma,
        "grid_count": grid_count, "grid_ratio": grid_ratio,
        "standardize": standardize, "sparsity": sparsity,
    }
    try:
        X = read_matrix_csv(x_path)
        y = read_vector_csv(y_path)
        sigma = read_matrix_csv(sigma_path) if sigma_path else None
    except MalformedInputError as exc:
        click.echo(f"malformed input: {exc}", err=True)
        sys.exit(2)
    if X.shape[0] != y.shape[0]:
        click.echo(f"malformed input: X has {X.shape[0]} rows, y has {y.shape[0]}", err=True)
        sys.exit(2)
    if standardize:
        sds = X.std(axis=0, ddof=1)
        if np.any(sds == 0.0):
            click.echo("malformed input: constant column cannot be standardized", err=True)
            sys.exit(2)
        X = (X - X.mean(axis=0)) / sds

    figures: list[str] = []
    try:
        if method == "wlasso":
            result = pipeline.wlasso_fit(
                X, y, sigma=sigma, rule=pipeline.ThresholdRule(gamma=gamma),
                grid_count=grid_count, grid_ratio=grid_ratio,
            )
            doc = report.fit_document("wlasso", parameters, result)
            if plot:
                figures = report.render_fit_figures(result, Path(out_path).with_suffix(""))
        elif method == "lasso":
            grid = lambda_grid(X, y, count=grid_count, ratio=grid_ratio)
            out = baselines.lasso_select(X, y, grid)
            doc = report.selector_document(
                "lasso", parameters,
                selected=out.selected_per_level[-1],
                coefficients=out.coefficients_per_level,
                levels=out.levels,
            )
            doc["supports_per_level"] = [
                (s + 1).tolist() for s in out.selected_per_level
            ]
        else:
            beta = baselines.holp_estimate(X, y)
            selected = baselines.holp_select(beta, min(sparsity, beta.shape[0]))
            doc = report.selector_document(
                "holp", parameters, selected=selected, coefficients=beta,
                levels=[min(sparsity, beta.shape[0])],
            )
    except WLassoError as exc:
        _fail_numerical(exc, method, parameters, out_path)
    if figures:
        doc["figures"] = figures
    report.write_json(doc, out_path)
    click.echo(f"wrote {out_path}")


def _scenario_from_flags(p, n, b, alphas, n_active, noise_sd, seed) -> simulation.Scenario:
    try:
        return simulation.Scenario(
            n=n, p=p, b=b, alphas=_parse_alphas(alphas),
            n_active=n_active, noise_sd=noise_sd, seed=seed,
        )
    except (ValueError, WLassoError) as exc:
        raise click.UsageError(str(exc)) from exc


@main.command()
@click.option("--p", type=int, required=True)
@click.option("--n", type=int, required=True)
@click.option("--b", type=float, default=0.5, show_default=True)
@click.option("--alphas", default="identity", show_default=True,
              help="'identity' or three comma-separated block correlations")
@click.option("--n-active", type=int, default=10, show_default=True)
@click.option("--noise-sd", type=float, default=1.0, show_default=True)
@click.option("--replications", type=int, default=100, show_default=True)
@click.option("--seed", type=int, required=True)
@click.option("--methods", default="wlasso,lasso,holp", show_default=True,
              help=f"comma-separated subset of {simulation.KNOWN_METHODS}")
@click.option("--gamma", type=float, default=pipeline.DEFAULT_GAMMA, show_default=True)
@click.option("--grid-count", type=int, default=100, show_default=True)
@click.option("--grid-ratio", type=float, default=1e-3, show_default=True)
@click.option("--threads", type=int, default=None, help="default: WLASSO_THREADS or all cores")
@click.option("--out", "out_prefix", required=True, type=click.Path(),
              help="output prefix; writes <prefix>.json and <prefix>.csv")
@click.option("--plot", is_flag=True)
def simulate(p, n, b, alphas, n_active, noise_sd, replications, seed, methods,
             gamma, grid_count, grid_ratio, threads, out_prefix, plot):
    """Run a seeded replication study and write summary JSON plus a CSV table."""
    scenario = _scenario_from_flags(p, n, b, alphas, n_active, noise_sd, seed)
    method_list = tuple(m.strip() for m in methods.split(",") if m.strip())
    for m in method_list:
        if m not in simulation.KNOWN_METHODS:
            raise click.UsageError(f"unknown method {m!r}")
    if replications < 1:
        raise click.UsageError("--replications must be at least 1")
    summary = simulation.run_scenario(
        scenario, methods=method_list, replications=replications, gamma=gamma,
        grid_count=grid_count, grid_ratio=grid_ratio,
        threads=_resolve_threads(threads),
    )
    prefix = Path(out_prefix)
    doc = report.summary_document(summary)
    report.write_json(doc, prefix.with_suffix(".json"))
    report.write_replication_csv(summary, prefix.with_suffix(".csv"))
    if plot:
        report.render_summary_figure(summary, prefix)
    click.echo(f"wrote {prefix.with_suffix('.json')} and {prefix.with_suffix('.csv')}")
    for m in summary.summarize():
        click.echo(
            f"{m.method}: TPR {m.mean_tpr:.3f} FPR {m.mean_fpr:.3f} "
            f"diff {m.mean_diff:.3f} ({m.failures} failures)"
        )


@main.command("ic-check")
@click.option("--x", "x_path", type=click.Path(exists=True), default=None)
@click.option("--support", default=None, help="1-based active indices, comma-separated")
@click.option("--signs", default=None, help="optional +/-1 list matching --support")
@click.option("--p", type=int, default=None)
@click.option("--n", type=int, default=None)
@click.option("--b", type=float, default=0.5, show_default=True)
@click.option("--alphas", default="identity", show_default=True)
@click.option("--n-active", type=int, default=10, show_default=True)
@click.option("--noise-sd", type=float, default=1.0, show_default=True)
@click.option("--replications", type=int, default=1, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--eta", type=float, default=0.0, show_default=True)
@click.option("--whiten", is_flag=True,
              help="also report violations on the whitened design")
@click.option("--known-sigma", is_flag=True,
              help="whiten with the population matrix instead of the estimate (scenario mode)")
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--plot", is_flag=True)
def ic_check_cmd(x_path, support, signs, p, n, b, alphas, n_active, noise_sd,
                 replications, seed, eta, whiten, known_sigma, out_path, plot):
    """Check the irrepresentable condition on a CSV design or a scenario."""
    if not 0.0 <= eta < 1.0:
        raise click.UsageError("--eta must lie in [0, 1)")
    parameters = {"eta": eta, "whiten": whiten}
    raw_fractions, whitened_fractions = [], []
    try:
        if x_path is not None:
            if support is None:
                raise click.UsageError("--support is required with --x")
            try:
                X = read_matrix_csv(x_path)
            except MalformedInputError as exc:
                click.echo(f"malformed input: {exc}", err=True)
                sys.exit(2)
            supp = _parse_index_list(support)
            sign_vec = None
            if signs is not None:
                sign_vec = np.array([float(v) for v in signs.split(",")])
            rep = diagnostics.ic_check(X, supp, signs=sign_vec, eta=eta)
            raw_fractions.append(rep.violated_fraction)
            parameters.update({"x": x_path, "support": (supp + 1).tolist()})
            if whiten:
                from .correlation import estimate_block_sigma
                from .linalg import whitening_operator
                from .pipeline import whiten_design

                sigma, _ = estimate_block_sigma(X)
                Xw = whiten_design(X, whitening_operator(sigma))
                whitened_fractions.append(
                    diagnostics.ic_check(Xw, supp, signs=sign_vec, eta=eta).violated_fraction
                )
        else:
            if p is None or n is None:
                raise click.UsageError("provide either --x/--support or --p/--n scenario flags")
            scenario = _scenario_from_flags(p, n, b, alphas, n_active, noise_sd, seed)
            parameters.update(report.scenario_dict(scenario))
            parameters["replications"] = replications
            parameters["known_sigma"] = known_sigma
            from .correlation import estimate_block_sigma
            from .linalg import whitening_operator
            from .pipeline import whiten_design

            children = np.random.SeedSequence(seed).spawn(replications)
            for rep_idx in range(replications):
                rng = np.random.default_rng(children[rep_idx])
                X, _, truth, _, sigma_pop = simulation.generate_dataset(scenario, rng)
                rep = diagnostics.ic_check(X, truth, eta=eta)
                raw_fractions.append(rep.violated_fraction)
                if whiten:
                    sigma = sigma_pop if known_sigma else estimate_block_sigma(X)[0]
                    Xw = whiten_design(X, whitening_operator(sigma))
                    whitened_fractions.append(
                        diagnostics.ic_check(Xw, truth, eta=eta).violated_fraction
                    )
    except WLassoError as exc:
        _fail_numerical(exc, "ic-check", parameters, out_path)

    doc = report.base_document("ic-check", parameters)
    doc["raw_violated_fraction"] = raw_fractions
    doc["raw_mean"] = float(np.mean(raw_fractions))
    if whiten:
        doc["whitened_violated_fraction"] = whitened_fractions
        doc["whitened_mean"] = float(np.mean(whitened_fractions))
        doc["improved_fraction"] = float(
            np.mean(np.array(whitened_fractions) < np.array(raw_fractions))
        )
    if plot:
        doc["figures"] = report.render_ic_figure(
            raw_fractions, whitened_fractions if whiten else None,
            Path(out_path).with_suffix(""),
        )
    report.write_json(doc, out_path)
    click.echo(f"wrote {out_path}")


@main.command()
@click.option("--p", "p_list", default="100,500,2000", show_default=True,
              help="comma-separated problem sizes")
@click.option("--n", type=int, default=50, show_default=True)
@click.option("--b", type=float, default=0.5, show_default=True)
@click.option("--alphas", default="0.3,0.5,0.7", show_default=True)
@click.option("--n-active", type=int, default=10, show_default=True)
@click.option("--grid-count", type=int, default=100, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--plot", is_flag=True)
def bench(p_list, n, b, alphas, n_active, grid_count, seed, out_path, plot):
    """Time each pipeline stage of a full fit for a list of problem sizes."""
    try:
        ps = [int(v) for v in p_list.split(",")]
    except ValueError as exc:
        raise click.UsageError(f"bad --p list: {p_list!r}") from exc
    rows = []
    for p in ps:
        scenario = _scenario_from_flags(p, n, b, alphas, n_active, 1.0, seed)
        X, y, _, _, _ = simulation.generate_dataset(scenario)
        start = time.perf_counter()
        fit_result = pipeline.wlasso_fit(X, y, grid_count=grid_count)
        total = time.perf_counter() - start
        t = fit_result.timings
        rows.append({
            "p": p, "n": n, "grid_count": grid_count,
            "sigma_estimation": t.sigma_estimation, "whitening": t.whitening,
            "path_solve": t.path_solve, "thresholding": t.thresholding,
            "total": total,
        })
        click.echo(f"p={p}: total {total:.2f}s (path solve {t.path_solve:.2f}s)")
    header = ("p,n,grid_count,sigma_estimation,whitening,path_solve,"
              "thresholding,total")
    lines = [header] + [
        f"{r['p']},{r['n']},{r['grid_count']},{r['sigma_estimation']!r},"
        f"{r['whitening']!r},{r['path_solve']!r},{r['thresholding']!r},{r['total']!r}"
        for r in rows
    ]
    Path(out_path).write_text("\n".join(lines) + "\n")
    if plot:
        report.render_bench_figure(rows, Path(out_path).with_suffix(""))
    click.echo(f"wrote {out_path}")


if __name__ == "__main__":
    main()
