"""Result serialization and figure rendering.

JSON documents carry a schema_version field and use repr-precision floats so
that parse(serialize(doc)) round-trips exactly.  All user-facing variable
indices are 1-based; internal arrays are 0-based.  Figures are rendered to
files next to the delimited output when plotting is requested.
"""

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import __version__
from .pipeline import WLassoFit
from .simulation import RNG_NAME, ReplicationSummary, Scenario

SCHEMA_VERSION = 1


def _listify(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    return x


def base_document(method: str, parameters: dict) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "tool_version": __version__,
        "rng": RNG_NAME,
        "method": method,
        "parameters": {k: _listify(v) for k, v in parameters.items()},
    }


def fit_document(method: str, parameters: dict, fit: WLassoFit) -> dict:
    doc = base_document(method, parameters)
    idx = fit.lambda_index
    doc.update(
        {
            "selected": (fit.selected + 1).tolist(),
            "coefficients": fit.beta.tolist(),
            "lambda_hat": fit.lambda_hat,
            "K_hat": int(fit.K_hat[idx]),
            "M_hat": int(fit.M_hat[idx]),
            "lambda_grid": fit.grid_values.tolist(),
            "mse_k_curve": fit.mse_k_curves[idx].tolist(),
            "mse_m_curve": fit.mse_m_curves[idx].tolist(),
            "mse_at_m_hat": fit.mse_at_m_hat.tolist(),
            "sigma_clipped": bool(fit.operator.clipped),
            "timings": {
                "sigma_estimation": fit.timings.sigma_estimation,
                "whitening": fit.timings.whitening,
                "path_solve": fit.timings.path_solve,
                "thresholding": fit.timings.thresholding,
                "total": fit.timings.total,
            },
        }
    )
    if fit.block_model is not None:
        doc["block_rho"] = fit.block_model.rho.tolist()
        doc["cluster_sizes"] = list(fit.block_model.cluster_sizes)
    return doc


def selector_document(method: str, parameters: dict, selected, coefficients, levels) -> dict:
    doc = base_document(method, parameters)
    doc.update(
        {
            "selected": [int(i) + 1 for i in selected],
            "coefficients": _listify(coefficients),
            "levels": _listify(levels),
        }
    )
    return doc


def write_json(doc: dict, path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, allow_nan=True) + "\n")


def scenario_dict(s: Scenario) -> dict:
    return {
        "n": s.n,
        "p": s.p,
        "b": s.b,
        "alphas": list(s.alphas) if s.alphas is not None else "identity",
        "n_active": s.n_active,
        "noise_sd": s.noise_sd,
        "seed": s.seed,
    }


def summary_document(summary: ReplicationSummary) -> dict:
    doc = base_document("simulate", scenario_dict(summary.scenario))
    doc["replications"] = summary.replications
    doc["gamma"] = summary.gamma
    doc["methods"] = {
        m.method: {
            "count": m.count,
            "failures": m.failures,
            "mean_tpr": m.mean_tpr,
            "sd_tpr": m.sd_tpr,
            "mean_fpr": m.mean_fpr,
            "sd_fpr": m.sd_fpr,
            "mean_diff": m.mean_diff,
            "sd_diff": m.sd_diff,
        }
        for m in summary.summarize()
    }
    return doc


def write_replication_csv(summary: ReplicationSummary, path) -> None:
    """One row per (replication, method); repr floats and no wall-clock
    column keep the file byte-identical across runs and worker counts."""
    lines = ["replication,method,tpr,fpr,diff,level,error"]
    for r in summary.records:
        lines.append(
            f"{r.replication},{r.method},{r.tpr!r},{r.fpr!r},{r.diff!r},"
            f"{r.level!r},{r.error}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


# --- figures -----------------------------------------------------------------


def render_fit_figures(fit: WLassoFit, prefix) -> list[str]:
    """MSE curves at the selected lambda and the final coefficient profile."""
    prefix = Path(prefix)
    idx = fit.lambda_index
    written = []

    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    for ax, curve, cutoff, label in (
        (axes[0], fit.mse_k_curves[idx], fit.K_hat[idx], "K"),
        (axes[1], fit.mse_m_curves[idx], fit.M_hat[idx], "M"),
    ):
        ks = np.arange(1, curve.shape[0] + 1)
        ax.plot(ks, curve, lw=1)
        ax.axvline(cutoff, ls=":", color="k")
        ax.set_xlabel(label)
        ax.set_ylabel("residual sum of squares")
        ax.set_title(f"cutoff selection ({label}_hat = {cutoff})")
    fig.tight_layout()
    path = prefix.with_name(prefix.name + "_mse_curves.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(str(path))

    fig, ax = plt.subplots(figsize=(8, 4))
    markerline, stemlines, _ = ax.stem(np.arange(1, fit.beta.shape[0] + 1), fit.beta)
    plt.setp(markerline, markersize=3)
    plt.setp(stemlines, lw=0.8)
    ax.set_xlabel("variable index")
    ax.set_ylabel("coefficient")
    ax.set_title(f"selected coefficients (lambda_hat = {fit.lambda_hat:.4g})")
    fig.tight_layout()
    path = prefix.with_name(prefix.name + "_coefficients.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    written.append(str(path))
    return written


def render_summary_figure(summary: ReplicationSummary, prefix) -> list[str]:
    """Grouped bars of mean TPR, FPR and their difference per method."""
    prefix = Path(prefix)
    stats = summary.summarize()
    names = [m.method for m in stats]
    x = np.arange(len(names))
    width = 0.27
    fig, ax = plt.subplots(figsize=(1.8 * len(names) + 3, 4))
    ax.bar(x - width, [m.mean_tpr for m in stats], width,
           yerr=[m.sd_tpr for m in stats], capsize=3, label="TPR")
    ax.bar(x, [m.mean_fpr for m in stats], width,
           yerr=[m.sd_fpr for m in stats], capsize=3, label="FPR")
    ax.bar(x + width, [m.mean_diff for m in stats], width,
           yerr=[m.sd_diff for m in stats], capsize=3, label="TPR - FPR")
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=20, ha="right")
    ax.set_ylabel("rate")
    ax.legend()
    ax.set_title(f"recovery over {summary.replications} replications")
    fig.tight_layout()
    path = prefix.with_name(prefix.name + "_recovery.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [str(path)]


def render_ic_figure(raw_fractions, whitened_fractions, prefix) -> list[str]:
    """Boxplots of the violated fraction, raw vs whitened design."""
    prefix = Path(prefix)
    fig, ax = plt.subplots(figsize=(5, 4))
    data = [np.asarray(raw_fractions)]
    labels = ["raw"]
    if whitened_fractions is not None:
        data.append(np.asarray(whitened_fractions))
        labels.append("whitened")
    ax.boxplot(data, tick_labels=labels)
    ax.set_ylabel("violated fraction")
    ax.set_title("irrepresentable-condition violations")
    fig.tight_layout()
    path = prefix.with_name(prefix.name + "_ic.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [str(path)]


def render_bench_figure(rows: list[dict], prefix) -> list[str]:
    """Stacked stage timings per problem size."""
    prefix = Path(prefix)
    stages = ["sigma_estimation", "whitening", "path_solve", "thresholding"]
    ps = [row["p"] for row in rows]
    x = np.arange(len(ps))
    bottom = np.zeros(len(ps))
    fig, ax = plt.subplots(figsize=(6, 4))
    for stage in stages:
        vals = np.array([row[stage] for row in rows])
        ax.bar(x, vals, 0.6, bottom=bottom, label=stage.replace("_", " "))
        bottom += vals
    ax.set_xticks(x)
    ax.set_xticklabels([str(p) for p in ps])
    ax.set_xlabel("p")
    ax.set_ylabel("seconds")
    ax.legend()
    ax.set_title("stage timings")
    fig.tight_layout()
    path = prefix.with_name(prefix.name + "_bench.png")
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return [str(path)]
