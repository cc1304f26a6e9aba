"""SVG plot emission for experiment outputs.

Every plot function takes CSV paths, never in-memory results, so a plot is a
pure function of the files sitting next to it and can be regenerated offline.
Matplotlib is pinned to a deterministic SVG configuration (fixed hash salt,
no embedded date) so replotting unchanged CSVs reproduces identical bytes.
"""

from __future__ import annotations

import csv
import os

import matplotlib

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "cscli"

import matplotlib.pyplot as plt  # noqa: E402


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def plot_trajectories(out_path, traj_paths):
    """Objective value against step count for each trajectory file."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for path in sorted(traj_paths):
        rows = _read_csv(path)
        ks = [int(r["k"]) for r in rows]
        fs = [float(r["f_value"]) for r in rows]
        label = os.path.basename(path).replace(".csv", "")
        ax.semilogy(ks, [max(f, 1e-300) for f in fs], label=label)
    ax.set_xlabel("step k")
    ax.set_ylabel("F(z_k)")
    ax.legend(fontsize=7)
    ax.set_title("objective along the chain")
    fig.tight_layout()
    _save(fig, out_path)


def plot_compare(out_path, results_path, fixture_path=None):
    """Per-method final MSE scatter, with reference fixture values overlaid."""
    rows = _read_csv(results_path)
    methods = sorted({r["method"] for r in rows})
    fig, ax = plt.subplots(figsize=(6, 4))
    for i, method in enumerate(methods):
        vals = [float(r["mse"]) for r in rows if r["method"] == method]
        ax.plot([i] * len(vals), vals, "o", alpha=0.6, label="%s (synthetic)" % method)
        ax.plot([i], [sum(vals) / len(vals)], "k_", markersize=20)
    if fixture_path and os.path.exists(fixture_path):
        fix = [r for r in _read_csv(fixture_path) if r["experiment"] == "compare"]
        for i, method in enumerate(methods):
            vals = [float(r["mse"]) for r in fix if r["method"] == method]
            if vals:
                ax.plot([i + 0.15] * len(vals), vals, "r*", markersize=10,
                        label="%s (source=paper)" % method)
    ax.set_xticks(range(len(methods)))
    ax.set_xticklabels(methods)
    ax.set_ylabel("final MSE")
    ax.set_title("recovery comparison")
    ax.legend(fontsize=7)
    fig.tight_layout()
    _save(fig, out_path)


def plot_phase(out_path, curve_path, fixture_path=None):
    """Mean MSE against undersampling ratio, fixture curves dashed."""
    rows = _read_csv(curve_path)
    fig, ax = plt.subplots(figsize=(6, 4))
    methods = sorted({r["method"] for r in rows})
    for method in methods:
        pts = sorted((float(r["f"]), float(r["mean_mse"]))
                     for r in rows if r["method"] == method)
        ax.semilogy([p[0] for p in pts], [max(p[1], 1e-300) for p in pts],
                    "o-", label="%s (synthetic)" % method)
    if fixture_path and os.path.exists(fixture_path):
        fix = [r for r in _read_csv(fixture_path) if r["experiment"] == "phase_transition"]
        for method in sorted({r["method"] for r in fix}):
            pts = sorted((float(r["f"]), float(r["mse"]))
                         for r in fix if r["method"] == method)
            if pts:
                ax.semilogy([p[0] for p in pts], [p[1] for p in pts], "--",
                            label="%s (source=paper)" % method)
    ax.set_xlabel("measurement ratio f = m/n")
    ax.set_ylabel("mean MSE")
    ax.set_title("recovery against measurement budget")
    ax.legend(fontsize=7)
    fig.tight_layout()
    _save(fig, out_path)


def plot_validate(out_path, scatter_paths, estimates):
    """One panel per scatter: the (v, u) cloud and its supporting line."""
    n = len(scatter_paths)
    fig, axes = plt.subplots(1, n, figsize=(4.5 * n, 4), squeeze=False)
    for ax, (name, path) in zip(axes[0], sorted(scatter_paths.items())):
        rows = _read_csv(path)
        u = [float(r["u"]) for r in rows]
        v = [float(r["v"]) for r in rows]
        ax.plot(v, u, ".", markersize=2, alpha=0.5)
        est = estimates.get(name, {})
        if "alpha" in est:
            vmax = max(v) if v else 1.0
            xs = [0.0, vmax]
            ax.plot(xs, [est["alpha"] * x - est["gamma"] for x in xs], "r-",
                    label="u = %.3g v - %.3g" % (est["alpha"], est["gamma"]))
            ax.legend(fontsize=7)
        ax.set_xlabel("v = ||z - z'||^2")
        ax.set_ylabel("u")
        ax.set_title(name)
    fig.tight_layout()
    _save(fig, out_path)


def plot_chain_lab(out_path, density_path, mixing_path=None):
    """Grid density plus, when present, the TV mixing curve."""
    rows = _read_csv(density_path)
    has_mixing = mixing_path is not None and os.path.exists(mixing_path)
    fig, axes = plt.subplots(1, 2 if has_mixing else 1, figsize=(10 if has_mixing else 6, 4),
                             squeeze=False)
    ax = axes[0][0]
    if "z_1" in rows[0]:
        x = [float(r["z_0"]) for r in rows]
        y = [float(r["z_1"]) for r in rows]
        c = [float(r["density"]) for r in rows]
        sc = ax.scatter(x, y, c=c, s=2)
        fig.colorbar(sc, ax=ax)
        ax.set_xlabel("z_0")
        ax.set_ylabel("z_1")
    else:
        x = [float(r["z_0"]) for r in rows]
        c = [float(r["density"]) for r in rows]
        ax.plot(x, c, "-")
        ax.set_xlabel("z")
        ax.set_ylabel("density")
    ax.set_title("grid density")
    if has_mixing:
        ax2 = axes[0][1]
        mrows = _read_csv(mixing_path)
        ks = [int(r["k"]) for r in mrows]
        tv = [float(r["tv"]) for r in mrows]
        se = [float(r["mc_stderr"]) for r in mrows]
        ax2.errorbar(ks, tv, yerr=[2 * s for s in se], fmt="o-")
        ax2.set_xscale("symlog")
        ax2.set_xlabel("step k")
        ax2.set_ylabel("TV to target")
        ax2.set_title("mixing curve")
    fig.tight_layout()
    _save(fig, out_path)
