"""Experiment harness: JSON configs in, CSV/JSON/SVG artifacts out.

Every run is a pure function of its config document: random streams are keyed
by (seed, fixed stream id) per role, results are sorted on stable keys before
writing, and floats are serialized with round-trip repr. Re-running a config
reproduces every output file byte for byte. Wall-clock timings are therefore
logged to stderr only, never written into artifacts.

Stream id layout (per experiment seed): ground-truth latent 211, sensing
matrix 223, observation noise 227, constants estimation 229, chain 239,
validator pair sampling 231. The chain id is shared across methods so paired
gd/sgld runs draw identical warm starts.
"""

from __future__ import annotations

import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

import numpy as np

from . import chainlab, plotting, validators
from .exceptions import ConfigError, UnsupportedDimensionError
from .generator import NetSpec, forward, load_net, random_net
from .loss import estimate_constants, make_problem
from .numerics import RngStream, uniform_in_ball, uniform_on_sphere
from .samplers import (SamplerConfig, default_radius, run, smoothness_step_size)
from .sensing import sample_matrix

KINDS = ("recover", "compare", "phase_transition", "validate", "chain_lab")

Z_STAR_STREAM_ID = 211
SENSING_STREAM_ID = 223
NOISE_STREAM_ID = 227
CONSTANTS_STREAM_ID = 229
PAIRS_STREAM_ID = 231
CHAIN_STREAM_ID = 239

DEFAULT_RATIOS = (0.2, 0.4, 0.6, 0.8, 1.0)
RESULTS_HEADER = ("seed", "method", "f", "m", "k", "final_f", "mse")


# ---------------------------------------------------------------------------
# config handling

def _as_float(value, name, allow_inf=False):
    if isinstance(value, str) and value.lower() in ("inf", "infinity"):
        value = math.inf
    try:
        out = float(value)
    except (TypeError, ValueError):
        raise ConfigError("%s must be a number, got %r" % (name, value), field=name)
    if math.isinf(out) and not allow_inf:
        raise ConfigError("%s must be finite" % name, field=name)
    return out


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated experiment description; ``raw`` keeps the parsed document."""

    kind: str
    out_dir: str
    generator: dict
    seeds: tuple
    ratio: float | None
    m: int | None
    noise_norm: float
    beta: float | None
    eta: float | None
    r: float | None
    k_max: int
    record_every: int
    method: str
    methods: tuple
    ratios: tuple
    n_pairs: int
    n_matrices: int
    ball_constrained: bool
    n_chains: int
    checkpoints: tuple | None
    resolution: int | None
    betas: tuple | None
    raw: dict = field(repr=False)


def parse_config(doc, kind, out_dir=None):
    """Validate a parsed JSON document for the given experiment kind."""
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object", field="<root>")
    doc_kind = doc.get("kind", kind)
    if doc_kind != kind:
        raise ConfigError("config kind %r does not match command %r" % (doc_kind, kind),
                          field="kind")
    if kind not in KINDS:
        raise ConfigError("unknown experiment kind %r" % kind, field="kind")

    gen_sec = doc.get("generator")
    if not isinstance(gen_sec, dict) or \
            ("netspec" in gen_sec) == ("weights_file" in gen_sec):
        raise ConfigError("generator must contain exactly one of netspec or weights_file",
                          field="generator")

    prob = doc.get("problem", {})
    if not isinstance(prob, dict):
        raise ConfigError("problem must be an object", field="problem")
    seeds = prob.get("seeds", [0])
    if not isinstance(seeds, list) or not seeds or \
            not all(isinstance(s, int) and s >= 0 for s in seeds):
        raise ConfigError("problem.seeds must be a nonempty list of nonnegative ints",
                          field="problem.seeds")
    ratio = prob.get("ratio")
    m = prob.get("m")
    if kind != "phase_transition":
        if (ratio is None) == (m is None):
            raise ConfigError("problem needs exactly one of ratio or m",
                              field="problem.ratio")
        if ratio is not None:
            ratio = _as_float(ratio, "problem.ratio")
            if not 0.0 < ratio <= 1.0:
                raise ConfigError("problem.ratio must be in (0, 1]", field="problem.ratio")
        if m is not None:
            if not isinstance(m, int) or m < 1:
                raise ConfigError("problem.m must be a positive integer", field="problem.m")
    noise_norm = _as_float(prob.get("noise_norm", 0.0), "problem.noise_norm")
    if noise_norm < 0.0:
        raise ConfigError("problem.noise_norm must be nonnegative",
                          field="problem.noise_norm")

    samp = doc.get("sampler", {})
    if not isinstance(samp, dict):
        raise ConfigError("sampler must be an object", field="sampler")
    beta = samp.get("beta")
    needs_beta = kind in ("recover", "compare", "phase_transition", "chain_lab")
    if needs_beta:
        if beta is None:
            raise ConfigError("sampler.beta is required; the inverse temperature "
                              "has no default", field="sampler.beta")
        beta = _as_float(beta, "sampler.beta", allow_inf=True)
        if beta < 0.0 or (beta == 0.0 and kind != "chain_lab"):
            # chain_lab accepts beta=0 (flat target); samplers themselves do not
            raise ConfigError("sampler.beta must be positive", field="sampler.beta")
    eta = samp.get("eta")
    if eta is not None:
        eta = _as_float(eta, "sampler.eta")
        if eta < 0.0:
            raise ConfigError("sampler.eta must be nonnegative", field="sampler.eta")
    r = samp.get("r")
    if r is not None:
        r = _as_float(r, "sampler.r", allow_inf=True)
        if not r > 0.0:
            raise ConfigError("sampler.r must be positive", field="sampler.r")
    k_max = samp.get("k_max", 1000)
    if not isinstance(k_max, int) or k_max < 0:
        raise ConfigError("sampler.k_max must be a nonnegative integer",
                          field="sampler.k_max")
    record_every = samp.get("record_every", max(1, k_max // 100 or 1))
    if not isinstance(record_every, int) or record_every < 1:
        raise ConfigError("sampler.record_every must be a positive integer",
                          field="sampler.record_every")

    method = doc.get("method", "sgld")
    if method not in ("sgld", "gd", "mh_sgld"):
        raise ConfigError("method must be sgld, gd or mh_sgld", field="method")
    methods = tuple(doc.get("methods", ["gd", "sgld"]))
    if not methods or any(mm not in ("sgld", "gd", "mh_sgld") for mm in methods):
        raise ConfigError("methods must list sgld, gd or mh_sgld entries",
                          field="methods")
    ratios = doc.get("ratios", list(DEFAULT_RATIOS))
    if kind == "phase_transition":
        try:
            ratios = tuple(sorted(_as_float(x, "ratios[]") for x in ratios))
        except TypeError:
            raise ConfigError("ratios must be a list of numbers", field="ratios")
        if not ratios or any(not 0.0 < x <= 1.0 for x in ratios):
            raise ConfigError("ratios must lie in (0, 1]", field="ratios")
    else:
        ratios = tuple(ratios)

    val = doc.get("validate", {})
    n_pairs = val.get("n_pairs", 500)
    n_matrices = val.get("n_matrices", 5)
    ball_constrained = bool(val.get("ball_constrained", False))
    if not isinstance(n_pairs, int) or n_pairs < 2:
        raise ConfigError("validate.n_pairs must be an integer >= 2",
                          field="validate.n_pairs")
    if not isinstance(n_matrices, int) or n_matrices < 1:
        raise ConfigError("validate.n_matrices must be a positive integer",
                          field="validate.n_matrices")

    lab = doc.get("chain_lab", {})
    n_chains = lab.get("n_chains", 1000)
    if not isinstance(n_chains, int) or n_chains < 1:
        raise ConfigError("chain_lab.n_chains must be a positive integer",
                          field="chain_lab.n_chains")
    checkpoints = lab.get("checkpoints")
    if checkpoints is not None:
        if not isinstance(checkpoints, list) or \
                not all(isinstance(c, int) and c >= 0 for c in checkpoints):
            raise ConfigError("chain_lab.checkpoints must be a list of nonnegative ints",
                              field="chain_lab.checkpoints")
        checkpoints = tuple(checkpoints)
    resolution = lab.get("resolution")
    if resolution is not None and (not isinstance(resolution, int) or resolution < 8):
        raise ConfigError("chain_lab.resolution must be an integer >= 8",
                          field="chain_lab.resolution")
    betas = lab.get("betas")
    if betas is not None:
        betas = tuple(_as_float(b, "chain_lab.betas[]") for b in betas)
        if any(b < 0.0 for b in betas):
            raise ConfigError("chain_lab.betas must be nonnegative",
                              field="chain_lab.betas")

    return ExperimentConfig(
        kind=kind, out_dir=out_dir or doc.get("out_dir", "out"),
        generator=gen_sec, seeds=tuple(seeds), ratio=ratio, m=m,
        noise_norm=noise_norm, beta=beta, eta=eta, r=r, k_max=k_max,
        record_every=record_every, method=method, methods=methods, ratios=ratios,
        n_pairs=n_pairs, n_matrices=n_matrices, ball_constrained=ball_constrained,
        n_chains=n_chains, checkpoints=checkpoints, resolution=resolution,
        betas=betas, raw=doc)


def apply_overrides(doc, overrides):
    """Apply --set key=value pairs onto the parsed document (dotted paths)."""
    for item in overrides:
        if "=" not in item:
            raise ConfigError("--set expects key=value, got %r" % item, field="--set")
        key, _, raw_value = item.partition("=")
        try:
            value = json.loads(raw_value)
        except json.JSONDecodeError:
            value = raw_value
        node = doc
        parts = key.split(".")
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ConfigError("--set path %r crosses a non-object" % key, field=key)
        node[parts[-1]] = value
    return doc


def load_config(path, kind, overrides=(), out_dir=None):
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise ConfigError("cannot read config %s: %s" % (path, exc), field="--config")
    except json.JSONDecodeError as exc:
        raise ConfigError("config %s is not valid JSON: line %d column %d: %s"
                          % (path, exc.lineno, exc.colno, exc.msg), field="--config")
    doc = apply_overrides(doc, overrides)
    return parse_config(doc, kind, out_dir=out_dir)


def build_generator(cfg):
    """Instantiate the generator from the config's netspec or weight file."""
    sec = cfg.generator
    if "weights_file" in sec:
        return load_net(sec["weights_file"])
    ns = sec["netspec"]
    try:
        spec = NetSpec(widths=tuple(ns["widths"]),
                       activation=ns.get("activation", "elu"),
                       weight_scale=float(ns.get("weight_scale", 1.0)),
                       seed=int(ns.get("seed", 0)),
                       radius=ns.get("radius"),
                       enforce_nondecreasing=bool(ns.get("enforce_nondecreasing", False)))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError("generator.netspec is invalid: %s" % exc,
                          field="generator.netspec")
    return random_net(spec)


# ---------------------------------------------------------------------------
# shared cell runner

@dataclass(frozen=True)
class ResultRow:
    seed: int
    method: str
    f: float
    m: int
    k: int
    final_f: float
    mse: float
    wall_time: float


def _thread_count():
    env = os.environ.get("CSCLI_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError("CSCLI_THREADS must be an integer, got %r" % env,
                              field="CSCLI_THREADS")
    return min(8, os.cpu_count() or 1)


def _map_cells(fn, cells):
    threads = _thread_count()
    if threads == 1 or len(cells) <= 1:
        return [fn(c) for c in cells]
    with ThreadPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, cells))


def _run_cell(net, cfg, f, seed, method):
    """One (seed, ratio, method) recovery run; returns (ResultRow, Trajectory).

    Defaults resolved here use the descent-side step size 1/(30 L d) for every
    method so paired comparisons run at one common eta; the beta-aware
    sampling schedule stays available through the sampler API directly.
    """
    n = net.output_dim
    m = cfg.m if cfg.m is not None else max(1, int(round(f * n)))
    f_actual = m / n
    t0 = time.perf_counter()
    z_star = uniform_in_ball(RngStream(seed, Z_STAR_STREAM_ID), net.input_dim, net.radius)
    sensing = sample_matrix(m, n, RngStream(seed, SENSING_STREAM_ID))
    noise = None
    if cfg.noise_norm > 0.0:
        direction = uniform_on_sphere(RngStream(seed, NOISE_STREAM_ID), m)
        noise = cfg.noise_norm * direction
    problem = make_problem(net, sensing, z_star, noise=noise)
    constants = estimate_constants(problem, 256, RngStream(seed, CONSTANTS_STREAM_ID))
    eta = cfg.eta if cfg.eta is not None else smoothness_step_size(constants, problem.dim)
    r = cfg.r if cfg.r is not None else default_radius(eta, problem.dim, cfg.beta)
    if r == 0.0:
        r = math.inf
    sampler_cfg = SamplerConfig(beta=cfg.beta, eta=eta, r=r, k_max=cfg.k_max,
                                seed=seed, record_every=cfg.record_every)
    traj = run(problem, method, sampler_cfg, RngStream(seed, CHAIN_STREAM_ID),
               constants=constants)
    x_star = forward(net, z_star)
    x_hat = forward(net, traj.zs[-1])
    mse = float(np.sum((x_hat - x_star) ** 2)) / n
    wall = time.perf_counter() - t0
    row = ResultRow(seed=seed, method=method, f=f_actual, m=m,
                    k=int(traj.final_state.k), final_f=float(traj.fs[-1]),
                    mse=mse, wall_time=wall)
    return row, traj


# ---------------------------------------------------------------------------
# writers

def _fmt_float(x):
    return repr(float(x))


def write_results_csv(path, rows):
    rows = sorted(rows, key=lambda rr: (rr.f, rr.seed, rr.method))
    with open(path, "w") as fh:
        fh.write(",".join(RESULTS_HEADER) + "\n")
        for rr in rows:
            fh.write(",".join([str(rr.seed), rr.method, _fmt_float(rr.f), str(rr.m),
                               str(rr.k), _fmt_float(rr.final_f), _fmt_float(rr.mse)])
                     + "\n")


def write_json(path, doc):
    with open(path, "w") as fh:
        fh.write(json.dumps(doc, indent=2, sort_keys=True))
        fh.write("\n")


def summarize_rows(rows):
    """Per-method aggregates over exactly the emitted rows, nothing filtered."""
    out = {}
    for method in sorted({rr.method for rr in rows}):
        sel = [rr for rr in rows if rr.method == method]
        out[method] = {"n_rows": len(sel),
                       "mean_mse": sum(rr.mse for rr in sel) / len(sel),
                       "mean_final_f": sum(rr.final_f for rr in sel) / len(sel)}
    return out


def copy_fixture(out_dir):
    """Place the reference fixture next to synthetic results, tagged source=paper."""
    os.makedirs(os.path.join(out_dir, "fixtures"), exist_ok=True)
    text = resources.files("gencs").joinpath("fixtures/paper_reference.csv").read_text()
    dest = os.path.join(out_dir, "fixtures", "paper_reference.csv")
    with open(dest, "w") as fh:
        fh.write(text)
    return dest


def _log_wall(rows):
    for rr in sorted(rows, key=lambda r: (r.f, r.seed, r.method)):
        print("[cscli] f=%.3g seed=%d method=%s wall=%.2fs"
              % (rr.f, rr.seed, rr.method, rr.wall_time), file=sys.stderr)


def _write_traj(out_dir, traj, seed, method):
    base = os.path.join(out_dir, "traj_%d_%s" % (seed, method))
    traj.to_csv(base + ".csv")
    write_json(base + ".json", traj.sidecar())


# ---------------------------------------------------------------------------
# experiment kinds

def run_recover(cfg):
    os.makedirs(cfg.out_dir, exist_ok=True)
    net = build_generator(cfg)
    f = cfg.ratio if cfg.ratio is not None else cfg.m / net.output_dim
    outputs = _map_cells(lambda seed: _run_cell(net, cfg, f, seed, cfg.method),
                         list(cfg.seeds))
    rows = [row for row, _ in outputs]
    write_results_csv(os.path.join(cfg.out_dir, "results.csv"), rows)
    for (row, traj) in outputs:
        _write_traj(cfg.out_dir, traj, row.seed, row.method)
    write_json(os.path.join(cfg.out_dir, "summary.json"),
               {"kind": cfg.kind, "methods": summarize_rows(rows), "config": cfg.raw})
    replot_recover(cfg)
    _log_wall(rows)
    return rows


def replot_recover(cfg):
    paths = [os.path.join(cfg.out_dir, p) for p in sorted(os.listdir(cfg.out_dir))
             if p.startswith("traj_") and p.endswith(".csv")]
    plotting.plot_trajectories(os.path.join(cfg.out_dir, "plot_recover.svg"), paths)


def run_compare(cfg):
    os.makedirs(cfg.out_dir, exist_ok=True)
    net = build_generator(cfg)
    f = cfg.ratio if cfg.ratio is not None else cfg.m / net.output_dim
    cells = [(seed, method) for seed in cfg.seeds for method in cfg.methods]
    outputs = _map_cells(lambda cell: _run_cell(net, cfg, f, cell[0], cell[1]), cells)
    rows = [row for row, _ in outputs]
    write_results_csv(os.path.join(cfg.out_dir, "results.csv"), rows)
    for (row, traj) in outputs:
        _write_traj(cfg.out_dir, traj, row.seed, row.method)
    copy_fixture(cfg.out_dir)
    write_json(os.path.join(cfg.out_dir, "summary.json"),
               {"kind": cfg.kind, "methods": summarize_rows(rows), "config": cfg.raw})
    replot_compare(cfg)
    _log_wall(rows)
    return rows


def replot_compare(cfg):
    plotting.plot_compare(os.path.join(cfg.out_dir, "plot_compare.svg"),
                          os.path.join(cfg.out_dir, "results.csv"),
                          os.path.join(cfg.out_dir, "fixtures", "paper_reference.csv"))


def run_phase_transition(cfg):
    os.makedirs(cfg.out_dir, exist_ok=True)
    net = build_generator(cfg)
    cells = [(f, seed, method) for f in cfg.ratios for seed in cfg.seeds
             for method in cfg.methods]
    outputs = _map_cells(lambda c: _run_cell(net, cfg, c[0], c[1], c[2]), cells)
    rows = [row for row, _ in outputs]
    write_results_csv(os.path.join(cfg.out_dir, "results.csv"), rows)
    curve_path = os.path.join(cfg.out_dir, "phase_curve.csv")
    with open(curve_path, "w") as fh:
        fh.write("f,method,mean_mse\n")
        for f in sorted({rr.f for rr in rows}):
            for method in sorted(cfg.methods):
                sel = [rr.mse for rr in rows if rr.f == f and rr.method == method]
                fh.write("%s,%s,%s\n" % (_fmt_float(f), method,
                                         _fmt_float(sum(sel) / len(sel))))
    copy_fixture(cfg.out_dir)
    write_json(os.path.join(cfg.out_dir, "summary.json"),
               {"kind": cfg.kind, "methods": summarize_rows(rows), "config": cfg.raw})
    replot_phase(cfg)
    _log_wall(rows)
    return rows


def replot_phase(cfg):
    plotting.plot_phase(os.path.join(cfg.out_dir, "plot_phase.svg"),
                        os.path.join(cfg.out_dir, "phase_curve.csv"),
                        os.path.join(cfg.out_dir, "fixtures", "paper_reference.csv"))


def _write_scatter(path, est):
    with open(path, "w") as fh:
        fh.write("u,v\n")
        for u, v in zip(est.u, est.v):
            fh.write("%s,%s\n" % (_fmt_float(u), _fmt_float(v)))


def run_validate(cfg):
    os.makedirs(cfg.out_dir, exist_ok=True)
    net = build_generator(cfg)
    seed = cfg.seeds[0]
    n = net.output_dim
    ratio = cfg.ratio if cfg.ratio is not None else (cfg.m / n if cfg.m else 0.1)
    m = cfg.m if cfg.m is not None else max(1, int(round(ratio * n)))
    matrices = [sample_matrix(m, n, RngStream(seed, SENSING_STREAM_ID + i))
                for i in range(cfg.n_matrices)]
    strong = validators.estimate_strong_smoothness(
        net, cfg.n_pairs, RngStream(seed, PAIRS_STREAM_ID),
        ball_constrained=cfg.ball_constrained)
    sensing_est = validators.estimate_dissipativity_sensing(
        net, matrices, cfg.n_pairs, RngStream(seed, PAIRS_STREAM_ID),
        ball_constrained=cfg.ball_constrained)
    sufficient = validators.check_sufficient_condition(
        net, cfg.n_pairs, RngStream(seed, PAIRS_STREAM_ID),
        ball_constrained=cfg.ball_constrained)
    _write_scatter(os.path.join(cfg.out_dir, "scatter_strong.csv"), strong)
    _write_scatter(os.path.join(cfg.out_dir, "scatter_sensing.csv"), sensing_est)
    estimates = {"strong_smoothness": strong.to_json_dict(),
                 "sensing_dissipativity": sensing_est.to_json_dict(),
                 "sufficient_condition": sufficient.to_json_dict(),
                 "outside_theory": net.outside_theory,
                 "n_matrices": cfg.n_matrices, "m": m}
    write_json(os.path.join(cfg.out_dir, "estimates.json"), estimates)
    write_json(os.path.join(cfg.out_dir, "summary.json"),
               {"kind": cfg.kind, "estimates": estimates, "config": cfg.raw})
    replot_validate(cfg)
    return estimates


def replot_validate(cfg):
    with open(os.path.join(cfg.out_dir, "estimates.json")) as fh:
        estimates = json.load(fh)
    plotting.plot_validate(
        os.path.join(cfg.out_dir, "plot_validate.svg"),
        {"strong_smoothness": os.path.join(cfg.out_dir, "scatter_strong.csv"),
         "sensing_dissipativity": os.path.join(cfg.out_dir, "scatter_sensing.csv")},
        estimates)


def run_chain_lab(cfg):
    os.makedirs(cfg.out_dir, exist_ok=True)
    net = build_generator(cfg)
    if net.input_dim > 2:
        raise UnsupportedDimensionError(
            "chain_lab supports latent dimension 1 or 2, the configured generator "
            "has d=%d" % net.input_dim)
    seed = cfg.seeds[0]
    n = net.output_dim
    m = cfg.m if cfg.m is not None else max(1, int(round(cfg.ratio * n)))
    z_star = uniform_in_ball(RngStream(seed, Z_STAR_STREAM_ID), net.input_dim, net.radius)
    sensing = sample_matrix(m, n, RngStream(seed, SENSING_STREAM_ID))
    problem = make_problem(net, sensing, z_star)
    constants = estimate_constants(problem, 256, RngStream(seed, CONSTANTS_STREAM_ID))

    grid = chainlab.gibbs_grid(problem, cfg.beta, resolution=cfg.resolution)
    dens_path = os.path.join(cfg.out_dir, "gibbs_density.csv")
    with open(dens_path, "w") as fh:
        fh.write(",".join(["z_%d" % j for j in range(grid.dim)] + ["density"]) + "\n")
        for i in range(grid.points.shape[0]):
            cells = [_fmt_float(x) for x in grid.points[i]] + [_fmt_float(grid.density[i])]
            fh.write(",".join(cells) + "\n")

    cheeger = chainlab.cheeger_estimate(grid)
    lam = None
    if cfg.beta > 0.0:
        try:
            lam = chainlab.warm_start_lambda(grid, constants.loss_smoothness, cfg.beta)
        except ValueError:
            # the ratio bound genuinely diverges (pi underflows under warm
            # mass); record that instead of failing the whole experiment
            lam = "divergent"

    betas = cfg.betas if cfg.betas is not None else (cfg.beta,)
    loss_rows = []
    for b in betas:
        g = grid if b == cfg.beta else chainlab.gibbs_grid(problem, b,
                                                           resolution=cfg.resolution)
        loss_rows.append({"beta": b, "expected_loss": chainlab.gibbs_expected_loss(g)})
    with open(os.path.join(cfg.out_dir, "expected_loss.csv"), "w") as fh:
        fh.write("beta,expected_loss\n")
        for row in loss_rows:
            fh.write("%s,%s\n" % (_fmt_float(row["beta"]),
                                  _fmt_float(row["expected_loss"])))

    mix_path = os.path.join(cfg.out_dir, "mixing_curve.csv")
    if cfg.beta > 0.0:
        checkpoints = cfg.checkpoints
        if checkpoints is None:
            ks = sorted({0, cfg.k_max} | {int(round(cfg.k_max * 10 ** (-i / 3.0)))
                                          for i in range(1, 10)})
            checkpoints = tuple(k for k in ks if 0 <= k <= cfg.k_max)
        sampler_cfg = SamplerConfig(beta=cfg.beta, eta=cfg.eta, r=cfg.r,
                                    k_max=cfg.k_max, seed=seed,
                                    record_every=cfg.record_every)
        curve = chainlab.mixing_curve(problem, sampler_cfg, cfg.n_chains, checkpoints,
                                      method=cfg.method if cfg.method != "gd" else "sgld",
                                      constants=constants)
        curve.to_csv(mix_path)
    else:
        # flat target: only the warm-start point of the curve is defined
        mix_grid = chainlab.gibbs_grid(
            problem, 0.0,
            resolution=cfg.resolution or (chainlab.MIXING_RESOLUTION_1D if net.input_dim == 1
                                          else chainlab.MIXING_RESOLUTION_2D))
        zs = chainlab._batch_warm_start(problem, 0.0, constants.loss_smoothness,
                                        cfg.n_chains,
                                        RngStream(seed, chainlab.MIXING_STREAM_ID))
        tv, se = chainlab._tv_with_se(zs, mix_grid)
        with open(mix_path, "w") as fh:
            fh.write("k,tv,mc_stderr\n")
            fh.write("0,%s,%s\n" % (_fmt_float(tv), _fmt_float(se)))

    report = {"kind": cfg.kind, "cheeger": {"value": cheeger.value, "cut": cheeger.cut},
              "warm_start_lambda": lam, "expected_loss": loss_rows,
              "grid": {"dim": grid.dim, "resolution": grid.resolution,
                       "log_partition": grid.log_partition},
              "config": cfg.raw}
    write_json(os.path.join(cfg.out_dir, "report.json"), report)
    write_json(os.path.join(cfg.out_dir, "summary.json"), report)
    replot_chain_lab(cfg)
    return report


def replot_chain_lab(cfg):
    plotting.plot_chain_lab(os.path.join(cfg.out_dir, "plot_chain_lab.svg"),
                            os.path.join(cfg.out_dir, "gibbs_density.csv"),
                            os.path.join(cfg.out_dir, "mixing_curve.csv"))


RUNNERS = {"recover": run_recover, "compare": run_compare,
           "phase_transition": run_phase_transition, "validate": run_validate,
           "chain_lab": run_chain_lab}
REPLOTTERS = {"recover": replot_recover, "compare": replot_compare,
              "phase_transition": replot_phase, "validate": replot_validate,
              "chain_lab": replot_chain_lab}
