import hashlib
import json
import os

import numpy as np
import pytest

from gencs import harness
from gencs.cli import main
from gencs.exceptions import ConfigError
from gencs.generator import NetSpec, random_net, save_net


def write_config(tmp_path, doc, name="cfg.json"):
    path = os.path.join(tmp_path, name)
    with open(path, "w") as fh:
        json.dump(doc, fh)
    return path


def linear_recover_doc(out_dir, k_max=40000, method="gd"):
    return {
        "kind": "recover",
        "out_dir": out_dir,
        "generator": {"netspec": {"widths": [3, 10], "activation": "identity",
                                  "seed": 2}},
        "problem": {"ratio": 1.0, "seeds": [0, 1]},
        "sampler": {"beta": 1e4, "r": 1e6, "k_max": k_max, "record_every": 1000},
        "method": method,
    }


def tree_digest(root):
    out = {}
    for base, _, files in os.walk(root):
        for name in sorted(files):
            path = os.path.join(base, name)
            with open(path, "rb") as fh:
                out[os.path.relpath(path, root)] = hashlib.sha256(fh.read()).hexdigest()
    return out


# config validation ---------------------------------------------------------

def test_parse_config_field_errors():
    base = {"generator": {"netspec": {"widths": [2, 4], "activation": "elu"}},
            "problem": {"ratio": 0.5, "seeds": [0]},
            "sampler": {"beta": 10.0}}

    doc = json.loads(json.dumps(base))
    del doc["generator"]["netspec"]
    with pytest.raises(ConfigError) as exc:
        harness.parse_config(doc, "recover")
    assert exc.value.field == "generator"

    doc = json.loads(json.dumps(base))
    doc["problem"]["m"] = 4  # both ratio and m
    with pytest.raises(ConfigError) as exc:
        harness.parse_config(doc, "recover")
    assert exc.value.field == "problem.ratio"

    doc = json.loads(json.dumps(base))
    del doc["sampler"]["beta"]
    with pytest.raises(ConfigError) as exc:
        harness.parse_config(doc, "recover")
    assert exc.value.field == "sampler.beta"

    doc = json.loads(json.dumps(base))
    doc["sampler"]["eta"] = -1.0
    with pytest.raises(ConfigError) as exc:
        harness.parse_config(doc, "recover")
    assert exc.value.field == "sampler.eta"

    doc = json.loads(json.dumps(base))
    doc["kind"] = "compare"
    with pytest.raises(ConfigError) as exc:
        harness.parse_config(doc, "recover")
    assert exc.value.field == "kind"

    doc = json.loads(json.dumps(base))
    doc["problem"]["seeds"] = []
    with pytest.raises(ConfigError) as exc:
        harness.parse_config(doc, "recover")
    assert exc.value.field == "problem.seeds"


def test_beta_accepts_inf_string():
    doc = {"generator": {"netspec": {"widths": [2, 4], "activation": "elu"}},
           "problem": {"ratio": 0.5, "seeds": [0]},
           "sampler": {"beta": "inf"}}
    cfg = harness.parse_config(doc, "recover")
    assert cfg.beta == float("inf")


def test_apply_overrides_dotted_paths():
    doc = {"sampler": {"beta": 1.0}}
    harness.apply_overrides(doc, ["sampler.beta=25.0", "problem.ratio=0.5",
                                  "method=gd"])
    assert doc["sampler"]["beta"] == 25.0
    assert doc["problem"]["ratio"] == 0.5
    assert doc["method"] == "gd"
    with pytest.raises(ConfigError):
        harness.apply_overrides(doc, ["no_equals_sign"])


# cli exit codes --------------------------------------------------------------

def test_cli_exit_codes(tmp_path):
    # missing config file
    assert main(["recover", "--config", str(tmp_path / "nope.json")]) == 2

    # invalid json
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["recover", "--config", str(bad)]) == 2

    # config error: beta missing
    doc = linear_recover_doc(str(tmp_path / "o1"))
    del doc["sampler"]["beta"]
    path = write_config(str(tmp_path), doc)
    assert main(["recover", "--config", path]) == 2

    # malformed weight file
    wf = tmp_path / "broken.gnet.json"
    wf.write_text("{}")
    doc = linear_recover_doc(str(tmp_path / "o2"))
    doc["generator"] = {"weights_file": str(wf)}
    path = write_config(str(tmp_path), doc, "w.json")
    assert main(["recover", "--config", path]) == 2

    # chain_lab refuses latent dimension > 2
    doc = {"kind": "chain_lab", "out_dir": str(tmp_path / "o3"),
           "generator": {"netspec": {"widths": [3, 6], "activation": "elu",
                                     "seed": 0}},
           "problem": {"ratio": 1.0, "seeds": [0]},
           "sampler": {"beta": 1.0, "k_max": 10}}
    path = write_config(str(tmp_path), doc, "lab.json")
    assert main(["chain_lab", "--config", path]) == 2

    # numeric failure: warm start rejection cap at absurdly small beta
    doc = linear_recover_doc(str(tmp_path / "o4"), k_max=10)
    path = write_config(str(tmp_path), doc, "cap.json")
    code = main(["recover", "--config", path, "--set", "sampler.beta=1e-300"])
    assert code == 3


def test_cli_requires_kind():
    assert main([]) == 2


# recover ---------------------------------------------------------------------

def test_recover_linear_matches_lstsq(tmp_path):
    out = str(tmp_path / "out")
    doc = linear_recover_doc(out)
    cfg = harness.parse_config(doc, "recover")
    rows = harness.run_recover(cfg)
    assert len(rows) == 2
    # oracle: direct least squares on A W for each seed
    net = harness.build_generator(cfg)
    w = net.layers[0].w
    from gencs.loss import make_problem
    from gencs.numerics import RngStream, uniform_in_ball
    from gencs.sensing import sample_matrix
    for row in rows:
        z_star = uniform_in_ball(RngStream(row.seed, harness.Z_STAR_STREAM_ID),
                                 net.input_dim, net.radius)
        sensing = sample_matrix(row.m, net.output_dim,
                                RngStream(row.seed, harness.SENSING_STREAM_ID))
        problem = make_problem(net, sensing, z_star)
        target = np.linalg.lstsq(sensing.a @ w, problem.y, rcond=None)[0]
        x_hat = w @ target
        x_star = w @ z_star
        oracle_mse = float(np.sum((x_hat - x_star) ** 2)) / net.output_dim
        assert row.mse <= oracle_mse + 1e-5
    # artifact inventory
    names = sorted(os.listdir(out))
    assert "results.csv" in names and "summary.json" in names
    assert "plot_recover.svg" in names
    assert "traj_0_gd.csv" in names and "traj_0_gd.json" in names


def test_recover_rerun_is_byte_identical(tmp_path):
    doc = linear_recover_doc(str(tmp_path / "a"), k_max=200)
    cfg = harness.parse_config(doc, "recover")
    harness.run_recover(cfg)
    before = tree_digest(str(tmp_path / "a"))
    harness.run_recover(cfg)
    assert tree_digest(str(tmp_path / "a")) == before


def test_recover_k_max_zero(tmp_path):
    doc = linear_recover_doc(str(tmp_path / "out"), k_max=0)
    rows = harness.run_recover(harness.parse_config(doc, "recover"))
    assert all(row.k == 0 for row in rows)


def test_thread_count_env_is_result_invariant(tmp_path, monkeypatch):
    doc = linear_recover_doc(str(tmp_path / "t"), k_max=100)
    doc["problem"]["seeds"] = [0, 1, 2, 3]
    cfg = harness.parse_config(doc, "recover")
    monkeypatch.setenv("CSCLI_THREADS", "1")
    harness.run_recover(cfg)
    serial = tree_digest(str(tmp_path / "t"))
    monkeypatch.setenv("CSCLI_THREADS", "4")
    harness.run_recover(cfg)
    assert tree_digest(str(tmp_path / "t")) == serial


# compare and phase transition ---------------------------------------------------

def test_compare_pairs_methods_and_copies_fixture(tmp_path):
    out = str(tmp_path / "out")
    doc = {
        "kind": "compare", "out_dir": out,
        "generator": {"netspec": {"widths": [3, 10], "activation": "elu",
                                  "seed": 4}},
        "problem": {"ratio": 0.5, "seeds": [0, 1, 2]},
        "sampler": {"beta": 1e4, "r": 1e6, "k_max": 300, "record_every": 100},
        "methods": ["gd", "sgld"],
    }
    rows = harness.run_compare(harness.parse_config(doc, "compare"))
    assert len(rows) == 6
    by_seed = {}
    for row in rows:
        by_seed.setdefault(row.seed, set()).add(row.method)
    assert all(methods == {"gd", "sgld"} for methods in by_seed.values())
    # the reference fixture rides along, labeled by source
    fixture = os.path.join(out, "fixtures", "paper_reference.csv")
    text = open(fixture).read()
    assert text.splitlines()[0].startswith("source,")
    assert "paper,mnist,compare,0.2,gd,0.0447" in text
    assert "paper,mnist,compare,0.2,sgld,0.0275" in text
    assert "paper,cifar10,compare,0.3,sgld,0.0246" in text


def test_phase_f1_cell_matches_recover(tmp_path):
    # the f = 1 column of a phase sweep must reproduce a ratio-1 recover run
    # bit for bit: same streams, same problem, same chain
    base_gen = {"netspec": {"widths": [3, 8], "activation": "elu", "seed": 6}}
    sampler = {"beta": 1e4, "r": 1e6, "k_max": 150, "record_every": 50}
    phase_doc = {
        "kind": "phase_transition", "out_dir": str(tmp_path / "phase"),
        "generator": base_gen, "problem": {"seeds": [3]}, "sampler": sampler,
        "methods": ["sgld"], "ratios": [0.5, 1.0],
    }
    recover_doc = {
        "kind": "recover", "out_dir": str(tmp_path / "rec"),
        "generator": base_gen, "problem": {"ratio": 1.0, "seeds": [3]},
        "sampler": sampler, "method": "sgld",
    }
    phase_rows = harness.run_phase_transition(harness.parse_config(phase_doc,
                                                                   "phase_transition"))
    recover_rows = harness.run_recover(harness.parse_config(recover_doc, "recover"))
    phase_f1 = [r for r in phase_rows if r.f == 1.0]
    assert len(phase_f1) == 1 and len(recover_rows) == 1
    assert phase_f1[0].mse == recover_rows[0].mse
    assert phase_f1[0].final_f == recover_rows[0].final_f
    # phase curve file carries one aggregated row per (f, method)
    curve = open(os.path.join(str(tmp_path / "phase"), "phase_curve.csv")).read()
    lines = curve.strip().split("\n")
    assert lines[0] == "f,method,mean_mse"
    assert len(lines) == 3


def test_results_csv_sorted_and_no_wall_time(tmp_path):
    doc = linear_recover_doc(str(tmp_path / "out"), k_max=50)
    doc["problem"]["seeds"] = [5, 1, 3]
    harness.run_recover(harness.parse_config(doc, "recover"))
    lines = open(os.path.join(str(tmp_path / "out"), "results.csv")).read().strip().split("\n")
    assert lines[0] == "seed,method,f,m,k,final_f,mse"
    seeds = [int(line.split(",")[0]) for line in lines[1:]]
    assert seeds == sorted(seeds)
    assert "wall" not in lines[0]


# validate ----------------------------------------------------------------------

def test_validate_outputs(tmp_path):
    out = str(tmp_path / "out")
    doc = {
        "kind": "validate", "out_dir": out,
        "generator": {"netspec": {"widths": [3, 6, 12], "activation": "elu",
                                  "seed": 9}},
        "problem": {"ratio": 0.25, "seeds": [2]},
        "validate": {"n_pairs": 80, "n_matrices": 2},
    }
    estimates = harness.run_validate(harness.parse_config(doc, "validate"))
    assert estimates["strong_smoothness"]["alpha"] > 0.0
    assert estimates["outside_theory"] is False
    est_doc = json.load(open(os.path.join(out, "estimates.json")))
    assert est_doc["sufficient_condition"]["n_pairs"] == 80
    scatter = open(os.path.join(out, "scatter_strong.csv")).read().strip().split("\n")
    assert scatter[0] == "u,v"
    assert len(scatter) == 1 + 80
    assert os.path.exists(os.path.join(out, "plot_validate.svg"))


def test_validate_from_weight_file(tmp_path):
    net = random_net(NetSpec(widths=(2, 6), activation="tanh", seed=11))
    wf = os.path.join(str(tmp_path), "net.gnet.json")
    save_net(net, wf)
    out = str(tmp_path / "out")
    doc = {
        "kind": "validate", "out_dir": out,
        "generator": {"weights_file": wf},
        "problem": {"ratio": 0.5, "seeds": [0]},
        "validate": {"n_pairs": 40, "n_matrices": 1},
    }
    estimates = harness.run_validate(harness.parse_config(doc, "validate"))
    assert estimates["strong_smoothness"]["n_pairs"] == 40


# chain lab ----------------------------------------------------------------------

def test_chain_lab_quadratic_report(tmp_path):
    out = str(tmp_path / "out")
    doc = {
        "kind": "chain_lab", "out_dir": out,
        "generator": {"netspec": {"widths": [1, 1], "activation": "identity",
                                  "seed": 0, "radius": 10.0}},
        "problem": {"m": 1, "seeds": [0]},
        "sampler": {"beta": 2.0, "eta": 0.01, "r": 2.0, "k_max": 3000,
                    "record_every": 500},
        "chain_lab": {"n_chains": 2000, "checkpoints": [0, 500, 3000],
                      "betas": [1.0, 2.0, 100.0]},
    }
    report = harness.run_chain_lab(harness.parse_config(doc, "chain_lab"))
    # F = a^2 (z - z*)^2 for a scalar sensing draw: still E[F] = 1/(2 beta)
    # under the gibbs law on a wide domain
    losses = {row["beta"]: row["expected_loss"] for row in report["expected_loss"]}
    for beta, value in losses.items():
        assert abs(value - 1.0 / (2.0 * beta)) < 0.02 / beta
    assert report["cheeger"]["value"] > 0.0
    # the target well sits far from the origin here, so the warm-start
    # density-ratio bound genuinely diverges and is reported as such
    assert report["warm_start_lambda"] == "divergent"
    curve = open(os.path.join(out, "mixing_curve.csv")).read().strip().split("\n")
    assert curve[0] == "k,tv,mc_stderr"
    final_tv = float(curve[-1].split(",")[1])
    assert final_tv < 0.1
    dens = open(os.path.join(out, "gibbs_density.csv")).read().strip().split("\n")
    assert dens[0] == "z_0,density"
    assert os.path.exists(os.path.join(out, "plot_chain_lab.svg"))


def test_chain_lab_finite_lambda(tmp_path):
    # a narrow domain keeps pi positive on every cell, so the ratio bound
    # is a finite number at least 1
    out = str(tmp_path / "out")
    doc = {
        "kind": "chain_lab", "out_dir": out,
        "generator": {"netspec": {"widths": [1, 1], "activation": "identity",
                                  "seed": 0, "radius": 3.0}},
        "problem": {"m": 1, "seeds": [0]},
        "sampler": {"beta": 2.0, "eta": 0.01, "r": 2.0, "k_max": 200,
                    "record_every": 100},
        "chain_lab": {"n_chains": 500, "checkpoints": [0, 200]},
    }
    report = harness.run_chain_lab(harness.parse_config(doc, "chain_lab"))
    lam = report["warm_start_lambda"]
    assert isinstance(lam, float) and lam >= 1.0 - 1e-9


def test_chain_lab_flat_beta_zero(tmp_path):
    out = str(tmp_path / "out")
    doc = {
        "kind": "chain_lab", "out_dir": out,
        "generator": {"netspec": {"widths": [1, 1], "activation": "identity",
                                  "seed": 0, "radius": 5.0}},
        "problem": {"m": 1, "seeds": [0]},
        "sampler": {"beta": 0.0, "k_max": 100},
        "chain_lab": {"n_chains": 3000},
    }
    report = harness.run_chain_lab(harness.parse_config(doc, "chain_lab"))
    assert report["warm_start_lambda"] is None
    curve = open(os.path.join(out, "mixing_curve.csv")).read().strip().split("\n")
    assert len(curve) == 2  # only the k = 0 warm-start row is defined
    tv0 = float(curve[1].split(",")[1])
    assert tv0 < 0.1  # uniform warm start vs uniform target: noise only


# replot --------------------------------------------------------------------------

def test_replot_reproduces_svg_bytes(tmp_path):
    out = str(tmp_path / "out")
    doc = linear_recover_doc(out, k_max=100)
    path = write_config(str(tmp_path), doc)
    assert main(["recover", "--config", path]) == 0
    svg = os.path.join(out, "plot_recover.svg")
    before = open(svg, "rb").read()
    os.remove(svg)
    assert main(["recover", "--config", path, "--replot"]) == 0
    after = open(svg, "rb").read()
    assert before == after
    # replot must not touch the data files
    assert os.path.exists(os.path.join(out, "results.csv"))
