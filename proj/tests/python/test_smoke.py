import math

import pytest

import boedflows as bf


def test_torus_closed_form_matches_single_design_formula():
    a0 = 0.4 + 2.0 + 3.5 * math.exp(-0.5 * (math.pi / 2 / 0.3) ** 2) + math.exp(-0.5 * (math.pi / 0.3) ** 2)
    assert bf.eig_exact_torus([0.0]) == pytest.approx(0.5 * math.log(1 + a0**2 / 0.35**2), rel=1e-12)


def test_nmc_close_to_exact_on_torus():
    design = [[0.1], [1.2], [-2.0]]
    value, se = bf.eig_nmc("torus", design, n_outer=2000, n_inner=2000, seed=4)
    assert abs(value - bf.eig_exact_torus([0.1, 1.2, -2.0])) <= 3 * se + 0.05


def test_repair_and_feasibility():
    t = bf.repair([5.0, 1.0, 1.0, 30.0], 0.25, 24.0)
    assert t == sorted(t)
    assert all(b - a >= 0.25 - 1e-12 for a, b in zip(t, t[1:]))
    assert bf.is_feasible([[x] for x in t], bf.Constraint.ordered_min_gap(0.25, 24.0))
    assert bf.wrap_torus(3 * math.pi) == pytest.approx(-math.pi)


def test_uniform_design():
    assert bf.design_uniform(3, bf.constraint_of("pk")) == [[6.0], [12.0], [18.0]]


def test_quick_experiment_is_deterministic():
    cfg = "\n".join([
        "model = torus",
        "methods = repeat_best_single, iid",
        "m = 3",
        "seeds = 2",
        "n_steps = 100",
        "N = 10",
        "extract.n_eval = 20",
    ])
    a = bf.run_experiment(cfg)
    b = bf.run_experiment(cfg)
    strip = lambda rows: [{k: v for k, v in r.items() if k != "wallclock_ms"} for r in rows]
    assert strip(a["rows"]) == strip(b["rows"])
    assert all(r["status"] == "ok" for r in a["rows"])
    iid = [r["eig"] for r in a["rows"] if r["method"] == "iid"]
    single = [r["eig"] for r in a["rows"] if r["method"] == "repeat_best_single"]
    assert min(iid) > max(single)


def test_bad_config_raises():
    with pytest.raises(bf.ConfigError):
        bf.run_experiment("methods = iid\nm = 2\n")
