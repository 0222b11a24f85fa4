"""Outer loop: line search, certificates, guarantees, artifacts."""

import numpy as np
import pytest

from urom.bench import (make_affine, make_bilinear_saddle, make_power_potential,
                        merit_lower_bound)
from urom.curvature import HolderEnvelope
from urom.errors import UromError
from urom.solver import (TRACE_COLUMNS, SolverConfig, check_telescoped_guarantee,
                         default_M0, predicted_iterations, run, summary_dict,
                         trace_rows, write_trace_csv)


def power_run(delta=1e-4, epsilon=0.0, n=10, seed=0, M0="auto", max_outer=3000):
    inst = make_power_potential(n=n, nu=1.0)
    x0 = np.ones(n) / np.sqrt(n)
    cfg = SolverConfig(p=1, delta=delta, epsilon=epsilon, M0=M0,
                       max_outer=max_outer, seed=seed, x0=x0)
    return inst, cfg, run(inst.problem, cfg)


def test_default_m0_value():
    # p = 1, eps = 5/2, D = 1: (2 eps/5) (1/c_1)^2 D  =  (1/c_1)^2  ~  3 sqrt 2
    inst = make_power_potential(n=3, nu=1.0, set_kind="ball:D=1")
    cfg = SolverConfig(p=1, delta=0.0, epsilon=2.5, M0="auto")
    assert default_M0(inst.problem, cfg) == pytest.approx(4.2426406871192865, rel=1e-12)


def test_delta_run_reaches_target():
    inst, cfg, res = power_run(delta=1e-4)
    assert res.status == "stopped-on-delta"
    assert res.norm_v_psi_final <= 1e-4
    assert res.iterations < 50


def test_epsilon_run_certifies_gap():
    inst, cfg, res = power_run(delta=1e-9, epsilon=1e-3, max_outer=5000)
    assert res.status in ("stopped-on-epsilon", "stopped-on-delta")
    if res.status == "stopped-on-epsilon":
        assert res.Delta_final <= 1e-3
    # the certified gap dominates the sampled merit at the averaged point
    mu = merit_lower_bound(inst.problem, res.x_bar, n_samples=400, seed=1)
    assert mu <= max(res.Delta_final or np.inf, 1e-3) + 1e-9


def test_weights_and_averages_consistent():
    inst, cfg, res = power_run(delta=1e-5)
    # the terminal record may stop on the residual test before a weight is
    # assigned; every weighted record must carry a positive a_k
    weighted = [rec for rec in res.records if rec.a_k is not None]
    assert len(weighted) >= res.iterations - 1
    a = np.array([rec.a_k for rec in weighted])
    assert np.all(a > 0)
    A = np.cumsum(a)
    assert A[-1] == pytest.approx(weighted[-1].A_k, rel=1e-12)
    xbar = sum(ai * x for ai, x in zip(a, res.xs)) / A[-1]
    assert np.allclose(xbar, res.x_bar, atol=1e-12)


def test_certificate_gap_nonincreasing_tail():
    inst, cfg, res = power_run(delta=1e-6, epsilon=1e-8, max_outer=4000)
    gaps = [rec.Delta_k for rec in res.records if rec.Delta_k is not None]
    assert len(gaps) >= 3
    assert gaps[-1] <= gaps[0] + 1e-12


def test_m_stays_bounded_by_theory():
    inst, cfg, res = power_run(delta=1e-5)
    env = HolderEnvelope(1, 1.0, 2.0)
    delta = 1e-5
    rinv = float(env.sigma_inverse(delta / 5.0))
    bound = 2.0 * max(2.0 * delta / (5.0 * rinv ** 2), default_M0(inst.problem, cfg))
    for rec in res.records:
        assert rec.M_plus <= bound + 1e-12


def test_telescoped_guarantee_replay():
    inst, cfg, res = power_run(delta=1e-5)
    rep = check_telescoped_guarantee(res, inst.known["x_star"], inst.problem)
    assert rep.ok
    assert rep.per_term_min >= -1e-10


def test_trace_schema_and_determinism():
    inst, cfg, res = power_run(delta=1e-5, seed=7)
    rows = trace_rows(res)
    assert rows[0] == TRACE_COLUMNS
    assert rows[0][-1] == "time_ms"
    for row in rows[1:]:
        assert row[-1] == ""          # timing never enters the trace
        assert len(row) == len(TRACE_COLUMNS)
    _, _, res2 = power_run(delta=1e-5, seed=7)
    assert trace_rows(res2) == rows


def test_trace_csv_round_trip(tmp_path):
    inst, cfg, res = power_run(delta=1e-4)
    path = tmp_path / "trace.csv"
    write_trace_csv(res, str(path))
    text = path.read_text().splitlines()
    assert text[0] == ",".join(TRACE_COLUMNS)
    assert len(text) == 1 + res.iterations
    # 17 significant digits survive a float round trip
    first = text[1].split(",")
    val = first[TRACE_COLUMNS.index("M_plus")]
    assert float(val) == res.records[0].M_plus


def test_summary_dict_contents():
    inst, cfg, res = power_run(delta=1e-4)
    doc = summary_dict(res, inst.problem, inst.known)
    assert doc["status"] == "stopped-on-delta"
    assert doc["iterations"] == res.iterations
    assert doc["config"]["p"] == 1
    assert doc["config"]["M0_resolved"] > 0
    assert doc["predicted_K_delta"] >= res.iterations
    assert doc["wall_time_s"] >= 0.0


def test_predicted_iterations_formulas():
    inst = make_power_potential(n=10, nu=1.0)
    env = inst.known["sigma_envelope"]
    cfg = SolverConfig(p=1, delta=1e-3, epsilon=0.0, M0=1.0)
    k_delta = predicted_iterations(env, cfg, 1.0, mode="delta")
    # (4/5)^(2/(p+1)) [R0/c_1 max(1/sigma^-1(delta/5), (5 M0/2 delta)^(1/2))]^2
    rinv = float(env.sigma_inverse(1e-3 / 5.0))
    inner = max(1.0 / rinv, (5.0 * 1.0 / (2.0 * 1e-3)) ** 0.5)
    expect = 0.8 * (inner / 0.4854917717073233) ** 2
    assert k_delta == pytest.approx(expect, rel=1e-10)
    cfg_eps = SolverConfig(p=1, delta=0.0, epsilon=1e-3, M0=1.0)
    k_eps = predicted_iterations(env, cfg_eps, 2.0, mode="epsilon")
    rinv_e = float(env.sigma_inverse(1e-3 / (5.0 * 2.0)))
    inner_e = max(1.0 / rinv_e, (5.0 * 1.0 * 2.0 / (2.0 * 1e-3)) ** 0.5)
    expect_e = 0.8 ** (2.0 / 3.0) * (2.0 * inner_e / 0.4854917717073233) ** (4.0 / 3.0)
    assert k_eps == pytest.approx(expect_e, rel=1e-10)
    with pytest.raises(UromError):
        predicted_iterations(env, SolverConfig(p=1, delta=1e-3, M0="auto"), 1.0,
                             mode="delta")


def test_affine_instance_one_step():
    inst = make_affine(n=5, seed=4)
    cfg = SolverConfig(p=1, delta=1e-8, epsilon=0.0, M0="auto", max_outer=50,
                       seed=0, x0=inst.problem.project(np.full(5, 0.5)))
    res = run(inst.problem, cfg)
    assert res.status == "stopped-on-delta"
    assert res.iterations <= 2
    assert np.allclose(res.x_last, inst.known["x_star"], atol=1e-5)


def test_matrix_game_run_certifies_value():
    inst = make_bilinear_saddle(2, 2, np.array([[1.0, -1.0], [-1.0, 1.0]]))
    pr = inst.problem
    n = pr.n
    x0 = pr.project(np.full(n, 1.0))
    cfg = SolverConfig(p=1, delta=1e-7, epsilon=1e-4, M0="auto", max_outer=4000,
                       seed=0, x0=x0)
    res = run(pr, cfg)
    assert res.status in ("stopped-on-epsilon", "stopped-on-delta")
    assert np.allclose(res.x_bar, inst.known["x_star"], atol=1e-2)


def test_epsilon_needs_bounded_set():
    inst = make_power_potential(n=3, nu=1.0, set_kind="whole")
    cfg = SolverConfig(p=1, delta=0.0, epsilon=1e-3, M0=1.0, x0=np.zeros(3))
    with pytest.raises(UromError):
        run(inst.problem, cfg)


def test_infeasible_start_rejected():
    inst = make_power_potential(n=3, nu=1.0)
    cfg = SolverConfig(p=1, delta=1e-4, M0="auto", x0=np.full(3, 5.0))
    with pytest.raises(UromError):
        run(inst.problem, cfg)


def test_inner_failure_status():
    inst = make_power_potential(n=6, nu=1.0)
    cfg = SolverConfig(p=1, delta=1e-13, epsilon=0.0, M0="auto", max_outer=50,
                       seed=1, x0=np.ones(6) / 3.0, max_inner_iters=200)
    res = run(inst.problem, cfg)
    assert res.status == "inner-failure"
