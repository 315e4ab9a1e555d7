import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from thomalab import sim
from thomalab.poly import MomentPoly
from thomalab.sim import _kernel_py
from thomalab.sim.core import (
    SimConfig, SimError, SimState, csv_bytes, diffusion_matrix, drift_nat, generator_consistency,
    moments, omega0_report, read_binary, simulate, step, write_binary,
)
from thomalab.suites import REFERENCE_POINT, SIM_PARAMS, psd_check, retention
from thomalab.thoma import NumParams

try:
    from thomalab.sim import _kernel
except ImportError:  # extension not built
    _kernel = None

needs_ext = pytest.mark.skipif(_kernel is None, reason="compiled kernel not built")
W0 = SimState.from_point(REFERENCE_POINT, 3, 2, 1.0)


def test_drift_reference_point():
    b = drift_nat(W0, SIM_PARAMS)
    # column order -2, -1, 1, 2, 3; coordinate 1 sits at index 2
    assert b[2] == pytest.approx(3.5714286, abs=1e-6)


def test_drift_single_coordinate():
    prm = NumParams(1.5, 0.7, 0.4)
    s = SimState.from_natural([0.3], 1, 0, 1.5)
    assert drift_nat(s, prm)[0] == pytest.approx(0.7 - 1.5 - 0.4 / 1.5 * 0.3)


def test_drift_pair_antisymmetry():
    prm = NumParams(2.0, 0.0, 1.0)
    s = SimState.from_natural([0.2, 0.5], 2, 0, 2.0)
    b = drift_nat(s, prm)
    base = -2.0 - 0.5 * s.xt
    assert b[0] - base[0] == pytest.approx(4 * 0.5 / (0.2 - 0.5))
    assert b[1] - base[1] == pytest.approx(4 * 0.2 / (0.5 - 0.2))


def test_drift_flags_coincidence():
    s = SimState.from_natural([0.2, 0.2, 0.1], 3, 0, 1.0)
    _, flag = drift_nat(s, SIM_PARAMS, with_flag=True)
    assert flag and s.coincident()
    _, flag = drift_nat(W0, SIM_PARAMS, with_flag=True)
    assert not flag


def test_diffusion_kernel_on_omega0():
    a = diffusion_matrix(W0)
    v = 1.0 / W0.signs
    assert np.allclose(a @ v, 0.0, atol=1e-15)


def test_diffusion_diagonal_signs():
    th = 2.0
    s = SimState.from_natural([0.1, 0.2, 0.3], 2, 1, th)
    d = np.diag(diffusion_matrix(s)) + s.xt ** 2
    assert d == pytest.approx([th ** 2 * 0.1, 0.2, 0.3])
    assert np.all(np.diag(diffusion_matrix(s)) >= 0)


@pytest.mark.parametrize("theta", [0.5, 1.0, 2.0])
def test_psd_sample(theta):
    assert psd_check(seed=1, count=500, theta=theta)["status"] == "pass"


def test_state_validation():
    with pytest.raises(SimError):
        SimState.from_natural([0.7, 0.7], 2, 0, 1.0)
    with pytest.raises(SimError):
        SimState.from_natural([-0.1, 0.2], 2, 0, 1.0)
    with pytest.raises(SimError):
        SimState.from_point(REFERENCE_POINT, 1, 1, 1.0)
    with pytest.raises(SimError):
        SimConfig(3, 2, 1e-3, 0.0105, 5)


def test_zero_state_moves_only_by_inward_drift():
    # all mass in gamma: positive coordinates get inward drift s1 - theta > 0
    s = SimState.from_natural([0.0, 0.0], 2, 0, 1.0)
    out = step(s, 1e-3, _kernel_py.path_generator(0, 0), NumParams(1.0, 2.0, 1.0))
    assert np.all(out.x >= 0) and out.x.sum() <= 1
    # with inward drift <= 0 the zero coordinates stay put
    out = step(s, 1e-3, _kernel_py.path_generator(0, 0), NumParams(1.0, 0.5, 1.0))
    assert np.all(out.x == 0)


def _cfg(**kw):
    base = dict(n=3, m=2, dt=1e-3, t_end=0.05, paths=16, seed=11, params=SIM_PARAMS,
                record_every=5)
    base.update(kw)
    return SimConfig(**base)


def test_determinism_and_worker_independence():
    a = simulate(_cfg(), W0)
    b = simulate(_cfg(workers=4), W0)
    assert np.array_equal(a.traj, b.traj) and np.array_equal(a.substeps, b.substeps)
    assert csv_bytes(a) == csv_bytes(b)
    c = simulate(_cfg(seed=12), W0)
    assert not np.array_equal(a.final, c.final)


@needs_ext
def test_backends_bit_identical():
    cfg = _cfg(paths=8, t_end=0.1)
    a = simulate(cfg, W0, _kernel)
    b = simulate(cfg, W0, _kernel_py)
    assert a.backend == "cython" and b.backend == "python"
    assert np.array_equal(a.traj, b.traj)
    assert np.array_equal(a.substeps, b.substeps)
    assert np.array_equal(a.status, b.status)


def test_backend_selection_env(monkeypatch):
    import importlib
    monkeypatch.setenv("THOMA_SIM_BACKEND", "python")
    assert sim._select() is _kernel_py
    monkeypatch.delenv("THOMA_SIM_BACKEND")
    assert sim._select().BACKEND in ("cython", "python")
    importlib.reload(sim)


def test_retention_along_paths():
    res = simulate(_cfg(paths=32, t_end=0.2, record_every=1), W0)
    assert retention(res.traj)["status"] == "pass"
    assert res.traj.shape == (32, 201, 5)


def test_step_matches_kernel():
    gen = _kernel_py.path_generator(5, 0)
    s = W0
    for _ in range(10):
        s = step(s, 1e-3, gen, SIM_PARAMS)
    res = simulate(_cfg(paths=1, seed=5, t_end=0.01, record_every=0), W0)
    assert np.array_equal(s.x, res.final[0])


def test_moments_match_q_values():
    q = moments(W0.x[None, :], W0.signs, 2)
    assert q[1][0] == pytest.approx(0.30)
    assert q[2][0] == pytest.approx(0.16)


def test_consistency_small():
    q = MomentPoly.q
    reps = generator_consistency([MomentPoly.const(1), q(1)], W0, 1e-4, 2000, SIM_PARAMS, seed=1)
    assert reps[0]["mc_rate"] == 0 and reps[0]["exact"] == 0
    assert reps[1]["exact"] == pytest.approx(2.2)
    assert np.isfinite(reps[1]["z"])


def test_consistency_rejects_high_order():
    with pytest.raises(SimError):
        generator_consistency(MomentPoly.q(9), W0, 1e-4, 10, SIM_PARAMS)


def test_omega0_report_is_observational():
    rep = omega0_report(_cfg(paths=20, t_end=0.1), W0)
    assert rep["observational"] is True
    assert rep["verdict"]["gamma_nonnegative"]
    s = SimState.from_natural([0.3, 0.2], 2, 0, 1.0)
    rep = omega0_report(_cfg(n=2, m=0, paths=20, t_end=0.1), s)
    assert rep["start"] == [0.3, 0.2]


def test_binary_roundtrip():
    res = simulate(_cfg(), W0)
    buf = io.BytesIO()
    write_binary(res, buf)
    d = read_binary(buf.getvalue())
    assert (d["n"], d["m"]) == (3, 2)
    assert np.array_equal(d["data"], res.sorted_traj())
    assert np.array_equal(d["times"], res.times)
    with pytest.raises(SimError):
        read_binary(buf.getvalue()[:-3])
    with pytest.raises(SimError):
        read_binary(b"NOPE" + buf.getvalue())


def test_csv_layout():
    res = simulate(_cfg(paths=2, t_end=0.01), W0)
    lines = csv_bytes(res).decode().splitlines()
    head = [ln for ln in lines if not ln.startswith("#")]
    assert head[0] == "path_id,t,x_-2,x_-1,x_1,x_2,x_3,sum_x"
    assert len(head) == 1 + 2 * 3
    row = [float(v) for v in head[1].split(",")]
    assert row[2:7] == sorted(row[2:4]) + sorted(row[4:7], reverse=True)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(1, 3), st.integers(0, 2),
       st.sampled_from([0.5, 1.0, 2.0]))
def test_simplex_retention_property(seed, n, m, th):
    rng = np.random.default_rng(seed)
    x = rng.dirichlet(np.ones(n + m + 1))[: n + m]
    s = SimState.from_natural(x, n, m, th)
    cfg = SimConfig(n, m, 1e-3, 0.02, 4, seed, NumParams(th, 1.0, 1.0), record_every=1)
    res = simulate(cfg, s)
    assert retention(res.traj)["status"] == "pass"
