"""States, configuration, drivers and trajectory I/O for the path simulator.

Paths run in modified coordinates x~_i = sgn(i) x_i, sgn(i) = 1 for i > 0 and
-theta for i < 0. Column order everywhere is i = -m, ..., -1, 1, ..., n.
"""

from __future__ import annotations

import io
import json
import math
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import BinaryIO, Mapping, Sequence, TextIO

import numpy as np

from .. import __version__
from ..operators import apply_A_nat
from ..poly import MomentPoly
from ..printing import to_text
from ..thoma import NumParams, ThomaPoint
from . import _kernel_py

MASS_TOL = 1e-9
GAP_THRESHOLD = 1e-6
MAX_HALVINGS = 20
MAX_K = 6
BINARY_MAGIC = b"THSIM1"


class SimError(ValueError):
    pass


def indices(n: int, m: int) -> list[int]:
    return list(range(-m, 0)) + list(range(1, n + 1))


def signs(n: int, m: int, theta: float) -> np.ndarray:
    return np.array([-theta if i < 0 else 1.0 for i in indices(n, m)])


def _params_dict(params: NumParams) -> dict:
    return {"theta": params.theta, "s1": params.s1, "s2": params.s2}


# -- state ---------------------------------------------------------------------

@dataclass(frozen=True)
class SimState:
    n: int
    m: int
    theta: float
    xt: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        if self.n < 0 or self.m < 0 or self.n + self.m == 0:
            raise SimError("truncation needs n, m >= 0 and n + m >= 1")
        if not self.theta > 0:
            raise SimError("theta must be positive")
        xt = np.array(self.xt, dtype=np.float64)
        if xt.shape != (self.n + self.m,):
            raise SimError(f"expected {self.n + self.m} coordinates, got shape {xt.shape}")
        object.__setattr__(self, "xt", xt)
        xt.flags.writeable = False
        x = self.x
        if not np.all(np.isfinite(x)) or np.any(x < 0):
            raise SimError("natural coordinates must be finite and >= 0")
        if math.fsum(x) > 1 + MASS_TOL:
            raise SimError(f"total mass {math.fsum(x)!r} exceeds 1")

    @classmethod
    def from_natural(cls, x: Sequence[float], n: int, m: int, theta: float, t: float = 0.0):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (n + m,):
            raise SimError(f"expected {n + m} coordinates, got shape {x.shape}")
        return cls(n, m, theta, signs(n, m, theta) * x, t)

    @classmethod
    def from_point(cls, p: ThomaPoint, n: int, m: int, theta: float) -> SimState:
        """Coordinates beyond the point's support start at 0."""
        if len(p.alpha) > n or len(p.beta) > m:
            raise SimError(f"point does not fit the ({n}, {m}) truncation")
        x = [p.x(i) for i in indices(n, m)]
        return cls.from_natural(x, n, m, theta)

    @property
    def signs(self) -> np.ndarray:
        return signs(self.n, self.m, self.theta)

    @property
    def x(self) -> np.ndarray:
        return self.xt / self.signs

    @property
    def gamma(self) -> float:
        return 1.0 - math.fsum(self.x)

    def coincident(self) -> bool:
        """Two nonzero coordinates share a modified value."""
        xt = self.xt[self.xt != 0]
        return np.unique(xt).size < xt.size


# -- coefficients ----------------------------------------------------------------

def drift_nat(s: SimState, params: NumParams, with_flag: bool = False):
    """Drift in modified coordinates.

    A pair with equal modified values contributes nothing; if that pair carries
    mass the state is flagged singular (returned when ``with_flag``).
    """
    if abs(params.theta - s.theta) > 0:
        raise SimError("state and params disagree on theta")
    theta = params.theta
    xt, x, sg = s.xt, s.x, s.signs
    diff = xt[:, None] - xt[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        pair = np.where(diff != 0, x[None, :] / np.where(diff != 0, diff, 1.0), 0.0)
    np.fill_diagonal(pair, 0.0)
    b = params.s1 - theta / sg - (params.s2 / theta) * xt + 2 * theta * pair.sum(axis=1)
    if not with_flag:
        return b
    off = ~np.eye(xt.size, dtype=bool)
    singular = bool(np.any((diff == 0) & off & (x[None, :] != 0)))
    return b, singular


def diffusion_matrix(s: SimState) -> np.ndarray:
    """diag(sgn_i x~_i) - x~ x~^T."""
    return np.diag(s.signs * s.xt) - np.outer(s.xt, s.xt)


def step(s: SimState, dt: float, rng: np.random.Generator, params: NumParams,
         gap_threshold: float = GAP_THRESHOLD, max_halvings: int = MAX_HALVINGS) -> SimState:
    """One Euler-Maruyama step of size dt (with substeps near collisions)."""
    if not dt > 0:
        raise SimError("dt must be positive")
    p = _kernel_py._Path(s.x.tolist(), s.signs.tolist(), params.theta, params.s1, params.s2,
                         gap_threshold, max_halvings, rng)
    if not p.advance(dt, 0):
        raise SimError(f"substep limit exceeded at t={s.t}")
    return SimState.from_natural(p.x, s.n, s.m, s.theta, s.t + dt)


# -- configuration and drivers -------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    n: int
    m: int
    dt: float
    t_end: float
    paths: int
    seed: int = 0
    params: NumParams = field(default_factory=lambda: NumParams(1.0, 2.0, 2.0))
    gap_threshold: float = GAP_THRESHOLD
    max_halvings: int = MAX_HALVINGS
    record_every: int = 0
    workers: int = 1

    def __post_init__(self):
        if self.n < 0 or self.m < 0 or self.n + self.m == 0:
            raise SimError("truncation needs n, m >= 0 and n + m >= 1")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise SimError("dt must be positive")
        if not (self.t_end >= 0 and math.isfinite(self.t_end)):
            raise SimError("t_end must be >= 0")
        if self.paths < 1:
            raise SimError("paths must be >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise SimError("seed must lie in [0, 2^64)")
        if self.record_every < 0 or self.workers < 1 or self.max_halvings < 0:
            raise SimError("record_every >= 0, workers >= 1, max_halvings >= 0 required")
        if not self.gap_threshold >= 0:
            raise SimError("gap_threshold must be >= 0")
        steps = self.t_end / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise SimError("t_end must be a whole number of steps dt")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = _params_dict(self.params)
        d.pop("workers")  # output does not depend on it
        return d


@dataclass
class SimResult:
    config: SimConfig
    start: SimState
    times: np.ndarray
    traj: np.ndarray  # (paths, len(times), d), natural coordinates, unsorted labels
    final: np.ndarray
    status: np.ndarray
    substeps: np.ndarray
    abort_step: np.ndarray
    backend: str

    @property
    def aborted(self) -> int:
        return int(np.count_nonzero(self.status))

    def sorted_traj(self) -> np.ndarray:
        """Reporting order: x_1 >= x_2 >= ... and x_-1 >= x_-2 >= ..."""
        m = self.config.m
        neg = np.sort(self.traj[..., :m], axis=-1)  # column -m holds the smallest
        pos = -np.sort(-self.traj[..., m:], axis=-1)
        return np.concatenate([neg, pos], axis=-1)


def _chunks(total: int, parts: int) -> list[tuple[int, int]]:
    parts = max(1, min(parts, total))
    base, extra = divmod(total, parts)
    out, lo = [], 0
    for k in range(parts):
        hi = lo + base + (k < extra)
        out.append((lo, hi))
        lo = hi
    return out


def simulate(cfg: SimConfig, start: SimState, backend=None) -> SimResult:
    """Run ``cfg.paths`` independent paths from ``start``.

    Path p draws from its own Philox stream keyed by (seed, p), so results do
    not depend on ``cfg.workers``.
    """
    if (start.n, start.m) != (cfg.n, cfg.m):
        raise SimError("start state truncation differs from the config")
    if abs(start.theta - cfg.params.theta) > 0:
        raise SimError("start state theta differs from the config")
    if backend is None:
        from . import kernel as backend
    n_steps = cfg.n_steps
    every = cfg.record_every or max(n_steps, 1)
    sg = start.signs
    x0 = start.x

    def run(lo_hi):
        lo, hi = lo_hi
        return backend.run_paths(x0, sg, cfg.params.theta, cfg.params.s1, cfg.params.s2,
                                 cfg.dt, n_steps, lo, hi - lo, cfg.seed, cfg.gap_threshold,
                                 cfg.max_halvings, every)

    chunks = _chunks(cfg.paths, cfg.workers)
    if len(chunks) == 1:
        parts = [run(chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as ex:
            parts = list(ex.map(run, chunks))
    final, traj, status, substeps, abort_step = (np.concatenate(a) for a in zip(*parts))
    times = start.t + cfg.dt * every * np.arange(traj.shape[1])
    return SimResult(cfg, start, times, traj, final, status, substeps, abort_step,
                     backend.BACKEND)


# -- checks --------------------------------------------------------------------------

def moments(x: np.ndarray, sg: np.ndarray, max_k: int) -> dict[int, np.ndarray]:
    """q_k = sum_i x_i x~_i^k along the last axis."""
    xt = x * sg
    out, pw = {}, x.copy()
    for k in range(1, max_k + 1):
        pw = pw * xt
        out[k] = pw.sum(axis=-1)
    return out


def _moment_eval(f: MomentPoly, q: Mapping[int, np.ndarray], params: NumParams):
    return f.evaluate(lambda g: q[g[1]], _params_dict(params))


def _check_f(f, max_k: int) -> int:
    if not isinstance(f, MomentPoly):
        raise SimError("generator_consistency expects MomentPoly test functions")
    ks = [g[1] for g in f.generators()]
    top = max(ks, default=0)
    if top > max_k:
        raise SimError(f"f uses q_{top}; the configured maximum is q_{max_k}")
    return top


def generator_consistency(f, s0: SimState, dt: float, paths: int, params: NumParams,
                          seed: int = 0, max_k: int = MAX_K, workers: int = 1, backend=None):
    """Compare the one-step Monte Carlo rate (E f(X_dt) - f(x0))/dt with A^nat f(x0).

    ``f`` may be one MomentPoly or a sequence; a sequence shares one sample and
    returns a list of reports.
    """
    many = not isinstance(f, MomentPoly)
    fs = list(f) if many else [f]
    top = max(_check_f(g, max_k) for g in fs)
    if s0.coincident():
        raise SimError("degenerate start: two coordinates coincide")
    cfg = SimConfig(s0.n, s0.m, dt, dt, paths, seed, params, workers=workers)
    res = simulate(cfg, s0, backend)
    ok = res.status == 0
    sg = s0.signs
    q0 = moments(s0.x[None, :], sg, max(top, 1))
    q1 = moments(res.final[ok], sg, max(top, 1))
    xmap = dict(zip(indices(s0.n, s0.m), s0.x.tolist()))
    reports = []
    for g in fs:
        f0 = float(np.asarray(_moment_eval(g, q0, params)).reshape(-1)[0])
        vals = np.broadcast_to(np.asarray(_moment_eval(g, q1, params), dtype=np.float64),
                               (int(ok.sum()),))
        rate = (vals - f0) / dt
        mean = float(rate.mean())
        se = float(rate.std(ddof=1) / math.sqrt(rate.size)) if rate.size > 1 else math.inf
        exact = float(apply_A_nat(g, s0.n, s0.m).evaluate(lambda v: xmap[v[1]],
                                                         _params_dict(params)))
        if se > 0:
            z = (mean - exact) / se
        else:
            z = 0.0 if abs(mean - exact) <= 1e-9 * (1 + abs(exact)) else math.inf
        reports.append({
            "f": to_text(g), "n": s0.n, "m": s0.m, "dt": dt, "paths": paths, "seed": seed,
            "mc_rate": mean, "se": se, "exact": exact, "z": z,
            "aborted": res.aborted, "backend": res.backend,
            "status": "pass" if abs(z) <= 3 else "fail",
        })
    return reports if many else reports[0]


def omega0_report(cfg: SimConfig, start: SimState, backend=None) -> dict:
    """Observational study of the total mass sum_i x_i along paths."""
    res = simulate(cfg, start, backend)
    mass = res.traj.sum(axis=-1)  # (paths, times)
    q05, q50, q95 = np.quantile(mass, [0.05, 0.5, 0.95], axis=0)
    tol = 5 * math.sqrt(cfg.dt)
    skip = len(res.times) // 10
    med = q50[skip:]
    nondecreasing = bool(np.all(np.diff(med) >= -tol)) if med.size > 1 else True
    stays = []
    for row in mass:
        hit = np.nonzero(np.abs(1 - row) <= 1e-3)[0]
        if hit.size:
            stays.append(bool(np.all(np.abs(1 - row[hit[0]:]) <= tol)))
    return {
        "observational": True,
        "config": cfg.to_dict(),
        "start": start.x.tolist(),
        "backend": res.backend,
        "aborted": res.aborted,
        "times": res.times.tolist(),
        "mass_q05": q05.tolist(),
        "mass_median": q50.tolist(),
        "mass_q95": q95.tolist(),
        "min_gamma": float(np.min(1 - mass)),
        "verdict": {
            "median_nondecreasing_after_transient": nondecreasing,
            "paths_reaching_omega0": len(stays),
            "paths_staying_near_omega0": int(sum(stays)),
            "stays_near_omega0": bool(stays) and all(stays),
            "gamma_nonnegative": bool(np.min(1 - mass) >= -MASS_TOL),
            "tolerance": tol,
        },
    }


# -- trajectory files ----------------------------------------------------------------

def _labels(n: int, m: int) -> list[str]:
    return [f"x_{i}" for i in indices(n, m)]


def write_csv(res: SimResult, fh: TextIO, header: Mapping | None = None) -> None:
    """``# `` header lines, then path_id,t,x_-m..x_n,sum_x rows (sorted labels)."""
    cfg = res.config
    meta = {"tool": "thomalab", "version": __version__, "seed": cfg.seed,
            "config": cfg.to_dict(), "backend": res.backend, "aborted": res.aborted}
    if header:
        meta.update(header)
    for k in sorted(meta):
        fh.write(f"# {k}: {json.dumps(meta[k], sort_keys=True)}\n")
    fh.write(",".join(["path_id", "t"] + _labels(cfg.n, cfg.m) + ["sum_x"]) + "\n")
    data = res.sorted_traj()
    for p in range(data.shape[0]):
        for r, t in enumerate(res.times):
            row = data[p, r]
            vals = [repr(float(v)) for v in row] + [repr(math.fsum(row))]
            fh.write(f"{p},{float(t)!r}," + ",".join(vals) + "\n")


def write_binary(res: SimResult, fh: BinaryIO) -> None:
    """Magic, then <u4 n, m, paths, times; <f8 times; <f8 data[paths, times, d]."""
    cfg = res.config
    data = np.ascontiguousarray(res.sorted_traj(), dtype="<f8")
    fh.write(BINARY_MAGIC)
    fh.write(struct.pack("<4I", cfg.n, cfg.m, data.shape[0], data.shape[1]))
    fh.write(np.ascontiguousarray(res.times, dtype="<f8").tobytes())
    fh.write(data.tobytes())


def read_binary(fh: BinaryIO | bytes) -> dict:
    buf = fh if isinstance(fh, (bytes, bytearray)) else fh.read()
    if buf[:6] != BINARY_MAGIC:
        raise SimError("not a THSIM1 file")
    try:
        n, m, paths, nt = struct.unpack_from("<4I", buf, 6)
        off = 6 + 16
        times = np.frombuffer(buf, "<f8", nt, off)
        off += 8 * nt
        data = np.frombuffer(buf, "<f8", paths * nt * (n + m), off).reshape(paths, nt, n + m)
    except (struct.error, ValueError) as exc:
        raise SimError(f"truncated THSIM1 file: {exc}") from None
    if off + data.nbytes != len(buf):
        raise SimError("trailing bytes after THSIM1 payload")
    return {"n": n, "m": m, "times": times.copy(), "data": data.copy()}


def csv_bytes(res: SimResult, header: Mapping | None = None) -> bytes:
    s = io.StringIO()
    write_csv(res, s, header)
    return s.getvalue().encode()


__all__ = [
    "SimConfig", "SimError", "SimResult", "SimState", "diffusion_matrix", "drift_nat",
    "generator_consistency", "indices", "moments", "omega0_report", "read_binary",
    "signs", "simulate", "step", "write_binary", "write_csv", "csv_bytes",
]
