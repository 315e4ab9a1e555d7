"""Pure-Python path kernel.

Mirrors ``_kernel.pyx`` operation for operation, so both backends produce
bit-identical trajectories from the same Philox streams.
"""

from __future__ import annotations

import math

import numpy as np

BACKEND = "python"

OK = 0
ABORTED = 1


def path_generator(seed: int, path: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=(seed << 64) | path))


class _Path:
    __slots__ = ("x", "xt", "sg", "d", "theta", "s1", "s2", "gap", "max_halvings",
                 "gen", "b", "substeps")

    def __init__(self, x, sg, theta, s1, s2, gap, max_halvings, gen):
        self.d = len(x)
        self.x = list(x)
        self.sg = list(sg)
        self.xt = [self.sg[i] * self.x[i] for i in range(self.d)]
        self.theta, self.s1, self.s2 = theta, s1, s2
        self.gap, self.max_halvings = gap, max_halvings
        self.gen = gen
        self.b = [0.0] * self.d
        self.substeps = 0

    def drift(self):
        """Fill self.b; return (gmin, singular) over the watched pairs."""
        d, x, xt, b = self.d, self.x, self.xt, self.b
        theta = self.theta
        two_theta = 2.0 * theta
        c_lin = self.s2 / theta
        singular = False
        gmin = math.inf
        for i in range(d):
            acc = 0.0
            for j in range(d):
                if j == i:
                    continue
                diff = xt[i] - xt[j]
                if diff == 0.0:
                    # exact tie: the pair's terms cancel (principal value)
                    if x[j] != 0.0:
                        singular = True
                    continue
                acc += x[j] / diff
                if j > i and self.watched(i, j):
                    g = math.fabs(diff)
                    if g < gmin:
                        gmin = g
            b[i] = self.s1 - theta / self.sg[i] - c_lin * xt[i] + two_theta * acc
        return gmin, singular

    def watched(self, i, j):
        """Only same-sign nonzero pairs can collide."""
        x = self.x
        return (self.sg[i] == self.sg[j] and x[i] > 0.0 and x[j] > 0.0
                and (x[i] >= self.gap or x[j] >= self.gap))

    def risk(self, h):
        """2 if the drift alone closes half a watched gap, 1 if the gap's noise
        std exceeds a quarter of it, else 0."""
        d, xt, b, sg = self.d, self.xt, self.b, self.sg
        out = 0
        for i in range(d):
            for j in range(i + 1, d):
                if not self.watched(i, j):
                    continue
                diff = xt[i] - xt[j]
                if diff > 0.0:
                    close = b[j] - b[i]
                elif diff < 0.0:
                    close = b[i] - b[j]
                else:
                    continue
                if h * close > 0.5 * math.fabs(diff):
                    return 2
                var = sg[i] * xt[i] + sg[j] * xt[j] - diff * diff
                if 32.0 * h * var > diff * diff:
                    out = 1
        return out

    def euler(self, h):
        d, x, sg, b = self.d, self.x, self.sg, self.b
        xi = self.gen.standard_normal(d).tolist()
        tot = 0.0
        sw = 0.0
        w = [0.0] * d
        for i in range(d):
            tot += x[i]
            w[i] = math.sqrt(x[i])
            sw += w[i] * xi[i]
        rest = 1.0 - tot
        if rest < 0.0:
            rest = 0.0
        c = 1.0 / (1.0 + math.sqrt(rest))
        sq = math.sqrt(2.0 * h)
        tot = 0.0
        for i in range(d):
            bx = b[i] / sg[i]
            if x[i] == 0.0 and bx > 0.0:
                # exact law of dX = bx dt + sqrt(2X) dW from 0; breaks ties at 0
                v = h * self.gen.standard_gamma(bx)
            else:
                v = x[i] + bx * h + sq * w[i] * (xi[i] - c * w[i] * sw)
            if not v > 0.0:
                v = 0.0
            x[i] = v
            tot += v
        if tot > 1.0:
            for i in range(d):
                x[i] = x[i] / tot
        for i in range(d):
            self.xt[i] = sg[i] * x[i]
        self.substeps += 1

    def advance(self, h, depth):
        """One step of size h with recursive halving; False when aborted."""
        gmin, singular = self.drift()
        risk = self.risk(h)
        if singular or risk or gmin < self.gap:
            if depth < self.max_halvings:
                return self.advance(0.5 * h, depth + 1) and self.advance(0.5 * h, depth + 1)
            if risk == 2:
                return False
        self.euler(h)
        return True


def run_paths(x0, signs, theta, s1, s2, dt, n_steps, path_start, n_paths, seed,
              gap_threshold, max_halvings, record_every):
    """Simulate ``n_paths`` paths of ``n_steps`` base steps each.

    Returns (final, traj, status, substeps, abort_step). ``traj`` is None when
    ``record_every`` is 0, else shaped (paths, n_steps // record_every + 1, d).
    """
    x0 = np.ascontiguousarray(x0, dtype=np.float64)
    signs = np.ascontiguousarray(signs, dtype=np.float64)
    d = x0.shape[0]
    n_rec = n_steps // record_every + 1 if record_every > 0 else 0
    final = np.empty((n_paths, d))
    traj = np.empty((n_paths, n_rec, d)) if n_rec else None
    status = np.zeros(n_paths, dtype=np.int8)
    substeps = np.zeros(n_paths, dtype=np.int64)
    abort_step = np.full(n_paths, -1, dtype=np.int64)
    x0l, sgl = x0.tolist(), signs.tolist()
    for p in range(n_paths):
        path = _Path(x0l, sgl, theta, s1, s2, gap_threshold, max_halvings,
                     path_generator(seed, path_start + p))
        r = 0
        if n_rec:
            traj[p, 0] = path.x
            r = 1
        for k in range(n_steps):
            if status[p] == OK and not path.advance(dt, 0):
                status[p] = ABORTED
                abort_step[p] = k
            if n_rec and (k + 1) % record_every == 0:
                traj[p, r] = path.x
                r += 1
        final[p] = path.x
        substeps[p] = path.substeps
    return final, traj, status, substeps, abort_step
