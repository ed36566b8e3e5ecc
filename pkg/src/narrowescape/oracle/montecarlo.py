"""
Reflected Euler-Maruyama simulation of the escape time.

Each step is ``X <- X + F h + sqrt(2h) xi``.  A step that leaves the disk is cut
at its exact crossing with the circle; if the crossing angle lies on an arc the
walk is absorbed, otherwise the remainder of the step is mirrored across the
tangent there.

Each trial draws its normals from a Philox stream keyed by ``(seed, trial)``, so
a trial's path does not depend on how trials are scheduled.  Trials run in
chunks on a thread pool (the step kernel releases the GIL) and are reduced in
trial order.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from ..errors import NonAbsorbing, StepTooLarge
from ..geometry import TargetConfiguration, validate

MAX_STEPS = 10 ** 9
MIN_TRIALS = 1000
MAX_STEP = 1e-3
BIAS_STEP = 1e-3  # companion step for the sqrt(h) bias fit; large enough to beat the noise


@dataclass(frozen=True)
class McEstimate:
    mean: float
    stderr: float
    trials: int
    step: float
    seed: int

    def to_dict(self) -> dict:
        return {"mean": self.mean, "stderr": self.stderr, "trials": self.trials,
                "h": self.step, "seed": self.seed}


@numba.njit(nogil=True, cache=True)
def _advance(state, normals, h, centers, halves, fx, fy):
    """Consume ``normals`` (shape (K, 2)) from ``state = [x, y, steps]``.

    Returns True once the walk is absorbed; ``state`` is updated in place.
    """
    sq = math.sqrt(2.0 * h)
    two_pi = 2.0 * math.pi
    x, y, steps = state[0], state[1], state[2]
    done = False
    for k in range(normals.shape[0]):
        steps += 1.0
        dx = fx * h + sq * normals[k, 0]
        dy = fy * h + sq * normals[k, 1]
        nx, ny = x + dx, y + dy
        if nx * nx + ny * ny <= 1.0:
            x, y = nx, ny
            continue
        # crossing parameter of |x + t d| = 1 on (0, 1]
        a = dx * dx + dy * dy
        b = 2.0 * (x * dx + y * dy)
        c = x * x + y * y - 1.0
        t = (-b + math.sqrt(max(b * b - 4.0 * a * c, 0.0))) / (2.0 * a)
        px, py = x + t * dx, y + t * dy
        norm = math.sqrt(px * px + py * py)
        px /= norm
        py /= norm
        theta = math.atan2(py, px)
        for j in range(centers.shape[0]):
            w = (theta - centers[j] + math.pi) % two_pi - math.pi
            if abs(w) < halves[j]:
                done = True
                break
        if done:
            break
        rx, ry = nx - px, ny - py
        dot = rx * px + ry * py
        x = px + rx - 2.0 * dot * px
        y = py + ry - 2.0 * dot * py
        r2 = x * x + y * y
        if r2 > 1.0:
            # curvature overshoot of a tangential remainder: radial mirror
            r = math.sqrt(r2)
            s = (2.0 - r) / r
            x *= s
            y *= s
    state[0], state[1], state[2] = x, y, steps
    return done


def trial_generator(seed: int, trial: int) -> np.random.Generator:
    """Counter-based stream keyed by ``(seed, trial)``."""
    return np.random.Generator(np.random.Philox(key=[int(seed), int(trial)]))


def _run_trial(seed, trial, start, h, centers, halves, fx, fy, max_steps, block):
    gen = trial_generator(seed, trial)
    state = np.array([start[0], start[1], 0.0])
    buf = np.empty((block, 2))
    while True:
        gen.standard_normal(out=buf)
        if _advance(state, buf, h, centers, halves, fx, fy):
            return state[2] * h
        if state[2] >= max_steps:
            raise NonAbsorbing(f"trial {trial} exceeded {max_steps} steps")


def _force(potential):
    if potential is None or potential.is_constant:
        return 0.0, 0.0
    if potential.kind != "linear":
        raise ValueError("the simulator supports constant-gradient (affine) potentials only")
    _, a1, a2 = potential.affine_coeffs()
    return float(a1), float(a2)


def escape_times(start, config: TargetConfiguration, h: float, trials: int, seed: int,
                 potential=None, workers=None, chunk: int = 256, max_steps: int = MAX_STEPS) -> np.ndarray:
    """Per-trial absorption times, in trial order."""
    validate(config)
    start = np.asarray(start, dtype=float)
    if not np.hypot(*start) < 1.0:
        raise ValueError("start must be strictly inside the disk")
    eps = float(np.min(config.half_lengths))
    if h > eps * eps / 4.0:
        raise StepTooLarge(f"h = {h:g} exceeds eps^2/4 = {eps * eps / 4.0:g}")
    if h > MAX_STEP or h <= 0.0:
        raise StepTooLarge(f"h = {h:g} must lie in (0, {MAX_STEP:g}]")
    if trials < MIN_TRIALS:
        raise ValueError(f"at least {MIN_TRIALS} trials are required")
    fx, fy = _force(potential)
    centers = config.centers.astype(float)
    halves = config.half_lengths.astype(float)
    out = np.empty(trials)
    # block of normals drawn per kernel call, roughly a tenth of a walk
    block = int(min(1 << 16, max(1024, 0.1 / h)))

    def run(lo_hi):
        for k in range(*lo_hi):
            out[k] = _run_trial(seed, k, start, h, centers, halves, fx, fy, max_steps, block)

    bounds = [(i, min(i + chunk, trials)) for i in range(0, trials, chunk)]
    workers = workers or os.cpu_count() or 1
    if workers == 1:
        for b in bounds:
            run(b)
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, bounds))
    return out


def summarize(times, h: float, seed: int) -> McEstimate:
    """Mean and standard error of per-trial times; the sum is exactly rounded."""
    n = len(times)
    mean = float(math.fsum(times) / n)
    std = float(np.std(times, ddof=1))
    return McEstimate(mean, std / math.sqrt(n), n, h, seed)


def mc_escape(start, config: TargetConfiguration, potential=None, h: float = 1e-5,
              trials: int = 10000, seed: int = 0, workers=None) -> McEstimate:
    return summarize(escape_times(start, config, h, trials, seed, potential, workers), h, seed)


def bias_step(h: float, config: TargetConfiguration) -> float:
    """Companion step for :func:`fit_sqrt_bias`: the largest admissible step above ``h``."""
    eps = float(np.min(config.half_lengths))
    return max(h, min(BIAS_STEP, eps * eps / 4.0))


def fit_sqrt_bias(est1: McEstimate, est2: McEstimate) -> float:
    """``C`` in the bias model ``C sqrt(h)`` from two step sizes."""
    dh = abs(math.sqrt(est2.step) - math.sqrt(est1.step))
    if dh == 0.0:
        raise ValueError("bias fit needs two distinct step sizes")
    return abs(est2.mean - est1.mean) / dh
