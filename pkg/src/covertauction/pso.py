"""Particle swarm search over a box, used to tighten bid intervals.

The detection-probability landscape over warden positions is cheap to
evaluate in batch but not differentiable in any useful sense (it sits on
top of a Monte Carlo threshold scan), so we refine the coarse grid
minima with a plain global-best PSO.  The objective must accept a
(particles, dim) array and return one value per row.
"""

from __future__ import annotations

import numpy as np


def pso_minimize(
    objective,
    lower,
    upper,
    *,
    n_particles: int = 20,
    iterations: int = 50,
    inertia: float = 0.7,
    cognitive: float = 1.5,
    social: float = 1.5,
    rng: np.random.Generator,
    init=None,
):
    """Return (best_position, best_value) for the boxed minimisation.

    ``init`` may hold up to ``n_particles`` starting positions (rows);
    they are clipped into the box and the remainder of the swarm is
    seeded uniformly.  Everything is driven by ``rng``, so results are
    reproducible.
    """
    lo = np.asarray(lower, dtype=float).ravel()
    hi = np.asarray(upper, dtype=float).ravel()
    if lo.shape != hi.shape or lo.size == 0:
        raise ValueError("lower and upper must be matching non-empty vectors")
    if np.any(hi < lo):
        raise ValueError("upper must dominate lower")
    if n_particles < 1 or iterations < 0:
        raise ValueError("need at least one particle and a nonnegative iteration count")
    dim = lo.size
    span = hi - lo

    pos = lo + rng.uniform(size=(n_particles, dim)) * span
    if init is not None:
        seed_pts = np.atleast_2d(np.asarray(init, dtype=float))
        if seed_pts.shape[1] != dim:
            raise ValueError("init points have the wrong dimension")
        k = min(seed_pts.shape[0], n_particles)
        pos[:k] = np.clip(seed_pts[:k], lo, hi)
    vel = rng.uniform(-0.5, 0.5, size=(n_particles, dim)) * span

    vals = np.asarray(objective(pos), dtype=float)
    best_pos = pos.copy()
    best_vals = vals.copy()
    g = int(np.argmin(best_vals))
    gbest_pos = best_pos[g].copy()
    gbest_val = float(best_vals[g])

    for _ in range(iterations):
        r1 = rng.uniform(size=(n_particles, dim))
        r2 = rng.uniform(size=(n_particles, dim))
        vel = (
            inertia * vel
            + cognitive * r1 * (best_pos - pos)
            + social * r2 * (gbest_pos[None, :] - pos)
        )
        np.clip(vel, -span, span, out=vel)
        pos = np.clip(pos + vel, lo, hi)
        vals = np.asarray(objective(pos), dtype=float)
        improved = vals < best_vals
        best_pos[improved] = pos[improved]
        best_vals[improved] = vals[improved]
        g = int(np.argmin(best_vals))
        if best_vals[g] < gbest_val:
            gbest_val = float(best_vals[g])
            gbest_pos = best_pos[g].copy()
    return gbest_pos, gbest_val
