"""Constraint-repairing particle swarm search over antenna positions.

Positions are optimized for a frozen channel realization and beamforming
solution; every particle is repaired after each move so that the aperture,
spacing, and beampattern-floor constraints always hold.  Repair first sorts
and sweeps spacing violations, then re-randomizes the particle (up to a
retry cap) if the frozen beamformer's gain toward the target drops below the
floor at the new positions.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import array_model, rate_model
from .errors import RepairExhaustedError
from .rate_model import BeamformingSolution
from .scenario import Scenario


@dataclass
class PsoParams:
    swarm_size: int = 50
    max_iter: int = 100
    inertia: float = 0.9
    inertia_decay: float = 0.99     # multiplies the inertia once per iteration
    cognitive: float = 1.5
    social: float = 1.5
    step: float = 1.0               # scales the velocity when moving
    velocity_clamp_fraction: float = 0.2   # per-component |v| cap, fraction of aperture
    repair_retries: int = 100

    def __post_init__(self):
        if min(self.swarm_size, 1) < 1 or self.max_iter < 0:
            raise ValueError("swarm_size must be >= 1 and max_iter >= 0")
        for name in ("inertia", "cognitive", "social", "step",
                     "velocity_clamp_fraction"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.inertia_decay <= 1:
            raise ValueError("inertia_decay must be in (0, 1]")


@dataclass(frozen=True)
class FitnessContext:
    """Frozen inputs of the position search."""

    scenario: Scenario
    channels: np.ndarray            # (K+1, T)
    solution: BeamformingSolution


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    best_position: np.ndarray
    best_fitness: float


@dataclass
class PsoResult:
    positions: np.ndarray
    fitness: float
    trace: list = field(default_factory=list)   # (iter, best, mean) rows


def fitness(x: np.ndarray, ctx: FitnessContext) -> float:
    """Sum rate at positions x with the context's beamforming held fixed."""
    return rate_model.total_rate(ctx.channels, x, ctx.solution, ctx.scenario)


def meets_gain_floor(x: np.ndarray, ctx: FitnessContext) -> bool:
    """Beampattern floor check at candidate positions, every slot."""
    s = ctx.scenario
    if s.beampattern_floor_w <= 0:
        return True
    a_t = rate_model.steering_matrix(x, s)[s.num_gns]
    total = ctx.solution.W.sum(axis=1) + ctx.solution.S          # (T, M, M)
    gains = np.einsum("m,tmn,n->t", a_t.conj(), total, a_t).real
    return bool(np.min(gains) >= s.beampattern_floor_w)


def repair_position(x: np.ndarray, ctx: FitnessContext, params: PsoParams,
                    rng: np.random.Generator) -> np.ndarray:
    """Spacing sweep, then re-randomize until the gain floor holds."""
    s = ctx.scenario
    x = array_model.repair_spacing(x, s.min_spacing_m, s.aperture_m)
    if meets_gain_floor(x, ctx):
        return x
    for _ in range(params.repair_retries):
        x = rng.uniform(0.0, s.aperture_m, size=s.num_antennas)
        x = array_model.repair_spacing(x, s.min_spacing_m, s.aperture_m)
        if meets_gain_floor(x, ctx):
            return x
    raise RepairExhaustedError(
        f"no feasible positions found in {params.repair_retries} redraws; the "
        f"beampattern floor {s.beampattern_floor_w} W is (near-)infeasible for "
        f"the frozen beamformer")


def repair_particle(p: Particle, ctx: FitnessContext, params: PsoParams,
                    rng: np.random.Generator) -> Particle:
    p.position = repair_position(p.position, ctx, params, rng)
    return p


def update_velocity(p: Particle, global_best: np.ndarray, params: PsoParams,
                    inertia: float, r1: float, r2: float) -> np.ndarray:
    """Inertia plus cognitive/social pulls; r1 and r2 are uniform(0, 1) scalars
    multiplying the whole difference vectors (one pair per particle per
    iteration, pre-drawn by the caller)."""
    return (inertia * p.velocity
            + params.cognitive * r1 * (p.best_position - p.position)
            + params.social * r2 * (global_best - p.position))


def update_position(p: Particle, params: PsoParams, aperture_m: float) -> np.ndarray:
    """Move by the scaled velocity, clamped back into the aperture."""
    return np.clip(p.position + params.step * p.velocity, 0.0, aperture_m)


def run_pso(ctx: FitnessContext, params: PsoParams, rng: np.random.Generator,
            seed_positions: np.ndarray | None = None,
            fitness_fn=None) -> PsoResult:
    """Swarm search returning the best feasible positions found.

    ``seed_positions`` (when given) becomes particle 0, so the search can
    never return something worse than the incumbent.  ``fitness_fn``
    replaces the frozen-beamformer fitness when the caller scores candidates
    differently (the driver's first pass does); feasibility repair always
    uses the context's frozen solution.  The best-fitness trace is
    non-decreasing; the whole run is deterministic for a fixed rng.
    """
    s = ctx.scenario
    score = fitness if fitness_fn is None else fitness_fn
    vmax = params.velocity_clamp_fraction * s.aperture_m
    swarm = []
    for i in range(params.swarm_size):
        if i == 0 and seed_positions is not None:
            x = np.sort(np.asarray(seed_positions, dtype=float))
        else:
            x = rng.uniform(0.0, s.aperture_m, size=s.num_antennas)
        x = repair_position(x, ctx, params, rng)
        v = rng.uniform(-vmax, vmax, size=s.num_antennas)
        f = score(x, ctx)
        swarm.append(Particle(position=x, velocity=v, best_position=x.copy(),
                              best_fitness=f))

    best = max(range(len(swarm)), key=lambda i: swarm[i].best_fitness)
    g_pos = swarm[best].best_position.copy()
    g_fit = swarm[best].best_fitness
    trace = [(0, g_fit, float(np.mean([p.best_fitness for p in swarm])))]

    inertia = params.inertia
    for it in range(1, params.max_iter + 1):
        inertia *= params.inertia_decay
        draws = rng.uniform(size=(params.swarm_size, 2))
        fits = np.empty(params.swarm_size)
        for i, p in enumerate(swarm):
            v = update_velocity(p, g_pos, params, inertia, draws[i, 0], draws[i, 1])
            p.velocity = np.clip(v, -vmax, vmax)
            p.position = update_position(p, params, s.aperture_m)
            p.position = repair_position(p.position, ctx, params, rng)
            fits[i] = score(p.position, ctx)
            if fits[i] > p.best_fitness:
                p.best_fitness = fits[i]
                p.best_position = p.position.copy()
        for p in swarm:
            if p.best_fitness > g_fit:
                g_fit = p.best_fitness
                g_pos = p.best_position.copy()
        trace.append((it, g_fit, float(np.mean(fits))))
    return PsoResult(positions=g_pos, fitness=g_fit, trace=trace)


def write_trace_csv(result: PsoResult, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("iter,best_fitness,mean_fitness\n")
        for it, best, mean in result.trace:
            f.write(f"{it},{best!r},{mean!r}\n")
