"""Alternating optimization driver, benchmark schemes, and experiment sweeps.

One experiment run alternates a swarm search over antenna positions (with the
beamformer frozen) and the SCA beamforming solve (with positions frozen)
until the sum rate stalls.  The FPA benchmark keeps a uniform half-wavelength
grid; the RPA benchmark draws random feasible positions once.  Sweeps pair
the channel realization and node layout across schemes and grid points per
replicate, so per-seed comparisons are like for like.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from . import array_model, beamforming, channel, pso, rate_model
from .pso import FitnessContext, PsoParams
from .rate_model import BeamformingSolution
from .scenario import Scenario

SCHEMES = ("ma", "fpa", "rpa")
_SCHEME_ID = {name: i for i, name in enumerate(SCHEMES)}

# spawn-key stream tags for sub-seed derivation
_STREAM_LAYOUT = 1
_STREAM_CHANNEL = 2
_STREAM_OPTIMIZER = 3

SWEEP_COLUMNS = ("scheme", "grid_param", "seed", "total_rate_bps_hz",
                 "beampattern_w", "power_w", "iters", "wall_ms")


@dataclass
class AoParams:
    pso: PsoParams = field(default_factory=PsoParams)
    sca_max_iter: int = 20
    sca_tol: float = 1e-4        # bits/s/Hz
    sca_rel_gap: float = 1e-7
    ao_max_iter: int = 10
    ao_tol: float = 1e-4         # bits/s/Hz

    @classmethod
    def from_config(cls, raw: dict) -> "AoParams":
        """Read the optional [pso] and [solver] tables of a scenario file."""
        pso_t = dict(raw.get("pso", {}))
        solver_t = dict(raw.get("solver", {}))
        return cls(pso=PsoParams(**pso_t),
                   **{k: solver_t[k] for k in
                      ("sca_max_iter", "sca_tol", "sca_rel_gap", "ao_max_iter", "ao_tol")
                      if k in solver_t})


@dataclass
class AoResult:
    scheme: str
    positions: np.ndarray
    solution: BeamformingSolution
    objective_trace: list                 # sum rate after each outer pass
    per_gn_rates: np.ndarray              # (K,) rate summed over slots
    target_gain_w: np.ndarray             # (T,) beampattern toward the target
    power_w: np.ndarray                   # (T,) radiated power per slot
    iterations: int
    wall_ms: float

    @property
    def objective(self) -> float:
        return self.objective_trace[-1]


def _rng_for(base_seed: int, stream: int, *key) -> np.random.Generator:
    return np.random.default_rng(
        np.random.SeedSequence(entropy=int(base_seed), spawn_key=(stream, *key)))


def uniform_grid_positions(s: Scenario) -> np.ndarray:
    """Half-wavelength grid from 0 (the fixed-position benchmark layout)."""
    spacing = s.wavelength_m / 2.0
    x = spacing * np.arange(s.num_antennas)
    if not array_model.is_feasible(x, s.aperture_m, s.min_spacing_m):
        raise ValueError(
            "half-wavelength benchmark grid violates the scenario's aperture or "
            "minimum spacing")
    return x


def check_feasible(result: AoResult, s: Scenario, rtol: float = 1e-6) -> None:
    """Re-check the aperture, spacing, power, and gain-floor constraints."""
    if not array_model.is_feasible(result.positions, s.aperture_m, s.min_spacing_m):
        raise AssertionError("emitted positions violate aperture or spacing")
    rate_model.validate_solution(result.solution, s)
    if s.beampattern_floor_w > 0:
        if np.min(result.target_gain_w) < s.beampattern_floor_w * (1.0 - rtol):
            raise AssertionError("emitted solution violates the beampattern floor")


def _finalize(scheme: str, s: Scenario, x: np.ndarray, sol: BeamformingSolution,
              h: np.ndarray, trace: list, iterations: int, t0: float) -> AoResult:
    steering = rate_model.steering_matrix(x, s)
    a_t = steering[s.num_gns]
    total = sol.W.sum(axis=1) + sol.S
    gains = np.einsum("m,tmn,n->t", a_t.conj(), total, a_t).real
    powers = np.array([rate_model.transmit_power(sol, t) for t in range(s.num_slots)])
    per_gn = rate_model.rates_per_gn(h, x, sol, s).sum(axis=0)
    result = AoResult(scheme=scheme, positions=x, solution=sol,
                      objective_trace=trace, per_gn_rates=per_gn,
                      target_gain_w=gains, power_w=powers,
                      iterations=iterations,
                      wall_ms=(time.perf_counter() - t0) * 1e3)
    check_feasible(result, s)
    return result


def matched_beam_fitness(x: np.ndarray, ctx: pso.FitnessContext) -> float:
    """Score candidate positions with full-power matched beams rebuilt at the
    candidate (closed form, no sensing beam).

    Used for the first position search only: the default starting
    covariances are isotropic, which makes the frozen-beamformer objective
    the same for every layout (a^H cI a = cM), so that pass could never move
    the antennas.  Rebuilding matched beams per candidate rewards layouts
    whose steering vectors decorrelate, which is what the re-optimized
    beamformer can exploit afterwards.
    """
    s = ctx.scenario
    a = rate_model.steering_matrix(x, s)[: s.num_gns]
    k, m = a.shape
    c = np.abs(ctx.channels[: s.num_gns]) ** 2                       # (K, T)
    q = np.abs(a.conj() @ a.T) ** 2 / m * (s.max_power_w / k)        # (K, K)
    sig = np.diag(q).copy()
    interf = q.sum(axis=1) - sig
    rates = np.log2(1.0 + (c.T * sig) / (c.T * interf + s.noise_power_w))
    return float(rates.sum())


def _optimize(scheme: str, s: Scenario, params: AoParams,
              rng: np.random.Generator, h: np.ndarray | None,
              pso_trace_path=None) -> AoResult:
    t0 = time.perf_counter()
    if h is None:
        h = channel.sample_channel(s, rng)

    if scheme == "rpa":
        x = rng.uniform(0.0, s.aperture_m, size=s.num_antennas)
        x = array_model.repair_spacing(x, s.min_spacing_m, s.aperture_m)
    else:
        x = uniform_grid_positions(s)

    sol = beamforming.initial_solution(x, s)
    obj = rate_model.total_rate(h, x, sol, s)
    trace = [obj]
    iterations = 0
    for outer in range(params.ao_max_iter):
        iterations += 1
        if scheme == "ma":
            ctx = FitnessContext(scenario=s, channels=h, solution=sol)
            res = pso.run_pso(ctx, params.pso, rng, seed_positions=x,
                              fitness_fn=matched_beam_fitness if outer == 0 else None)
            x = res.positions
            if pso_trace_path is not None:
                pso.write_trace_csv(res, pso_trace_path)
        sol = beamforming.run_beamforming(x, h, s, init=sol,
                                          max_iter=params.sca_max_iter,
                                          tol=params.sca_tol,
                                          rel_gap=params.sca_rel_gap)
        new_obj = rate_model.total_rate(h, x, sol, s)
        trace.append(new_obj)
        gain = new_obj - obj
        obj = new_obj
        if gain < params.ao_tol:
            break
    return _finalize(scheme, s, x, sol, h, trace, iterations, t0)


def run_ao(s: Scenario, params: AoParams, rng: np.random.Generator,
           channels: np.ndarray | None = None, pso_trace_path=None) -> AoResult:
    """Full movable-antenna run: alternate position search and beamforming."""
    return _optimize("ma", s, params, rng, channels, pso_trace_path)


def run_fpa(s: Scenario, params: AoParams, rng: np.random.Generator,
            channels: np.ndarray | None = None) -> AoResult:
    """Fixed-position benchmark: uniform half-wavelength grid, beamforming only."""
    return _optimize("fpa", s, params, rng, channels)


def run_rpa(s: Scenario, params: AoParams, rng: np.random.Generator,
            channels: np.ndarray | None = None) -> AoResult:
    """Random-position benchmark: one feasible random layout, beamforming only."""
    return _optimize("rpa", s, params, rng, channels)


_RUNNERS = {"ma": run_ao, "fpa": run_fpa, "rpa": run_rpa}


def run_scheme(scheme: str, s: Scenario, params: AoParams,
               rng: np.random.Generator, channels=None) -> AoResult:
    return _RUNNERS[scheme](s, params, rng, channels=channels)


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------

def _replicate_inputs(s: Scenario, base_seed: int, rep: int):
    """Node layout and channel realization shared by every scheme/grid cell
    of one replicate (paired comparisons)."""
    scen = s
    if s.placement == "random":
        scen = s.redraw_positions(
            np.random.SeedSequence(entropy=int(base_seed), spawn_key=(_STREAM_LAYOUT, rep)))
    h = channel.sample_channel(scen, _rng_for(base_seed, _STREAM_CHANNEL, rep))
    return scen, h

def _sweep(s: Scenario, schemes, grid, grid_of, seeds: int, params: AoParams,
           base_seed: int) -> list:
    rows = []
    for rep in range(seeds):
        scen_rep, h = _replicate_inputs(s, base_seed, rep)
        for gi, g in enumerate(grid):
            scen = grid_of(scen_rep, g)
            for scheme in schemes:
                rng = _rng_for(base_seed, _STREAM_OPTIMIZER, _SCHEME_ID[scheme], gi, rep)
                r = run_scheme(scheme, scen, params, rng, channels=h)
                rows.append({
                    "scheme": scheme, "grid_param": g, "seed": rep,
                    "total_rate_bps_hz": r.objective,
                    "beampattern_w": float(np.min(r.target_gain_w)),
                    "power_w": float(np.max(r.power_w)),
                    "iters": r.iterations,
                    # wall clock stays out of the CSV so identical seeds give
                    # identical bytes; timings are reported on stderr instead
                    "wall_ms": 0,
                    "_wall_ms_measured": r.wall_ms,
                })
    rows.sort(key=lambda r: (r["scheme"], r["grid_param"], r["seed"]))
    return rows


def sweep_power(s: Scenario, schemes, powers, seeds: int, params: AoParams,
                base_seed: int | None = None) -> list:
    """Total rate per (scheme, P_max, replicate) over an ascending power grid."""
    powers = [float(p) for p in powers]
    if any(p <= 0 for p in powers) or sorted(powers) != powers:
        raise ValueError("power grid must be positive and ascending")
    base = s.rng_seed if base_seed is None else base_seed
    return _sweep(s, schemes, powers, lambda sc, p: sc.with_power(p), seeds, params, base)


def sweep_antennas(s: Scenario, schemes, antenna_counts, seeds: int,
                   params: AoParams, base_seed: int | None = None) -> list:
    """Total rate per (scheme, M, replicate) over an antenna-count grid."""
    counts = [int(m) for m in antenna_counts]
    for m in counts:
        if (m - 1) * s.min_spacing_m > s.aperture_m:
            raise ValueError(f"antenna count {m} does not fit the aperture")
    base = s.rng_seed if base_seed is None else base_seed
    return _sweep(s, schemes, counts, lambda sc, m: sc.with_antennas(m), seeds, params, base)


def beampattern_scan(result: AoResult, s: Scenario, angles: np.ndarray) -> list:
    """Gain toward each angle (slot-averaged): rows of (theta_rad, gain_w)."""
    total = (result.solution.W.sum(axis=1) + result.solution.S).mean(axis=0)
    rows = []
    for theta in angles:
        a = array_model.steering_vector(result.positions, np.cos(theta), s.wavelength_m)
        rows.append({"theta_rad": float(theta),
                     "gain_w": float((a.conj() @ total @ a).real)})
    return rows


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------

def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def write_csv(rows: list, columns, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(",".join(columns) + "\n")
        for row in rows:
            f.write(",".join(_fmt(row[c]) for c in columns) + "\n")


def write_sweep_csv(rows: list, path) -> None:
    write_csv(rows, SWEEP_COLUMNS, path)


def write_scan_csv(rows: list, path) -> None:
    write_csv(rows, ("theta_rad", "gain_w"), path)


def write_channel_csv(h: np.ndarray, path) -> None:
    """|h_k(t)|^2 table for debugging: node index, slot, linear power gain."""
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write("node,slot,gain_sq\n")
        power = np.abs(h) ** 2
        for k in range(h.shape[0]):
            for t in range(h.shape[1]):
                f.write(f"{k + 1},{t},{power[k, t]!r}\n")
