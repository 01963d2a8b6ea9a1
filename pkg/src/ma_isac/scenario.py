"""Experiment configuration: geometry, physical constants, budgets, thresholds.

The on-disk format is TOML with tables ``[system]``, ``[array]``, ``[power]``
and ``[geometry]``.  Angles in the file are degrees, powers dBm, gains dB;
everything is converted to linear SI units at load time and stays linear
inside the package.  Keys with a ``_w`` / linear suffix are accepted as
already-linear alternatives (``save_scenario`` emits those so that a
load -> save -> load round trip is exact).
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass

import numpy as np

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .errors import ScenarioError

# kappa at or above this linear value is treated as a pure line-of-sight channel
PURE_LOS_KAPPA = 1e12

_PLACEMENTS = ("random", "explicit")


def db_to_linear(x_db: float) -> float:
    return 10.0 ** (x_db / 10.0)


def dbm_to_watt(x_dbm: float) -> float:
    return 10.0 ** (x_dbm / 10.0) * 1e-3


def watt_to_dbm(x_w: float) -> float:
    return 10.0 * math.log10(x_w) + 30.0


@dataclass(frozen=True)
class Scenario:
    """Immutable experiment configuration (all linear SI units)."""

    num_gns: int                 # K communication nodes; the target is node K+1
    num_antennas: int            # M
    num_slots: int               # T
    interval_s: float            # total window; slot duration = interval_s / num_slots
    wavelength_m: float
    aperture_m: float            # L, adjustable range of every antenna
    min_spacing_m: float         # d_min between any two antennas
    max_power_w: float
    noise_power_w: float         # per-GN receiver noise, linear watts
    ref_gain: float              # channel power gain at 1 m, linear
    rician_factor: float         # linear; >= PURE_LOS_KAPPA means pure LoS
    altitude_m: float
    area_m: float                # side of the square deployment area
    gn_xy: tuple                 # K+1 ground coordinates (x, y); last one is the target
    ulap_xyz: tuple              # transmitter position (x, y, altitude)
    array_axis: tuple            # unit vector of the linear array axis
    beampattern_floor_w: float   # minimum transmit gain toward the target
    rng_seed: int
    placement: str = "explicit"  # "random" layouts may be redrawn per replicate

    def __post_init__(self):
        _validate(self)

    @property
    def slot_s(self) -> float:
        return self.interval_s / self.num_slots

    @property
    def num_nodes(self) -> int:
        """K + 1: communication nodes plus the sensing target."""
        return self.num_gns + 1

    def gn_array(self) -> np.ndarray:
        """(K+1, 2) ground coordinates; row K is the target."""
        return np.asarray(self.gn_xy, dtype=float)

    def distances(self) -> np.ndarray:
        """(K+1,) Euclidean distances from the transmitter to every node."""
        gn = self.gn_array()
        ulap = np.asarray(self.ulap_xyz)
        d = np.column_stack([gn[:, 0] - ulap[0], gn[:, 1] - ulap[1],
                             np.full(len(gn), -ulap[2])])
        return np.linalg.norm(d, axis=1)

    def cosines(self) -> np.ndarray:
        """(K+1,) cosine of each node's steering angle w.r.t. the array axis."""
        gn = self.gn_array()
        ulap = np.asarray(self.ulap_xyz)
        axis = np.asarray(self.array_axis)
        d = np.column_stack([gn[:, 0] - ulap[0], gn[:, 1] - ulap[1],
                             np.full(len(gn), -ulap[2])])
        return (d @ axis) / np.linalg.norm(d, axis=1)

    def with_power(self, max_power_w: float) -> "Scenario":
        return dataclasses.replace(self, max_power_w=float(max_power_w))

    def with_antennas(self, num_antennas: int) -> "Scenario":
        return dataclasses.replace(self, num_antennas=int(num_antennas))

    def redraw_positions(self, seed) -> "Scenario":
        """New random node layout in the deployment area (for sweep replicates)."""
        rng = np.random.default_rng(seed)
        xy = rng.uniform(0.0, self.area_m, size=(self.num_gns + 1, 2))
        return dataclasses.replace(self, gn_xy=tuple(map(tuple, xy.tolist())))


def distance(s: Scenario, k: int) -> float:
    """Distance from the transmitter to node k (1-based; K+1 is the target)."""
    if not 1 <= k <= s.num_nodes:
        raise IndexError(f"node index {k} outside 1..{s.num_nodes}")
    return float(s.distances()[k - 1])


def steering_angle_cosine(s: Scenario, k: int) -> float:
    """cos(theta_k): projection of the transmitter-to-node direction onto the
    array axis, for node k (1-based; K+1 is the target).  Constant over time
    because every node is fixed."""
    if not 1 <= k <= s.num_nodes:
        raise IndexError(f"node index {k} outside 1..{s.num_nodes}")
    return float(s.cosines()[k - 1])


def _require(cond: bool, field: str, msg: str):
    if not cond:
        raise ScenarioError(f"{field}: {msg}")


def _validate(s: Scenario):
    _require(s.num_gns >= 1, "num_gns", "need at least one communication node")
    _require(s.num_antennas >= 1, "num_antennas", "need at least one antenna")
    _require(s.num_slots >= 1, "num_slots", "need at least one slot")
    _require(s.interval_s > 0, "interval_s", "must be positive")
    _require(s.wavelength_m > 0, "wavelength_m", "must be positive")
    _require(s.aperture_m > 0, "aperture_m", "must be positive")
    _require(s.min_spacing_m > 0, "min_spacing_m", "must be positive")
    _require((s.num_antennas - 1) * s.min_spacing_m <= s.aperture_m,
             "aperture_m", "infeasible aperture: (M-1)*min_spacing exceeds the aperture")
    _require(s.max_power_w > 0, "max_power_w", "must be positive")
    _require(s.noise_power_w > 0, "noise_power_w", "must be positive")
    _require(s.ref_gain > 0, "ref_gain", "must be positive")
    _require(s.rician_factor >= 0, "rician_factor", "must be non-negative")
    _require(s.altitude_m > 0, "altitude_m", "must be positive")
    _require(s.area_m > 0, "area_m", "must be positive")
    _require(s.beampattern_floor_w >= 0, "beampattern_threshold", "must be non-negative")
    _require(len(s.gn_xy) == s.num_gns + 1, "gn_positions",
             f"need exactly K+1 = {s.num_gns + 1} rows (last row is the target)")
    _require(all(len(p) == 2 for p in s.gn_xy), "gn_positions", "rows must be (x, y) pairs")
    _require(len(s.ulap_xyz) == 3, "ulap_position", "must be (x, y, z)")
    _require(abs(s.ulap_xyz[2] - s.altitude_m) <= 1e-9 * max(1.0, s.altitude_m),
             "ulap_position", "z coordinate must equal altitude_m")
    axis = np.asarray(s.array_axis, dtype=float)
    _require(axis.shape == (3,) and abs(np.linalg.norm(axis) - 1.0) <= 1e-9,
             "array_axis", "must be a 3-D unit vector")
    _require(s.placement in _PLACEMENTS, "placement", f"must be one of {_PLACEMENTS}")


def _axis_from_angles(azimuth_deg: float, elevation_deg: float) -> tuple:
    az = math.radians(azimuth_deg)
    el = math.radians(elevation_deg)
    v = (math.cos(el) * math.cos(az), math.cos(el) * math.sin(az), math.sin(el))
    n = math.sqrt(sum(c * c for c in v))
    return tuple(c / n for c in v)


def load_scenario(path, seed_override: int | None = None) -> Scenario:
    """Load and validate a scenario file; dB/dBm fields become linear here.

    ``seed_override`` replaces the file's rng_seed (and re-draws a random
    node layout with it when the file requested one).
    """
    try:
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    except OSError as e:
        raise ScenarioError(f"cannot read scenario file: {e}") from e
    except tomllib.TOMLDecodeError as e:
        raise ScenarioError(f"scenario file does not parse: {e}") from e

    def table(name):
        t = raw.get(name, {})
        if not isinstance(t, dict):
            raise ScenarioError(f"{name}: must be a table")
        return t

    sys_t, arr_t, pow_t, geo_t = table("system"), table("array"), table("power"), table("geometry")

    def need(t, tname, key):
        if key not in t:
            raise ScenarioError(f"{tname}.{key}: missing")
        return t[key]

    def number(t, tname, key, default=None):
        v = t.get(key, default)
        if v is None:
            raise ScenarioError(f"{tname}.{key}: missing")
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ScenarioError(f"{tname}.{key}: must be a number")
        return v

    num_gns = int(number(sys_t, "system", "num_gns"))
    num_antennas = int(number(sys_t, "system", "num_antennas"))
    num_slots = int(number(sys_t, "system", "num_slots"))
    interval_s = float(number(sys_t, "system", "interval_s"))
    rng_seed = int(number(sys_t, "system", "rng_seed", 0))
    if seed_override is not None:
        rng_seed = int(seed_override)

    wavelength = float(number(arr_t, "array", "wavelength_m"))
    aperture = float(number(arr_t, "array", "aperture_m"))
    min_spacing = float(number(arr_t, "array", "min_spacing_m"))
    if "axis" in arr_t:
        axis = tuple(float(c) for c in arr_t["axis"])
        n = math.sqrt(sum(c * c for c in axis))
        if n == 0:
            raise ScenarioError("array.axis: must be nonzero")
        axis = tuple(c / n for c in axis)
    else:
        axis = _axis_from_angles(float(number(arr_t, "array", "axis_azimuth_deg", 0.0)),
                                 float(number(arr_t, "array", "axis_elevation_deg", 0.0)))

    max_power = float(number(pow_t, "power", "max_power_w"))
    if "noise_power_w" in pow_t:
        noise = float(number(pow_t, "power", "noise_power_w"))
    else:
        noise = dbm_to_watt(float(number(pow_t, "power", "noise_power_dbm")))
    if "ref_gain_linear" in pow_t:
        ref_gain = float(number(pow_t, "power", "ref_gain_linear"))
    else:
        ref_gain = db_to_linear(float(number(pow_t, "power", "ref_gain_db")))
    if "rician_factor" in pow_t:
        kappa = float(number(pow_t, "power", "rician_factor"))
    else:
        kappa = db_to_linear(float(number(pow_t, "power", "rician_factor_db", 10.0)))
    if "beampattern_floor_w" in pow_t:
        floor = float(number(pow_t, "power", "beampattern_floor_w"))
    else:
        floor = dbm_to_watt(float(number(pow_t, "power", "beampattern_threshold_dbm", -20.0)))

    altitude = float(number(geo_t, "geometry", "altitude_m"))
    area = float(number(geo_t, "geometry", "area_m", 500.0))
    placement = geo_t.get("gn_placement", "explicit" if "gn_positions" in geo_t else "random")
    if placement not in _PLACEMENTS:
        raise ScenarioError(f"geometry.gn_placement: must be one of {_PLACEMENTS}")

    if "gn_positions" in geo_t:
        rows = geo_t["gn_positions"]
        try:
            gn_xy = tuple((float(p[0]), float(p[1])) for p in rows)
        except (TypeError, IndexError) as e:
            raise ScenarioError(f"geometry.gn_positions: rows must be (x, y) pairs ({e})") from e
    elif placement == "random":
        rng = np.random.default_rng(np.random.SeedSequence(entropy=rng_seed, spawn_key=(0,)))
        xy = rng.uniform(0.0, area, size=(num_gns + 1, 2))
        gn_xy = tuple(map(tuple, xy.tolist()))
    else:
        raise ScenarioError("geometry.gn_positions: missing (required for explicit placement)")

    if "ulap_xy" in geo_t:
        ux, uy = (float(c) for c in need(geo_t, "geometry", "ulap_xy"))
    else:
        ux = uy = area / 2.0
    ulap = (ux, uy, altitude)

    return Scenario(
        num_gns=num_gns, num_antennas=num_antennas, num_slots=num_slots,
        interval_s=interval_s, wavelength_m=wavelength, aperture_m=aperture,
        min_spacing_m=min_spacing, max_power_w=max_power, noise_power_w=noise,
        ref_gain=ref_gain, rician_factor=kappa, altitude_m=altitude, area_m=area,
        gn_xy=gn_xy, ulap_xyz=ulap, array_axis=axis,
        beampattern_floor_w=floor, rng_seed=rng_seed, placement=placement,
    )


def save_scenario(s: Scenario, path) -> None:
    """Write a scenario back out as TOML (linear-unit keys, explicit layout)."""
    lines = [
        "[system]",
        f"num_gns = {s.num_gns}",
        f"num_antennas = {s.num_antennas}",
        f"num_slots = {s.num_slots}",
        f"interval_s = {s.interval_s!r}",
        f"rng_seed = {s.rng_seed}",
        "",
        "[array]",
        f"wavelength_m = {s.wavelength_m!r}",
        f"aperture_m = {s.aperture_m!r}",
        f"min_spacing_m = {s.min_spacing_m!r}",
        f"axis = [{s.array_axis[0]!r}, {s.array_axis[1]!r}, {s.array_axis[2]!r}]",
        "",
        "[power]",
        f"max_power_w = {s.max_power_w!r}",
        f"noise_power_w = {s.noise_power_w!r}",
        f"ref_gain_linear = {s.ref_gain!r}",
        f"rician_factor = {s.rician_factor!r}",
        f"beampattern_floor_w = {s.beampattern_floor_w!r}",
        "",
        "[geometry]",
        f"altitude_m = {s.altitude_m!r}",
        f"area_m = {s.area_m!r}",
        f'gn_placement = "{s.placement}"',
        f"ulap_xy = [{s.ulap_xyz[0]!r}, {s.ulap_xyz[1]!r}]",
        "gn_positions = [",
    ]
    lines += [f"    [{x!r}, {y!r}]," for x, y in s.gn_xy]
    lines += ["]", ""]
    with open(path, "w", encoding="utf-8") as f:
        f.write("\n".join(lines))
