import numpy as np
import pytest

from ma_isac.scenario import Scenario


def make_scenario(K=3, M=4, T=2, P=1.0, floor=0.0, seed=7, noise_w=1e-14,
                  ref_gain=1e-6, kappa=10.0, wavelength=0.1, aperture=1.0,
                  min_spacing=0.05, area=500.0, altitude=50.0, gn_xy=None,
                  ulap_xy=(250.0, 250.0), axis=(1.0, 0.0, 0.0)):
    """Scenario factory with paper-style defaults at configurable scale."""
    if gn_xy is None:
        rng = np.random.default_rng(seed)
        gn_xy = tuple(map(tuple, rng.uniform(0.0, area, (K + 1, 2)).tolist()))
    return Scenario(
        num_gns=K, num_antennas=M, num_slots=T, interval_s=float(T),
        wavelength_m=wavelength, aperture_m=aperture, min_spacing_m=min_spacing,
        max_power_w=P, noise_power_w=noise_w, ref_gain=ref_gain,
        rician_factor=kappa, altitude_m=altitude, area_m=area, gn_xy=gn_xy,
        ulap_xyz=(ulap_xy[0], ulap_xy[1], altitude), array_axis=axis,
        beampattern_floor_w=floor, rng_seed=seed, placement="random")


def random_psd(rng, m, trace=1.0):
    """Random PSD matrix scaled to the given trace."""
    g = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    a = g @ g.conj().T
    return a * (trace / np.trace(a).real)


def random_steering(rng, k, m):
    """Unit-modulus steering-style rows (K, M)."""
    return np.exp(1j * rng.uniform(0.0, 2.0 * np.pi, (k, m)))


@pytest.fixture
def rng():
    return np.random.default_rng(20240813)
