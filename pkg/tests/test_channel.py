import numpy as np
import pytest

from ma_isac import channel

from conftest import make_scenario


def test_large_scale_examples():
    assert channel.large_scale_gain(1e-6, 1.0) == pytest.approx(1e-6, rel=1e-15)
    assert channel.large_scale_gain(1e-6, 50.0) == pytest.approx(4e-10, rel=1e-12)
    # frozen from a hand calculation of 1e-6 / 70.711^2
    assert channel.large_scale_gain(1e-6, 70.711) == pytest.approx(
        1.9999817917657713e-10, rel=1e-12)
    with pytest.raises(ValueError):
        channel.large_scale_gain(1e-6, 0.0)


def test_pure_los_limit_exact():
    s = make_scenario(K=2, T=5, kappa=1e12)
    h = channel.sample_channel(s, np.random.default_rng(3))
    want = np.sqrt(s.ref_gain) / s.distances()
    for t in range(s.num_slots):
        np.testing.assert_array_equal(h[:, t].real, want)
        np.testing.assert_array_equal(h[:, t].imag, np.zeros_like(want))


def test_rayleigh_mean_power_law_of_large_numbers():
    s = make_scenario(K=2, T=100_000, kappa=0.0)
    h = channel.sample_channel(s, np.random.default_rng(11))
    mean = np.mean(np.abs(h) ** 2, axis=1)
    want = s.ref_gain / s.distances() ** 2
    np.testing.assert_allclose(mean, want, rtol=0.02)


def test_small_scale_unit_power_for_various_kappa():
    for kappa in (0.0, 1.0, 10.0):
        s = make_scenario(K=1, T=100_000, kappa=kappa)
        h = channel.sample_channel(s, np.random.default_rng(5))
        small = h / (np.sqrt(s.ref_gain) / s.distances()[:, None])
        np.testing.assert_allclose(np.mean(np.abs(small) ** 2, axis=1), 1.0, rtol=0.02)


def test_determinism_same_seed():
    s = make_scenario(K=3, T=16)
    h1 = channel.sample_channel(s, np.random.default_rng(99))
    h2 = channel.sample_channel(s, np.random.default_rng(99))
    np.testing.assert_array_equal(h1, h2)
    h3 = channel.sample_channel(s, np.random.default_rng(100))
    assert not np.array_equal(h1, h3)


def test_distance_doubling_quarters_power():
    gn_near = ((30.0, 40.0), (5.0, 5.0))
    s_near = make_scenario(K=1, T=50_000, gn_xy=gn_near, ulap_xy=(0.0, 0.0))
    d1 = s_near.distances()[0]
    # doubling every coordinate (altitude included) doubles the distance exactly
    far_xy = (gn_near[0][0] * 2.0, gn_near[0][1] * 2.0)
    s_far = make_scenario(K=1, T=50_000, altitude=100.0, gn_xy=(far_xy, (5.0, 5.0)),
                          ulap_xy=(0.0, 0.0))
    assert s_far.distances()[0] == pytest.approx(2 * d1, rel=1e-12)
    h_near = channel.sample_channel(s_near, np.random.default_rng(4))
    h_far = channel.sample_channel(s_far, np.random.default_rng(4))
    ratio = np.abs(h_near[0]) ** 2 / np.abs(h_far[0]) ** 2
    np.testing.assert_allclose(ratio, 4.0, rtol=1e-10)
