import math

import numpy as np
import pytest

from risisac.geometry import (SPEED_OF_LIGHT, FieldRegime, InvalidConfig,
                              classify_link, distance, element_positions,
                              place_devices, rayleigh_distance, ris_grid_shape)

WAVELENGTH = SPEED_OF_LIGHT / 28e9


class _Layoutish:
    n_ap = 8
    m_ris = 32
    q_ap = (0.0, 0.0, 5.0)
    q_ris = (25.0, 0.0, 10.0)
    ap_spacing = 0.5 / 7
    ris_spacing = WAVELENGTH / 2
    wavelength = WAVELENGTH


def test_rayleigh_distance_half_meter_aperture():
    # frozen: 2 * 0.5^2 / (c / 28 GHz)
    assert rayleigh_distance(0.5, WAVELENGTH) == pytest.approx(46.698973327741285)


def test_classify_link_boundary_is_far_field():
    rd = 46.7
    assert classify_link(46.69, rd) is FieldRegime.NEAR_FIELD
    assert classify_link(rd, rd) is FieldRegime.FAR_FIELD
    assert classify_link(100.0, rd) is FieldRegime.FAR_FIELD


def test_ris_grid_shape_square_and_rectangular():
    assert ris_grid_shape(16) == (4, 4)
    assert ris_grid_shape(32) == (4, 8)
    assert ris_grid_shape(8) == (2, 4)


def test_ris_grid_shape_rejects_skewed_counts():
    with pytest.raises(InvalidConfig):
        ris_grid_shape(33)  # 3 x 11 is too elongated
    with pytest.raises(InvalidConfig):
        ris_grid_shape(0)


def test_element_positions_preserve_apertures():
    layout = element_positions(_Layoutish())
    assert layout.ap_elements.shape == (8, 3)
    assert layout.ris_elements.shape == (32, 3)
    z = layout.ap_elements[:, 2]
    assert z.max() - z.min() == pytest.approx(0.5)
    # centered on the node positions
    assert np.allclose(layout.ap_elements.mean(axis=0), (0.0, 0.0, 5.0))
    assert np.allclose(layout.ris_elements.mean(axis=0), (25.0, 0.0, 10.0))
    assert np.ptp(layout.ris_elements[:, 2]) == 0.0


def test_aperture_properties():
    layout = element_positions(_Layoutish())
    assert layout.ap_aperture == pytest.approx(0.5)
    expected = layout.ris_spacing * math.hypot(3, 7)
    assert layout.ris_aperture == pytest.approx(expected)


def test_distance():
    assert distance((0, 0, 0), (3, 4, 0)) == pytest.approx(5.0)


def test_place_devices_radius_and_separation():
    rng = np.random.default_rng(3)
    pts = place_devices(5, 80.0, (0.0, 2 * math.pi), rng,
                        exclude=[(80.0, 0.0, 0.0)], min_separation=1.0)
    assert pts.shape == (5, 3)
    assert np.allclose(np.linalg.norm(pts[:, :2], axis=1), 80.0)
    assert np.all(pts[:, 2] == 0.0)
    for i in range(5):
        assert np.linalg.norm(pts[i] - (80.0, 0.0, 0.0)) >= 1.0
        for j in range(i + 1, 5):
            assert np.linalg.norm(pts[i] - pts[j]) >= 1.0


def test_place_devices_deterministic_per_seed():
    a = place_devices(3, 80.0, (0.0, 2 * math.pi), np.random.default_rng(11))
    b = place_devices(3, 80.0, (0.0, 2 * math.pi), np.random.default_rng(11))
    assert np.array_equal(a, b)


def test_place_devices_impossible_separation():
    rng = np.random.default_rng(0)
    with pytest.raises(InvalidConfig):
        place_devices(3, 0.01, (0.0, 1e-6), rng, min_separation=10.0)
