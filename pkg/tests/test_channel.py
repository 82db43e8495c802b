import numpy as np
import pytest

from risisac.channel import (DegenerateGeometry, DimensionMismatch, RisPhase,
                             build_ap_ris_channel, build_comm_channel_nf,
                             build_ris_device_channel, build_sensing_channel,
                             cascade, ff_steering, nf_response, path_gain,
                             transmit_beamformers)
from risisac.geometry import SPEED_OF_LIGHT, FieldRegime, element_positions

WAVELENGTH = SPEED_OF_LIGHT / 28e9


class _Layoutish:
    n_ap = 8
    m_ris = 32
    q_ap = (0.0, 0.0, 5.0)
    q_ris = (25.0, 0.0, 10.0)
    ap_spacing = 0.5 / 7
    ris_spacing = WAVELENGTH / 2
    wavelength = WAVELENGTH


@pytest.fixture
def layout():
    return element_positions(_Layoutish())


def test_ris_phase_enforces_unit_modulus():
    RisPhase(np.exp(1j * np.array([0.1, 2.0])))
    with pytest.raises(ValueError):
        RisPhase(np.array([0.5 + 0j, 1.0]))


def test_ris_phase_random_deterministic():
    a = RisPhase.random(16, np.random.default_rng(5))
    b = RisPhase.random(16, np.random.default_rng(5))
    assert np.array_equal(a.v, b.v)
    assert np.allclose(np.abs(a.v), 1.0)


def test_path_gain_follows_inverse_distance():
    assert path_gain(WAVELENGTH, 20.0) == pytest.approx(
        np.sqrt(WAVELENGTH / (4 * np.pi * 400.0)))
    with pytest.raises(DegenerateGeometry):
        path_gain(WAVELENGTH, 0.0)


def test_nf_response_unit_modulus(layout):
    a = nf_response(layout.ap_elements, (20.0, 10.0, 0.0), WAVELENGTH)
    assert a.shape == (8,)
    assert np.allclose(np.abs(a), 1.0)


def test_ff_steering_first_entry_is_one():
    b = ff_steering(8, 0.5 / 7, 0.3, WAVELENGTH)
    assert b[0] == pytest.approx(1.0)
    assert np.allclose(np.abs(b), 1.0)


def test_sensing_channel_symmetric_rank_one(layout):
    g = build_sensing_channel(layout, (20.0, 10.0, 0.0), 2e-5)
    assert g.shape == (8, 8)
    # complex-symmetric (plain transpose), not Hermitian in general
    assert np.allclose(g, g.T)
    assert np.linalg.matrix_rank(g) == 1
    assert np.allclose(np.abs(g), 2e-5)


def test_comm_channel_nf_amplitude(layout):
    h = build_comm_channel_nf(layout.ap_elements, (0, 0, 5.0), (20.0, 10.0, 0.0),
                              WAVELENGTH)
    d = np.linalg.norm(np.array([20.0, 10.0, -5.0]))
    assert np.allclose(np.abs(h), path_gain(WAVELENGTH, d))


def test_ap_ris_channel_shapes_and_regimes(layout):
    nf = build_ap_ris_channel(layout, (0, 0, 5.0), (25.0, 0.0, 10.0),
                              FieldRegime.NEAR_FIELD)
    ff = build_ap_ris_channel(layout, (0, 0, 5.0), (25.0, 0.0, 10.0),
                              FieldRegime.FAR_FIELD)
    assert nf.shape == ff.shape == (32, 8)
    assert np.linalg.matrix_rank(ff) == 1
    assert np.linalg.matrix_rank(nf) > 1
    # same common amplitude either way
    assert np.allclose(np.abs(ff), np.abs(nf).mean(), rtol=1e-2)


def test_ris_device_channel_regimes(layout):
    q_dev = (80.0, 0.0, 0.0)
    nf = build_ris_device_channel(layout, (25.0, 0.0, 10.0), q_dev,
                                  FieldRegime.NEAR_FIELD)
    ff = build_ris_device_channel(layout, (25.0, 0.0, 10.0), q_dev,
                                  FieldRegime.FAR_FIELD)
    assert nf.shape == ff.shape == (32,)
    assert np.allclose(np.abs(nf), np.abs(ff))


def test_cascade_matches_explicit_product(layout):
    rng = np.random.default_rng(2)
    h_mat = rng.normal(size=(32, 8)) + 1j * rng.normal(size=(32, 8))
    h = rng.normal(size=32) + 1j * rng.normal(size=32)
    phase = RisPhase.random(32, rng)
    expected = h_mat.conj().T @ np.diag(phase.v) @ h
    assert np.allclose(cascade(h, phase, h_mat), expected)


def test_cascade_dimension_check(layout):
    phase = RisPhase.random(16, np.random.default_rng(0))
    with pytest.raises(DimensionMismatch):
        cascade(np.ones(32), phase, np.ones((32, 8)))


def test_transmit_beamformers_power_split():
    a = np.exp(1j * np.linspace(0, 1, 8))
    w_so, w_isac = transmit_beamformers(a, 2.0, 0.5)
    assert np.linalg.norm(w_so) ** 2 == pytest.approx(2.0 / 8)
    assert np.linalg.norm(w_isac) ** 2 == pytest.approx(0.5 / 8)
    # aligned with the response: |a^T w| = ||w|| ||a||
    assert abs(a @ w_so) == pytest.approx(
        np.linalg.norm(w_so) * np.linalg.norm(a))
