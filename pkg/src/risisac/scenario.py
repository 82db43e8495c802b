"""Assembly of a concrete scenario realization from a configuration.

Builds element layouts, draws device positions, classifies every link
against its Rayleigh distance and constructs the matching channels.
"""

from dataclasses import dataclass

import numpy as np

from .channel import (ChannelSet, build_ap_ris_channel, build_comm_channel_nf,
                      build_ris_device_channel, build_sensing_channel,
                      ff_steering, nf_response, path_gain)
from .config import ScenarioConfig
from .geometry import (ArrayLayout, FieldRegime, classify_link, distance,
                       element_positions, place_devices, rayleigh_distance)
from .metrics import LinkBudget, dbm_to_watt


@dataclass(frozen=True)
class Scenario:
    layout: ArrayLayout
    channels: ChannelSet
    budget: LinkBudget
    device_positions: np.ndarray


def link_regime(aperture_a: float, aperture_b: float, center_distance: float,
                wavelength: float) -> FieldRegime:
    """Regime of a link, classified against the larger endpoint aperture."""
    rd = rayleigh_distance(max(aperture_a, aperture_b), wavelength)
    return classify_link(center_distance, rd)


def _direct_uplink(layout: ArrayLayout, q_ap, q_s) -> np.ndarray:
    lam = layout.wavelength
    d = distance(q_ap, q_s)
    regime = link_regime(layout.ap_aperture, 0.0, d, lam)
    if regime is FieldRegime.NEAR_FIELD:
        return build_comm_channel_nf(layout.ap_elements, q_ap, q_s, lam)
    sin_th = (float(q_s[2]) - float(q_ap[2])) / d
    b = ff_steering(layout.n_ap, layout.ap_spacing, sin_th, lam)
    return path_gain(lam, d) * np.exp(-2j * np.pi * d / lam) * b


def build_scenario(config: ScenarioConfig, seed: int) -> Scenario:
    """Deterministic scenario realization for (config, seed)."""
    rng = np.random.default_rng(seed)
    layout = element_positions(_LayoutView(config))
    lam = layout.wavelength

    q_ap = np.asarray(config.q_ap, dtype=float)
    q_ris = np.asarray(config.q_ris, dtype=float)
    q_s = np.asarray(config.q_s, dtype=float)
    devices = place_devices(
        config.k_devices, config.device_radius_m, config.device_arc_rad, rng,
        exclude=[q_s], min_separation=config.min_separation_m,
    )

    regime_ap_ris = link_regime(layout.ap_aperture, layout.ris_aperture,
                                distance(q_ap, q_ris), lam)
    regime_ris_k = [
        link_regime(layout.ris_aperture, 0.0, distance(q_ris, q_dev), lam)
        for q_dev in devices
    ]

    channels = ChannelSet(
        g_ap_s=build_sensing_channel(layout, q_s, config.beta_s),
        h_ap_s=_direct_uplink(layout, q_ap, q_s),
        a_ap_s=nf_response(layout.ap_elements, q_s, lam),
        h_ap_ris=build_ap_ris_channel(layout, q_ap, q_ris, regime_ap_ris),
        h_ris_k=[
            build_ris_device_channel(layout, q_ris, q_dev, regime)
            for q_dev, regime in zip(devices, regime_ris_k)
        ],
        regime_ap_ris=regime_ap_ris,
        regime_ris_k=regime_ris_k,
        beta_s=config.beta_s,
    )

    budget = LinkBudget(
        p_s=dbm_to_watt(config.p_s_dbm),
        p_k=np.full(config.k_devices, dbm_to_watt(config.p_k_dbm)),
        sigma2=dbm_to_watt(config.sigma2_dbm),
        sigma_tau2=config.sigma_tau2_s2,
        rho_so=config.rho_so,
        rho_isac=config.rho_isac,
        bandwidth=config.bandwidth_hz,
        band_offset=config.band_offset_hz,
        pulse_duration=config.pulse_duration_s,
        rate_s_th=config.rate_s_th_bps,
        rate_k_th=config.rate_k_th_bps,
        coherent_interference=config.coherent_interference,
        fim_n_scaling=config.fim_n_scaling,
    )
    return Scenario(layout=layout, channels=channels, budget=budget,
                    device_positions=devices)


class _LayoutView:
    """Adapter exposing the geometry fields expected by element_positions."""

    def __init__(self, config: ScenarioConfig):
        self.n_ap = config.n_ap
        self.m_ris = config.m_ris
        self.q_ap = config.q_ap
        self.q_ris = config.q_ris
        self.ap_spacing = config.ap_spacing
        self.ris_spacing = config.ris_spacing
        self.wavelength = config.wavelength
