"""Channel construction for the AP / RIS / IIoT links.

Near-field links carry per-element spherical phases from exact element
distances; far-field links use planar steering vectors.  Path-gain
amplitudes always use the center-to-center distance, so only phases vary
per element.
"""

from dataclasses import dataclass, field

import numpy as np

from .geometry import ArrayLayout, FieldRegime, distance


class DegenerateGeometry(ValueError):
    pass


class DimensionMismatch(ValueError):
    pass


@dataclass(frozen=True)
class RisPhase:
    """Unit-modulus RIS reflection coefficients v_m = exp(j theta_m)."""

    v: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.v, dtype=complex).ravel()
        if v.size and np.max(np.abs(np.abs(v) - 1.0)) > 1e-12:
            raise ValueError("RIS coefficients must be unit modulus")
        object.__setattr__(self, "v", v)

    @classmethod
    def from_angles(cls, theta) -> "RisPhase":
        return cls(np.exp(1j * np.asarray(theta, dtype=float)))

    @classmethod
    def random(cls, m: int, rng: np.random.Generator) -> "RisPhase":
        return cls.from_angles(rng.uniform(0.0, 2.0 * np.pi, m))


@dataclass(frozen=True)
class ChannelSet:
    """All constructed channels for one scenario realization."""

    g_ap_s: np.ndarray          # N x N sensing echo, beta_s * a a^T
    h_ap_s: np.ndarray          # N, direct IIoT-(I) uplink
    a_ap_s: np.ndarray          # N, unit-modulus sensing response
    h_ap_ris: np.ndarray        # M x N, AP-RIS
    h_ris_k: list = field(default_factory=list)  # K vectors of length M
    regime_ap_ris: FieldRegime = FieldRegime.NEAR_FIELD
    regime_ris_k: list = field(default_factory=list)
    beta_s: complex = 0.0

    @property
    def n_ap(self) -> int:
        return self.h_ap_s.size

    @property
    def m_ris(self) -> int:
        return self.h_ap_ris.shape[0]

    @property
    def n_devices(self) -> int:
        return len(self.h_ris_k)


def path_gain(wavelength: float, d: float) -> float:
    """Amplitude gain sqrt(lambda / (4 pi d^2)) of a link of length d."""
    if d <= 0:
        raise DegenerateGeometry("zero-length link")
    return np.sqrt(wavelength / (4.0 * np.pi * d * d))


def nf_response(elements: np.ndarray, point, wavelength: float) -> np.ndarray:
    """Spherical-wave response exp(-j 2 pi d_i / lambda) per element."""
    point = np.asarray(point, dtype=float)
    dists = np.linalg.norm(np.asarray(elements, dtype=float) - point, axis=1)
    if np.any(dists == 0.0):
        raise DegenerateGeometry("target point coincides with an array element")
    return np.exp(-2j * np.pi * dists / wavelength)


def ff_steering(n: int, spacing: float, sin_angle: float, wavelength: float) -> np.ndarray:
    """Planar steering vector [1, e^{-j 2 pi w sin(theta)/lambda}, ...]."""
    return np.exp(-2j * np.pi * spacing * np.arange(n) * sin_angle / wavelength)


def build_sensing_channel(layout: ArrayLayout, q_s, beta_s: complex) -> np.ndarray:
    """Echo channel beta_s * a a^T (plain transpose, complex-symmetric)."""
    a = nf_response(layout.ap_elements, q_s, layout.wavelength)
    return beta_s * np.outer(a, a)


def build_comm_channel_nf(elements: np.ndarray, center, point,
                          wavelength: float) -> np.ndarray:
    """Near-field channel: common 1/d amplitude, per-element spherical phase."""
    d = distance(center, point)
    return path_gain(wavelength, d) * nf_response(elements, point, wavelength)


def build_ris_device_channel(layout: ArrayLayout, q_ris, q_dev,
                             regime: FieldRegime) -> np.ndarray:
    """RIS-to-device channel vector (length M) for the given regime."""
    lam = layout.wavelength
    if regime is FieldRegime.NEAR_FIELD:
        return build_comm_channel_nf(layout.ris_elements, q_ris, q_dev, lam)
    d = distance(q_ris, q_dev)
    sin_th = (float(q_dev[0]) - float(q_ris[0])) / d
    b = ff_steering(layout.m_ris, layout.ris_spacing, sin_th, lam)
    return path_gain(lam, d) * np.exp(-2j * np.pi * d / lam) * b


def build_ap_ris_channel(layout: ArrayLayout, q_ap, q_ris,
                         regime: FieldRegime) -> np.ndarray:
    """AP-RIS channel matrix, M x N (rows indexed by RIS elements)."""
    lam = layout.wavelength
    d = distance(q_ap, q_ris)
    gain = path_gain(lam, d)
    if regime is FieldRegime.NEAR_FIELD:
        dists = np.linalg.norm(
            layout.ris_elements[:, None, :] - layout.ap_elements[None, :, :], axis=2
        )
        if np.any(dists == 0.0):
            raise DegenerateGeometry("AP and RIS elements coincide")
        return gain * np.exp(-2j * np.pi * dists / lam)
    # rank-one steering outer product with the common propagation phase
    sin_ap = (float(q_ris[2]) - float(q_ap[2])) / d
    sin_ris = (float(q_ap[0]) - float(q_ris[0])) / d
    b_ap = ff_steering(layout.n_ap, layout.ap_spacing, sin_ap, lam)
    b_ris = ff_steering(layout.m_ris, layout.ris_spacing, sin_ris, lam)
    return gain * np.exp(-2j * np.pi * d / lam) * np.outer(b_ris, b_ap.conj())


def cascade(h_ris_k: np.ndarray, phase: RisPhase, h_ap_ris: np.ndarray) -> np.ndarray:
    """Combined device-RIS-AP channel H^H Phi h (length N)."""
    h = np.asarray(h_ris_k, dtype=complex).ravel()
    if h.size != phase.v.size or h_ap_ris.shape[0] != h.size:
        raise DimensionMismatch(
            f"inconsistent dims: h {h.size}, v {phase.v.size}, H {h_ap_ris.shape}"
        )
    return h_ap_ris.conj().T @ (phase.v * h)


def transmit_beamformers(a_ap_s: np.ndarray, p_so: float, p_isac: float):
    """Sensing-aligned transmit beams with ||w||^2 = p / N."""
    if p_so < 0 or p_isac < 0:
        raise ValueError("transmit powers must be nonnegative")
    a = np.asarray(a_ap_s, dtype=complex).ravel()
    n = a.size
    unit = a.conj() / np.linalg.norm(a)
    return np.sqrt(p_so / n) * unit, np.sqrt(p_isac / n) * unit
