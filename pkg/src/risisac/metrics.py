"""Scalar performance metrics: band/power splits, SINRs, rates, FIM, CRB.

The FIM follows the closed form

    J(alpha, f) = 8 pi^2 beta^2 |f^H a|^2 T B / (3 N sigma^2)
                  * [ alpha rho_SO ((B_O - B/2 + alpha B)^3 - (B_O - B/2)^3)
                    - (1-alpha) rho_ISAC ((B_O - B/2 + alpha B)^3 - (B_O + B/2)^3) ]

and is cross-checked against direct quadrature of the band integrals
(``fim_integral``), which this module also exposes for the CLI audit
command.
"""

import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .channel import ChannelSet, RisPhase, cascade
from .geometry import SPEED_OF_LIGHT


class InvalidAlpha(ValueError):
    pass


class SingularFIM(ValueError):
    pass


@dataclass(frozen=True)
class LinkBudget:
    """Powers, noise, spectral densities and rate thresholds (SI units)."""

    p_s: float                  # IIoT-(I) transmit power, W
    p_k: np.ndarray             # IIoT-(II) transmit powers, W (length K)
    sigma2: float               # total-band noise power, W
    sigma_tau2: float           # delay-prediction error variance, s^2
    rho_so: float               # SO-band PSD, W/Hz
    rho_isac: float             # ISAC-band PSD, W/Hz
    bandwidth: float            # total bandwidth B, Hz
    band_offset: float          # band-center parameter B_O, Hz
    pulse_duration: float       # T, s
    rate_s_th: float            # IIoT-(I) rate threshold, bit/s
    rate_k_th: float            # IIoT-(II) rate threshold, bit/s
    coherent_interference: bool = True   # Eq-as-printed coherent sum in the echo SINR
    fim_n_scaling: str = "main"          # "main" (1/N) or "appendix" (N^2)

    def __post_init__(self):
        object.__setattr__(self, "p_k", np.atleast_1d(np.asarray(self.p_k, dtype=float)))
        if self.bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        if self.fim_n_scaling not in ("main", "appendix"):
            raise ValueError(f"unknown fim_n_scaling {self.fim_n_scaling!r}")

    def p_k_common(self) -> float:
        """Single device power used in the coherent interference term."""
        p = self.p_k
        if p.size > 1 and not np.allclose(p, p[0]):
            warnings.warn(
                "unequal device powers: coherent interference term uses p_k[0]",
                stacklevel=2,
            )
        return float(p[0])


@dataclass(frozen=True)
class BandSplit:
    """SO/ISAC bandwidths and radar powers implied by a splitting ratio."""

    alpha: float
    b_so: float
    b_isac: float
    p_so: float
    p_isac: float


def band_split(alpha: float, budget: LinkBudget) -> BandSplit:
    if not 0.0 <= alpha <= 1.0:
        raise InvalidAlpha(f"alpha must be in [0, 1], got {alpha}")
    b = budget.bandwidth
    return BandSplit(
        alpha=alpha,
        b_so=alpha * b,
        b_isac=(1.0 - alpha) * b,
        p_so=alpha * b * budget.rho_so,
        p_isac=(1.0 - alpha) * b * budget.rho_isac,
    )


def dbm_to_watt(x_dbm: float) -> float:
    return 10.0 ** ((x_dbm - 30.0) / 10.0)


def watt_to_dbm(x_w: float) -> float:
    return 10.0 * np.log10(x_w) + 30.0


def eta_isac(alpha: float, bandwidth: float, sigma_tau2: float) -> float:
    """Residual echo power fraction (2 pi)^2 B_ISAC^2 sigma_tau^2 / 12."""
    b_isac = (1.0 - alpha) * bandwidth
    return (2.0 * np.pi) ** 2 * b_isac ** 2 * sigma_tau2 / 12.0


def _echo_leak(alpha: float, f: np.ndarray, channels: ChannelSet,
               budget: LinkBudget) -> float:
    """Reduced-power echo term |f^H a|^2 beta^2 eta p_ISAC."""
    split = band_split(alpha, budget)
    eta = eta_isac(alpha, budget.bandwidth, budget.sigma_tau2)
    return (abs(np.vdot(f, channels.a_ap_s)) ** 2
            * abs(channels.beta_s) ** 2 * eta * split.p_isac)


def _cascades(channels: ChannelSet, phase: RisPhase) -> list:
    return [cascade(h, phase, channels.h_ap_ris) for h in channels.h_ris_k]


def sinr_s(alpha: float, f: np.ndarray, channels: ChannelSet,
           phase: RisPhase, budget: LinkBudget) -> float:
    """SINR of the IIoT-(I) signal, decoded first in the NOMA order."""
    if alpha >= 1.0:
        raise InvalidAlpha("alpha = 1 leaves no communication band")
    hbars = _cascades(channels, phase)
    signal = abs(np.vdot(f, channels.h_ap_s)) ** 2 * budget.p_s
    if budget.coherent_interference:
        interference = abs(np.vdot(f, sum(hbars))) ** 2 * budget.p_k_common() if hbars else 0.0
    else:
        p = np.broadcast_to(budget.p_k, (len(hbars),))
        interference = sum(abs(np.vdot(f, hb)) ** 2 * pk for hb, pk in zip(hbars, p))
    denom = interference + _echo_leak(alpha, f, channels, budget) + (1.0 - alpha) * budget.sigma2
    return signal / denom


def sinr_k(k: int, alpha: float, f: np.ndarray, channels: ChannelSet,
           phase: RisPhase, budget: LinkBudget) -> float:
    """SINR of IIoT-(II) device k after the IIoT-(I) signal is cancelled."""
    if alpha >= 1.0:
        raise InvalidAlpha("alpha = 1 leaves no communication band")
    hbars = _cascades(channels, phase)
    p = np.broadcast_to(budget.p_k, (len(hbars),))
    signal = abs(np.vdot(f, hbars[k])) ** 2 * p[k]
    interference = sum(
        abs(np.vdot(f, hbars[i])) ** 2 * p[i] for i in range(len(hbars)) if i != k
    )
    denom = interference + _echo_leak(alpha, f, channels, budget) + (1.0 - alpha) * budget.sigma2
    return signal / denom


def rate(alpha: float, bandwidth: float, sinr: float) -> float:
    """Achievable rate (1 - alpha) B log2(1 + SINR) in bit/s."""
    if sinr < 0:
        raise ValueError("SINR must be nonnegative")
    return (1.0 - alpha) * bandwidth * np.log2(1.0 + sinr)


def fim_bracket(alpha: float, budget: LinkBudget) -> float:
    """Band-integral bracket of the FIM closed form."""
    b, b_o = budget.bandwidth, budget.band_offset
    lo = b_o - b / 2.0
    hi = b_o + b / 2.0
    mid = lo + alpha * b
    return (alpha * budget.rho_so * (mid ** 3 - lo ** 3)
            - (1.0 - alpha) * budget.rho_isac * (mid ** 3 - hi ** 3))


def _fim_prefactor(f: np.ndarray, channels: ChannelSet, budget: LinkBudget) -> float:
    n = channels.n_ap
    beam = abs(np.vdot(f, channels.a_ap_s)) ** 2
    base = 8.0 * np.pi ** 2 * abs(channels.beta_s) ** 2 * beam \
        * budget.pulse_duration * budget.bandwidth / (3.0 * budget.sigma2)
    if budget.fim_n_scaling == "main":
        return base / n
    return base * n ** 2


def fim(alpha: float, f: np.ndarray, channels: ChannelSet,
        budget: LinkBudget) -> float:
    """Closed-form Fisher information for the echo time delay."""
    if not 0.0 <= alpha <= 1.0:
        raise InvalidAlpha(f"alpha must be in [0, 1], got {alpha}")
    return _fim_prefactor(f, channels, budget) * fim_bracket(alpha, budget)


def fim_integral(alpha: float, f: np.ndarray, channels: ChannelSet,
                 budget: LinkBudget) -> float:
    """Quadrature route to the FIM: (2 pi f)^2 times the band PSDs.

    Independent of ``fim``; integrates p_SO T (2 pi f)^2 over the SO band
    and p_ISAC T (2 pi f)^2 over the ISAC band.
    """
    if not 0.0 <= alpha <= 1.0:
        raise InvalidAlpha(f"alpha must be in [0, 1], got {alpha}")
    split = band_split(alpha, budget)
    b, b_o = budget.bandwidth, budget.band_offset
    lo, hi = b_o - b / 2.0, b_o + b / 2.0
    mid = lo + alpha * b

    def spectrum(freq, band_power):
        return band_power * budget.pulse_duration * (2.0 * np.pi * freq) ** 2

    so_part, _ = integrate.quad(spectrum, lo, mid, args=(split.p_so,))
    isac_part, _ = integrate.quad(spectrum, mid, hi, args=(split.p_isac,))
    n = channels.n_ap
    beam = abs(np.vdot(f, channels.a_ap_s)) ** 2
    scale = 2.0 * abs(channels.beta_s) ** 2 * beam / (n * budget.sigma2)
    if budget.fim_n_scaling == "appendix":
        scale *= n ** 3
    return scale * (so_part + isac_part)


def fim_second_derivative(alpha: float, f: np.ndarray, channels: ChannelSet,
                          budget: LinkBudget) -> float:
    """Analytic d^2 J / d alpha^2 of the closed form."""
    b = budget.bandwidth
    u = budget.band_offset - b / 2.0 + alpha * b
    g2 = (6.0 * b * budget.rho_so * u ** 2
          + 6.0 * alpha * b ** 2 * budget.rho_so * u
          + 6.0 * b * budget.rho_isac * u ** 2
          - 6.0 * (1.0 - alpha) * b ** 2 * budget.rho_isac * u)
    return _fim_prefactor(f, channels, budget) * g2


def crb(alpha: float, f: np.ndarray, channels: ChannelSet,
        budget: LinkBudget, tol: float = 0.0) -> float:
    """CRB of the delay estimate, 1 / J, in s^2."""
    j = fim(alpha, f, channels, budget)
    if j <= tol:
        raise SingularFIM(f"Fisher information {j:g} is not positive")
    return 1.0 / j


def range_error_cm(crb_s2: float) -> float:
    """Round-trip delay CRB reported as a one-way range error in cm."""
    return np.sqrt(crb_s2) * SPEED_OF_LIGHT / 2.0 * 100.0
