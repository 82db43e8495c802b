"""Node/element coordinates, distances and near/far-field classification.

The AP is a vertical ULA, the RIS a planar grid in the x-y plane.  Links
are classified against the Rayleigh distance 2 D^2 / lambda of the larger
aperture involved in the link.
"""

import enum
import math

import numpy as np

SPEED_OF_LIGHT = 299792458.0


class InvalidConfig(ValueError):
    pass


class FieldRegime(enum.Enum):
    NEAR_FIELD = "near-field"
    FAR_FIELD = "far-field"


class ArrayLayout:
    """Element coordinates of the AP ULA and the RIS grid.

    AP elements run along z with spacing ``d`` symmetric about the AP
    center; the RIS grid is an m1 x m2 rectangle with spacing ``w``
    symmetric about the RIS center (m1 along x, m2 along y).
    """

    def __init__(self, ap_elements, ris_elements, ap_spacing, ris_spacing,
                 wavelength, ris_shape):
        self.ap_elements = np.asarray(ap_elements, dtype=float)
        self.ris_elements = np.asarray(ris_elements, dtype=float)
        self.ap_spacing = float(ap_spacing)
        self.ris_spacing = float(ris_spacing)
        self.wavelength = float(wavelength)
        self.ris_shape = ris_shape

    @property
    def n_ap(self) -> int:
        return self.ap_elements.shape[0]

    @property
    def m_ris(self) -> int:
        return self.ris_elements.shape[0]

    @property
    def ap_aperture(self) -> float:
        return (self.n_ap - 1) * self.ap_spacing

    @property
    def ris_aperture(self) -> float:
        # diagonal extent of the grid
        m1, m2 = self.ris_shape
        return self.ris_spacing * math.hypot(m1 - 1, m2 - 1)


def ris_grid_shape(m: int) -> tuple[int, int]:
    """Factor the RIS element count into a near-square m1 x m2 grid.

    Perfect squares map to square grids.  Otherwise the most balanced
    factorization is used, rejected when the aspect ratio exceeds 2
    (such counts have no sensible planar layout).
    """
    if m < 1:
        raise InvalidConfig(f"RIS element count must be positive, got {m}")
    r = math.isqrt(m)
    if r * r == m:
        return (r, r)
    for m1 in range(r, 0, -1):
        if m % m1 == 0:
            m2 = m // m1
            if m2 > 2 * m1:
                raise InvalidConfig(
                    f"RIS element count {m} cannot form a near-square grid "
                    f"(best factorization {m1}x{m2})"
                )
            return (m1, m2)
    raise InvalidConfig(f"RIS element count {m} cannot form a grid")


def element_positions(config) -> ArrayLayout:
    """Build AP/RIS element coordinates from a scenario-like object.

    ``config`` must expose ``n_ap``, ``m_ris``, ``q_ap``, ``q_ris``,
    ``ap_spacing``, ``ris_spacing`` and ``wavelength``.
    """
    n = int(config.n_ap)
    m = int(config.m_ris)
    if n < 1:
        raise InvalidConfig(f"AP antenna count must be positive, got {n}")
    d = float(config.ap_spacing)
    w = float(config.ris_spacing)
    q_ap = np.asarray(config.q_ap, dtype=float)
    q_ris = np.asarray(config.q_ris, dtype=float)

    # symmetric index offsets preserving aperture (N-1) d
    ap_off = (np.arange(n) - (n - 1) / 2) * d
    ap = np.column_stack([
        np.full(n, q_ap[0]), np.full(n, q_ap[1]), q_ap[2] + ap_off,
    ])

    m1, m2 = ris_grid_shape(m)
    xs = (np.arange(m1) - (m1 - 1) / 2) * w
    ys = (np.arange(m2) - (m2 - 1) / 2) * w
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    ris = np.column_stack([
        q_ris[0] + gx.ravel(), q_ris[1] + gy.ravel(),
        np.full(m, q_ris[2]),
    ])
    return ArrayLayout(ap, ris, d, w, float(config.wavelength), (m1, m2))


def distance(a, b) -> float:
    """Euclidean distance between two points."""
    return float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


def rayleigh_distance(aperture: float, wavelength: float) -> float:
    """Near/far-field boundary 2 D^2 / lambda."""
    if aperture < 0 or wavelength <= 0:
        raise InvalidConfig("aperture must be >= 0 and wavelength > 0")
    return 2.0 * aperture ** 2 / wavelength


def classify_link(center_distance: float, rayleigh: float) -> FieldRegime:
    """Near field strictly inside the Rayleigh distance, far field at or beyond."""
    if center_distance < rayleigh:
        return FieldRegime.NEAR_FIELD
    return FieldRegime.FAR_FIELD


def place_devices(k: int, radius: float, arc, rng: np.random.Generator,
                  exclude=(), min_separation: float = 1.0) -> np.ndarray:
    """Drop k devices on the ground circle of given radius around the origin.

    Azimuths are uniform on ``arc`` (radians, (lo, hi)); positions closer
    than ``min_separation`` to any excluded node are redrawn.
    """
    lo, hi = arc
    exclude = [np.asarray(q, dtype=float) for q in exclude]
    out = []
    for _ in range(k):
        for _attempt in range(1000):
            phi = rng.uniform(lo, hi)
            q = np.array([radius * math.cos(phi), radius * math.sin(phi), 0.0])
            if all(np.linalg.norm(q - e) >= min_separation for e in exclude + out):
                out.append(q)
                break
        else:
            raise InvalidConfig("could not place devices with requested separation")
    return np.array(out)
