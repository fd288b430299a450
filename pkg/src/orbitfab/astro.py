"""Orbital mechanics kernels: Kepler conversions, relative elements, propagation.

Cluster geometry is expressed as modified relative orbital elements (ROEs)
about a circular chief orbit. All work happens in a rotated inertial frame
chosen so the chief orbit has zero inclination and zero node; the physical
sun-synchronous tilt of the real orbit enters only through the solar model.
In this frame the usual cos(i_c) factor on the relative mean longitude
multiplies cos(0) = 1 and drops out.

Two propagation routes exist side by side:

* ``keplerian_to_hill`` runs the exact chain (mean anomaly advance, Kepler
  inversion, perifocal to inertial rotation, Hill projection).  It is the
  ground-truth transform for frame-consistency and linearity checks.
* ``propagate`` evaluates the first-order ROE relative-motion map.  Cluster
  designs are specified in ROE space and their closure guarantees (constant
  ring radius, rigid rotation, grid spacing) hold exactly only at first
  order; the exact chain flexes them by O(e_d) of the amplitude, centimetres
  at design scale.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

MU_EARTH = 3.986004418e14
"""Gravitational parameter of Earth [m^3/s^2]."""

R_EARTH = 6.378e6
"""Mean equatorial radius of Earth [m]."""

TWO_PI = 2.0 * math.pi


class KeplerConvergenceError(RuntimeError):
    """Kepler inversion failed to converge within the iteration cap."""


def wrap_angle(angle: float) -> float:
    """Normalize an angle to [0, 2*pi)."""
    return angle % TWO_PI


@dataclass(frozen=True)
class ChiefOrbit:
    """Circular chief orbit in the rotated frame.

    ``inclination_true`` is the physical inclination of the real orbit; it is
    carried along for the solar model only and does not affect propagation.
    """

    semi_major_axis: float
    inclination_true: float = math.radians(98.0)

    def __post_init__(self) -> None:
        if not self.semi_major_axis > R_EARTH:
            raise ValueError(
                f"chief semi-major axis {self.semi_major_axis} must exceed {R_EARTH}"
            )

    @classmethod
    def at_altitude(cls, altitude: float, inclination_true: float = math.radians(98.0)) -> "ChiefOrbit":
        return cls(R_EARTH + altitude, inclination_true)

    @property
    def mean_motion(self) -> float:
        return math.sqrt(MU_EARTH / self.semi_major_axis**3)

    @property
    def period(self) -> float:
        return TWO_PI / self.mean_motion


@dataclass(frozen=True)
class ModifiedROE:
    """Modified relative orbital elements of a deputy about the chief.

    ``delta_a`` must be zero: every cluster satellite shares the chief period,
    otherwise along-track drift disperses the formation.
    """

    delta_a: float
    delta_lambda: float
    delta_ex: float
    delta_ey: float
    delta_ix: float
    delta_iy: float

    def __post_init__(self) -> None:
        if self.delta_a != 0.0:
            raise ValueError("delta_a must be 0: cluster satellites share the chief period")
        if not self.e_d < 1.0:
            raise ValueError("relative eccentricity magnitude must be < 1")

    @property
    def e_d(self) -> float:
        """Magnitude of the relative eccentricity vector."""
        return math.hypot(self.delta_ex, self.delta_ey)

    @property
    def i_d(self) -> float:
        """Magnitude of the relative inclination vector."""
        return math.hypot(self.delta_ix, self.delta_iy)

    @property
    def perigee_longitude(self) -> float:
        """Phase of the relative eccentricity vector, atan2(dey, dex)."""
        return math.atan2(self.delta_ey, self.delta_ex)

    @property
    def node_longitude(self) -> float:
        """Phase of the relative inclination vector, atan2(diy, dix)."""
        return math.atan2(self.delta_iy, self.delta_ix)


@dataclass(frozen=True)
class KeplerianElements:
    """Osculating Keplerian elements in the rotated frame; angles in [0, 2*pi)."""

    semi_major_axis: float
    eccentricity: float
    inclination: float
    raan: float
    arg_perigee: float
    mean_anomaly: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.eccentricity < 1.0:
            raise ValueError(f"eccentricity {self.eccentricity} outside [0, 1)")
        for name in ("raan", "arg_perigee", "mean_anomaly"):
            object.__setattr__(self, name, wrap_angle(getattr(self, name)))


@dataclass(frozen=True)
class HillState:
    """Chief-centered Hill-frame position sample.

    x is radial (positive away from Earth), y along-track, z cross-track.
    """

    x: float
    y: float
    z: float
    t: float


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled Hill-frame trajectory over one cluster period."""

    times: np.ndarray
    positions: np.ndarray

    def __len__(self) -> int:
        return len(self.times)

    def state(self, k: int) -> HillState:
        x, y, z = self.positions[k]
        return HillState(float(x), float(y), float(z), float(self.times[k]))

    def states(self) -> list[HillState]:
        return [self.state(k) for k in range(len(self.times))]


def true_anomaly_to_mean(theta: float, e: float) -> float:
    """Convert true anomaly to mean anomaly, both in [0, 2*pi).

    Closed form: M = atan2(sqrt(1-e^2) sin(theta), e + cos(theta))
                     - e sqrt(1-e^2) sin(theta) / (1 + e cos(theta)).
    """
    if not 0.0 <= e < 1.0:
        raise ValueError(f"eccentricity {e} outside [0, 1)")
    root = math.sqrt(1.0 - e * e)
    s = math.sin(theta)
    c = math.cos(theta)
    m = math.atan2(root * s, e + c) - e * root * s / (1.0 + e * c)
    return wrap_angle(m)


def _eccentric_to_true(ecc_anomaly: float, e: float) -> float:
    half = 0.5 * ecc_anomaly
    return wrap_angle(
        2.0 * math.atan2(math.sqrt(1.0 + e) * math.sin(half), math.sqrt(1.0 - e) * math.cos(half))
    )


_NEWTON_MAX = 50
_BISECT_MAX = 80


def mean_anomaly_to_true(mean_anomaly: float, e: float, tol: float = 1e-13) -> float:
    """Invert the mean-anomaly relation to the true anomaly in [0, 2*pi).

    Newton iteration on the eccentric anomaly with a bisection fallback; the
    result theta satisfies |true_anomaly_to_mean(theta, e) - M| < tol.
    """
    if not 0.0 <= e < 1.0:
        raise ValueError(f"eccentricity {e} outside [0, 1)")
    if tol <= 0.0:
        raise ValueError("tolerance must be positive")
    m = wrap_angle(mean_anomaly)
    if e == 0.0:
        return m

    ecc = m if e < 0.8 else math.pi
    converged = False
    for _ in range(_NEWTON_MAX):
        f = ecc - e * math.sin(ecc) - m
        if abs(f) < tol:
            converged = True
            break
        ecc -= f / (1.0 - e * math.cos(ecc))
    if not converged:
        # f(E) = E - e sin(E) - m is strictly increasing with f(0) <= 0 <= f(2*pi)
        lo, hi = 0.0, TWO_PI
        for _ in range(_BISECT_MAX):
            mid = 0.5 * (lo + hi)
            f = mid - e * math.sin(mid) - m
            if abs(f) < tol:
                ecc = mid
                converged = True
                break
            if f < 0.0:
                lo = mid
            else:
                hi = mid
        else:
            ecc = 0.5 * (lo + hi)
            converged = abs(ecc - e * math.sin(ecc) - m) < tol
    if not converged:
        raise KeplerConvergenceError(
            f"Kepler inversion did not reach tol={tol} for M={mean_anomaly}, e={e}"
        )
    return _eccentric_to_true(ecc, e)


def roe_to_keplerian(roe: ModifiedROE, chief: ChiefOrbit, chief_mean_anomaly: float = 0.0) -> KeplerianElements:
    """Recover deputy osculating elements from modified ROEs.

    The deputy mean anomaly follows from the relative mean longitude:
    M_d = M_c + delta_lambda - raan_d - argp_d (chief node and perigee are
    zero in the rotated frame).
    """
    e_d = roe.e_d
    i_d = roe.i_d
    raan = math.atan2(roe.delta_iy, roe.delta_ix) if i_d > 0.0 else 0.0
    pomega = math.atan2(roe.delta_ey, roe.delta_ex) if e_d > 0.0 else 0.0
    argp = pomega - raan
    mean_anomaly = chief_mean_anomaly + roe.delta_lambda - raan - argp
    return KeplerianElements(
        semi_major_axis=chief.semi_major_axis * (1.0 + roe.delta_a),
        eccentricity=e_d,
        inclination=i_d,
        raan=raan,
        arg_perigee=argp,
        mean_anomaly=mean_anomaly,
    )


def keplerian_to_roe(elements: KeplerianElements, chief: ChiefOrbit, chief_mean_anomaly: float = 0.0) -> ModifiedROE:
    """Inverse of ``roe_to_keplerian``; delta_lambda is wrapped to (-pi, pi]."""
    e = elements.eccentricity
    i = elements.inclination
    pomega = elements.arg_perigee + elements.raan
    delta_lambda = (
        elements.mean_anomaly - chief_mean_anomaly + elements.raan + elements.arg_perigee
    )
    delta_lambda = math.remainder(delta_lambda, TWO_PI)
    return ModifiedROE(
        delta_a=elements.semi_major_axis / chief.semi_major_axis - 1.0,
        delta_lambda=delta_lambda,
        delta_ex=e * math.cos(pomega),
        delta_ey=e * math.sin(pomega),
        delta_ix=i * math.cos(elements.raan),
        delta_iy=i * math.sin(elements.raan),
    )


def chief_position_inertial(chief: ChiefOrbit, t: float) -> np.ndarray:
    """Chief position in the rotated inertial frame; M_c(0) = 0 by convention."""
    u = chief.mean_motion * t
    return chief.semi_major_axis * np.array([math.cos(u), math.sin(u), 0.0])


def keplerian_to_inertial(elements: KeplerianElements, chief: ChiefOrbit, t: float) -> np.ndarray:
    """Exact deputy position in the rotated inertial frame at time t.

    Both anomalies advance at the cluster rate; the deputy semi-major axis is
    pinned to the chief's by the delta_a = 0 constraint.
    """
    n = chief.mean_motion
    mean_anomaly = elements.mean_anomaly + n * t
    theta = mean_anomaly_to_true(mean_anomaly, elements.eccentricity)
    e = elements.eccentricity
    a = elements.semi_major_axis
    r = a * (1.0 - e * e) / (1.0 + e * math.cos(theta))
    x_pf = r * math.cos(theta)
    y_pf = r * math.sin(theta)

    co, so = math.cos(elements.raan), math.sin(elements.raan)
    ci, si = math.cos(elements.inclination), math.sin(elements.inclination)
    cw, sw = math.cos(elements.arg_perigee), math.sin(elements.arg_perigee)
    # R_z(raan) @ R_x(i) @ R_z(argp) applied to the perifocal vector
    x1 = cw * x_pf - sw * y_pf
    y1 = sw * x_pf + cw * y_pf
    y2 = ci * y1
    z2 = si * y1
    return np.array([co * x1 - so * y2, so * x1 + co * y2, z2])


def inertial_to_hill(position: np.ndarray, chief: ChiefOrbit, t: float) -> HillState:
    """Project a rotated-inertial position into the chief-centered Hill frame."""
    u = chief.mean_motion * t
    cu, su = math.cos(u), math.sin(u)
    d = np.asarray(position, dtype=float) - chief_position_inertial(chief, t)
    return HillState(
        x=float(cu * d[0] + su * d[1]),
        y=float(-su * d[0] + cu * d[1]),
        z=float(d[2]),
        t=t,
    )


def keplerian_to_hill(elements: KeplerianElements, chief: ChiefOrbit, t: float) -> HillState:
    """Exact Hill-frame state via the full Kepler chain at time t."""
    return inertial_to_hill(keplerian_to_inertial(elements, chief, t), chief, t)


def _roe_arrays(roes) -> tuple[np.ndarray, ...]:
    dex = np.array([r.delta_ex for r in roes])
    dey = np.array([r.delta_ey for r in roes])
    dix = np.array([r.delta_ix for r in roes])
    diy = np.array([r.delta_iy for r in roes])
    dlam = np.array([r.delta_lambda for r in roes])
    return dex, dey, dix, diy, dlam


def propagate_many(roes, chief: ChiefOrbit, n_steps: int = 720) -> tuple[np.ndarray, np.ndarray]:
    """First-order Hill-frame positions for many satellites at once.

    Returns (times, positions) with positions shaped (n_sats, n_steps+1, 3).
    The map is linear in the ROEs with the chief argument of latitude
    u = n*t advancing uniformly, so relative rings close exactly per period.
    """
    if n_steps < 8:
        raise ValueError(f"n_steps {n_steps} must be >= 8")
    a = chief.semi_major_axis
    times = np.linspace(0.0, chief.period, n_steps + 1)
    u = chief.mean_motion * times
    cu, su = np.cos(u), np.sin(u)
    dex, dey, dix, diy, dlam = _roe_arrays(roes)
    x = -a * (np.outer(dex, cu) + np.outer(dey, su))
    y = a * (dlam[:, None] + 2.0 * (np.outer(dex, su) - np.outer(dey, cu)))
    z = a * (np.outer(dix, su) - np.outer(diy, cu))
    return times, np.stack([x, y, z], axis=2)


def propagate(roe: ModifiedROE, chief: ChiefOrbit, n_steps: int = 720) -> Trajectory:
    """Sample one cluster period of relative motion at n_steps+1 uniform times."""
    times, positions = propagate_many([roe], chief, n_steps)
    return Trajectory(times=times, positions=positions[0])
