"""Heralded entanglement generation over one elementary link.

A single input photon from the central station is split between the two
ensembles; the Stokes photon returns to the station and is detected. Each
attempt therefore covers ``L0`` of fibre in total and lasts ``L0 / c``.
In the DLCZ scheme only the Stokes photon travels, over ``L0 / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InvalidParameterError, ZeroProbabilityError
from .params import C_VACUUM

# 0.2 dB/km telecom fibre: 10 / (0.2 ln 10) = 21.7 km
L_ATT_TELECOM_KM = 22.0


def transmission_efficiency(L0: float, L_att: float, dlcz: bool = False) -> float:
    """Channel transmission ``exp(-L0 / L_att)``, or ``exp(-L0 / (2 L_att))`` for DLCZ."""
    if not L0 >= 0:
        raise DomainError(f"link length must be >= 0, got {L0!r}")
    if not L_att > 0:
        raise DomainError(f"attenuation length must be > 0, got {L_att!r}")
    travelled = L0 / 2 if dlcz else L0
    return math.exp(-travelled / L_att)


@dataclass(frozen=True)
class LinkParams:
    """Loss budget of one elementary link.

    Lengths are in km, ``c_fiber`` in m/s. ``dlcz`` selects the DLCZ
    transmission model (Stokes photon only, half the fibre length).
    """

    L0: float
    L_att: float = L_ATT_TELECOM_KM
    eta_d: float = 1.0
    p: float = 1.0
    c_fiber: float = C_VACUUM
    dlcz: bool = False

    def __post_init__(self) -> None:
        if not (self.L0 >= 0 and math.isfinite(self.L0)):
            raise InvalidParameterError(f"L0 must be >= 0, got {self.L0!r}")
        if not self.L_att > 0:
            raise InvalidParameterError(f"L_att must be > 0, got {self.L_att!r}")
        for name in ("eta_d", "p"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise InvalidParameterError(f"{name} must lie in [0, 1], got {value!r}")
        if not (self.c_fiber > 0 and math.isfinite(self.c_fiber)):
            raise InvalidParameterError(f"c_fiber must be positive, got {self.c_fiber!r}")

    @property
    def eta_t(self) -> float:
        return transmission_efficiency(self.L0, self.L_att, self.dlcz)

    @property
    def attempt_period(self) -> float:
        """Duration of one attempt in seconds, ``L0 / c_fiber``."""
        return self.L0 * 1e3 / self.c_fiber


def link_success_probability(link: LinkParams) -> float:
    """Heralding probability per attempt, ``p * eta_d * eta_t``."""
    return link.p * link.eta_d * link.eta_t


def _checked_probability(link: LinkParams) -> float:
    p0 = link_success_probability(link)
    if p0 <= 0:
        raise ZeroProbabilityError("link success probability is zero")
    return p0


def expected_link_time(link: LinkParams) -> float:
    """Mean time to herald one link: ``(L0 / c) / P0`` seconds."""
    return link.attempt_period / _checked_probability(link)


def sample_link_time(link: LinkParams, rng_seed: int, size: int | None = None):
    """Draw heralding time(s) from the geometric attempt model.

    Returns a float when ``size`` is None, else an array of ``size`` draws.
    The same seed always yields the same draws.
    """
    p0 = _checked_probability(link)
    rng = np.random.default_rng(rng_seed)
    attempts = rng.geometric(p0, size=size)
    if size is None:
        return float(attempts) * link.attempt_period
    return attempts.astype(float) * link.attempt_period
