"""Propagation phases of heralded pairs and the fidelity cost of their drift.

A heralded pair carries the phase difference between the up and down
arms of its link. Swapping two pairs leaves the relative phase
``dphi = phi12 - phi34`` on the four-ensemble state; its squared overlap
with the ``dphi = 0`` state is ``(1 + cos dphi) / 2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError
from .link import LinkParams, expected_link_time
from .params import C_VACUUM

TWO_PI = 2.0 * math.pi
JITTER_KINDS = ("gaussian_phase", "gaussian_timing")
DEFAULT_WAVELENGTH = 0.8e-6  # m


def wrap_phase(phi: float) -> float:
    """Map ``phi`` onto (-pi, pi]."""
    r = math.remainder(phi, TWO_PI)
    return math.pi if r <= -math.pi else r


@dataclass(frozen=True)
class PhaseModel:
    """Gaussian fluctuation model for the relative phase.

    ``sigma`` is in rad for ``gaussian_phase`` and in s for
    ``gaussian_timing``; timing jitter converts to phase through ``omega``.
    ``window`` is the exposure time the fluctuations refer to; it is carried
    for reporting and does not enter the fidelity.
    """

    omega: float = TWO_PI * C_VACUUM / DEFAULT_WAVELENGTH
    jitter_kind: str = "gaussian_phase"
    sigma: float = 0.0
    window: float = 0.0

    def __post_init__(self) -> None:
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise InvalidParameterError(f"omega must be positive, got {self.omega!r}")
        if self.jitter_kind not in JITTER_KINDS:
            raise InvalidParameterError(f"jitter_kind must be one of {JITTER_KINDS}, got {self.jitter_kind!r}")
        if not (self.sigma >= 0 and math.isfinite(self.sigma)):
            raise InvalidParameterError(f"sigma must be >= 0, got {self.sigma!r}")
        if not self.window >= 0:
            raise InvalidParameterError(f"window must be >= 0, got {self.window!r}")

    @property
    def sigma_phi(self) -> float:
        """Standard deviation of the relative phase in rad."""
        if self.jitter_kind == "gaussian_timing":
            return self.omega * self.sigma
        return self.sigma


def link_phase(phi_up_w1: float, phi_up_st: float, phi_down_w1: float, phi_down_st: float) -> float:
    """Phase of a heralded pair: up-arm minus down-arm (input + Stokes photon)."""
    return wrap_phase((phi_up_w1 + phi_up_st) - (phi_down_w1 + phi_down_st))


def relative_phase(phi12: float, phi34: float) -> float:
    return wrap_phase(phi12 - phi34)


def swap_fidelity(delta_phi):
    """Overlap ``cos(dphi / 2)**2`` of the swapped state with its ``dphi = 0`` target."""
    return (1.0 + np.cos(delta_phi)) / 2.0


def analytic_mean_fidelity(sigma_phi: float) -> float:
    """Gaussian average of :func:`swap_fidelity`, ``(1 + exp(-sigma**2 / 2)) / 2``."""
    return (1.0 + math.exp(-sigma_phi**2 / 2.0)) / 2.0


def sampled_fidelity(model: PhaseModel, samples: int, rng_seed: int) -> tuple[float, float]:
    """Monte Carlo mean of the swap fidelity and its standard error."""
    if samples < 1:
        raise InvalidParameterError(f"samples must be >= 1, got {samples!r}")
    rng = np.random.default_rng(rng_seed)
    values = swap_fidelity(rng.normal(0.0, model.sigma_phi, size=samples))
    stderr = float(np.std(values, ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0
    return float(np.mean(values)), stderr


def mean_fidelity(model: PhaseModel, samples: int, rng_seed: int) -> tuple[float, float]:
    """Return ``(analytic, sampled)`` mean fidelity under the model's jitter."""
    sampled, _ = sampled_fidelity(model, samples, rng_seed)
    return analytic_mean_fidelity(model.sigma_phi), sampled


def phase_exposure_window(link: LinkParams) -> float:
    """Mean heralding time of ``link``, the interval over which the arm phases must hold."""
    return expected_link_time(link)
