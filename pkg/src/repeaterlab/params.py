"""Physical parameters of one atom-cavity building block.

All rates are angular (rad/s). The upper-level decay of the Rb preset is
``gamma3 = 2*pi * 6e6`` rad/s, i.e. a 6 MHz linewidth expressed in rad/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

from .errors import InvalidParameterError

C_VACUUM = 2.998e8  # m/s

# Far-detuned regime is flagged when delta exceeds this multiple of the
# largest of (k, g1, g2).
FAR_DETUNING_FACTOR = 10.0


def _require_positive(**values: float) -> None:
    for name, value in values.items():
        if not (value > 0 and math.isfinite(value)):
            raise InvalidParameterError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class AtomCavityParams:
    """Inputs of the effective Raman model for one ensemble in a cavity.

    Parameters
    ----------
    N : float
        Number of atoms, ``N >= 1``.
    g1, g2 : float
        Atom-field couplings on the input and Stokes transitions (rad/s).
    delta : float
        One-photon detuning from the upper level (rad/s).
    gamma3 : float
        Spontaneous decay rate of the upper level (rad/s).
    k : float
        Cavity decay rate of the Stokes mode (rad/s).
    L : float
        Sample length (m).
    c : float
        Light speed used for the input-field transit rate (m/s).
    """

    N: float
    g1: float
    g2: float
    delta: float
    gamma3: float
    k: float
    L: float
    c: float = C_VACUUM

    def __post_init__(self) -> None:
        if not (self.N >= 1 and math.isfinite(self.N)):
            raise InvalidParameterError(f"N must be >= 1, got {self.N!r}")
        _require_positive(
            g1=self.g1, g2=self.g2, delta=self.delta, gamma3=self.gamma3,
            k=self.k, L=self.L, c=self.c,
        )

    @property
    def far_detuned(self) -> bool:
        """True when ``delta >= 10 * max(k, g1, g2)``. Reported, never enforced."""
        return self.delta >= FAR_DETUNING_FACTOR * max(self.k, self.g1, self.g2)


@dataclass(frozen=True)
class DerivedRates:
    """Composite rates entering the two-mode amplitude equations.

    ``G`` is the effective Raman coupling, ``chi`` the input-field damping
    rate, ``Gamma`` the single-atom fluorescence rate and ``eta`` the
    cooperativity ``4 N G**2 / (chi k)``. ``N`` and ``k`` are carried along
    because the dynamics need them separately.

    Built directly (without :func:`derive_rates`) this record also admits the
    formal limits ``G = 0``, ``Gamma = 0`` and ``N = 0`` used in tests and
    dimensionless runs.
    """

    G: float
    chi: float
    Gamma: float
    N: float
    k: float
    eta: float = field(init=False)

    def __post_init__(self) -> None:
        _require_positive(chi=self.chi, k=self.k)
        for name in ("G", "Gamma", "N"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise InvalidParameterError(f"{name} must be >= 0, got {value!r}")
        object.__setattr__(self, "eta", 4.0 * self.N * self.G**2 / (self.chi * self.k))

    @property
    def collective_coupling(self) -> float:
        """``G * sqrt(N)``, the rate that couples the two cavity modes."""
        return self.G * math.sqrt(self.N)

    @property
    def fluorescence_loss(self) -> float:
        """``Gamma * N``, the extra damping of the input field."""
        return self.Gamma * self.N

    @classmethod
    def from_cooperativity(cls, eta: float, chi: float = 1.0, k: float = 1.0,
                           Gamma: float = 0.0, N: float = 1.0) -> "DerivedRates":
        """Rates with the coupling chosen so that the cooperativity equals ``eta``."""
        if eta < 0:
            raise InvalidParameterError(f"eta must be >= 0, got {eta!r}")
        G = math.sqrt(eta * chi * k / (4.0 * N))
        return cls(G=G, chi=chi, Gamma=Gamma, N=N, k=k)


def derive_rates(params: AtomCavityParams) -> DerivedRates:
    """Effective Raman coupling, transit rate, fluorescence rate and cooperativity."""
    G = params.g1 * params.g2 / params.delta
    chi = params.c / params.L
    Gamma = (params.g1 / params.delta) ** 2 * params.gamma3
    return DerivedRates(G=G, chi=chi, Gamma=Gamma, N=params.N, k=params.k)


def required_atom_number(params: AtomCavityParams) -> float:
    """Atom number at which the cooperativity is exactly one (``chi k / 4G**2``)."""
    rates = derive_rates(params)
    return rates.chi * rates.k / (4.0 * rates.G**2)


def fluorescence_ratio(params: AtomCavityParams | DerivedRates) -> float:
    """Fraction ``Gamma N / chi``; the model assumes it is much less than one.

    Values of 0.1 or more mean fluorescence losses can no longer be ignored.
    """
    rates = params if isinstance(params, DerivedRates) else derive_rates(params)
    return rates.Gamma * rates.N / rates.chi


def with_unit_cooperativity(params: AtomCavityParams) -> AtomCavityParams:
    """Copy of ``params`` with ``N`` replaced by :func:`required_atom_number`."""
    return replace(params, N=required_atom_number(params))


_GAMMA_RB = 2 * math.pi * 6e6

PRESETS: dict[str, dict[str, float]] = {
    # 87Rb D2 line, values as quoted for the building block; N is the quoted
    # order of magnitude, not the impedance-matched number.
    "rb87-paper": {
        "N": 1e6,
        "g1": 10 * _GAMMA_RB,
        "g2": 10 * _GAMMA_RB,
        "delta": 50 * _GAMMA_RB,
        "gamma3": _GAMMA_RB,
        "k": 3 * _GAMMA_RB,
        "L": 1e-4,
        "c": C_VACUUM,
    },
}


def preset(name: str, **overrides: float) -> AtomCavityParams:
    """Named parameter set, optionally with some fields replaced."""
    try:
        values = dict(PRESETS[name])
    except KeyError:
        raise InvalidParameterError(
            f"unknown preset {name!r}; choose from {sorted(PRESETS)}"
        ) from None
    unknown = set(overrides) - set(values)
    if unknown:
        raise InvalidParameterError(f"unknown preset fields {sorted(unknown)}")
    values.update(overrides)
    return AtomCavityParams(**values)
