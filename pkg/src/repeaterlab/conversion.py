"""Raman conversion of a single input photon into a cavity Stokes photon.

Two routes are provided. :func:`stokes_probability` and :func:`leak_fraction`
are the long-pulse (adiabatic) closed forms. :func:`simulate_conversion`
integrates the mean-amplitude equations in the one-excitation subspace,

    da1/dt = -i G sqrt(N) a2 - (chi + Gamma N)/2 a1 - sqrt(chi) f(t)
    da2/dt = -i G sqrt(N) a1 - k/2 a2

with output modes ``Phi1 = f + sqrt(chi) a1`` and ``Phi2 = sqrt(k) a2``.
Photon numbers are integrated as extra ODE components so their accuracy is
set by the integrator tolerance and not by the reporting grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    ConvergenceError,
    DegenerateInputError,
    DomainError,
    GridError,
    InvalidParameterError,
)
from .params import AtomCavityParams, DerivedRates, derive_rates

PULSE_KINDS = ("gaussian", "square", "sampled")

# Gaussian amplitude falls to ~1e-8 of its peak at 9 intensity widths.
_GAUSS_HALF_SUPPORT = 9.0
# Homogeneous response decays by exp(-35) ~ 6e-16 over the trailing pad.
_TAIL_EFOLDS = 35.0


def stokes_probability(eta: float) -> float:
    """Fraction of the input photon converted to Stokes, ``4 eta / (1 + eta)**2``."""
    if not eta >= 0:
        raise DomainError(f"cooperativity must be >= 0, got {eta!r}")
    if math.isinf(eta):
        return 0.0
    return 4.0 * eta / (1.0 + eta) ** 2


def leak_fraction(eta: float) -> float:
    """Fraction of the input photon leaving unconverted, ``(1 - eta)**2 / (1 + eta)**2``."""
    if not eta >= 0:
        raise DomainError(f"cooperativity must be >= 0, got {eta!r}")
    if math.isinf(eta):
        return 1.0
    return (1.0 - eta) ** 2 / (1.0 + eta) ** 2


@dataclass(frozen=True, eq=False)
class PulseEnvelope:
    """Temporal mode ``f(t)`` of the input photon, normalized to one photon.

    Use the :meth:`gaussian`, :meth:`square` and :meth:`sampled`
    constructors. For a gaussian, ``width`` is the standard deviation of
    ``|f|**2``; for a square pulse it is the full duration. Sampled pulses
    are linearly interpolated between points ``start + j*dt`` and are zero
    outside them; the samples are rescaled so the interpolant carries
    exactly one photon.
    """

    kind: str
    t0: float = 0.0
    width: float = 1.0
    samples: np.ndarray | None = None
    dt: float | None = None
    start: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in PULSE_KINDS:
            raise InvalidParameterError(f"pulse kind must be one of {PULSE_KINDS}, got {self.kind!r}")
        if self.kind == "sampled":
            if self.samples is None or self.dt is None or not self.dt > 0:
                raise InvalidParameterError("sampled pulse needs samples and a positive dt")
            s = np.asarray(self.samples, dtype=complex).ravel()
            if s.size < 2:
                raise InvalidParameterError("sampled pulse needs at least two samples")
            # exact norm of the piecewise-linear interpolant
            a, b = s[:-1], s[1:]
            norm = self.dt * np.sum(np.abs(a) ** 2 + np.real(a * np.conj(b)) + np.abs(b) ** 2) / 3.0
            if not norm > 0:
                raise InvalidParameterError("sampled pulse is identically zero")
            s = s / math.sqrt(norm)
            s.setflags(write=False)
            object.__setattr__(self, "samples", s)
        elif not (self.width > 0 and math.isfinite(self.width)):
            raise InvalidParameterError(f"pulse width must be positive, got {self.width!r}")

    @classmethod
    def gaussian(cls, sigma_t: float, t0: float = 0.0) -> "PulseEnvelope":
        return cls("gaussian", t0=t0, width=sigma_t)

    @classmethod
    def square(cls, duration: float, t0: float = 0.0) -> "PulseEnvelope":
        return cls("square", t0=t0, width=duration)

    @classmethod
    def sampled(cls, samples, dt: float, start: float = 0.0) -> "PulseEnvelope":
        return cls("sampled", samples=np.asarray(samples), dt=dt, start=start)

    def amplitude(self, t):
        """Complex amplitude ``f(t)`` in s**-1/2; accepts scalars or arrays."""
        t = np.asarray(t, dtype=float)
        if self.kind == "gaussian":
            s = self.width
            out = (2 * math.pi * s * s) ** -0.25 * np.exp(-((t - self.t0) ** 2) / (4 * s * s))
            return out.astype(complex)
        if self.kind == "square":
            half = self.width / 2
            inside = (t >= self.t0 - half) & (t < self.t0 + half)
            return np.where(inside, 1.0 / math.sqrt(self.width), 0.0).astype(complex)
        grid = self.start + self.dt * np.arange(self.samples.size)
        re = np.interp(t, grid, self.samples.real, left=0.0, right=0.0)
        im = np.interp(t, grid, self.samples.imag, left=0.0, right=0.0)
        return re + 1j * im

    def support(self) -> tuple[float, float]:
        """Interval outside which ``f`` is negligible (gaussian) or zero."""
        if self.kind == "gaussian":
            half = _GAUSS_HALF_SUPPORT * self.width
            return self.t0 - half, self.t0 + half
        if self.kind == "square":
            return self.t0 - self.width / 2, self.t0 + self.width / 2
        return self.start, self.start + self.dt * (self.samples.size - 1)

    def timescale(self) -> float:
        """Shortest feature of the envelope; bounds the adaptive step."""
        if self.kind == "gaussian":
            return self.width
        if self.kind == "square":
            return self.width
        return self.dt

    def peak(self) -> float:
        if self.kind == "gaussian":
            return (2 * math.pi * self.width**2) ** -0.25
        if self.kind == "square":
            return 1.0 / math.sqrt(self.width)
        return float(np.max(np.abs(self.samples)))


@dataclass(frozen=True)
class SolverSettings:
    """Integration controls for :func:`simulate_conversion`.

    ``method`` is any explicit or implicit :func:`scipy.integrate.solve_ivp`
    method, or ``"rk4"`` for the fixed-step classical Runge-Kutta fallback.
    ``step`` is the fixed step (defaults to ``0.1 / max(chi, k, G sqrt(N))``).
    ``window`` overrides the automatic ``(t_start, t_end)``.
    """

    method: str = "DOP853"
    rtol: float = 1e-8
    atol: float = 1e-10
    step: float | None = None
    n_grid: int = 2001
    window: tuple[float, float] | None = None
    conservation_tol: float = 1e-6
    edge_tol: float = 1e-6

    def __post_init__(self) -> None:
        if self.n_grid < 2:
            raise InvalidParameterError("n_grid must be at least 2")
        if not (self.rtol > 0 and self.atol > 0 and self.conservation_tol > 0):
            raise InvalidParameterError("tolerances must be positive")
        if self.step is not None and not self.step > 0:
            raise InvalidParameterError("fixed step must be positive")


@dataclass(frozen=True, eq=False)
class ConversionResult:
    """Output of one conversion run.

    ``phi1``/``phi2`` are the output mode functions sampled on ``t``;
    ``n1_cum``/``n2_cum`` are the cumulative output photon numbers on the
    same grid. ``p`` is ``n2_out / n_in`` and ``spin_excitations`` equals
    ``n2_out`` (one spin excitation is left per emitted Stokes photon).
    """

    t: np.ndarray
    f: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    n1_cum: np.ndarray
    n2_cum: np.ndarray
    n_in: float
    n1_out: float
    n2_out: float
    n_fluor: float
    p: float
    rates: DerivedRates
    pulse: PulseEnvelope
    overlap: float = field(repr=False)
    nfev: int = 0

    @property
    def spin_excitations(self) -> float:
        return self.n2_out

    @property
    def eta(self) -> float:
        return self.rates.eta

    @property
    def balance_error(self) -> float:
        return abs(self.n1_out + self.n2_out + self.n_fluor - self.n_in)

    @property
    def amplitudes(self) -> tuple[float, float]:
        return output_state(self)


def _as_rates(params: AtomCavityParams | DerivedRates) -> DerivedRates:
    if isinstance(params, DerivedRates):
        return params
    if isinstance(params, AtomCavityParams):
        return derive_rates(params)
    raise TypeError(f"expected AtomCavityParams or DerivedRates, got {type(params).__name__}")


def _coupling_matrix(rates: DerivedRates) -> np.ndarray:
    omega = rates.collective_coupling
    return np.array(
        [[-(rates.chi + rates.fluorescence_loss) / 2, -1j * omega],
         [-1j * omega, -rates.k / 2]],
        dtype=complex,
    )


def _auto_window(rates: DerivedRates, pulse: PulseEnvelope) -> tuple[float, float]:
    lo, hi = pulse.support()
    if pulse.kind == "square":
        lo -= 0.01 * pulse.width
    slowest = float(np.min(-np.linalg.eigvals(_coupling_matrix(rates)).real))
    return lo, hi + _TAIL_EFOLDS / slowest


def _make_rhs(rates: DerivedRates, pulse: PulseEnvelope):
    m = _coupling_matrix(rates)
    m11, m12, m21, m22 = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    sq_chi = math.sqrt(rates.chi)
    sq_k = math.sqrt(rates.k)
    loss = rates.fluorescence_loss

    # state: Re a1, Im a1, Re a2, Im a2, n_in, n1, n2, n_fluor, overlap
    def rhs(t, y):
        a1 = y[0] + 1j * y[1]
        a2 = y[2] + 1j * y[3]
        f = complex(pulse.amplitude(t))
        d1 = m11 * a1 + m12 * a2 - sq_chi * f
        d2 = m21 * a1 + m22 * a2
        phi1 = f + sq_chi * a1
        phi2 = sq_k * a2
        af = abs(f)
        ap2 = abs(phi2)
        return np.array([
            d1.real, d1.imag, d2.real, d2.imag,
            af * af,
            abs(phi1) ** 2,
            ap2 * ap2,
            loss * abs(a1) ** 2,
            ap2 * af,
        ])

    return rhs


def _rk4(rhs, t_start: float, t_end: float, h: float, grid: np.ndarray) -> tuple[np.ndarray, int]:
    n_steps = max(1, math.ceil((t_end - t_start) / h))
    h = (t_end - t_start) / n_steps
    y = np.zeros(9)
    ts = t_start + h * np.arange(n_steps + 1)
    ys = np.empty((n_steps + 1, 9))
    ys[0] = y
    t = t_start
    for i in range(n_steps):
        k1 = rhs(t, y)
        k2 = rhs(t + h / 2, y + h / 2 * k1)
        k3 = rhs(t + h / 2, y + h / 2 * k2)
        k4 = rhs(t + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = ts[i + 1]
        ys[i + 1] = y
    out = np.empty((9, grid.size))
    for j in range(9):
        out[j] = np.interp(grid, ts, ys[:, j])
    # keep integrated totals exact at the final time
    out[:, -1] = ys[-1]
    return out, 4 * n_steps


def simulate_conversion(
    params: AtomCavityParams | DerivedRates,
    pulse: PulseEnvelope,
    solver: SolverSettings | None = None,
) -> ConversionResult:
    """Integrate the amplitude equations for one input photon.

    Raises
    ------
    GridError
        If the pulse or the response is not negligible at the window edges.
    ConvergenceError
        If the integrator fails or photon-number balance is violated by more
        than ``solver.conservation_tol``.
    """
    solver = solver or SolverSettings()
    rates = _as_rates(params)
    t_start, t_end = solver.window or _auto_window(rates, pulse)
    if not t_end > t_start:
        raise GridError(f"empty integration window ({t_start}, {t_end})")

    peak = pulse.peak()
    edge = np.abs(pulse.amplitude([t_start, t_end]))
    if np.any(edge > solver.edge_tol * peak):
        raise GridError("pulse amplitude at the window edge exceeds the edge tolerance")

    rhs = _make_rhs(rates, pulse)
    grid = np.linspace(t_start, t_end, solver.n_grid)
    fastest = max(rates.chi, rates.k, rates.collective_coupling, rates.fluorescence_loss)

    if solver.method == "rk4":
        limit = 0.1 / fastest
        h = solver.step if solver.step is not None else limit
        if h > limit * (1 + 1e-12):
            raise InvalidParameterError(f"fixed step {h} exceeds 0.1/max rate = {limit}")
        y, nfev = _rk4(rhs, t_start, t_end, h, grid)
    else:
        # the bound keeps the adaptive stepper from skipping over the pulse
        max_step = pulse.timescale() / 5
        if pulse.kind == "square":
            max_step = min(max_step, 0.5 / fastest)
        sol = solve_ivp(
            rhs, (t_start, t_end), np.zeros(9), method=solver.method, t_eval=grid,
            rtol=solver.rtol, atol=solver.atol, max_step=max_step,
        )
        if not sol.success:
            raise ConvergenceError(f"integrator failed: {sol.message}")
        y, nfev = sol.y, int(sol.nfev)

    a1 = y[0] + 1j * y[1]
    a2 = y[2] + 1j * y[3]
    f = pulse.amplitude(grid)
    phi1 = f + math.sqrt(rates.chi) * a1
    phi2 = math.sqrt(rates.k) * a2

    n_in, n1, n2, nf, overlap = (float(v) for v in y[4:, -1])
    if abs(n1 + n2 + nf - n_in) > solver.conservation_tol:
        raise ConvergenceError(
            f"photon balance violated: n1+n2+nfluor-n_in = {n1 + n2 + nf - n_in:.3e}"
        )
    tail = max(abs(phi1[-1]), abs(phi2[-1]))
    if tail > solver.edge_tol * peak:
        raise GridError("output field has not decayed at the end of the window")
    return ConversionResult(
        t=grid, f=f, phi1=phi1, phi2=phi2, n1_cum=y[5].copy(), n2_cum=y[6].copy(),
        n_in=n_in, n1_out=n1, n2_out=n2, n_fluor=nf, p=n2 / n_in,
        rates=rates, pulse=pulse, overlap=overlap, nfev=nfev,
    )


def waveform_fidelity(result: ConversionResult, pulse: PulseEnvelope | None = None) -> float:
    """Normalized overlap of ``|Phi2|`` with ``|f|``: ``int |Phi2||f| dt / sqrt(n2_out)``.

    Uses the overlap integrated alongside the dynamics when ``pulse`` is the
    one the run was driven with; otherwise falls back to quadrature on the
    result grid.
    """
    if result.n2_out < 1e-9:
        raise DegenerateInputError(f"no Stokes output (n2_out = {result.n2_out:.3e})")
    if pulse is None or pulse is result.pulse:
        overlap = result.overlap
    else:
        overlap = float(np.trapezoid(np.abs(result.phi2) * np.abs(pulse.amplitude(result.t)), result.t))
    return overlap / math.sqrt(result.n2_out)


def output_state(result: ConversionResult) -> tuple[float, float]:
    """Branch amplitudes ``(sqrt(n1_out), sqrt(n2_out))``.

    The first multiplies "no spin excitation, photon left in the input
    mode"; the second "one spin excitation, one Stokes photon". Their
    squares sum to ``1 - n_fluor``.
    """
    return math.sqrt(max(result.n1_out, 0.0)), math.sqrt(max(result.n2_out, 0.0))


TIMESERIES_COLUMNS = ("t", "re_f", "im_f", "abs_phi1_sq", "abs_phi2_sq", "n1_cum", "n2_cum")


def timeseries_rows(result: ConversionResult) -> list[tuple[float, ...]]:
    """Rows matching :data:`TIMESERIES_COLUMNS` for CSV export."""
    p1 = np.abs(result.phi1) ** 2
    p2 = np.abs(result.phi2) ** 2
    return [
        (float(t), float(f.real), float(f.imag), float(a), float(b), float(c), float(d))
        for t, f, a, b, c, d in zip(result.t, result.f, p1, p2, result.n1_cum, result.n2_cum)
    ]
