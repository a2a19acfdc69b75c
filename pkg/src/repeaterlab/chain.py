"""Entanglement distribution time over a nested repeater chain.

The chain has ``2**n`` elementary links of length ``L0 = L / 2**n``.
Analytic model::

    T = (L0 / (c P0)) * prod_{i=1..n} (3/2) / P_swap * 1 / P_post

with ``P_swap = s0 * eta_m * eta_d`` (one readout and detection per swap)
and ``P_post = post0 * (eta_m * eta_d)**2`` (two-sided final readout). The
factor 3/2 approximates the wait for the slower of two independent
segments. The memory efficiency thus enters as ``eta_m**-(n + 2)``.

The Monte Carlo works in integer time slots of ``L0 / c``. Each link
retries until heralded; a level-``i`` swap fires once both halves are
ready and, on failure, both halves are regenerated; the final
post-selection restarts the whole chain on failure.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidParameterError, TrialBudgetExceeded, ZeroProbabilityError
from .link import LinkParams, expected_link_time, link_success_probability

DEFAULT_CAP_SLOTS = 10**9
WAIT_FACTOR = 1.5


@dataclass(frozen=True)
class ChainConfig:
    """Nested chain over ``L`` km with nesting level ``n``.

    ``link`` supplies the loss budget of each elementary link; its ``L0``
    is ignored and replaced by ``L / 2**n`` (see :attr:`elementary_link`).
    ``tau_mem`` is the longest time a ready segment may idle before it is
    discarded (seconds, ``inf`` disables the cutoff).
    """

    L: float
    n: int
    link: LinkParams
    eta_m: float = 1.0
    swap_intrinsic: float = 0.5
    post_intrinsic: float = 0.5
    include_comm_delay: bool = False
    tau_mem: float = math.inf

    def __post_init__(self) -> None:
        if not (self.L > 0 and math.isfinite(self.L)):
            raise InvalidParameterError(f"L must be positive, got {self.L!r}")
        if isinstance(self.n, bool) or int(self.n) != self.n or self.n < 0:
            raise InvalidParameterError(f"n must be a non-negative integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        for name in ("eta_m", "swap_intrinsic", "post_intrinsic"):
            value = getattr(self, name)
            if not 0 <= value <= 1:
                raise InvalidParameterError(f"{name} must lie in [0, 1], got {value!r}")
        if not self.tau_mem > 0:
            raise InvalidParameterError(f"tau_mem must be positive, got {self.tau_mem!r}")

    @property
    def n_links(self) -> int:
        return 2**self.n

    @property
    def L0(self) -> float:
        return self.L / 2**self.n

    @property
    def elementary_link(self) -> LinkParams:
        return replace(self.link, L0=self.L0)

    @property
    def P0(self) -> float:
        return link_success_probability(self.elementary_link)

    @property
    def p_swap(self) -> float:
        return self.swap_intrinsic * self.eta_m * self.link.eta_d

    @property
    def p_post(self) -> float:
        return self.post_intrinsic * (self.eta_m * self.link.eta_d) ** 2


@dataclass(frozen=True)
class ChainResult:
    """Analytic and Monte Carlo distribution times (seconds).

    ``per_level_stats[i]`` is the mean time to build one level-``i``
    segment, measured from the start of its generation.
    """

    t_analytic: float
    t_mc_mean: float
    t_mc_stderr: float
    trials: int
    final_success_fraction: float = 1.0
    per_level_stats: tuple[float, ...] = field(default_factory=tuple)


def _swap_chain_factor(config: ChainConfig) -> float:
    """Multiplier on the link time from swapping and post-selection."""
    if config.p_swap <= 0 and config.n > 0:
        raise ZeroProbabilityError("swap success probability is zero")
    if config.p_post <= 0:
        raise ZeroProbabilityError("post-selection success probability is zero")
    return (WAIT_FACTOR / config.p_swap) ** config.n / config.p_post if config.n else 1.0 / config.p_post


def analytic_total_time(config: ChainConfig) -> float:
    """Expected time (s) to distribute one pair over the whole chain."""
    return expected_link_time(config.elementary_link) * _swap_chain_factor(config)


def dlcz_config(config: ChainConfig, p_dlcz: float, eta_m_dlcz: float) -> ChainConfig:
    """The same chain run with DLCZ links and memories."""
    return replace(config, link=replace(config.link, p=p_dlcz, dlcz=True), eta_m=eta_m_dlcz)


def dlcz_comparison(config_ours: ChainConfig, p_dlcz: float, eta_m_dlcz: float) -> float:
    """Speed-up ``T_DLCZ / T_ours`` for the same geometry and detectors.

    Evaluated as ``(P0 / P0_DLCZ) * (F_DLCZ / F_ours)`` where ``F`` is the
    swap-chain multiplier; the common attempt period cancels exactly.
    """
    theirs = dlcz_config(config_ours, p_dlcz, eta_m_dlcz)
    p0_ours = config_ours.P0
    p0_theirs = theirs.P0
    if p0_ours <= 0 or p0_theirs <= 0:
        raise ZeroProbabilityError("link success probability is zero")
    return (p0_ours / p0_theirs) * (_swap_chain_factor(theirs) / _swap_chain_factor(config_ours))


class _UniformStream:
    """Buffered uniform draws; refilled in blocks to keep per-draw cost low."""

    __slots__ = ("_rng", "_buf", "_i")
    BLOCK = 2048

    def __init__(self, rng: np.random.Generator):
        self._rng = rng
        self._buf: list[float] = []
        self._i = 0

    def next(self) -> float:
        if self._i >= len(self._buf):
            self._buf = self._rng.random(self.BLOCK).tolist()
            self._i = 0
        u = self._buf[self._i]
        self._i += 1
        return u


class _Trial:
    def __init__(self, config: ChainConfig, cap_slots: int, rng: np.random.Generator):
        self.n = config.n
        self.p0 = config.P0
        self.log_fail = math.log1p(-self.p0) if self.p0 < 1 else None
        self.p_swap = config.p_swap
        self.p_post = config.p_post
        self.comm = config.include_comm_delay
        period = config.elementary_link.attempt_period
        if math.isinf(config.tau_mem):
            self.tau_slots = None
        else:
            self.tau_slots = max(1, math.floor(config.tau_mem / period))
        self.cap = cap_slots
        self.u = _UniformStream(rng)
        self.level_sum = [0] * (self.n + 1)
        self.level_count = [0] * (self.n + 1)

    def _attempts(self) -> int:
        if self.log_fail is None:
            return 1
        return int(math.log1p(-self.u.next()) / self.log_fail) + 1

    def _segment(self, level: int, start: int) -> int:
        if start > self.cap:
            raise TrialBudgetExceeded(f"trial exceeded {self.cap} slots")
        if level == 0:
            ready = start + self._attempts()
        else:
            sub = level - 1
            left = self._segment(sub, start)
            right = self._segment(sub, start)
            delay = 2 ** (level - 1) if self.comm else 0
            while True:
                if self.tau_slots is not None:
                    while abs(left - right) > self.tau_slots:
                        if left < right:
                            left = self._segment(sub, left + self.tau_slots)
                        else:
                            right = self._segment(sub, right + self.tau_slots)
                fire = max(left, right) + delay
                if self.u.next() < self.p_swap:
                    ready = fire
                    break
                left = self._segment(sub, fire)
                right = self._segment(sub, fire)
        self.level_sum[level] += ready - start
        self.level_count[level] += 1
        return ready

    def run(self) -> int:
        t = 0
        while True:
            t = self._segment(self.n, t)
            if t > self.cap:
                raise TrialBudgetExceeded(f"trial exceeded {self.cap} slots")
            if self.u.next() < self.p_post:
                return t


def _trial_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _run_block(config: ChainConfig, seed: int, first: int, last: int, cap_slots: int,
               cap_time_slots: float | None):
    total = 0
    total_sq = 0
    within = 0
    level_sum = [0] * (config.n + 1)
    level_count = [0] * (config.n + 1)
    for i in range(first, last):
        trial = _Trial(config, cap_slots, _trial_rng(seed, i))
        slots = trial.run()
        total += slots
        total_sq += slots * slots
        if cap_time_slots is None or slots <= cap_time_slots:
            within += 1
        for lvl in range(config.n + 1):
            level_sum[lvl] += trial.level_sum[lvl]
            level_count[lvl] += trial.level_count[lvl]
    return total, total_sq, within, level_sum, level_count


def monte_carlo_total_time(
    config: ChainConfig,
    trials: int,
    rng_seed: int,
    cap_slots: int = DEFAULT_CAP_SLOTS,
    time_cap: float | None = None,
    workers: int = 1,
) -> ChainResult:
    """Simulate ``trials`` independent runs of the nested protocol.

    Trial ``i`` draws from its own generator spawned from ``rng_seed``, and
    all accumulation is in exact integer slot counts, so the result does
    not depend on ``workers`` or on the order blocks finish in.

    Parameters
    ----------
    cap_slots : int
        A trial running past this many slots raises :class:`TrialBudgetExceeded`.
    time_cap : float, optional
        Deadline in seconds used only for ``final_success_fraction``.
    workers : int
        Number of worker processes; 1 runs in-process.
    """
    if trials < 1:
        raise InvalidParameterError(f"trials must be >= 1, got {trials!r}")
    if config.P0 <= 0:
        raise ZeroProbabilityError("link success probability is zero")
    analytic = analytic_total_time(config)
    period = config.elementary_link.attempt_period
    cap_time_slots = None if time_cap is None else time_cap / period

    if workers <= 1:
        blocks = [_run_block(config, rng_seed, 0, trials, cap_slots, cap_time_slots)]
    else:
        edges = np.linspace(0, trials, workers + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_run_block, config, rng_seed, int(a), int(b), cap_slots, cap_time_slots)
                for a, b in zip(edges[:-1], edges[1:]) if b > a
            ]
            blocks = [f.result() for f in futures]

    total = sum(b[0] for b in blocks)
    total_sq = sum(b[1] for b in blocks)
    within = sum(b[2] for b in blocks)
    level_sum = [sum(b[3][lvl] for b in blocks) for lvl in range(config.n + 1)]
    level_count = [sum(b[4][lvl] for b in blocks) for lvl in range(config.n + 1)]

    mean_slots = total / trials
    if trials > 1:
        # exact integer arithmetic until the final division
        var_slots = (trials * total_sq - total * total) / (trials * (trials - 1))
        stderr = math.sqrt(max(var_slots, 0.0) / trials) * period
    else:
        stderr = 0.0
    per_level = tuple(
        (s / c) * period if c else math.nan for s, c in zip(level_sum, level_count)
    )
    return ChainResult(
        t_analytic=analytic,
        t_mc_mean=mean_slots * period,
        t_mc_stderr=stderr,
        trials=trials,
        final_success_fraction=within / trials,
        per_level_stats=per_level,
    )
