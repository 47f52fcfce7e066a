"""Large-system rate-difference asymptotics for quantized beamforming.

All quantities live in the limit nt, nr, bits -> infinity with the ratios
nr_bar = nr / nt and b_bar = bits / nt held fixed.  The selected received
power per transmit antenna converges to a deterministic function of the
normalized bit budget; rates are measured as the stable offset
R - log2(rho * nt), which makes the feedback-interval trade-off finite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import optimize

from afpopt.finite import IntervalResult

_LN2 = math.log(2.0)


def bits_threshold(nr_bar: float) -> float:
    """Normalized bit budget where the asymptotic power law changes branch."""
    if nr_bar <= 0:
        raise ValueError("threshold is defined for nr_bar > 0; use the MISO form")
    s = math.sqrt(nr_bar)
    return (nr_bar * math.log(s / (1.0 + s)) + s) / _LN2


def asymptotic_power(x: float, nr_bar: float) -> float:
    """Limit of the per-antenna selected power at normalized budget x.

    nr_bar = 0 gives the closed MISO form 1 - 2^-x.  For nr_bar > 0 and
    x below the branch threshold, the value is the root g >= nr_bar of

        g^nr_bar exp(-g) = 2^-x (nr_bar / e)^nr_bar,

    found by bracketed root finding on the decreasing branch (quantization
    can only improve on the isotropic power nr_bar); past the threshold a
    closed form applies.  Continuous and non-decreasing in x, saturating
    at (1 + sqrt(nr_bar))^2.
    """
    if x < 0:
        raise ValueError("normalized bits must be nonnegative")
    if nr_bar < 0:
        raise ValueError("nr_bar must be nonnegative")
    if nr_bar == 0.0:
        return 1.0 - 2.0 ** (-x)
    if x == 0.0:
        return nr_bar
    s = math.sqrt(nr_bar)
    edge = (1.0 + s) ** 2
    if x >= bits_threshold(nr_bar):
        log_term = (
            0.5 * nr_bar * math.log(nr_bar)
            - (nr_bar - 1.0) * math.log(1.0 + s)
            + s
            - x * _LN2
        )
        return edge - math.exp(log_term)
    target = -x * _LN2 + nr_bar * (math.log(nr_bar) - 1.0)

    def h(g: float) -> float:
        return nr_bar * math.log(g) - g - target

    if h(nr_bar) <= 0.0:  # root pinned to the bracket edge (x ~ 0)
        return nr_bar
    return float(optimize.brentq(h, nr_bar, edge, xtol=1e-15, rtol=8.9e-16))


@dataclass(frozen=True)
class LargeSystemConfig:
    """Antenna ratio, per-antenna feedback rate, correlation, search horizon."""

    nr_bar: float
    b_bar: float
    alpha: float
    k_max: int = 64

    def __post_init__(self) -> None:
        if self.nr_bar < 0:
            raise ValueError("nr_bar must be nonnegative")
        if self.b_bar <= 0:
            raise ValueError("b_bar must be positive")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError("alpha must lie in [0, 1]")
        if self.k_max < 1:
            raise ValueError("k_max must be >= 1")


def rate_difference(num_blocks: int, cfg: LargeSystemConfig) -> float:
    """Asymptotic rate difference averaged over a feedback interval.

    For nr_bar > 0: mean over blocks of log2(nr_bar + a^(2k-2) (g - nr_bar))
    with g the asymptotic power at budget b_bar * K.  For nr_bar = 0 the
    MISO form (K-1) log2(alpha) + log2(1 - 2^-(b_bar K)) applies; it is
    -inf when alpha = 0 and K > 1 (a stale beamformer earns nothing).
    """
    if num_blocks < 1:
        raise ValueError("num_blocks must be >= 1")
    k = num_blocks
    if cfg.nr_bar == 0.0:
        gain = math.log2(-math.expm1(-cfg.b_bar * k * _LN2))
        if k == 1:
            return gain
        if cfg.alpha == 0.0:
            return -math.inf
        return (k - 1) * math.log2(cfg.alpha) + gain
    g = asymptotic_power(cfg.b_bar * k, cfg.nr_bar)
    total = 0.0
    for i in range(1, k + 1):
        total += math.log2(cfg.nr_bar + cfg.alpha ** (2 * i - 2) * (g - cfg.nr_bar))
    return total / k


def optimal_interval(cfg: LargeSystemConfig) -> IntervalResult:
    """Exhaustive argmax of the rate difference over K in [1, k_max]."""
    if cfg.alpha >= 1.0:
        # no staleness: the rate difference grows with the pooled budget
        return IntervalResult(cfg.k_max, rate_difference(cfg.k_max, cfg), True)
    best_k, best_v = 1, rate_difference(1, cfg)
    for k in range(2, cfg.k_max + 1):
        v = rate_difference(k, cfg)
        if v > best_v:
            best_k, best_v = k, v
    return IntervalResult(best_k, best_v, best_k == cfg.k_max)


def miso_interval_approx(b_bar: float, alpha: float) -> float:
    """Real-valued stationary point of the MISO rate difference.

    (1 / b_bar) log2(1 + b_bar ln 2 / ln(1/alpha)); rounding gives a good
    integer interval for moderate budgets.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("approximation requires 0 < alpha < 1")
    if b_bar <= 0:
        raise ValueError("b_bar must be positive")
    return math.log2(1.0 + b_bar * _LN2 / math.log(1.0 / alpha)) / b_bar


def miso_interval_small_budget(alpha: float) -> float:
    """Vanishing-budget limit of :func:`miso_interval_approx`."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("limit requires 0 < alpha < 1")
    return _LN2 / math.log(1.0 / alpha)


def afp_beats_mfp(cfg: LargeSystemConfig) -> tuple[int, ...]:
    """All K in [2, k_max] whose rate difference beats per-block feedback."""
    base = rate_difference(1, cfg)
    return tuple(
        k for k in range(2, cfg.k_max + 1) if rate_difference(k, cfg) > base
    )
