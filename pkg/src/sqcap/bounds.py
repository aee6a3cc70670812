"""Closed-form capacity values, bound pairs, and quantizer allocations.

Rates are in bits per channel use throughout.  The scalar building block is
the binary channel made by sign-quantizing a Gaussian: its capacity is
1 - H2(Q(sqrt(P))).  Multi-antenna and multi-quantizer cases wrap that value
in upper/lower pairs with stated additive gaps, and the two allocators split
a power budget P and a quantizer budget across parallel subchannels, one by
relaxed water-filling and one by exhaustive integer search.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .channel import ChannelMatrix
from .tailmath import binary_entropy, q_function

__all__ = [
    "AllocationBranch",
    "AllocationResult",
    "BoundPair",
    "BudgetError",
    "allocate_integer_oracle",
    "mimo_sign_highsnr_bounds",
    "mimo_single_select_bounds",
    "miso_sign_capacity",
    "simo_linear_bounds",
    "simo_multi_select_bounds",
    "simo_sign_highsnr_bounds",
    "simo_single_select_bounds",
    "siso_multilevel_bounds",
    "siso_sign_capacity",
    "waterfill_relaxed",
]

_PAIR_TOL = 1e-12
_WF_TOL = 1e-9
_WF_MAX_BISECT = 200

#: Exhaustive-search budget for the integer allocator.
ORACLE_MAX_CHANNELS = 8
ORACLE_MAX_QUANTIZERS = 64

_ORACLE_CHUNK = 1 << 17


class BudgetError(ValueError):
    """Raised when a problem exceeds the exhaustive-search budget."""


class AllocationBranch(str, Enum):
    POWER_LIMITED = "power-limited"
    QUANTIZER_LIMITED = "quantizer-limited"


@dataclass(frozen=True)
class BoundPair:
    """Lower and upper rate bounds in bits, with the claimed additive gap.

    ``argmax_k`` carries the maximizing subchannel count when the lower
    bound optimizes over one; ``flags`` lists validity conditions of the
    lower bound that the inputs fail (advisory, never fatal).
    """

    lower: float
    upper: float
    gap_claim: float
    argmax_k: int | None = None
    flags: tuple = ()

    def __post_init__(self):
        if math.isfinite(self.lower) and self.lower > self.upper + _PAIR_TOL:
            raise ValueError(f"lower bound {self.lower!r} exceeds upper bound {self.upper!r}")

    def to_csv_row(self) -> str:
        k = "" if self.argmax_k is None else str(self.argmax_k)
        flags = ";".join(self.flags)
        return f"{self.lower:.12g},{self.upper:.12g},{self.gap_claim:.12g},{k},{flags}"


@dataclass(frozen=True, eq=False)
class AllocationResult:
    """Power and quantizer split across parallel subchannels.

    ``quantizer_shares`` are real for the relaxed solver and integers for
    the exhaustive one; ``active_count`` counts strictly positive powers.
    """

    gains: np.ndarray
    power_budget: float
    quantizer_budget: int
    powers: np.ndarray
    quantizer_shares: np.ndarray
    active_count: int
    water_level: float
    rate: float
    branch: AllocationBranch

    def __post_init__(self):
        for name in ("gains", "powers", "quantizer_shares"):
            arr = np.array(getattr(self, name), dtype=np.float64)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(self.powers < 0) or np.any(self.quantizer_shares < 0):
            raise ValueError("allocations must be nonnegative")
        if self.powers.sum() > self.power_budget * (1 + _WF_TOL) + _WF_TOL:
            raise ValueError(
                f"powers sum to {self.powers.sum()!r}, over budget {self.power_budget!r}"
            )
        if self.quantizer_shares.sum() > self.quantizer_budget + _WF_TOL:
            raise ValueError(
                f"quantizer shares sum to {self.quantizer_shares.sum()!r}, "
                f"over budget {self.quantizer_budget}"
            )
        if self.active_count != int(np.count_nonzero(self.powers > 0)):
            raise ValueError(
                f"active_count {self.active_count} does not match "
                f"{np.count_nonzero(self.powers > 0)} positive powers"
            )
        if self.water_level < 0:
            raise ValueError(f"water level must be nonnegative, got {self.water_level!r}")

    def to_csv_row(self) -> str:
        powers = ";".join(f"{p:.12g}" for p in self.powers)
        shares = ";".join(f"{s:.12g}" for s in self.quantizer_shares)
        return (
            f"{self.rate:.12g},{self.branch.value},{self.active_count},"
            f"{self.water_level:.12g},{powers},{shares}"
        )


def _check_power(power: float) -> float:
    p = float(power)
    if not (math.isfinite(p) and p >= 0):
        raise ValueError(f"power must be finite and nonnegative, got {power!r}")
    return p


def _check_n_sq(n_sq: int) -> int:
    n = int(n_sq)
    if n < 1 or n != n_sq:
        raise ValueError(f"quantizer count must be a positive integer, got {n_sq!r}")
    return n


def _check_gain_vector(h) -> np.ndarray:
    v = np.asarray(h, dtype=np.float64)
    if v.ndim != 1 or v.size < 1:
        raise ValueError(f"gain vector must be 1-D and nonempty, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("gain vector must be finite")
    return v


def siso_sign_capacity(power: float) -> float:
    """Capacity in bits of a unit-noise scalar channel seen through one sign."""
    p = _check_power(power)
    return 1.0 - binary_entropy(q_function(math.sqrt(p)))


def miso_sign_capacity(h, power: float) -> float:
    """Transmit beamforming onto a single sign quantizer: gain ||h||_2."""
    v = _check_gain_vector(h)
    p = _check_power(power)
    return 1.0 - binary_entropy(q_function(float(np.linalg.norm(v)) * math.sqrt(p)))


def simo_sign_highsnr_bounds(n_rx: int) -> BoundPair:
    """High-SNR capacity of one antenna sign-quantized n_rx times."""
    n = int(n_rx)
    if n < 1:
        raise ValueError(f"n_rx must be a positive integer, got {n_rx!r}")
    lo, hi = math.log2(n), math.log2(n + 1)
    return BoundPair(lo, hi, hi - lo)


def mimo_sign_highsnr_bounds(n_sq: int, n_tx: int) -> BoundPair:
    """High-SNR bounds for n_sq signs on n_tx transmit antennas.

    With n_tx >= n_sq the value is exactly n_sq bits.  Otherwise the bounds
    are half the log of K (and K+1), where K counts the sign patterns a
    depth-2 n_tx-dimensional signal set can produce, a binomial sum kept in
    exact integer arithmetic; log2 of a Python integer never overflows, so
    no further guard is needed.
    """
    m = _check_n_sq(n_sq)
    t = int(n_tx)
    if t < 1:
        raise ValueError(f"n_tx must be a positive integer, got {n_tx!r}")
    if t >= m:
        return BoundPair(float(m), float(m), 0.0)
    k = sum(math.comb(2 * m - 1, j) for j in range(2 * t))
    lo, hi = 0.5 * math.log2(k), 0.5 * math.log2(k + 1)
    return BoundPair(lo, hi, hi - lo)


def _capped_half_log(snr_term: float, n_sq: int) -> float:
    return 0.5 * math.log2(min(snr_term, float(n_sq + 1) ** 2))


def siso_multilevel_bounds(power: float, n_sq: int) -> BoundPair:
    """Scalar channel with a budget of n_sq sign quantizers, gap one bit."""
    p = _check_power(power)
    m = _check_n_sq(n_sq)
    upper = _capped_half_log(p + 1.0, m)
    return BoundPair(max(upper - 1.0, 0.0), upper, 1.0)


def simo_single_select_bounds(h, power: float, n_sq: int) -> BoundPair:
    """All quantizers on one receive antenna, best antenna chosen."""
    v = _check_gain_vector(h)
    p = _check_power(power)
    m = _check_n_sq(n_sq)
    h_max = float(np.max(np.abs(v)))
    upper = _capped_half_log(1.0 + h_max * h_max * p, m)
    return BoundPair(max(upper - 0.5, 0.0), upper, 0.5)


def simo_multi_select_bounds(h, power: float, n_sq: int) -> BoundPair:
    """Quantizers split across antennas, evenly over the best K of them.

    The lower bound maximizes over how many antennas share the budget; the
    chosen count is reported as ``argmax_k``.  Its derivation assumes
    P > log2(n_sq) > 2 and every antenna gain above one; inputs outside
    that regime get advisory ``flags`` instead of an error.
    """
    v = _check_gain_vector(h)
    p = _check_power(power)
    m = _check_n_sq(n_sq)
    sq = np.sort(v * v)[::-1]
    cum = np.cumsum(sq)
    best_val, best_k = -math.inf, 1
    for k in range(1, min(v.size, m) + 1):
        val = 0.5 * math.log2(min(1.0 + cum[k - 1] * p, (m / k + 1.0) ** 2))
        if val > best_val:
            best_val, best_k = val, k
    flags = []
    if not p > math.log2(m):
        flags.append("low-power")
    if not math.log2(m) > 2:
        flags.append("few-quantizers")
    if np.any(sq <= 1.0):
        flags.append("weak-gains")
    upper = _capped_half_log(1.0 + float(cum[-1]) * p, m)
    return BoundPair(
        max(best_val - 2.0, 0.0), upper, 2.0, argmax_k=best_k, flags=tuple(flags)
    )


def simo_linear_bounds(h, power: float, n_sq: int) -> BoundPair:
    """Maximal-ratio combining before quantization, gap half a bit."""
    v = _check_gain_vector(h)
    p = _check_power(power)
    m = _check_n_sq(n_sq)
    upper = _capped_half_log(1.0 + float(v @ v) * p, m)
    return BoundPair(max(upper - 0.5, 0.0), upper, 0.5)


def mimo_single_select_bounds(channel: ChannelMatrix, power: float, n_sq: int) -> BoundPair:
    """All quantizers on the receive antenna with the largest row norm."""
    p = _check_power(power)
    m = _check_n_sq(n_sq)
    row_sq = np.sum(channel.entries * channel.entries, axis=1)
    upper = _capped_half_log(1.0 + float(np.max(row_sq)) * p, m)
    return BoundPair(max(upper - 2.0, 0.0), upper, 2.0)


def _check_gains_sorted(gains) -> np.ndarray:
    g = np.asarray(gains, dtype=np.float64)
    if g.ndim != 1 or g.size < 1:
        raise ValueError(f"gains must be a 1-D nonempty vector, got shape {g.shape}")
    if not np.all(np.isfinite(g)) or np.any(g <= 0):
        raise ValueError("gains must be finite and positive")
    if np.any(np.diff(g) > 0):
        raise ValueError("gains must be sorted nonincreasing")
    return g


def _waterfill_powers(g: np.ndarray, power: float) -> tuple[np.ndarray, float]:
    """Classic water-filling: P_i = (mu - 1/g_i)^+ summing to the budget."""
    inv = 1.0 / g
    lo, hi = float(inv.min()), float(inv.max()) + power
    mu = lo
    for _ in range(_WF_MAX_BISECT):
        mu = 0.5 * (lo + hi)
        total = float(np.maximum(mu - inv, 0.0).sum())
        if abs(total - power) <= _WF_TOL * max(1.0, power):
            break
        if total > power:
            hi = mu
        else:
            lo = mu
    powers = np.maximum(mu - inv, 0.0)
    total = float(powers.sum())
    if abs(total - power) > _WF_TOL * max(1.0, power):
        raise RuntimeError(f"water-filling failed to meet budget: {total!r} vs {power!r}")
    return powers, mu


def waterfill_relaxed(gains, power: float, n_sq: int) -> AllocationResult:
    """Jointly allocate power and a real-valued quantizer budget.

    Water-fill the power first.  If the implied quantizer demand
    sum(sqrt(1 + g_i P_i) - 1) fits the budget, the rate is the unquantized
    water-filling value (power-limited).  Otherwise the budget is split
    evenly over the K active subchannels and the rate is
    K log2(n_sq / K + 1) (quantizer-limited).
    """
    g = _check_gains_sorted(gains)
    p = _check_power(power)
    m = _check_n_sq(n_sq)
    if p == 0.0:
        powers = np.zeros_like(g)
        mu = float(1.0 / g[0])
        return AllocationResult(
            g, p, m, powers, np.zeros_like(g), 0, mu, 0.0, AllocationBranch.POWER_LIMITED
        )
    powers, mu = _waterfill_powers(g, p)
    active = powers > 0
    k = int(np.count_nonzero(active))
    demand = np.sqrt(1.0 + g * powers) - 1.0
    if float(demand.sum()) <= m:
        rate = float(np.sum(0.5 * np.log2(1.0 + g * powers)))
        return AllocationResult(
            g, p, m, powers, demand, k, mu, rate, AllocationBranch.POWER_LIMITED
        )
    shares = np.where(active, m / k, 0.0)
    rate = k * math.log2(m / k + 1.0)
    return AllocationResult(
        g, p, m, powers, shares, k, mu, rate, AllocationBranch.QUANTIZER_LIMITED
    )


def _composition_chunks(total: int, slots: int, chunk: int = _ORACLE_CHUNK):
    """Yield integer matrices whose rows are all compositions of ``total``.

    Rows enumerate every way to write ``total`` as an ordered sum of
    ``slots`` nonnegative integers, in descending lexicographic order.
    """
    buf = np.empty((chunk, slots), dtype=np.int64)
    fill = 0
    head = np.empty(slots, dtype=np.int64)

    def rec(pos: int, remaining: int):
        nonlocal fill
        if pos == slots - 1:
            head[pos] = remaining
            buf[fill] = head
            fill += 1
            if fill == chunk:
                yield buf.copy()
                fill = 0
            return
        for v in range(remaining, -1, -1):
            head[pos] = v
            yield from rec(pos + 1, remaining - v)

    yield from rec(0, total)
    if fill:
        yield buf[:fill].copy()


def _capped_waterfill_rows(
    g: np.ndarray, caps: np.ndarray, power: float
) -> tuple[np.ndarray, np.ndarray]:
    """Vectorized capped water-filling, one problem per row of ``caps``.

    Each subchannel absorbs at most caps[r, i] power; the water level is
    bisected per row until the row's budget min(power, sum caps) is met.
    Returns (rates in bits, water levels).
    """
    inv = 1.0 / g
    target = np.minimum(power, caps.sum(axis=1))
    lo = np.full(caps.shape[0], inv.min())
    hi = inv.max() + power + np.zeros(caps.shape[0])
    for _ in range(_WF_MAX_BISECT):
        mu = 0.5 * (lo + hi)
        used = np.minimum(np.maximum(mu[:, None] - inv, 0.0), caps).sum(axis=1)
        over = used > target
        hi = np.where(over, mu, hi)
        lo = np.where(over, lo, mu)
        if np.max(hi - lo) < 1e-13 * float(inv.max() + power):
            break
    mu = 0.5 * (lo + hi)
    p = np.minimum(np.maximum(mu[:, None] - inv, 0.0), caps)
    rates = 0.5 * np.log2(1.0 + g * p).sum(axis=1)
    return rates, mu


def allocate_integer_oracle(gains, power: float, n_sq: int) -> AllocationResult:
    """Exact best integer split of the quantizer budget, by exhaustion.

    Every composition of ``n_sq`` over the subchannels is scored with a
    capped water-filling of the power budget (a subchannel with N_i signs
    can never usefully absorb more than ((N_i+1)^2 - 1)/g_i power), and the
    best composition wins.  Compositions whose rate is already beaten with
    unlimited power are pruned in bulk.  Gains may come in any order;
    results line up with the input order.
    """
    g_in = np.asarray(gains, dtype=np.float64)
    if g_in.ndim != 1 or g_in.size < 1:
        raise ValueError(f"gains must be a 1-D nonempty vector, got shape {g_in.shape}")
    if not np.all(np.isfinite(g_in)) or np.any(g_in <= 0):
        raise ValueError("gains must be finite and positive")
    p = _check_power(power)
    m = _check_n_sq(n_sq)
    n = g_in.size
    if n > ORACLE_MAX_CHANNELS or m > ORACLE_MAX_QUANTIZERS:
        raise BudgetError(
            f"exhaustive search supports up to {ORACLE_MAX_CHANNELS} subchannels and "
            f"{ORACLE_MAX_QUANTIZERS} quantizers, got {n} and {m}; "
            f"use waterfill_relaxed for larger problems"
        )
    order = np.argsort(-g_in, kind="stable")
    g = g_in[order]

    best_rate = -1.0
    best_comp = None
    for comp in _composition_chunks(m, n):
        # quantizer-only ceiling: rate <= sum log2(N_i + 1) even with free power
        ceiling = np.log2(comp + 1.0).sum(axis=1)
        live = ceiling > best_rate
        if not np.any(live):
            continue
        comp = comp[live]
        caps = ((comp + 1.0) ** 2 - 1.0) / g
        rates, _ = _capped_waterfill_rows(g, caps, p)
        j = int(np.argmax(rates))
        if rates[j] > best_rate:
            best_rate = float(rates[j])
            best_comp = comp[j].copy()

    caps = ((best_comp + 1.0) ** 2 - 1.0) / g
    rates, mu = _capped_waterfill_rows(g, caps[None, :], p)
    powers_sorted = np.minimum(np.maximum(mu[0] - 1.0 / g, 0.0), caps)
    rate = float(rates[0])

    # branch tag: quantizer-limited when the budget actually cost rate
    free_powers, _ = _waterfill_powers(g, p) if p > 0 else (np.zeros(n), 0.0)
    free_rate = float(np.sum(0.5 * np.log2(1.0 + g * free_powers)))
    branch = (
        AllocationBranch.POWER_LIMITED
        if rate >= free_rate - 1e-9
        else AllocationBranch.QUANTIZER_LIMITED
    )

    powers = np.empty(n)
    shares = np.empty(n)
    powers[order] = powers_sorted
    shares[order] = best_comp.astype(np.float64)
    return AllocationResult(
        g_in,
        p,
        m,
        powers,
        shares,
        int(np.count_nonzero(powers > 0)),
        float(mu[0]),
        rate,
        branch,
    )
