"""Discrete memoryless channels induced by threshold quantizers.

The channel of interest is scalar: a point x is scaled by a gain, Gaussian
noise is added, and the result is binned by a strictly increasing threshold
partition.  ``quantizer_transition`` builds that law exactly from tail
differences, ``mutual_information`` evaluates I(X; Y) without smoothing, and
``blahut_arimoto`` maximizes it over input distributions with a certified
additive stopping gap.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np
from scipy import special

from .tailmath import clamp_small_probabilities, q_array, q_diff_array

__all__ = [
    "ConvergenceError",
    "InputDistribution",
    "TransitionMatrix",
    "blahut_arimoto",
    "entropy_bits",
    "mutual_information",
    "output_marginal",
    "quantizer_transition",
]

_ROW_SUM_TOL = 1e-12
_LN2 = np.log(2.0)


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=np.float64)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic matrix, probs[m, j] = P(Y = j | X = m)."""

    probs: np.ndarray

    def __post_init__(self):
        p = _frozen(self.probs)
        if p.ndim != 2 or p.shape[0] < 1 or p.shape[1] < 1:
            raise ValueError(f"transition matrix must be 2-D and nonempty, got shape {p.shape}")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("transition probabilities must be finite and nonnegative")
        worst = np.max(np.abs(p.sum(axis=1) - 1.0))
        if worst > _ROW_SUM_TOL:
            raise ValueError(f"row sums deviate from 1 by {worst:.3e} > {_ROW_SUM_TOL:.1e}")
        object.__setattr__(self, "probs", p)

    @property
    def n_inputs(self) -> int:
        return self.probs.shape[0]

    @property
    def n_outputs(self) -> int:
        return self.probs.shape[1]

    def to_csv(self, labels=None) -> str:
        """CSV text with one header row of output labels, %.17g entries."""
        if labels is None:
            labels = [f"y{j}" for j in range(self.n_outputs)]
        if len(labels) != self.n_outputs:
            raise ValueError(f"need {self.n_outputs} labels, got {len(labels)}")
        buf = io.StringIO()
        buf.write(",".join(str(l) for l in labels) + "\n")
        for row in self.probs:
            buf.write(",".join(f"{v:.17g}" for v in row) + "\n")
        return buf.getvalue()


@dataclass(frozen=True, eq=False)
class InputDistribution:
    """Probability vector over the input alphabet."""

    probs: np.ndarray

    def __post_init__(self):
        p = _frozen(self.probs)
        if p.ndim != 1 or p.size < 1:
            raise ValueError(f"input distribution must be a nonempty vector, got shape {p.shape}")
        if np.any(p < 0) or not np.all(np.isfinite(p)):
            raise ValueError("input probabilities must be finite and nonnegative")
        if abs(p.sum() - 1.0) > _ROW_SUM_TOL:
            raise ValueError(f"input probabilities sum to {p.sum()!r}, not 1")
        object.__setattr__(self, "probs", p)

    @classmethod
    def uniform(cls, n: int) -> "InputDistribution":
        if n < 1:
            raise ValueError(f"alphabet size must be positive, got {n}")
        return cls(np.full(n, 1.0 / n))


class ConvergenceError(RuntimeError):
    """Raised when the capacity iteration fails to certify its tolerance.

    Carries the best iterate so callers can inspect how far it got.
    """

    def __init__(self, message, rate_bits, input_dist, gap_bits, iterations):
        super().__init__(message)
        self.rate_bits = rate_bits
        self.input_dist = input_dist
        self.gap_bits = gap_bits
        self.iterations = iterations


def quantizer_transition(
    points: np.ndarray, thresholds: np.ndarray, gain: float, noise_std: float
) -> TransitionMatrix:
    """Law of the quantizer cell index given the input point.

    Entry (m, j) is the probability that gain * points[m] + Z lands in the
    j-th cell of the partition (-inf, t_0], (t_0, t_1], ..., (t_last, inf),
    with Z zero-mean Gaussian of deviation noise_std.  Cells are evaluated
    as Gaussian tail differences, so entries keep relative accuracy even
    when the matrix is nearly deterministic.
    """
    x = np.asarray(points, dtype=np.float64)
    t = np.asarray(thresholds, dtype=np.float64)
    if x.ndim != 1 or x.size < 1:
        raise ValueError(f"points must be a nonempty vector, got shape {x.shape}")
    if t.ndim != 1 or t.size < 1:
        raise ValueError(f"thresholds must be a nonempty vector, got shape {t.shape}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(t))):
        raise ValueError("points and thresholds must be finite")
    if np.any(np.diff(t) <= 0):
        raise ValueError("thresholds must be strictly increasing")
    if not noise_std > 0:
        raise ValueError(f"noise_std must be positive, got {noise_std}")
    if not np.isfinite(gain):
        raise ValueError(f"gain must be finite, got {gain}")

    # z[m, k] = (t_k - gain x_m) / std, increasing along k for every row
    z = (t[np.newaxis, :] - gain * x[:, np.newaxis]) / noise_std
    probs = np.empty((x.size, t.size + 1))
    probs[:, 0] = q_array(-z[:, 0])
    if t.size > 1:
        probs[:, 1:-1] = q_diff_array(z[:, :-1], z[:, 1:])
    probs[:, -1] = q_array(z[:, -1])
    return TransitionMatrix(clamp_small_probabilities(probs))


def output_marginal(input_dist: InputDistribution, channel: TransitionMatrix) -> np.ndarray:
    if input_dist.probs.size != channel.n_inputs:
        raise ValueError(
            f"input size {input_dist.probs.size} does not match channel inputs {channel.n_inputs}"
        )
    return input_dist.probs @ channel.probs


def entropy_bits(probs: np.ndarray) -> float:
    """Shannon entropy of a probability vector; zero entries contribute zero."""
    p = np.asarray(probs, dtype=np.float64)
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise ValueError("entropy needs finite nonnegative probabilities")
    live = p[p > 0]
    return float(-np.sum(live * np.log2(live)))


def mutual_information(input_dist: InputDistribution, channel: TransitionMatrix) -> float:
    """Exact I(X; Y) in bits for the given input and transition law."""
    r = input_dist.probs
    w = channel.probs
    if r.size != channel.n_inputs:
        raise ValueError(f"input size {r.size} does not match channel inputs {channel.n_inputs}")
    py = r @ w
    total = 0.0
    for m in range(r.size):
        if r[m] == 0.0:
            continue
        row = w[m]
        live = row > 0
        total += r[m] * np.sum(row[live] * np.log2(row[live] / py[live]))
    return float(max(total, 0.0))


def blahut_arimoto(
    channel: TransitionMatrix, tolerance: float = 1e-9, max_iters: int = 10_000
) -> tuple[float, InputDistribution]:
    """Capacity of a DMC in bits, certified within an additive tolerance.

    Iterates the classical alternating maximization from the uniform input.
    After each update the divergence of every row from the current output
    marginal gives an upper capacity functional; the iteration stops once
    max-row-divergence minus current mutual information is at most
    ``tolerance`` bits, which bounds the true gap.  Outputs that no input
    can reach are dropped up front (they carry no information).

    Returns the certified lower value and the final input distribution.
    Raises ConvergenceError carrying the best iterate if the gap is still
    above tolerance after ``max_iters`` updates.
    """
    if not tolerance > 0:
        raise ValueError(f"tolerance must be positive, got {tolerance}")
    if max_iters < 1:
        raise ValueError(f"max_iters must be positive, got {max_iters}")
    w_full = channel.probs
    reachable = w_full.sum(axis=0) > 0
    w = w_full[:, reachable]
    n = channel.n_inputs

    mask = w > 0
    logw = np.zeros_like(w)
    np.log(w, out=logw, where=mask)
    r = np.full(n, 1.0 / n)
    rate_nats = 0.0
    gap_bits = np.inf
    for _ in range(max_iters):
        py = r @ w
        # d[m] = KL(row_m || output marginal) in nats.  A row with current
        # mass can only reach outputs with py > 0, so d is finite on the
        # support of r; rows starved to zero by underflow may score +inf,
        # which keeps the certificate honest instead of silently converging.
        with np.errstate(divide="ignore", invalid="ignore"):
            d = np.where(mask, w * (logw - np.log(py)), 0.0).sum(axis=1)
        live = r > 0
        rate_nats = float(r[live] @ d[live])
        gap_bits = (float(np.max(d)) - rate_nats) / _LN2
        if gap_bits <= tolerance:
            return rate_nats / _LN2, InputDistribution(r)
        logr = np.full(n, -np.inf)
        logr[live] = np.log(r[live]) + d[live]
        logr -= special.logsumexp(logr)
        r = np.exp(logr)
        r /= r.sum()
    raise ConvergenceError(
        f"capacity gap {gap_bits:.3e} bits above tolerance {tolerance:.1e} "
        f"after {max_iters} iterations",
        rate_nats / _LN2,
        InputDistribution(r),
        gap_bits,
        max_iters,
    )
