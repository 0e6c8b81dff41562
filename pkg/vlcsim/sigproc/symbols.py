"""Symbol-level Monte Carlo of a processing plan with real decisions.

OOK symbols x in {0, 2} (unit average power) are sent from every LED and
received as y = H x + n. Each transmitter is decided by thresholding w . y at
w . h_j (the midpoint of its two levels). Cancelling modes subtract h_j * x_hat
from the residual after each decision, so a wrong decision propagates to every
transmitter decoded later.
"""
from typing import Optional

import attr
import numpy as np

from vlcsim.metrics.chanmetrics import MatrixLike, as_gains
from vlcsim.sigproc.plan import ProcessingPlan

OOK_HIGH = 2.0
CHUNK_SYMBOLS = 100_000


@attr.s(frozen=True, slots=True, eq=False)
class SymbolReport:
    ber: np.ndarray = attr.ib()
    # signal variance over the variance of everything else at the combiner output
    realized_sinr: np.ndarray = attr.ib()
    n_symbols: int = attr.ib()
    noise_variance: float = attr.ib()

    def to_dict(self) -> dict:
        return {
            "n_symbols": self.n_symbols,
            "noise_variance": self.noise_variance,
            "ber": self.ber.tolist(),
            "realized_sinr": self.realized_sinr.tolist(),
        }


class _Moments:
    """running mean and variance per channel (Chan et al. pairwise merge)."""

    def __init__(self, n_channels: int):
        self.count = 0
        self.mean = np.zeros(n_channels)
        self.m2 = np.zeros(n_channels)

    def update(self, samples: np.ndarray):
        # samples: (n_channels, n)
        n = samples.shape[1]
        mean = samples.mean(axis=1)
        m2 = ((samples - mean[:, None]) ** 2).sum(axis=1)

        total = self.count + n
        delta = mean - self.mean
        self.mean = self.mean + delta * n / total
        self.m2 = self.m2 + m2 + delta**2 * self.count * n / total
        self.count = total

    @property
    def variance(self) -> np.ndarray:
        return self.m2 / max(self.count - 1, 1)


def simulate_symbols(
    H: MatrixLike,
    plan: ProcessingPlan,
    noise_variance: float,
    n_symbols: int,
    seed: int,
    force_correct: bool = False,
    chunk: Optional[int] = None,
) -> SymbolReport:
    """BER and realized SINR per transmitter.

    Args:
        force_correct: cancel with the transmitted symbols instead of the
            decisions, which reproduces ideal cancellation.
    """
    if n_symbols < 1:
        raise ValueError(f"n_symbols must be >= 1, got {n_symbols}")
    if noise_variance < 0:
        raise ValueError(f"noise variance must be >= 0, got {noise_variance}")

    gains = as_gains(H)
    n_rx, n_tx = gains.shape
    W = plan.weight_matrix()
    threshold = np.einsum("jm,mj->j", W, gains)
    sigma = np.sqrt(noise_variance)

    rng = np.random.default_rng(seed)
    chunk = chunk or CHUNK_SYMBOLS

    errors = np.zeros(n_tx, dtype=np.int64)
    signal_moments = _Moments(n_tx)
    rest_moments = _Moments(n_tx)

    done = 0
    while done < n_symbols:
        n = min(chunk, n_symbols - done)
        bits = rng.integers(0, 2, size=(n_tx, n))
        x = OOK_HIGH * bits
        residual = gains @ x + sigma * rng.standard_normal((n_rx, n))

        decided = np.zeros((n_tx, n), dtype=bool)
        signal = np.zeros((n_tx, n))
        rest = np.zeros((n_tx, n))

        for j in plan.decode_order:
            z = W[j] @ residual
            signal[j] = threshold[j] * x[j]
            rest[j] = z - signal[j]

            decided[j] = z > threshold[j]
            if plan.mode.cancels:
                x_hat = x[j] if force_correct else OOK_HIGH * decided[j]
                residual = residual - np.outer(gains[:, j], x_hat)

        errors += np.count_nonzero(decided != bits.astype(bool), axis=1)
        signal_moments.update(signal)
        rest_moments.update(rest)
        done += n

    with np.errstate(divide="ignore", invalid="ignore"):
        realized = np.where(
            signal_moments.variance > 0,
            signal_moments.variance / rest_moments.variance,
            0.0,
        )

    return SymbolReport(
        ber=errors / n_symbols,
        realized_sinr=realized,
        n_symbols=n_symbols,
        noise_variance=float(noise_variance),
    )
