"""Receiver-subset selection and combining weights."""
from typing import List

import numpy as np

from vlcsim.constants import SUBSET_SIZE
from vlcsim.errors import EmptySubsetError
from vlcsim.metrics.chanmetrics import MatrixLike, as_gains
from vlcsim.sigproc.plan import WeightVector


def select_receivers(H: MatrixLike, j: int, k: int = SUBSET_SIZE) -> List[int]:
    """the (at most) k PDs receiving most of transmitter j, ascending by index.

    Zero gains never enter a subset; equal gains go to the lower PD index.
    """
    gains = as_gains(H)
    if gains.shape[0] < k:
        raise ValueError(f"need at least {k} receivers, channel has {gains.shape[0]}")

    column = gains[:, j]
    if not np.any(column > 0):
        raise EmptySubsetError(f"transmitter {j} reaches no receiver")

    # descending gain, ascending index among equals
    ranked = np.lexsort((np.arange(len(column)), -column))
    chosen = [int(m) for m in ranked[:k] if column[m] > 0]

    return sorted(chosen)


def mrc_weights(H: MatrixLike, j: int, subset: List[int]) -> WeightVector:
    """maximal-ratio weights w_m = h_mj / sum(h^2) on `subset`, so w . h_j = 1."""
    gains = as_gains(H)
    if len(subset) == 0:
        raise EmptySubsetError(f"empty receiver subset for transmitter {j}")

    h = gains[list(subset), j]
    energy = float(h @ h)
    if energy <= 0 or np.any(h <= 0):
        raise ZeroDivisionError(f"transmitter {j} has a zero gain inside {subset}")

    w = np.zeros(gains.shape[0])
    w[list(subset)] = h / energy

    return WeightVector(w=w, target=j, subset=subset)


def single_pd_weights(H: MatrixLike, j: int) -> WeightVector:
    """weight 1/h on the strongest PD of transmitter j."""
    strongest = select_receivers(H, j, k=1)
    return mrc_weights(H, j, strongest)
