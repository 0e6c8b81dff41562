"""Receive-side processing plans and their capacity reports."""
import enum
from typing import Iterable, List, Tuple, Union

import attr
import numpy as np


class ProcessingMode(enum.Enum):
    NO_PROCESSING = "no_processing"
    COMBINE_ONLY = "combine_only"
    SIC_ONLY = "sic_only"
    COMBINE_AND_SIC = "combine_and_sic"

    @property
    def combines(self) -> bool:
        return self in (ProcessingMode.COMBINE_ONLY, ProcessingMode.COMBINE_AND_SIC)

    @property
    def cancels(self) -> bool:
        return self in (ProcessingMode.SIC_ONLY, ProcessingMode.COMBINE_AND_SIC)

    @classmethod
    def parse(cls, modes: Union[str, Iterable[str]]) -> List["ProcessingMode"]:
        """'all', a comma separated string, or an iterable of mode names."""
        if isinstance(modes, str):
            if modes.strip() == "all":
                return list(cls)
            modes = [m for m in modes.split(",") if m.strip()]

        return [m if isinstance(m, cls) else cls(m.strip()) for m in modes]


class Accounting(enum.Enum):
    """how uncancelled modes count their own signal in the SINR denominator.

    STANDARD sums interference over every other transmitter. SELF_INCLUSIVE
    also adds the desired signal's own power, which caps the capacity of
    modes without cancellation below 1 bit/s/Hz.
    """

    STANDARD = "standard"
    SELF_INCLUSIVE = "self_inclusive"


@attr.s(frozen=True, slots=True, eq=False)
class WeightVector:
    w: np.ndarray = attr.ib(converter=lambda v: np.asarray(v, dtype=float))
    target: int = attr.ib(converter=int)
    subset: Tuple[int, ...] = attr.ib(converter=lambda s: tuple(int(i) for i in s))

    @subset.validator
    def _check_subset(self, attribute, value):
        nonzero = tuple(np.flatnonzero(self.w).tolist())
        if nonzero != tuple(sorted(value)):
            raise ValueError(
                f"weights for transmitter {self.target} are nonzero at {nonzero}, "
                f"expected exactly {value}"
            )

    @property
    def norm_sq(self) -> float:
        return float(self.w @ self.w)

    def combine(self, h: np.ndarray) -> float:
        return float(self.w @ h)


@attr.s(frozen=True, slots=True, eq=False)
class ProcessingPlan:
    decode_order: Tuple[int, ...] = attr.ib(converter=lambda s: tuple(int(i) for i in s))
    receiver_subsets: Tuple[Tuple[int, ...], ...] = attr.ib(
        converter=lambda s: tuple(tuple(int(i) for i in sub) for sub in s)
    )
    weights: Tuple[WeightVector, ...] = attr.ib(converter=tuple)
    mode: ProcessingMode = attr.ib(converter=ProcessingMode)

    @decode_order.validator
    def _check_order(self, attribute, value):
        if sorted(value) != list(range(len(value))):
            raise ValueError(f"decode order {value} is not a permutation")

    @receiver_subsets.validator
    def _check_subsets(self, attribute, value):
        n_rx = len(self.weights[0].w) if self.weights else 0
        for sub in value:
            if any(not 0 <= m < n_rx for m in sub):
                raise ValueError(f"receiver subset {sub} outside [0, {n_rx})")

    @property
    def n_tx(self) -> int:
        return len(self.decode_order)

    def weight_matrix(self) -> np.ndarray:
        """(Nt, Nr) stack of weight vectors, row j for transmitter j."""
        return np.stack([wv.w for wv in self.weights])


@attr.s(frozen=True, slots=True, eq=False)
class CapacityReport:
    sinr: np.ndarray = attr.ib()
    capacity: np.ndarray = attr.ib()
    noise_variance: float = attr.ib(converter=float)
    mode: ProcessingMode = attr.ib(converter=ProcessingMode)
    decode_order: Tuple[int, ...] = attr.ib(default=(), converter=tuple)
    accounting: Accounting = attr.ib(default=Accounting.STANDARD, converter=Accounting)

    @capacity.validator
    def _check_capacity(self, attribute, value):
        if np.any(self.sinr < 0):
            raise ValueError("SINR must be nonnegative")
        if not np.allclose(value, np.log2(1.0 + self.sinr), rtol=0.0, atol=1e-12):
            raise ValueError("capacity must equal log2(1 + SINR)")

    @property
    def last_decoded_capacity(self) -> float:
        return float(self.capacity[self.decode_order[-1]])

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "accounting": self.accounting.value,
            "noise_variance": self.noise_variance,
            "decode_order": list(self.decode_order),
            "sinr": self.sinr.tolist(),
            "capacity": self.capacity.tolist(),
        }
