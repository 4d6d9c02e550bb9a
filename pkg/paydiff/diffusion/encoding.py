"""Payload conditioning vectors.

Four schemes turn a payload mass into the vector the denoiser is conditioned
on. Binary vectors have one entry per integer kilogram from 0 to 18; masses
are quantized to their ceiling so the encoded bin never under-states the
payload.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np

from ..robot.dynamics import PAYLOAD_CAP
from ..utils.error_handler import PayloadRangeError

N_BINS = int(PAYLOAD_CAP) + 1


class EncodingScheme(str, Enum):
    NUMERIC = "numeric"
    ONE_HOT = "one_hot"
    LESS_THAN = "less_than"
    SUPPORTED_RANGE = "supported_range"


class Phase(str, Enum):
    TRAIN = "train"
    INFER = "infer"


def _check_range(value: float, name: str = "payload") -> float:
    value = float(value)
    if not np.isfinite(value) or value < 0.0 or value > PAYLOAD_CAP:
        raise PayloadRangeError(f"{name} must lie in [0, {PAYLOAD_CAP:g}] kg, got {value}")
    return value


def quantize(value: float) -> int:
    """Ceiling bin index of ``value``; always ``>= value``."""
    return int(np.ceil(_check_range(value)))


def one_hot(value: float) -> np.ndarray:
    """19 entries with a single 1 at index ``ceil(value)``."""
    out = np.zeros(N_BINS)
    out[quantize(value)] = 1.0
    return out


def less_than(value: float) -> np.ndarray:
    """Ones at indices ``0..ceil(value)``, zeros above."""
    out = np.zeros(N_BINS)
    out[:quantize(value) + 1] = 1.0
    return out


def numeric(value: float) -> np.ndarray:
    """Mass mapped linearly from [0, 18] kg to [-1, 1]."""
    return np.array([2.0 * _check_range(value) / PAYLOAD_CAP - 1.0])


def sample_training_payload(m_max: float, rng: np.random.Generator) -> float:
    """Draw a training payload uniformly from ``[0, m_max]``."""
    m_max = _check_range(m_max, "m_max")
    if m_max == 0.0:
        return 0.0
    return float(rng.uniform(0.0, m_max))


@dataclass
class PayloadEncoding:
    """Encoding scheme plus its normalization and inference convention.

    Parameters
    ----------
    scheme : EncodingScheme
        How the payload is represented.
    interpretation : str
        ``"one_hot"`` or ``"less_than"``; how a ``supported_range`` model is
        queried at inference time.
    normalize : bool
        Shift binary vectors from {0, 1} to {-1, +1}.
    """

    scheme: EncodingScheme = EncodingScheme.ONE_HOT
    interpretation: str = "less_than"
    normalize: bool = True

    def __post_init__(self) -> None:
        self.scheme = EncodingScheme(self.scheme)
        if self.interpretation not in ("one_hot", "less_than"):
            raise ValueError(f"interpretation must be 'one_hot' or 'less_than', got {self.interpretation!r}")

    @property
    def dim(self) -> int:
        return 1 if self.scheme == EncodingScheme.NUMERIC else N_BINS

    def _raw(self, value: float, phase: Phase) -> np.ndarray:
        if self.scheme == EncodingScheme.NUMERIC:
            return numeric(value)
        if self.scheme == EncodingScheme.ONE_HOT:
            return one_hot(value)
        if self.scheme == EncodingScheme.LESS_THAN:
            return less_than(value)
        if phase == Phase.TRAIN or self.interpretation == "less_than":
            return less_than(value)
        return one_hot(value)

    def encode(self, value: float, phase: Phase = Phase.INFER) -> np.ndarray:
        """Conditioning vector of ``value`` (a payload, or ``m_max`` for supported-range training)."""
        raw = self._raw(value, Phase(phase))
        if self.normalize and self.scheme != EncodingScheme.NUMERIC:
            return 2.0 * raw - 1.0
        return raw

    def training_vector(self, m_max: float, rng: np.random.Generator) -> np.ndarray:
        """Conditioning vector for a training sample labeled ``m_max``.

        The supported-range scheme encodes the label itself and leaves
        ``rng`` untouched; the other schemes encode a payload drawn from
        ``U(0, m_max)``.
        """
        if self.scheme == EncodingScheme.SUPPORTED_RANGE:
            return self.encode(m_max, Phase.TRAIN)
        return self.encode(sample_training_payload(m_max, rng), Phase.TRAIN)

    def to_dict(self) -> Dict[str, Any]:
        return {"scheme": self.scheme.value, "interpretation": self.interpretation, "normalize": self.normalize}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PayloadEncoding":
        return cls(**data)


def encode_payload(scheme: str, value: float, phase: str = "infer",
                   interpretation: Optional[str] = None, normalize: bool = False) -> np.ndarray:
    """Encode ``value`` under ``scheme``; binary schemes return {0, 1} vectors unless ``normalize``."""
    encoding = PayloadEncoding(EncodingScheme(scheme), interpretation or "less_than", normalize)
    return encoding.encode(value, Phase(phase))
