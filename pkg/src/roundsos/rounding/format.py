"""Binary floating-point formats."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Union

from roundsos.config.constants import PRECISION_BITS, FpPrecisionName, TranscKind
from roundsos.core.exceptions import ConfigurationError

DEFAULT_TRANSC_FACTOR = Fraction(3, 2)


@dataclass(frozen=True)
class FpFormat:
    """Precision ``p`` with unit roundoff ``eps = 2^-p``.

    ``transc_factors`` scales ``eps`` for each transcendental function; kinds
    not listed use ``transc_factor``.
    """

    precision: int
    transc_factor: Fraction = DEFAULT_TRANSC_FACTOR
    transc_factors: Mapping[TranscKind, Fraction] = field(default_factory=dict, hash=False)

    def __post_init__(self) -> None:
        if self.precision < 2:
            raise ConfigurationError(
                "precision must be at least 2 bits", details={"precision": self.precision}
            )
        object.__setattr__(self, "transc_factor", Fraction(self.transc_factor))
        factors = {TranscKind(k): Fraction(v) for k, v in self.transc_factors.items()}
        for kind, value in [(None, self.transc_factor), *factors.items()]:
            if value < 1:
                raise ConfigurationError(
                    "transcendental factor must be at least 1",
                    details={"kind": kind, "factor": str(value)},
                )
        object.__setattr__(self, "transc_factors", factors)

    @property
    def eps(self) -> Fraction:
        return Fraction(1, 2**self.precision)

    def transc_eps(self, kind: TranscKind) -> Fraction:
        return self.transc_factors.get(kind, self.transc_factor) * self.eps

    @property
    def name(self) -> str:
        for known, bits in PRECISION_BITS.items():
            if bits == self.precision:
                return known.value
        return str(self.precision)

    @classmethod
    def parse(
        cls, text: Union[str, int], transc_factor: Optional[Union[str, Fraction]] = None
    ) -> FpFormat:
        """Build from ``single``, ``double``, ``quad`` or a bit count."""
        factor = Fraction(transc_factor) if transc_factor is not None else DEFAULT_TRANSC_FACTOR
        if isinstance(text, int):
            return cls(text, factor)
        key = text.strip().lower()
        try:
            bits = PRECISION_BITS[FpPrecisionName(key)]
        except ValueError:
            if not key.isdigit():
                raise ConfigurationError(f"unknown precision {text!r}") from None
            bits = int(key)
        return cls(bits, factor)


SINGLE = FpFormat(24)
DOUBLE = FpFormat(53)
