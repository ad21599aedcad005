"""Physical, dimension and shaped types."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from .color import N_BANDS

Dims = tuple[int, ...]


class PhysicalType(enum.Enum):
    XYZ = "XYZ"
    LMS = "LMS"
    sRGB = "sRGB"
    opRGB = "opRGB"
    HSV = "HSV"
    LAB = "LAB"
    Light = "Light"
    Reflectance = "Reflectance"
    Scattering = "Scattering"
    Absorption = "Absorption"
    Pigment = "Pigment"
    Chromaticity = "Chromaticity"
    Matrix = "Matrix"

    def __str__(self) -> str:
        return self.value

    @property
    def channel_count(self) -> int | None:
        return _CHANNELS[self]

    @property
    def is_tristimulus(self) -> bool:
        return self in TRISTIMULUS

    @property
    def is_perceptual(self) -> bool:
        return self in PERCEPTUAL

    @property
    def is_spectral(self) -> bool:
        return self in SPECTRAL

    @property
    def is_color(self) -> bool:
        return self in TRISTIMULUS or self in PERCEPTUAL

    @property
    def nonnegative(self) -> bool:
        """Whether every valid value of this type has nonnegative channels."""
        return self not in (PhysicalType.LAB, PhysicalType.Matrix)


P = PhysicalType

TRISTIMULUS = frozenset({P.XYZ, P.LMS, P.sRGB, P.opRGB})
PERCEPTUAL = frozenset({P.HSV, P.LAB})
SPECTRAL = frozenset({P.Light, P.Reflectance, P.Scattering, P.Absorption, P.Pigment})
# gamma-encoded tristimulus spaces; arithmetic on them happens in linear light
NONLINEAR = frozenset({P.sRGB, P.opRGB})

_CHANNELS = {
    P.XYZ: 3,
    P.LMS: 3,
    P.sRGB: 3,
    P.opRGB: 3,
    P.HSV: 3,
    P.LAB: 3,
    P.Light: N_BANDS,
    P.Reflectance: N_BANDS,
    P.Scattering: N_BANDS,
    P.Absorption: N_BANDS,
    P.Pigment: 2 * N_BANDS,
    P.Chromaticity: 2,
    P.Matrix: None,
}

CHANNEL_NAMES = {
    P.XYZ: ("X", "Y", "Z"),
    P.LMS: ("L", "M", "S"),
    P.sRGB: ("r", "g", "b"),
    P.opRGB: ("r", "g", "b"),
    P.HSV: ("h", "s", "v"),
    P.LAB: ("L", "a", "b"),
    P.Chromaticity: ("x", "y"),
}


def parse_physical(name: str) -> PhysicalType | None:
    try:
        return PhysicalType(name)
    except ValueError:
        return None


def check_dims(dims) -> Dims:
    dims = tuple(int(d) for d in dims)
    if not dims or any(d < 1 for d in dims):
        raise ValueError(f"dimension list must be nonempty and positive, got {list(dims)}")
    return dims


@dataclass(frozen=True)
class ShapedType:
    phys: PhysicalType
    dims: Dims

    def __post_init__(self):
        object.__setattr__(self, "dims", check_dims(self.dims))

    def erase(self) -> Dims:
        """Tensor shape of a value of this type: dims followed by the channel axis."""
        c = self.phys.channel_count
        return self.dims if c is None else self.dims + (c,)

    def __str__(self) -> str:
        return f"{self.phys}[{','.join(map(str, self.dims))}]"


def parse_shaped(text: str) -> ShapedType:
    """Inverse of ``str(ShapedType)``, e.g. ``"sRGB[2,2]"``."""
    name, _, rest = text.strip().partition("[")
    phys = parse_physical(name)
    if phys is None or not rest.endswith("]"):
        raise ValueError(f"not a shaped type: {text!r}")
    return ShapedType(phys, tuple(int(d) for d in rest[:-1].split(",")))
