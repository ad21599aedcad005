"""Named constants that programs may reference without declaring them."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .color import daylight_spd
from .types import PhysicalType, ShapedType


@dataclass(frozen=True)
class Builtin:
    type: ShapedType
    value: np.ndarray


BUILTINS: dict[str, Builtin] = {
    # daylight with unit luminance
    "D65": Builtin(ShapedType(PhysicalType.Light, (1,)), daylight_spd()[None, :]),
}
