"""Colour-physics primitives and the standard constant matrices.

Everything here works directly on numpy arrays and doubles as the numeric
oracle for the compiled pipeline, so it must never call into the IR.

All 3x3 matrices are stored for right-multiplication of row vectors
(``row @ M``), which is the layout the tensor IR uses: a colour image is an
``[..., 3]`` tensor and a conversion is ``matmul(image, M)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import DomainError, InvalidInputError

N_BANDS = 89
WAVELENGTHS = np.arange(390, 831, 5, dtype=np.float64)
assert WAVELENGTHS.size == N_BANDS


def _load_table(name: str) -> np.ndarray:
    text = resources.files("chromac.data").joinpath(name).read_text()
    rows = [
        [float(v) for v in line.split(",")]
        for line in text.splitlines()
        if line and not line.startswith("#") and not line.startswith("wavelength")
    ]
    table = np.array(rows, dtype=np.float64)
    # zero-pad anything the source table does not cover
    out = np.zeros((N_BANDS, table.shape[1] - 1))
    for row in table:
        idx = np.flatnonzero(WAVELENGTHS == row[0])
        if idx.size:
            out[idx[0]] = row[1:]
    return out


# cone fundamentals: SPD -> LMS
M1 = _load_table("cone_fundamentals_ss2.csv")

# LMS -> XYZ for the 2-degree fundamentals above (CIE 170-2 transform)
M2 = np.array(
    [
        [1.94735469, -1.41445123, 0.36476327],
        [0.68990272, 0.34832189, 0.0],
        [0.0, 0.0, 1.93485343],
    ]
).T
M2_INV = np.linalg.inv(M2)

def rgb_to_xyz_matrix(primaries, white) -> np.ndarray:
    """Row-vector matrix taking linear RGB to XYZ.

    Built from the xy chromaticities of the three primaries and the white
    point, scaled so that RGB (1, 1, 1) lands on the white with Y = 1.
    """
    xy = np.asarray(primaries, dtype=np.float64)
    prim = np.stack([xy[:, 0] / xy[:, 1], np.ones(3), (1 - xy[:, 0] - xy[:, 1]) / xy[:, 1]], axis=1)
    wx, wy = white
    w = np.array([wx / wy, 1.0, (1 - wx - wy) / wy])
    return prim * np.linalg.solve(prim.T, w)[:, None]


D65_XY = (0.3127, 0.3290)
SRGB_PRIMARIES = ((0.64, 0.33), (0.30, 0.60), (0.15, 0.06))  # IEC 61966-2-1
OPRGB_PRIMARIES = ((0.64, 0.33), (0.21, 0.71), (0.15, 0.06))  # IEC 61966-2-5

# XYZ -> linear sRGB / opRGB, at full precision rather than the standards'
# rounded printed tables, so the primaries both spaces share map exactly
M3_INV = rgb_to_xyz_matrix(SRGB_PRIMARIES, D65_XY)
M3 = np.linalg.inv(M3_INV)
M4_INV = rgb_to_xyz_matrix(OPRGB_PRIMARIES, D65_XY)
M4 = np.linalg.inv(M4_INV)

WHITEPOINT_D65 = np.array([0.95047, 1.0, 1.08883])

for _m in (M1, M2, M2_INV, M3, M3_INV, M4, M4_INV):
    _m.setflags(write=False)
WHITEPOINT_D65.setflags(write=False)


@dataclass(frozen=True)
class GammaSpec:
    gamma: float
    scale: float = 255.0

    def __post_init__(self):
        if not (self.gamma > 0 and np.isfinite(self.gamma)):
            raise InvalidInputError(f"gamma must be positive, got {self.gamma}")
        if not (self.scale > 0 and np.isfinite(self.scale)):
            raise InvalidInputError(f"scale must be positive, got {self.scale}")


SRGB_GAMMA = GammaSpec(2.2)
OPRGB_GAMMA = GammaSpec(563 / 256)


def _finite(x, what="input") -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{what} contains non-finite values")
    return arr


def _nonneg(x, what="input") -> np.ndarray:
    arr = _finite(x, what)
    if np.any(arr < 0):
        raise InvalidInputError(f"{what} must be nonnegative")
    return arr


def _spectrum(x, what="spectrum") -> np.ndarray:
    arr = _finite(x, what)
    if arr.shape[-1:] != (N_BANDS,):
        raise InvalidInputError(f"{what} must have {N_BANDS} bands, got shape {arr.shape}")
    return arr


def spd_to_lms(spd) -> np.ndarray:
    """Cone responses of a light: per-band weighting by M1, summed over bands."""
    return _spectrum(spd, "spd") @ M1


def lms_to_xyz(lms) -> np.ndarray:
    return _finite(lms) @ M2


def xyz_to_lms(xyz) -> np.ndarray:
    return _finite(xyz) @ M2_INV


def gamma_decode(encoded, g: GammaSpec = SRGB_GAMMA) -> np.ndarray:
    enc = _nonneg(encoded, "encoded value")
    return (enc / g.scale) ** g.gamma


def gamma_encode(linear, g: GammaSpec = SRGB_GAMMA) -> np.ndarray:
    lin = _nonneg(linear, "linear value")
    return g.scale * lin ** (1.0 / g.gamma)


def srgb_to_xyz(srgb) -> np.ndarray:
    return gamma_decode(srgb, SRGB_GAMMA) @ M3_INV


def xyz_to_srgb(xyz) -> np.ndarray:
    return gamma_encode(_finite(xyz) @ M3, SRGB_GAMMA)


def oprgb_to_xyz(oprgb) -> np.ndarray:
    return gamma_decode(oprgb, OPRGB_GAMMA) @ M4_INV


def xyz_to_oprgb(xyz) -> np.ndarray:
    return gamma_encode(_finite(xyz) @ M4, OPRGB_GAMMA)


def km_reflectance(K, S) -> np.ndarray:
    """Kubelka-Munk reflectance of an opaque layer from absorption and scattering."""
    K = _nonneg(K, "absorption")
    S = _nonneg(S, "scattering")
    if np.any(S == 0):
        raise DomainError("scattering spectrum has a zero band")
    ks = K / S
    return 1.0 + ks - np.sqrt(ks * ks + 2.0 * ks)


def km_mix(c1, K1, S1, c2, K2, S2) -> tuple[np.ndarray, np.ndarray]:
    """Concentration-weighted average of two pigments' K and S spectra."""
    c1 = float(c1)
    c2 = float(c2)
    if c1 < 0 or c2 < 0 or not np.isfinite(c1 + c2):
        raise InvalidInputError("concentrations must be finite and nonnegative")
    total = c1 + c2
    if total == 0:
        raise InvalidInputError("at least one concentration must be positive")
    K1, S1, K2, S2 = (_finite(v) for v in (K1, S1, K2, S2))
    return (c1 * K1 + c2 * K2) / total, (c1 * S1 + c2 * S2) / total


# LAB uses the pure cube-root companding function (no linear toe), so
# L = 116 * cbrt(Y/Yn) - 16 everywhere.
def xyz_to_lab(xyz, whitepoint=WHITEPOINT_D65) -> np.ndarray:
    xyz = _nonneg(xyz, "XYZ")
    wp = _finite(whitepoint, "whitepoint")
    if np.any(wp <= 0):
        raise InvalidInputError("whitepoint components must be positive")
    f = np.cbrt(xyz / wp)
    fx, fy, fz = f[..., 0], f[..., 1], f[..., 2]
    return np.stack([116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)], axis=-1)


def lab_to_xyz(lab, whitepoint=WHITEPOINT_D65) -> np.ndarray:
    lab = _finite(lab, "LAB")
    wp = _finite(whitepoint, "whitepoint")
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    return np.stack([fx, fy, fz], axis=-1) ** 3 * wp


def _rgb_to_hsv_one(r: float, g: float, b: float) -> tuple[float, float, float]:
    mx = max(r, g, b)
    mn = min(r, g, b)
    delta = mx - mn
    v = mx
    s = 0.0 if mx == 0 else delta / mx
    if delta == 0:
        h = 0.0
    elif mx == r:
        h = 60.0 * (((g - b) / delta) % 6.0)
    elif mx == g:
        h = 60.0 * ((b - r) / delta + 2.0)
    else:
        h = 60.0 * ((r - g) / delta + 4.0)
    if h >= 360.0:
        h -= 360.0
    return h, s, v


def _hsv_to_rgb_one(h: float, s: float, v: float) -> tuple[float, float, float]:
    c = v * s
    hp = (h % 360.0) / 60.0
    x = c * (1 - abs(hp % 2 - 1))
    sector = int(hp) % 6
    r, g, b = [
        (c, x, 0.0),
        (x, c, 0.0),
        (0.0, c, x),
        (0.0, x, c),
        (x, 0.0, c),
        (c, 0.0, x),
    ][sector]
    m = v - c
    return r + m, g + m, b + m


def _check_unit(arr: np.ndarray, what: str) -> None:
    if np.any(arr < 0) or np.any(arr > 1):
        raise InvalidInputError(f"{what} components must lie in [0, 1]")


def rgb_to_hsv(rgb) -> np.ndarray:
    """Hexcone HSV of RGB in [0, 1]; hue in degrees, 0 on the achromatic axis."""
    rgb = _finite(rgb, "RGB")
    _check_unit(rgb, "RGB")
    flat = rgb.reshape(-1, 3)
    out = np.array([_rgb_to_hsv_one(*px) for px in flat])
    return out.reshape(rgb.shape)


def hsv_to_rgb(hsv) -> np.ndarray:
    hsv = _finite(hsv, "HSV")
    if np.any(hsv[..., 1:] < 0) or np.any(hsv[..., 1:] > 1):
        raise InvalidInputError("saturation and value must lie in [0, 1]")
    if np.any(hsv[..., 0] < 0) or np.any(hsv[..., 0] >= 360):
        raise InvalidInputError("hue must lie in [0, 360)")
    flat = hsv.reshape(-1, 3)
    out = np.array([_hsv_to_rgb_one(*px) for px in flat])
    return out.reshape(hsv.shape)


def xyz_to_chromaticity(xyz) -> np.ndarray:
    xyz = _finite(xyz, "XYZ")
    total = xyz.sum(axis=-1, keepdims=True)
    if np.any(total == 0):
        raise DomainError("chromaticity undefined for X+Y+Z = 0")
    return xyz[..., :2] / total


def daylight_spd() -> np.ndarray:
    """D65 daylight scaled so that its luminance Y equals 1."""
    spd = _load_table("illuminant_d65.csv")[:, 0]
    y = lms_to_xyz(spd_to_lms(spd))[1]
    return spd / y
