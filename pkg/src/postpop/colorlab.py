"""RGB color coding: ten Munsell hue families and the eight-class HSV baseline.

The Munsell classifier is a hue-sector approximation: sRGB is mapped to an
HSV hue angle, then binned into sectors whose boundaries were calibrated so
the ten Munsell principal hues (value 6 / chroma 8 renotation chips) sit at
sector centers. The calibrated table ships as assets/munsell_sectors.json
and is regenerated by scripts/calibrate_munsell_sectors.py.
"""

from __future__ import annotations

import colorsys
import json
from enum import Enum
from importlib import resources


class MunsellHue(Enum):
    R = 0
    YR = 1
    Y = 2
    GY = 3
    G = 4
    BG = 5
    B = 6
    PB = 7
    P = 8
    RP = 9


MUNSELL_HUE_ORDER = tuple(MunsellHue)


class Hsv8Class(Enum):
    BLACK_WHITE = "black/white"
    BLUE = "blue"
    CYAN = "cyan"
    GREEN = "green"
    YELLOW = "yellow"
    ORANGE = "orange"
    RED = "red"
    MAGENTA = "magenta"


# Near-neutral cutoffs in unit HSV. The Munsell side has no neutral class,
# so these only gate which inputs the brightness-scaling invariance is
# guaranteed for; classification itself stays total over hue angle.
ACHROMATIC_SAT = 0.08
ACHROMATIC_VAL = 0.08

HSV8_SAT_CUTOFF = 0.15
HSV8_VAL_CUTOFF = 0.15

# (class, lo_deg, hi_deg) half-open sectors, wrap handled for red
_HSV8_SECTORS = (
    (Hsv8Class.RED, 345.0, 15.0),
    (Hsv8Class.ORANGE, 15.0, 45.0),
    (Hsv8Class.YELLOW, 45.0, 75.0),
    (Hsv8Class.GREEN, 75.0, 165.0),
    (Hsv8Class.CYAN, 165.0, 195.0),
    (Hsv8Class.BLUE, 195.0, 285.0),
    (Hsv8Class.MAGENTA, 285.0, 345.0),
)


def _load_munsell_sectors():
    text = resources.files("postpop.assets").joinpath("munsell_sectors.json").read_text()
    table = json.loads(text)
    return tuple(
        (MunsellHue[entry["family"]], entry["lo_deg"], entry["hi_deg"])
        for entry in table["sectors"]
    )


_MUNSELL_SECTORS = _load_munsell_sectors()


def _check_rgb(rgb):
    r, g, b = rgb
    for c in (r, g, b):
        if not 0 <= c <= 255:
            raise ValueError(f"rgb component {c} outside 0..255")
    return r, g, b


def hue_saturation_value(rgb) -> tuple[float, float, float]:
    """Unit HSV with hue in degrees [0, 360)."""
    r, g, b = _check_rgb(rgb)
    h, s, v = colorsys.rgb_to_hsv(r / 255.0, g / 255.0, b / 255.0)
    return (h * 360.0) % 360.0, s, v


def is_achromatic(rgb) -> bool:
    _, s, v = hue_saturation_value(rgb)
    return s < ACHROMATIC_SAT or v < ACHROMATIC_VAL


def rgb_to_munsell_hue(rgb) -> MunsellHue:
    """Classify an sRGB triple into one of the ten Munsell hue families.

    Total over all inputs: near-neutral colors are still assigned by hue
    angle, and exact gray (saturation 0) conventionally lands at hue 0,
    i.e. the R family.
    """
    hue, _, _ = hue_saturation_value(rgb)
    for family, lo, hi in _MUNSELL_SECTORS:
        if lo <= hi:
            if lo <= hue < hi:
                return family
        elif hue >= lo or hue < hi:
            return family
    raise AssertionError("sector table does not cover the hue circle")


def rgb_to_hsv8(rgb) -> Hsv8Class:
    """Classify an sRGB triple into the eight-class HSV comparison coding."""
    hue, s, v = hue_saturation_value(rgb)
    if s < HSV8_SAT_CUTOFF or v < HSV8_VAL_CUTOFF:
        return Hsv8Class.BLACK_WHITE
    for cls, lo, hi in _HSV8_SECTORS:
        if lo <= hi:
            if lo <= hue < hi:
                return cls
        elif hue >= lo or hue < hi:
            return cls
    raise AssertionError("hsv8 sectors do not cover the hue circle")


def post_color_vector(hues: list[MunsellHue]) -> tuple[int, ...]:
    """Ten binary indicators (R, YR, Y, GY, G, BG, B, PB, P, RP).

    Bit k is set iff hue family k appears among the post's per-image
    representative hues; duplicates collapse.
    """
    if not hues:
        raise ValueError("post has no color information")
    bits = [0] * len(MUNSELL_HUE_ORDER)
    for hue in hues:
        bits[hue.value] = 1
    return tuple(bits)
