#!/usr/bin/env python3
"""Regenerate the Munsell hue-sector constants shipped with postpop.

The ten anchor chips below are sRGB renderings of the Munsell principal
hues (5R .. 5RP) at value 6 / chroma 8, derived from the Munsell
renotation data. Sector boundaries for the production classifier are the
circular midpoints between consecutive anchor HSV hue angles.

As an independent cross-check, the same anchors are also projected into
CIELAB (D65), and a reference classification by nearest CIELAB hue-angle
sector is computed for a panel of named probe colors. The frozen probe
table printed by this script is what tests/test_colorlab.py asserts
against; the two routes go through different nonlinear color spaces, so
their agreement is a real consistency check of the sector approximation.

Usage:
    python3 scripts/calibrate_munsell_sectors.py [--write]

Without --write the script only prints the computed tables.
"""

import argparse
import colorsys
import json
import math
from pathlib import Path

ASSET_PATH = Path(__file__).resolve().parents[1] / "src" / "postpop" / "assets" / "munsell_sectors.json"

FAMILIES = ["R", "YR", "Y", "GY", "G", "BG", "B", "PB", "P", "RP"]

# Renotation-derived chip renderings, value 6 / chroma 8, one per principal hue.
ANCHOR_CHIPS = {
    "R": (226, 117, 124),
    "YR": (206, 137, 72),
    "Y": (175, 153, 46),
    "GY": (125, 166, 62),
    "G": (24, 172, 123),
    "BG": (0, 170, 165),
    "B": (0, 160, 194),
    "PB": (108, 140, 213),
    "P": (158, 122, 187),
    "RP": (209, 110, 159),
}

# Probe panel: two interior exemplars per family (the PB pair includes the
# vision-API worked example (77, 153, 231)).
PROBE_COLORS = [
    ("red", (255, 0, 0)),
    ("firebrick", (178, 34, 34)),
    ("dark orange", (255, 140, 0)),
    ("chocolate", (210, 105, 30)),
    ("gold", (255, 215, 0)),
    ("olive", (128, 128, 0)),
    ("chartreuse", (127, 255, 0)),
    ("yellow green", (154, 205, 50)),
    ("sea green", (46, 139, 87)),
    ("medium sea green", (60, 179, 113)),
    ("light sea green", (32, 178, 170)),
    ("teal", (0, 128, 128)),
    ("deep sky blue", (0, 191, 255)),
    ("bondi blue", (0, 149, 182)),
    ("sky sample", (77, 153, 231)),
    ("royal blue", (65, 105, 225)),
    ("blue violet", (138, 43, 226)),
    ("dark violet", (148, 0, 211)),
    ("medium violet red", (199, 21, 133)),
    ("deep pink", (255, 20, 147)),
]


def hsv_hue_deg(rgb):
    h, _, _ = colorsys.rgb_to_hsv(rgb[0] / 255.0, rgb[1] / 255.0, rgb[2] / 255.0)
    return (h * 360.0) % 360.0


def _srgb_to_linear(c):
    c = c / 255.0
    return c / 12.92 if c <= 0.04045 else ((c + 0.055) / 1.055) ** 2.4


def lab_hue_deg(rgb):
    r, g, b = (_srgb_to_linear(c) for c in rgb)
    x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b
    y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b
    z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b
    xn, yn, zn = 0.95047, 1.0, 1.08883

    def f(t):
        return t ** (1.0 / 3.0) if t > (6 / 29) ** 3 else t / (3 * (6 / 29) ** 2) + 4 / 29

    fx, fy, fz = f(x / xn), f(y / yn), f(z / zn)
    a_star = 500.0 * (fx - fy)
    b_star = 200.0 * (fy - fz)
    return math.degrees(math.atan2(b_star, a_star)) % 360.0


def circular_midpoint(lo, hi):
    # midpoint of the arc going forward from lo to hi
    span = (hi - lo) % 360.0
    return (lo + span / 2.0) % 360.0


def sectors_from_anchors(angles):
    """Anchor angle per family -> list of (family, lo, hi) sectors covering the circle."""
    order = sorted(FAMILIES, key=lambda f: angles[f])
    sectors = []
    k = len(order)
    for i, fam in enumerate(order):
        prev_fam = order[(i - 1) % k]
        next_fam = order[(i + 1) % k]
        lo = circular_midpoint(angles[prev_fam], angles[fam])
        hi = circular_midpoint(angles[fam], angles[next_fam])
        sectors.append((fam, lo, hi))
    return sectors


def classify(angle, sectors):
    for fam, lo, hi in sectors:
        if lo <= hi:
            if lo <= angle < hi:
                return fam
        elif angle >= lo or angle < hi:
            return fam
    raise AssertionError("sectors do not cover the circle")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--write", action="store_true", help="write the asset JSON")
    args = parser.parse_args()

    hsv_anchors = {f: hsv_hue_deg(ANCHOR_CHIPS[f]) for f in FAMILIES}
    lab_anchors = {f: lab_hue_deg(ANCHOR_CHIPS[f]) for f in FAMILIES}
    hsv_sectors = sectors_from_anchors(hsv_anchors)
    lab_sectors = sectors_from_anchors(lab_anchors)

    print("anchor chips (family, rgb, hsv hue, lab hue):")
    for f in FAMILIES:
        print(f"  {f:3s} {ANCHOR_CHIPS[f]}  hsv={hsv_anchors[f]:7.2f}  lab={lab_anchors[f]:7.2f}")
    print("\nhsv sectors:")
    for fam, lo, hi in hsv_sectors:
        print(f"  {fam:3s} [{lo:7.2f}, {hi:7.2f})")

    print("\nprobe panel (name, rgb, hsv-route, lab-route):")
    mismatches = 0
    frozen = []
    for name, rgb in PROBE_COLORS:
        via_hsv = classify(hsv_hue_deg(rgb), hsv_sectors)
        via_lab = classify(lab_hue_deg(rgb), lab_sectors)
        flag = "" if via_hsv == via_lab else "  <-- MISMATCH"
        mismatches += via_hsv != via_lab
        frozen.append((name, rgb, via_lab))
        print(f"  {name:20s} {str(rgb):17s} hsv={via_hsv:3s} lab={via_lab:3s}{flag}")
    print(f"\n{mismatches} route mismatches out of {len(PROBE_COLORS)}")

    print("\nfrozen oracle table (paste into tests):")
    for name, rgb, fam in frozen:
        print(f'    ("{name}", {rgb}, "{fam}"),')

    if args.write:
        asset = {
            "version": 1,
            "families": FAMILIES,
            "anchor_chips_rgb": {f: list(ANCHOR_CHIPS[f]) for f in FAMILIES},
            "anchor_hue_deg": {f: round(hsv_anchors[f], 6) for f in FAMILIES},
            "sectors": [
                {"family": fam, "lo_deg": round(lo, 6), "hi_deg": round(hi, 6)}
                for fam, lo, hi in hsv_sectors
            ],
        }
        ASSET_PATH.parent.mkdir(parents=True, exist_ok=True)
        ASSET_PATH.write_text(json.dumps(asset, indent=2, sort_keys=True) + "\n")
        print(f"\nwrote {ASSET_PATH}")


if __name__ == "__main__":
    main()
