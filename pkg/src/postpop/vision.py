"""Cached vision-API image annotations: parsing, score filtering, representative color.

Annotations are replayed from disk (embedded in the corpus file); there is
deliberately no HTTP client here.
"""

from __future__ import annotations

from dataclasses import dataclass

MAX_LABELS = 100
MAX_COLORS = 10
DEFAULT_MIN_SCORE = 0.5


class AnnotationSchemaError(ValueError):
    """Raised when a cached response document violates the annotation schema."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


@dataclass(frozen=True)
class LabelAnnotation:
    description: str
    score: float


@dataclass(frozen=True)
class ColorAnnotation:
    rgb: tuple[int, int, int]
    pixel_fraction: float


@dataclass(frozen=True)
class ImageAnnotation:
    image_id: str
    labels: tuple[LabelAnnotation, ...]
    colors: tuple[ColorAnnotation, ...]


def _require(raw: dict, field: str, kind, context: str):
    if field not in raw:
        raise AnnotationSchemaError(f"{context}.{field}", "missing field")
    value = raw[field]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise AnnotationSchemaError(f"{context}.{field}", f"expected number, got {type(value).__name__}")
        return float(value)
    if not isinstance(value, kind):
        raise AnnotationSchemaError(f"{context}.{field}", f"expected {kind.__name__}, got {type(value).__name__}")
    return value


def parse_vision_response(raw: dict) -> ImageAnnotation:
    """Parse one cached response document into an ImageAnnotation.

    Everything present in the document is captured verbatim; no score or
    count filtering happens at parse time. Label descriptions are
    lower-cased and whitespace-trimmed so the downstream topic vocabulary
    is case-insensitive.
    """
    image_id = _require(raw, "image_id", str, "image")
    ctx = f"image[{image_id}]"

    raw_labels = _require(raw, "labels", list, ctx)
    if len(raw_labels) > MAX_LABELS:
        raise AnnotationSchemaError(f"{ctx}.labels", f"{len(raw_labels)} labels exceeds limit {MAX_LABELS}")
    labels = []
    for i, item in enumerate(raw_labels):
        if not isinstance(item, dict):
            raise AnnotationSchemaError(f"{ctx}.labels[{i}]", "expected object")
        desc = _require(item, "description", str, f"{ctx}.labels[{i}]").strip().lower()
        if not desc:
            raise AnnotationSchemaError(f"{ctx}.labels[{i}].description", "empty description")
        score = _require(item, "score", float, f"{ctx}.labels[{i}]")
        if not 0.0 <= score <= 1.0:
            raise AnnotationSchemaError(f"{ctx}.labels[{i}].score", f"score {score} outside [0, 1]")
        labels.append(LabelAnnotation(desc, score))

    raw_colors = _require(raw, "colors", list, ctx)
    if len(raw_colors) > MAX_COLORS:
        raise AnnotationSchemaError(f"{ctx}.colors", f"{len(raw_colors)} colors exceeds limit {MAX_COLORS}")
    colors = []
    for i, item in enumerate(raw_colors):
        if not isinstance(item, dict):
            raise AnnotationSchemaError(f"{ctx}.colors[{i}]", "expected object")
        rgb_raw = _require(item, "rgb", list, f"{ctx}.colors[{i}]")
        if len(rgb_raw) != 3 or any(isinstance(c, bool) or not isinstance(c, int) for c in rgb_raw):
            raise AnnotationSchemaError(f"{ctx}.colors[{i}].rgb", "expected three integers")
        if any(not 0 <= c <= 255 for c in rgb_raw):
            raise AnnotationSchemaError(f"{ctx}.colors[{i}].rgb", f"component outside 0..255 in {rgb_raw}")
        frac = _require(item, "pixel_fraction", float, f"{ctx}.colors[{i}]")
        if frac < 0.0 or frac > 1.0:
            raise AnnotationSchemaError(f"{ctx}.colors[{i}].pixel_fraction", f"{frac} outside [0, 1]")
        colors.append(ColorAnnotation((rgb_raw[0], rgb_raw[1], rgb_raw[2]), frac))

    return ImageAnnotation(image_id, tuple(labels), tuple(colors))


def filter_labels(ann: ImageAnnotation, min_score: float = DEFAULT_MIN_SCORE) -> list[str]:
    """Descriptions of labels scoring at least min_score, in list order."""
    return [lab.description for lab in ann.labels if lab.score >= min_score]


def representative_color(ann: ImageAnnotation) -> tuple[int, int, int]:
    """RGB of the dominant color with the largest pixel fraction.

    Ties break toward the first-listed color so replays are reproducible.
    """
    if not ann.colors:
        raise ValueError(f"image {ann.image_id}: no color information")
    best = ann.colors[0]
    for cand in ann.colors[1:]:
        if cand.pixel_fraction > best.pixel_fraction:
            best = cand
    return best.rgb


def annotation_to_dict(ann: ImageAnnotation) -> dict:
    """Inverse of parse_vision_response, used by corpus serialization."""
    return {
        "image_id": ann.image_id,
        "labels": [{"description": l.description, "score": l.score} for l in ann.labels],
        "colors": [{"rgb": list(c.rgb), "pixel_fraction": c.pixel_fraction} for c in ann.colors],
    }
