"""Object localization: isolate objects in images and expand them into tasks.

Images carry zero or more polygonal object regions. A dataset-level strategy
decides how multi-object images become annotation tasks: drop them, split
into one sub-image per object, or keep one polygon-scoped task per object.
The engine never decodes pixels; crop rectangles travel in manifests and are
applied downstream.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .errors import HierarchyFormatError, InvalidRegionError


class LocalizationStrategy(str, Enum):
    DISCARD_MOI = "discard_moi"
    SPLIT_SUBIMAGES = "split_subimages"
    BOUNDING_POLYGONS = "bounding_polygons"


@dataclass(frozen=True)
class ObjectRegion:
    region_id: str
    polygon: tuple[tuple[float, float], ...]  # ordered vertices, >= 3


@dataclass(frozen=True)
class ImageRecord:
    image_id: str
    uri: str
    width: int
    height: int
    regions: tuple[ObjectRegion, ...] = ()
    original_label: str | None = None


@dataclass(frozen=True)
class AnnotationTask:
    """One object-in-image to classify.

    region_id is absent for whole-image tasks; crop is the axis-aligned
    bounding box of the region polygon for sub-image tasks.
    """

    task_id: str
    image_id: str
    region_id: str | None = None
    crop: tuple[float, float, float, float] | None = None  # x_min, y_min, x_max, y_max


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


def _cross(ox: float, oy: float, ax: float, ay: float, bx: float, by: float) -> float:
    return (ax - ox) * (by - oy) - (ay - oy) * (bx - ox)


def _on_segment(ax, ay, bx, by, px, py) -> bool:
    return min(ax, bx) <= px <= max(ax, bx) and min(ay, by) <= py <= max(ay, by)


def _segments_intersect(p1, p2, p3, p4) -> bool:
    """Inclusive segment intersection (shared endpoints count)."""
    d1 = _cross(*p3, *p4, *p1)
    d2 = _cross(*p3, *p4, *p2)
    d3 = _cross(*p1, *p2, *p3)
    d4 = _cross(*p1, *p2, *p4)
    if ((d1 > 0 and d2 < 0) or (d1 < 0 and d2 > 0)) and ((d3 > 0 and d4 < 0) or (d3 < 0 and d4 > 0)):
        return True
    if d1 == 0 and _on_segment(*p3, *p4, *p1):
        return True
    if d2 == 0 and _on_segment(*p3, *p4, *p2):
        return True
    if d3 == 0 and _on_segment(*p1, *p2, *p3):
        return True
    if d4 == 0 and _on_segment(*p1, *p2, *p4):
        return True
    return False


def polygon_area(polygon: Sequence[tuple[float, float]]) -> float:
    """Unsigned shoelace area."""
    total = 0.0
    n = len(polygon)
    for i in range(n):
        x0, y0 = polygon[i]
        x1, y1 = polygon[(i + 1) % n]
        total += x0 * y1 - x1 * y0
    return abs(total) / 2.0


def validate_region(region: ObjectRegion, dims: tuple[float, float]) -> list[Violation]:
    """Every violated region invariant; empty list means ok.

    Simplicity is checked by pairwise segment intersection, O(n^2); region
    polygons are small enough that this is never the bottleneck.
    """
    width, height = dims
    violations: list[Violation] = []
    poly = region.polygon
    n = len(poly)
    if n < 3:
        violations.append(Violation("too-few-vertices", f"polygon has {n} vertices, needs at least 3"))
        return violations

    for x, y in poly:
        if not (0 <= x <= width and 0 <= y <= height):
            violations.append(
                Violation("out-of-bounds", f"vertex ({x}, {y}) outside image bounds {width}x{height}")
            )
            break

    for i in range(n):
        if poly[i] == poly[(i + 1) % n]:
            violations.append(Violation("degenerate-edge", f"repeated consecutive vertex {poly[i]}"))
            break

    edges = [(poly[i], poly[(i + 1) % n]) for i in range(n)]
    simple = True
    for i in range(n):
        for j in range(i + 1, n):
            a1, a2 = edges[i]
            b1, b2 = edges[j]
            adjacent = j == i + 1 or (i == 0 and j == n - 1)
            if adjacent:
                # Shared endpoint is fine; a collinear doubling-back spike is not.
                shared = a2 if j == i + 1 else a1
                other_a = a1 if shared == a2 else a2
                other_b = b2 if b1 == shared else b1
                if _cross(*shared, *other_a, *other_b) == 0:
                    dot = (other_a[0] - shared[0]) * (other_b[0] - shared[0]) + (
                        other_a[1] - shared[1]
                    ) * (other_b[1] - shared[1])
                    if dot > 0:
                        simple = False
            elif _segments_intersect(a1, a2, b1, b2):
                simple = False
    if not simple:
        violations.append(Violation("self-intersection", "polygon edges intersect"))

    if polygon_area(poly) <= 0.0:
        violations.append(Violation("zero-area", "polygon encloses no area"))
    return violations


def validate_image(image: ImageRecord) -> list[tuple[str, Violation]]:
    """(region_id, violation) pairs over all regions of the image."""
    found = []
    for region in image.regions:
        for violation in validate_region(region, (image.width, image.height)):
            found.append((region.region_id, violation))
    return found


def polygon_bbox(
    polygon: Sequence[tuple[float, float]], dims: tuple[float, float]
) -> tuple[float, float, float, float]:
    """Tight axis-aligned bounding box, clamped to image bounds."""
    width, height = dims
    xs = [p[0] for p in polygon]
    ys = [p[1] for p in polygon]
    return (
        max(0.0, min(xs)),
        max(0.0, min(ys)),
        min(float(width), max(xs)),
        min(float(height), max(ys)),
    )


def region_task_id(image_id: str, region_id: str) -> str:
    return f"{image_id}::{region_id}"


def expand_tasks(image: ImageRecord, strategy: LocalizationStrategy) -> list[AnnotationTask]:
    """Expand one image into annotation tasks under the given strategy.

    Single-object images (zero or one region) always yield one whole-image
    task. Multi-object images yield nothing under DISCARD_MOI, one cropped
    sub-image task per region under SPLIT_SUBIMAGES, and one polygon-scoped
    task per region under BOUNDING_POLYGONS. Region order is preserved.
    """
    bad = validate_image(image)
    if bad:
        region_id, violation = bad[0]
        raise InvalidRegionError(
            f"image {image.image_id!r} region {region_id!r}: {violation.message}",
        )
    strategy = LocalizationStrategy(strategy)
    if len(image.regions) <= 1:
        return [AnnotationTask(task_id=image.image_id, image_id=image.image_id)]
    if strategy is LocalizationStrategy.DISCARD_MOI:
        return []
    tasks = []
    for region in image.regions:
        if strategy is LocalizationStrategy.SPLIT_SUBIMAGES:
            crop = polygon_bbox(region.polygon, (image.width, image.height))
            tasks.append(
                AnnotationTask(
                    task_id=region_task_id(image.image_id, region.region_id),
                    image_id=image.image_id,
                    crop=crop,
                )
            )
        else:
            tasks.append(
                AnnotationTask(
                    task_id=region_task_id(image.image_id, region.region_id),
                    image_id=image.image_id,
                    region_id=region.region_id,
                )
            )
    return tasks


def dataset_task_count(images: Iterable[ImageRecord], strategy: LocalizationStrategy) -> int:
    """Task count by arithmetic alone, without materializing tasks.

    Must equal the summed sizes of :func:`expand_tasks` over the dataset.
    """
    strategy = LocalizationStrategy(strategy)
    count = 0
    for image in images:
        n = len(image.regions)
        if n <= 1:
            count += 1
        elif strategy is not LocalizationStrategy.DISCARD_MOI:
            count += n
    return count


# --- dataset manifest (JSON lines, one image per line) ---


def image_to_dict(image: ImageRecord) -> dict:
    entry: dict = {
        "image_id": image.image_id,
        "uri": image.uri,
        "width": image.width,
        "height": image.height,
        "regions": [
            {"region_id": r.region_id, "polygon": [[x, y] for x, y in r.polygon]}
            for r in image.regions
        ],
    }
    if image.original_label is not None:
        entry["original_label"] = image.original_label
    return entry


def image_from_dict(entry: dict) -> ImageRecord:
    try:
        regions = tuple(
            ObjectRegion(
                region_id=str(r["region_id"]),
                polygon=tuple((float(x), float(y)) for x, y in r["polygon"]),
            )
            for r in entry.get("regions", [])
        )
        return ImageRecord(
            image_id=str(entry["image_id"]),
            uri=str(entry["uri"]),
            width=int(entry["width"]),
            height=int(entry["height"]),
            regions=regions,
            original_label=entry.get("original_label"),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise HierarchyFormatError(f"bad image record: {exc}", code="invalid-document") from exc


def load_manifest(source: str | Path) -> list[ImageRecord]:
    """Parse a JSON-lines dataset manifest; image ids must be unique."""
    if isinstance(source, Path):
        source = source.read_text(encoding="utf-8")
    images: list[ImageRecord] = []
    seen: set[str] = set()
    for lineno, line in enumerate(source.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            entry = json.loads(line)
        except json.JSONDecodeError as exc:
            raise HierarchyFormatError(
                f"manifest line {lineno}: {exc.msg}", code="syntax-error"
            ) from exc
        image = image_from_dict(entry)
        if image.image_id in seen:
            raise HierarchyFormatError(
                f"manifest line {lineno}: duplicate image_id {image.image_id!r}",
                code="invalid-document",
            )
        seen.add(image.image_id)
        images.append(image)
    return images


def dump_manifest(images: Iterable[ImageRecord]) -> str:
    return "".join(json.dumps(image_to_dict(img), separators=(",", ":")) + "\n" for img in images)
