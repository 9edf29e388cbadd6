"""Axis-aligned boxes and overlap geometry."""

from __future__ import annotations

from dataclasses import dataclass

from .errors import RecordError


@dataclass(frozen=True)
class BoundingBox:
    """Corner-format box (x1, y1, x2, y2) in absolute pixels, origin top-left.

    Validated boxes satisfy x1 < x2, y1 < y2 and non-negative coordinates;
    motion-predicted boxes skip validation and may extend past image bounds.
    """

    x1: float
    y1: float
    x2: float
    y2: float

    def validate(self, width: float | None = None, height: float | None = None) -> None:
        """Raise RecordError naming the offending field, optionally checking frame containment."""
        for name in ("x1", "y1", "x2", "y2"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or v != v:
                raise RecordError(name, f"{name} is not a finite number: {v!r}")
            if v < 0:
                raise RecordError(name, f"{name} must be >= 0, got {v}")
        if self.x2 <= self.x1:
            raise RecordError("x2", f"x2 must exceed x1, got x1={self.x1} x2={self.x2}")
        if self.y2 <= self.y1:
            raise RecordError("y2", f"y2 must exceed y1, got y1={self.y1} y2={self.y2}")
        if width is not None and self.x2 > width:
            raise RecordError("x2", f"box exceeds frame width {width}: x2={self.x2}")
        if height is not None and self.y2 > height:
            raise RecordError("y2", f"box exceeds frame height {height}: y2={self.y2}")

    @property
    def area(self) -> float:
        return max(0.0, self.x2 - self.x1) * max(0.0, self.y2 - self.y1)

    @property
    def width(self) -> float:
        return self.x2 - self.x1

    @property
    def height(self) -> float:
        return self.y2 - self.y1

    def translate(self, dx: float, dy: float) -> "BoundingBox":
        return BoundingBox(self.x1 + dx, self.y1 + dy, self.x2 + dx, self.y2 + dy)

    def as_list(self) -> list[float]:
        return [self.x1, self.y1, self.x2, self.y2]

    @classmethod
    def from_list(cls, values: list[float]) -> "BoundingBox":
        if len(values) != 4:
            raise RecordError("bbox", f"bbox needs 4 coordinates, got {len(values)}")
        return cls(float(values[0]), float(values[1]), float(values[2]), float(values[3]))


def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection-over-union of two boxes; 0.0 when disjoint."""
    ix = min(a.x2, b.x2) - max(a.x1, b.x1)
    iy = min(a.y2, b.y2) - max(a.y1, b.y1)
    if ix <= 0.0 or iy <= 0.0:
        return 0.0
    inter = ix * iy
    union = a.area + b.area - inter
    if union <= 0.0:
        return 0.0
    return inter / union
