"""Signed-distance descriptions of 2D design domains.

Every domain exposes ``signed_distance`` (negative inside) and a list of
boundary components. Each component knows its own signed distance and how to
reflect a point across itself; the Voronoi generator uses the reflections to
build boundary-conforming cells without polygon clipping.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class LineComponent:
    """Straight boundary piece; the interior lies on the side opposite ``normal``."""

    name: str
    point: tuple[float, float]
    normal: tuple[float, float]  # outward unit normal
    exact_reflection: bool = True

    def distance(self, p: np.ndarray) -> np.ndarray:
        return (p - np.asarray(self.point)) @ np.asarray(self.normal)

    def reflect(self, p: np.ndarray) -> np.ndarray:
        d = self.distance(p)
        return p - 2.0 * d[:, None] * np.asarray(self.normal)[None, :]


@dataclass(frozen=True)
class CircleComponent:
    """Circular boundary piece; ``inside`` tells which side belongs to the domain."""

    name: str
    center: tuple[float, float]
    radius: float
    inside: bool = True
    exact_reflection: bool = False

    def distance(self, p: np.ndarray) -> np.ndarray:
        r = np.linalg.norm(p - np.asarray(self.center), axis=1)
        return r - self.radius if self.inside else self.radius - r

    def reflect(self, p: np.ndarray) -> np.ndarray:
        c = np.asarray(self.center)
        v = p - c
        r = np.linalg.norm(v, axis=1)
        r = np.where(r == 0.0, 1e-300, r)
        return c + ((2.0 * self.radius - r) / r)[:, None] * v

    def project(self, p: np.ndarray) -> np.ndarray:
        c = np.asarray(self.center)
        v = p - c
        r = np.linalg.norm(v, axis=1)
        return c + (self.radius / r)[:, None] * v


@dataclass
class Domain:
    """Base class: subclasses fill ``kind``, ``params`` and ``components``."""

    kind: str = field(init=False)

    @property
    def components(self) -> list:
        raise NotImplementedError

    def signed_distance(self, p: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def bbox(self) -> tuple[float, float, float, float]:
        raise NotImplementedError

    @property
    def area(self) -> float:
        raise NotImplementedError

    @property
    def boundary_names(self) -> list[str]:
        return [c.name for c in self.components]

    @property
    def has_curved_boundary(self) -> bool:
        return any(not c.exact_reflection for c in self.components)

    def contains(self, p: np.ndarray, tol: float = 0.0) -> np.ndarray:
        return self.signed_distance(np.atleast_2d(p)) <= tol

    def to_dict(self) -> dict:
        raise NotImplementedError


@dataclass
class Rectangle(Domain):
    x0: float = 0.0
    y0: float = 0.0
    x1: float = 1.0
    y1: float = 1.0

    def __post_init__(self):
        self.kind = "rectangle"
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("degenerate rectangle")

    @property
    def width(self) -> float:
        return self.x1 - self.x0

    @property
    def height(self) -> float:
        return self.y1 - self.y0

    @property
    def components(self):
        return [
            LineComponent("bottom", (self.x0, self.y0), (0.0, -1.0)),
            LineComponent("right", (self.x1, self.y0), (1.0, 0.0)),
            LineComponent("top", (self.x0, self.y1), (0.0, 1.0)),
            LineComponent("left", (self.x0, self.y0), (-1.0, 0.0)),
        ]

    def signed_distance(self, p):
        p = np.atleast_2d(p)
        c = np.array([0.5 * (self.x0 + self.x1), 0.5 * (self.y0 + self.y1)])
        half = np.array([0.5 * self.width, 0.5 * self.height])
        q = np.abs(p - c) - half
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
        inside = np.minimum(np.max(q, axis=1), 0.0)
        return outside + inside

    @property
    def bbox(self):
        return (self.x0, self.y0, self.x1, self.y1)

    @property
    def area(self):
        return self.width * self.height

    def to_dict(self):
        return {"kind": self.kind, "x0": self.x0, "y0": self.y0, "x1": self.x1, "y1": self.y1}


@dataclass
class Circle(Domain):
    cx: float = 0.0
    cy: float = 0.0
    radius: float = 1.0

    def __post_init__(self):
        self.kind = "circle"
        if self.radius <= 0:
            raise ValueError("radius must be positive")

    @property
    def components(self):
        return [CircleComponent("boundary", (self.cx, self.cy), self.radius, inside=True)]

    def signed_distance(self, p):
        p = np.atleast_2d(p)
        return np.hypot(p[:, 0] - self.cx, p[:, 1] - self.cy) - self.radius

    @property
    def bbox(self):
        r = self.radius
        return (self.cx - r, self.cy - r, self.cx + r, self.cy + r)

    @property
    def area(self):
        return math.pi * self.radius**2

    def to_dict(self):
        return {"kind": self.kind, "cx": self.cx, "cy": self.cy, "radius": self.radius}


@dataclass
class ConvexPolygon(Domain):
    """Convex polygon given by CCW vertices."""

    points: list = field(default_factory=list)

    def __post_init__(self):
        self.kind = "polygon"
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2 or len(pts) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        nxt = np.roll(pts, -1, axis=0)
        cross = np.cross(nxt - pts, np.roll(nxt, -1, axis=0) - nxt)
        if np.any(cross <= 0):
            raise ValueError("polygon domain must be convex and counter-clockwise")
        self._pts = pts

    @property
    def components(self):
        comps = []
        pts = self._pts
        for i in range(len(pts)):
            a, b = pts[i], pts[(i + 1) % len(pts)]
            t = (b - a) / np.linalg.norm(b - a)
            comps.append(LineComponent(f"edge{i}", (a[0], a[1]), (t[1], -t[0])))
        return comps

    def signed_distance(self, p):
        p = np.atleast_2d(p)
        pts = self._pts
        inside = np.max(np.column_stack([c.distance(p) for c in self.components]), axis=1)
        # exact Euclidean distance to the boundary segments
        dmin = np.full(len(p), np.inf)
        for i in range(len(pts)):
            a, b = pts[i], pts[(i + 1) % len(pts)]
            ab = b - a
            t = np.clip(((p - a) @ ab) / (ab @ ab), 0.0, 1.0)
            dmin = np.minimum(dmin, np.linalg.norm(p - a - t[:, None] * ab, axis=1))
        return np.where(inside > 0, dmin, -dmin)

    @property
    def bbox(self):
        lo, hi = self._pts.min(axis=0), self._pts.max(axis=0)
        return (lo[0], lo[1], hi[0], hi[1])

    @property
    def area(self):
        x, y = self._pts[:, 0], self._pts[:, 1]
        return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))

    def to_dict(self):
        return {"kind": self.kind, "points": [list(map(float, p)) for p in self._pts]}


@dataclass
class RectangleMinusDisk(Domain):
    x0: float = 0.0
    y0: float = 0.0
    x1: float = 1.0
    y1: float = 1.0
    cx: float = 0.5
    cy: float = 0.5
    radius: float = 0.25

    def __post_init__(self):
        self.kind = "rectangle-minus-disk"
        self._rect = Rectangle(self.x0, self.y0, self.x1, self.y1)
        if not (
            self.x0 < self.cx - self.radius
            and self.cx + self.radius < self.x1
            and self.y0 < self.cy - self.radius
            and self.cy + self.radius < self.y1
        ):
            raise ValueError("hole must lie strictly inside the rectangle")

    @property
    def components(self):
        return self._rect.components + [
            CircleComponent("hole", (self.cx, self.cy), self.radius, inside=False)
        ]

    def signed_distance(self, p):
        p = np.atleast_2d(p)
        hole = self.radius - np.hypot(p[:, 0] - self.cx, p[:, 1] - self.cy)
        return np.maximum(self._rect.signed_distance(p), hole)

    @property
    def bbox(self):
        return self._rect.bbox

    @property
    def area(self):
        return self._rect.area - math.pi * self.radius**2

    def to_dict(self):
        return {
            "kind": self.kind, "x0": self.x0, "y0": self.y0, "x1": self.x1, "y1": self.y1,
            "cx": self.cx, "cy": self.cy, "radius": self.radius,
        }


@dataclass
class RotatedDomain(Domain):
    """A base domain rigidly rotated by ``angle`` about ``center``."""

    base: Domain = None
    angle: float = 0.0
    center: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        self.kind = "rotated"

    def _to_base(self, p):
        c, s = math.cos(-self.angle), math.sin(-self.angle)
        q = np.atleast_2d(p) - np.asarray(self.center)
        return np.column_stack([c * q[:, 0] - s * q[:, 1], s * q[:, 0] + c * q[:, 1]]) + np.asarray(
            self.center
        )

    def signed_distance(self, p):
        return self.base.signed_distance(self._to_base(p))

    @property
    def components(self):
        return [_RotatedComponent(c, self) for c in self.base.components]

    @property
    def bbox(self):
        x0, y0, x1, y1 = self.base.bbox
        corners = np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
        c, s = math.cos(self.angle), math.sin(self.angle)
        q = corners - np.asarray(self.center)
        r = np.column_stack([c * q[:, 0] - s * q[:, 1], s * q[:, 0] + c * q[:, 1]]) + self.center
        return (r[:, 0].min(), r[:, 1].min(), r[:, 0].max(), r[:, 1].max())

    @property
    def area(self):
        return self.base.area

    def to_dict(self):
        return {"kind": self.kind, "base": self.base.to_dict(), "angle": self.angle,
                "center": list(self.center)}


class _RotatedComponent:
    def __init__(self, comp, dom: RotatedDomain):
        self._c = comp
        self._d = dom
        self.name = comp.name
        self.exact_reflection = comp.exact_reflection

    def distance(self, p):
        return self._c.distance(self._d._to_base(p))

    def _from_base(self, q):
        c, s = math.cos(self._d.angle), math.sin(self._d.angle)
        q = q - np.asarray(self._d.center)
        return np.column_stack([c * q[:, 0] - s * q[:, 1], s * q[:, 0] + c * q[:, 1]]) + np.asarray(
            self._d.center
        )

    def reflect(self, p):
        return self._from_base(self._c.reflect(self._d._to_base(p)))

    def project(self, p):
        return self._from_base(self._c.project(self._d._to_base(p)))


def domain_from_dict(d: dict) -> Domain:
    kind = d["kind"]
    args = {k: v for k, v in d.items() if k != "kind"}
    if kind == "rectangle":
        return Rectangle(**args)
    if kind == "circle":
        return Circle(**args)
    if kind == "polygon":
        return ConvexPolygon(points=args["points"])
    if kind == "rectangle-minus-disk":
        return RectangleMinusDisk(**args)
    if kind == "rotated":
        return RotatedDomain(base=domain_from_dict(args["base"]), angle=args["angle"],
                             center=tuple(args["center"]))
    raise ValueError(f"unknown domain kind {kind!r}")
