"""Obstacles, ego footprint circles, road edges and the planner's world view."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from ._jit import fastjit

from .params import ConfigurationError
from .path import PathReference


@dataclass(frozen=True)
class Obstacle:
    """Circular obstacle with world-frame velocity."""

    center: tuple[float, float]
    radius: float
    velocity: tuple[float, float] = (0.0, 0.0)
    visible: bool = True

    def __post_init__(self) -> None:
        if self.radius <= 0.0:
            raise ConfigurationError("obstacle radius must be positive")

    def position_at(self, t: float) -> tuple[float, float]:
        return (self.center[0] + self.velocity[0] * t,
                self.center[1] + self.velocity[1] * t)


@dataclass(frozen=True)
class EgoFootprint:
    """Vehicle collision footprint: circles at body-x offsets from the CoG."""

    offsets: tuple[float, ...] = (-1.0, 1.0)
    radius: float = 1.0

    def __post_init__(self) -> None:
        if self.radius <= 0.0:
            raise ConfigurationError("footprint circle radius must be positive")

    def centers(self, x: float, y: float, psi: float) -> np.ndarray:
        c, s = math.cos(psi), math.sin(psi)
        return np.array([[x + o * c, y + o * s] for o in self.offsets])


@dataclass(frozen=True)
class RoadEdge:
    """Edge polyline; ``side`` = +1 if the road lies left of the point order."""

    points: np.ndarray
    side: float

    def __post_init__(self) -> None:
        pts = np.asarray(self.points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ConfigurationError("road edge needs at least two (X, Y) points")
        object.__setattr__(self, "points", pts)
        if self.side not in (-1.0, 1.0):
            raise ConfigurationError("edge side must be +1 or -1")


@dataclass
class WorldSnapshot:
    """Immutable planner input: visible obstacles, road edges, reference path."""

    path: PathReference
    obstacles: list[Obstacle] = field(default_factory=list)
    edges: list[RoadEdge] = field(default_factory=list)
    footprint: EgoFootprint = field(default_factory=EgoFootprint)


def pack_obstacles(obstacles: list[Obstacle]) -> np.ndarray:
    """(N, 5) array of visible obstacles: x, y, vx, vy, radius."""
    rows = [(o.center[0], o.center[1], o.velocity[0], o.velocity[1], o.radius)
            for o in obstacles if o.visible]
    if not rows:
        return np.zeros((0, 5))
    return np.array(rows, dtype=np.float64)


def pack_edges(edges: list[RoadEdge]) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Concatenate edge polylines for the kernel: points, offsets, sides."""
    if not edges:
        return np.zeros((0, 2)), np.zeros(1, dtype=np.int64), np.zeros(0)
    pts = np.concatenate([e.points for e in edges], axis=0)
    offsets = np.zeros(len(edges) + 1, dtype=np.int64)
    for i, e in enumerate(edges):
        offsets[i + 1] = offsets[i] + e.points.shape[0]
    sides = np.array([e.side for e in edges], dtype=np.float64)
    return pts, offsets, sides


@fastjit()
def _signed_edge_distance(px, py, pts, start, stop, side):
    """Signed distance from (px, py) to one edge polyline: positive on the
    road side, negative beyond the edge."""
    best_d2 = np.inf
    best_cross = 0.0
    for i in range(start, stop - 1):
        ax = pts[i, 0]
        ay = pts[i, 1]
        bx = pts[i + 1, 0]
        by = pts[i + 1, 1]
        dx = bx - ax
        dy = by - ay
        seg2 = dx * dx + dy * dy
        t = ((px - ax) * dx + (py - ay) * dy) / seg2
        if t < 0.0:
            t = 0.0
        elif t > 1.0:
            t = 1.0
        cx = ax + t * dx
        cy = ay + t * dy
        ex = px - cx
        ey = py - cy
        d2 = ex * ex + ey * ey
        if d2 < best_d2:
            best_d2 = d2
            best_cross = dx * (py - ay) - dy * (px - ax)
    d = math.sqrt(best_d2)
    if best_cross * side < 0.0:
        return -d
    return d


def signed_edge_distance(point, edge: RoadEdge) -> float:
    """Signed distance of a point to an edge (positive on the road side)."""
    pts = edge.points
    return float(_signed_edge_distance(float(point[0]), float(point[1]), pts, 0,
                                       pts.shape[0], edge.side))


@fastjit()
def _segment_intersects_segment(ax, ay, bx, by, cx, cy, dx, dy):
    d1x = bx - ax
    d1y = by - ay
    d2x = dx - cx
    d2y = dy - cy
    denom = d1x * d2y - d1y * d2x
    if denom == 0.0:
        return False
    t = ((cx - ax) * d2y - (cy - ay) * d2x) / denom
    u = ((cx - ax) * d1y - (cy - ay) * d1x) / denom
    return 0.0 <= t <= 1.0 and 0.0 <= u <= 1.0


def segment_blocked_by_polygon(p0, p1, polygon: np.ndarray) -> bool:
    """True if the segment p0-p1 crosses (or starts/ends inside) the polygon."""
    poly = np.asarray(polygon, dtype=np.float64)
    n = poly.shape[0]
    for i in range(n):
        a = poly[i]
        b = poly[(i + 1) % n]
        if _segment_intersects_segment(p0[0], p0[1], p1[0], p1[1],
                                       a[0], a[1], b[0], b[1]):
            return True
    return _point_in_polygon(p1[0], p1[1], poly) or _point_in_polygon(p0[0], p0[1], poly)


def _point_in_polygon(x: float, y: float, poly: np.ndarray) -> bool:
    inside = False
    n = poly.shape[0]
    j = n - 1
    for i in range(n):
        xi, yi = poly[i]
        xj, yj = poly[j]
        if (yi > y) != (yj > y) and x < (xj - xi) * (y - yi) / (yj - yi) + xi:
            inside = not inside
        j = i
    return inside
