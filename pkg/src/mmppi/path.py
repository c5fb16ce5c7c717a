"""Reference mission path parameterised by arc length, with a speed profile."""

from __future__ import annotations

import math

import numpy as np
from ._jit import fastjit

from .params import ConfigurationError

MAX_WAYPOINT_SPACING = 0.5


class PathReference:
    """Ordered (X, Y) waypoints with cumulative arc length and desired speed.

    The path is piecewise linear; waypoints must be dense (spacing <= 0.5 m)
    so linear interpolation and per-segment tangents are accurate.
    """

    def __init__(self, points: np.ndarray, v_des: float | np.ndarray):
        points = np.asarray(points, dtype=np.float64)
        if points.ndim != 2 or points.shape[1] != 2 or points.shape[0] < 2:
            raise ConfigurationError("path needs at least two (X, Y) waypoints")
        seg = np.diff(points, axis=0)
        seg_len = np.hypot(seg[:, 0], seg[:, 1])
        if np.any(seg_len <= 0.0):
            raise ConfigurationError("path arc length must be strictly increasing")
        if np.any(seg_len > MAX_WAYPOINT_SPACING + 1e-9):
            raise ConfigurationError(
                f"waypoint spacing exceeds {MAX_WAYPOINT_SPACING} m; densify the path")
        self.points = points
        self.s = np.concatenate(([0.0], np.cumsum(seg_len)))
        self.tangents = seg / seg_len[:, None]
        v = np.asarray(v_des, dtype=np.float64)
        if v.ndim == 0:
            v = np.full(points.shape[0], float(v))
        if v.shape[0] != points.shape[0]:
            raise ConfigurationError("v_des must be scalar or one value per waypoint")
        self.v_des = v

    @property
    def length(self) -> float:
        return float(self.s[-1])

    def sample(self, s: float) -> tuple[np.ndarray, np.ndarray, float]:
        """Position, unit tangent and desired speed at arc length ``s`` (clamped)."""
        out = np.empty(5)
        _path_sample(self.s, self.points[:, 0], self.points[:, 1],
                     self.tangents[:, 0], self.tangents[:, 1], self.v_des,
                     float(s), out)
        return out[0:2].copy(), out[2:4].copy(), float(out[4])

    def project(self, x: float, y: float) -> float:
        """Arc length of the point on the path nearest to (x, y)."""
        px = self.points[:, 0]
        py = self.points[:, 1]
        i = int(np.argmin((px - x) ** 2 + (py - y) ** 2))
        best_s = self.s[i]
        best_d = (px[i] - x) ** 2 + (py[i] - y) ** 2
        for seg in (i - 1, i):
            if seg < 0 or seg >= len(self.tangents):
                continue
            ax, ay = px[seg], py[seg]
            seg_len = self.s[seg + 1] - self.s[seg]
            tx, ty = self.tangents[seg]
            t = min(max(((x - ax) * tx + (y - ay) * ty), 0.0), seg_len)
            cx, cy = ax + t * tx, ay + t * ty
            d = (cx - x) ** 2 + (cy - y) ** 2
            if d < best_d:
                best_d = d
                best_s = self.s[seg] + t
        return float(best_s)


@fastjit()
def _path_sample(s_arr, x_arr, y_arr, tx_arr, ty_arr, v_arr, s, out):
    """Clamped piecewise-linear lookup; out = [px, py, tx, ty, v_des]."""
    n = s_arr.shape[0]
    if s <= s_arr[0]:
        seg = 0
        frac = 0.0
    elif s >= s_arr[n - 1]:
        seg = n - 2
        frac = 1.0
    else:
        lo = 0
        hi = n - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if s_arr[mid] <= s:
                lo = mid
            else:
                hi = mid
        seg = lo
        frac = (s - s_arr[seg]) / (s_arr[seg + 1] - s_arr[seg])
    out[0] = x_arr[seg] + frac * (x_arr[seg + 1] - x_arr[seg])
    out[1] = y_arr[seg] + frac * (y_arr[seg + 1] - y_arr[seg])
    out[2] = tx_arr[seg]
    out[3] = ty_arr[seg]
    out[4] = v_arr[seg] + frac * (v_arr[seg + 1] - v_arr[seg])


def straight_path(start, end, v_des, spacing: float = 0.5) -> PathReference:
    """Straight reference line from ``start`` to ``end`` at constant speed."""
    start = np.asarray(start, dtype=np.float64)
    end = np.asarray(end, dtype=np.float64)
    length = float(np.hypot(*(end - start)))
    n = max(2, int(math.ceil(length / spacing)) + 1)
    pts = start[None, :] + np.linspace(0.0, 1.0, n)[:, None] * (end - start)[None, :]
    return PathReference(pts, v_des)


def arc_path(radius: float, angle: float, v_des, spacing: float = 0.5,
             center=(0.0, 0.0)) -> PathReference:
    """Circular-arc path of given radius, starting at angle 0 heading +Y side."""
    n = max(2, int(math.ceil(abs(radius * angle) / spacing)) + 1)
    phis = np.linspace(0.0, angle, n)
    cx, cy = center
    pts = np.stack([cx + radius * np.sin(phis), cy + radius * (1.0 - np.cos(phis))],
                   axis=1)
    return PathReference(pts, v_des)
