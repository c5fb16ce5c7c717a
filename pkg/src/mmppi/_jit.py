"""Shared numba decorator: one configuration for every compiled function so
scalar helpers and the parallel kernel have identical FP semantics."""

from __future__ import annotations

import functools

from numba import njit

# error_model='numpy' drops per-division zero checks; denominators in the hot
# path are structurally positive (clamped vx, normal loads, wheelbase).
fastjit = functools.partial(njit, cache=True, error_model="numpy")
