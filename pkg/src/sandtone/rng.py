"""Coordinate-keyed pseudorandom hashing.

Every random decision made while synthesizing textures or filling render
blocks is a pure function of (seed, stream, x, y). There is no shared
generator state, so pixels can be evaluated in any order and across any
number of threads, and a rerun with the same seed reproduces output bit
for bit. Mixing is two rounds of the splitmix64 finalizer over the packed
coordinates, which is plenty for the statistical demands here (binomial
component picks and uniform index draws).
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1
_MASK32 = (1 << 32) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MULT_A = 0xBF58476D1CE4E5B9
_MULT_B = 0x94D049BB133111EB

# Decision streams. The values are arbitrary but frozen: changing them
# changes every texture ever generated.
COMPONENT_STREAM = 1
SOURCE_PIXEL_STREAM = 2
WINDOW_X_STREAM = 3
WINDOW_Y_STREAM = 4

_V_GOLDEN = np.uint64(_GOLDEN)
_V_MULT_A = np.uint64(_MULT_A)
_V_MULT_B = np.uint64(_MULT_B)


def mix64(z: int) -> int:
    """splitmix64 finalizer over a 64-bit integer (pure Python)."""
    z &= _MASK64
    z ^= z >> 30
    z = (z * _MULT_A) & _MASK64
    z ^= z >> 27
    z = (z * _MULT_B) & _MASK64
    z ^= z >> 31
    return z


def stream_key(seed: int, stream: int) -> int:
    """Collapse (seed, stream) into one well-mixed 64-bit key."""
    return mix64((seed & _MASK64) + _GOLDEN * stream)


def hash_coord(seed: int, stream: int, x: int, y: int) -> int:
    """Scalar reference hash; hash_coords must agree with this pointwise."""
    pack = ((x & _MASK32) << 32) | (y & _MASK32)
    z = mix64(pack ^ stream_key(seed, stream))
    return mix64((z + _GOLDEN) & _MASK64)


def _mix64_array(z: np.ndarray) -> np.ndarray:
    # uint64 array ops wrap silently; scalar numpy ops would warn, so
    # callers must pass real arrays.
    z = z ^ (z >> np.uint64(30))
    z = z * _V_MULT_A
    z = z ^ (z >> np.uint64(27))
    z = z * _V_MULT_B
    z = z ^ (z >> np.uint64(31))
    return z


def hash_coords(seed: int, stream: int, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorized 64-bit hash of pixel coordinates.

    xs and ys are broadcastable integer arrays (values taken mod 2**32).
    Returns uint64 values equal to hash_coord at every position.
    """
    key = np.uint64(stream_key(seed, stream))
    xs = np.atleast_1d(np.asarray(xs)).astype(np.uint64) & np.uint64(_MASK32)
    ys = np.atleast_1d(np.asarray(ys)).astype(np.uint64) & np.uint64(_MASK32)
    pack = (xs << np.uint64(32)) | ys
    return _mix64_array(_mix64_array(pack ^ key) + _V_GOLDEN)
