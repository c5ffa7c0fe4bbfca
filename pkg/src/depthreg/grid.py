"""Dense grid containers, circular shifts, and the seeded integer generator.

Conventions pinned here so every golden file and test stays reproducible:

* Storage is row-major float64; grids are immutable after construction.
* ``shift2d_*`` rolls content DOWN by ``s_h`` and RIGHT by ``s_w``:
  ``out[i, j] = in[(i - s_h) mod H, (j - s_w) mod W]``.
* ``SeedRng`` is SplitMix64 (Steele/Lea/Flood 2014): state advances by the
  additive constant 0x9E3779B97F4A7C15 and each output is the mix
  ``z ^= z>>30; z *= 0xBF58476D1CE4E5B9; z ^= z>>27; z *= 0x94D049BB133111EB;
  z ^= z>>31`` of the advanced state, all modulo 2**64.  Pure integer
  arithmetic, identical on every platform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InvalidDimension, InvalidShift, ShapeError

_MASK64 = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _mix64(z: int) -> int:
    z = (z ^ (z >> 30)) * _MIX1 & _MASK64
    z = (z ^ (z >> 27)) * _MIX2 & _MASK64
    return z ^ (z >> 31)


class SeedRng:
    """SplitMix64 stream; identical seed implies identical output sequence.

    Single-owner mutable.  For concurrent use, ``split()`` off independent
    child streams instead of sharing one instance.
    """

    __slots__ = ("state",)

    def __init__(self, seed: int):
        self.state = seed & _MASK64

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK64
        return _mix64(self.state)

    def next_u64_block(self, n: int) -> np.ndarray:
        """Vectorized equivalent of ``n`` sequential ``next_u64`` calls.

        SplitMix64's state walk is affine, so the k-th output is
        ``mix(state + (k+1)*gamma)`` in closed form.
        """
        k = np.arange(1, n + 1, dtype=np.uint64)
        z = np.uint64(self.state) + k * np.uint64(_GAMMA)
        z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
        z = z ^ (z >> np.uint64(31))
        self.state = (self.state + n * _GAMMA) & _MASK64
        return z

    def uniforms(self, n: int) -> np.ndarray:
        """n doubles in [0, 1), 53-bit resolution."""
        return (self.next_u64_block(n) >> np.uint64(11)) * 2.0**-53

    def normals(self, n: int) -> np.ndarray:
        """n standard normals via Box-Muller on consecutive uniform pairs."""
        m = (n + 1) // 2
        u = self.uniforms(2 * m)
        r = np.sqrt(-2.0 * np.log(1.0 - u[:m]))  # 1-u in (0,1] keeps log finite
        t = 2.0 * math.pi * u[m:]
        out = np.concatenate([r * np.cos(t), r * np.sin(t)])
        return out[:n]

    def split(self) -> "SeedRng":
        """Child stream seeded from one draw of this stream."""
        return SeedRng(self.next_u64())


def gen_shift_seed(rng: SeedRng, n: int) -> int:
    """Uniform integer in the closed interval [1, n-1]; advances ``rng``.

    Uses rejection so the distribution is exactly uniform regardless of n.
    """
    if n < 2:
        raise InvalidDimension(f"seed range [1, n-1] is empty for n={n}")
    span = n - 1
    limit = (1 << 64) // span * span
    while True:
        z = rng.next_u64()
        if z < limit:
            return 1 + z % span


@dataclass(frozen=True)
class Grid3:
    """H x W x C real-valued feature map, immutable, all entries finite."""

    data: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float64)
        if arr.ndim != 3:
            raise ShapeError(f"expected 3 axes, got {arr.ndim}")
        if min(arr.shape) < 1:
            raise InvalidDimension(f"degenerate shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DomainError("feature grid contains non-finite entries")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    @classmethod
    def _owned(cls, arr: np.ndarray) -> "Grid3":
        """Wrap a freshly allocated float64 array without the defensive copy.

        Internal fast path; the finiteness invariant is still verified.
        """
        if not np.all(np.isfinite(arr)):
            raise DomainError("feature grid contains non-finite entries")
        arr.setflags(write=False)
        obj = object.__new__(cls)
        object.__setattr__(obj, "data", arr)
        return obj

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]

    @property
    def channels(self) -> int:
        return self.data.shape[2]


@dataclass(frozen=True)
class Grid1:
    """H x W depth map (meters) with a validity mask.

    Valid entries must be finite and >= 0; invalid entries are unconstrained
    (sensor holes carry whatever the source wrote there).
    """

    values: np.ndarray
    valid: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise ShapeError(f"expected 2 axes, got {vals.ndim}")
        if min(vals.shape) < 1:
            raise InvalidDimension(f"degenerate shape {vals.shape}")
        mask = self.valid
        if mask is None:
            mask = np.ones(vals.shape, dtype=bool)
        else:
            mask = np.asarray(mask, dtype=bool)
            if mask.shape != vals.shape:
                raise ShapeError(f"mask shape {mask.shape} != values shape {vals.shape}")
        checked = vals[mask]
        if checked.size and (not np.all(np.isfinite(checked)) or np.any(checked < 0)):
            raise DomainError("valid depth entries must be finite and >= 0")
        vals = vals.copy()
        vals.setflags(write=False)
        mask = mask.copy()
        mask.setflags(write=False)
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "valid", mask)

    @classmethod
    def _owned(cls, values: np.ndarray, valid: np.ndarray) -> "Grid1":
        """No-copy wrap of freshly allocated arrays; invariants still checked."""
        checked = values[valid]
        if checked.size and (not np.all(np.isfinite(checked)) or np.any(checked < 0)):
            raise DomainError("valid depth entries must be finite and >= 0")
        values.setflags(write=False)
        valid.setflags(write=False)
        obj = object.__new__(cls)
        object.__setattr__(obj, "values", values)
        object.__setattr__(obj, "valid", valid)
        return obj

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]


def _check_shift(h: int, w: int, s_h: int, s_w: int) -> None:
    if not (0 <= s_h < h):
        raise InvalidShift(f"s_h={s_h} outside [0, {h})")
    if not (0 <= s_w < w):
        raise InvalidShift(f"s_w={s_w} outside [0, {w})")


def shift2d_g3(m: Grid3, s_h: int, s_w: int) -> Grid3:
    """Circular roll: content moves down by s_h rows and right by s_w columns."""
    _check_shift(m.height, m.width, s_h, s_w)
    return Grid3._owned(np.roll(m.data, (s_h, s_w), axis=(0, 1)))


def shift2d_g1(m: Grid1, s_h: int, s_w: int) -> Grid1:
    """Same roll as shift2d_g3, applied jointly to values and validity mask."""
    _check_shift(m.height, m.width, s_h, s_w)
    return Grid1._owned(
        np.roll(m.values, (s_h, s_w), axis=(0, 1)),
        np.roll(m.valid, (s_h, s_w), axis=(0, 1)),
    )
