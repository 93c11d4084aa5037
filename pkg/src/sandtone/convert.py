"""Sand-based rendering of arbitrary pictures.

The source is converted to 8-bit gray, each pixel is assigned a mixture
slot through a partition of the 0-255 spectrum, and every source pixel is
enlarged to a block filled with a window of that slot's synthesized
texture. Window offsets are keyed by (seed, x, y), so rendering is
deterministic under any parallel schedule.
"""

from __future__ import annotations

import json
from bisect import bisect_right
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .imaging import GrayImage, RgbImage, to_grayscale
from .planner import MixturePlan
from .rng import WINDOW_X_STREAM, WINDOW_Y_STREAM, hash_coords
from .texture import MixtureTexture, SynthesisParams, derive_slot_seed, synthesize

GUTTER_WIDTH = 8


@dataclass(frozen=True)
class AssignmentTable:
    """Partition of gray values 0-255 into one contiguous range per slot.

    thresholds[0] = 0 and thresholds[N] = 256; slot k covers gray values
    [thresholds[k-1], thresholds[k] - 1].
    """

    thresholds: tuple[int, ...]

    def __post_init__(self) -> None:
        t = self.thresholds
        if len(t) < 2 or t[0] != 0 or t[-1] != 256:
            raise ValueError("thresholds must run from 0 to 256")
        if any(b <= a for a, b in zip(t, t[1:])):
            raise ValueError("threshold collision")

    @property
    def set_size(self) -> int:
        return len(self.thresholds) - 1

    def ranges(self) -> list[tuple[int, int]]:
        """Inclusive (low, high) gray range per slot."""
        t = self.thresholds
        return [(t[i], t[i + 1] - 1) for i in range(self.set_size)]


def default_table(set_size: int) -> AssignmentTable:
    """Evenly assign slots over the 256-value spectrum.

    When 256 is not divisible by set_size the leftover width goes to the
    dark end, so range widths differ by at most one.
    """
    if set_size < 1 or set_size > 256:
        raise ValueError("invalid set size")
    width, extra = divmod(256, set_size)
    thresholds = [0]
    for slot in range(1, set_size + 1):
        thresholds.append(thresholds[-1] + width + (1 if slot <= extra else 0))
    return AssignmentTable(tuple(thresholds))


def lookup(table: AssignmentTable, gray: int) -> int:
    """Slot whose range contains the gray value."""
    if not 0 <= gray <= 255:
        raise ValueError("gray value out of [0, 255]")
    return bisect_right(table.thresholds, gray)


def lookup_image(table: AssignmentTable, gray: GrayImage) -> np.ndarray:
    """Vectorized lookup: per-pixel slot numbers as a (height, width) array."""
    thresholds = np.asarray(table.thresholds, dtype=np.int32)
    return np.searchsorted(thresholds, gray.data, side="right").astype(np.uint16)


def adjust_table(table: AssignmentTable, index: int, new_threshold: int) -> AssignmentTable:
    """Move one interior boundary; rejects anything that breaks the partition."""
    if not 1 <= index <= table.set_size - 1:
        raise ValueError("threshold index out of range")
    lower = table.thresholds[index - 1]
    upper = table.thresholds[index + 1]
    if not lower < new_threshold < upper:
        raise ValueError("threshold collision")
    updated = list(table.thresholds)
    updated[index] = int(new_threshold)
    return AssignmentTable(tuple(updated))


@dataclass(frozen=True)
class RenderJob:
    source: RgbImage
    plan: MixturePlan
    table: AssignmentTable
    block_size: int = 8
    seed: int = 0
    swatch_params: SynthesisParams = field(default_factory=SynthesisParams)

    def __post_init__(self) -> None:
        if self.block_size < 2:
            raise ValueError("block size must be at least 2")
        if self.table.set_size != self.plan.set_size:
            raise ValueError("size mismatch")
        if self.swatch_params.width < self.block_size or self.swatch_params.height < self.block_size:
            raise ValueError("block size exceeds swatch size")


@dataclass(frozen=True)
class SandRender:
    image: RgbImage
    slot_map: np.ndarray
    block_size: int

    def __post_init__(self) -> None:
        self.slot_map.setflags(write=False)


def _fill_rows(
    out_blocks: np.ndarray,
    slots: np.ndarray,
    textures: dict[int, MixtureTexture],
    seed: int,
    block: int,
    row_start: int,
    row_stop: int,
) -> None:
    """Fill output blocks for source rows [row_start, row_stop)."""
    window = np.arange(block)
    for slot in np.unique(slots[row_start:row_stop]):
        tex = textures[int(slot)].image.data
        rows, cols = np.nonzero(slots[row_start:row_stop] == slot)
        rows = rows + row_start
        max_x = tex.shape[1] - block + 1
        max_y = tex.shape[0] - block + 1
        off_x = (hash_coords(seed, WINDOW_X_STREAM, cols, rows) % np.uint64(max_x)).astype(np.intp)
        off_y = (hash_coords(seed, WINDOW_Y_STREAM, cols, rows) % np.uint64(max_y)).astype(np.intp)
        windows = tex[
            off_y[:, None, None] + window[None, :, None],
            off_x[:, None, None] + window[None, None, :],
        ]
        out_blocks[rows, :, cols] = windows


def render(job: RenderJob, workers: int = 1) -> SandRender:
    """Produce the sand-based image plus its per-source-pixel slot map."""
    gray = to_grayscale(job.source)
    slots = lookup_image(job.table, gray)

    specs = {m.slot: m for m in job.plan.mixtures}
    images = job.plan.sand_images()
    textures: dict[int, MixtureTexture] = {}
    for slot in (int(s) for s in np.unique(slots)):
        slot_params = SynthesisParams(
            width=job.swatch_params.width,
            height=job.swatch_params.height,
            seed=derive_slot_seed(job.swatch_params.seed, slot),
        )
        textures[slot] = synthesize(specs[slot], images, slot_params)

    h, w, b = job.source.height, job.source.width, job.block_size
    out = np.empty((h * b, w * b, 3), dtype=np.uint8)
    out_blocks = out.reshape(h, b, w, b, 3)

    if workers > 1:
        bounds = np.linspace(0, h, min(workers, h) + 1, dtype=int)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_fill_rows, out_blocks, slots, textures, job.seed, b, int(y0), int(y1))
                for y0, y1 in zip(bounds, bounds[1:])
                if y1 > y0
            ]
            for future in futures:
                future.result()
    else:
        _fill_rows(out_blocks, slots, textures, job.seed, b, 0, h)

    return SandRender(image=RgbImage(out), slot_map=slots, block_size=b)


def side_by_side(source: RgbImage, rendered: SandRender) -> RgbImage:
    """Source (nearest-neighbor scaled) and render, separated by a white gutter."""
    b = rendered.block_size
    scaled = np.repeat(np.repeat(source.data, b, axis=0), b, axis=1)
    gutter = np.full((scaled.shape[0], GUTTER_WIDTH, 3), 255, dtype=np.uint8)
    return RgbImage(np.concatenate([scaled, gutter, rendered.image.data], axis=1))


def render_side_by_side(job: RenderJob, workers: int = 1) -> RgbImage:
    return side_by_side(job.source, render(job, workers=workers))


def slot_map_document(result: SandRender) -> dict:
    h, w = result.slot_map.shape
    return {
        "width": w,
        "height": h,
        "block_size": result.block_size,
        "slots": [int(v) for v in result.slot_map.reshape(-1)],
    }


def slot_map_json(result: SandRender) -> str:
    return json.dumps(slot_map_document(result), indent=2) + "\n"
