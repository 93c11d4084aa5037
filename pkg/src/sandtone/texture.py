"""Simulated mixture appearance.

A mixture swatch is drawn in two passes over a checkerboard. Pixels on
even-parity squares ((x + y) even) each pick one component sand at random,
weighted by its parts ratio, and inherit the color of a random pixel of
that sand's photograph; this emulates mechanically mixing measured
quantities of sand. Pixels on odd-parity squares then take the rounded
per-channel average of their in-bounds orthogonal neighbors (all of which
sit on even squares), softening the transition between inherited colors.

All per-pixel randomness is keyed by (seed, x, y), so synthesis is
schedule-independent and reproducible.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Mapping

import json

import numpy as np

from .imaging import RgbImage, encode_png, mean_gray_rgb
from .planner import MixturePlan, MixtureSpec
from .rng import COMPONENT_STREAM, SOURCE_PIXEL_STREAM, hash_coords

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class SynthesisParams:
    width: int = 256
    height: int = 256
    seed: int = 0

    def __post_init__(self) -> None:
        if self.width < 2 or self.height < 2:
            raise ValueError("synthesis size must be at least 2x2")


@dataclass(frozen=True)
class MixtureTexture:
    mixture_slot: int
    image: RgbImage
    seed: int
    source_ratio: MixtureSpec


def derive_slot_seed(seed: int, slot: int) -> int:
    """Per-slot texture seed: base seed XOR slot number."""
    return (seed & _MASK64) ^ slot


def _neighbor_average(pixels: np.ndarray) -> np.ndarray:
    """Rounded per-channel mean of each pixel's in-bounds 4-neighborhood."""
    h, w = pixels.shape[:2]
    total = np.zeros((h, w, 3), dtype=np.uint32)
    count = np.zeros((h, w, 1), dtype=np.uint32)
    total[1:] += pixels[:-1]
    count[1:] += 1
    total[:-1] += pixels[1:]
    count[:-1] += 1
    total[:, 1:] += pixels[:, :-1]
    count[:, 1:] += 1
    total[:, :-1] += pixels[:, 1:]
    count[:, :-1] += 1
    # round_half_up(total/count) == (2*total + count) // (2*count)
    return ((2 * total + count) // (2 * count)).astype(np.uint8)


def synthesize(
    spec: MixtureSpec, sands: Mapping[str, RgbImage], params: SynthesisParams
) -> MixtureTexture:
    """Draw one mixture swatch of params.width x params.height pixels."""
    for sid in {sid for sid, _ in spec.components}:
        if sid not in sands:
            raise ValueError(f"unknown sand id: {sid}")
    comps = [(sid, parts) for sid, parts in spec.components if parts > 0]
    total = sum(parts for _, parts in comps)
    if total == 0:
        raise ValueError("empty mixture")

    h, w, seed = params.height, params.width, params.seed
    xs = np.arange(w, dtype=np.uint64)[None, :]
    ys = np.arange(h, dtype=np.uint64)[:, None]

    # pass 1: weighted component pick, then a uniform pixel of that sand
    draw = hash_coords(seed, COMPONENT_STREAM, xs, ys) % np.uint64(total)
    bounds = np.cumsum([parts for _, parts in comps]).astype(np.uint64)
    chosen = np.searchsorted(bounds, draw, side="right")
    pixel_draw = hash_coords(seed, SOURCE_PIXEL_STREAM, xs, ys)

    out = np.zeros((h, w, 3), dtype=np.uint8)
    for index, (sid, _) in enumerate(comps):
        flat = sands[sid].data.reshape(-1, 3)
        mask = chosen == index
        picks = (pixel_draw[mask] % np.uint64(flat.shape[0])).astype(np.intp)
        out[mask] = flat[picks]

    # pass 2: odd-parity squares average their even-parity neighbors
    odd = (np.arange(h)[:, None] + np.arange(w)[None, :]) % 2 == 1
    out[odd] = _neighbor_average(out)[odd]

    return MixtureTexture(mixture_slot=spec.slot, image=RgbImage(out), seed=seed, source_ratio=spec)


def synthesize_plan_swatches(
    plan: MixturePlan, params: SynthesisParams, workers: int = 1
) -> list[MixtureTexture]:
    """One swatch per slot, each seeded with the base seed XOR its slot."""
    images = plan.sand_images()

    def one(spec: MixtureSpec) -> MixtureTexture:
        slot_params = replace(params, seed=derive_slot_seed(params.seed, spec.slot))
        return synthesize(spec, images, slot_params)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(one, plan.mixtures))
    return [one(spec) for spec in plan.mixtures]


def swatch_filename(slot: int) -> str:
    return f"swatch_{slot:02d}.png"


def export_swatches(textures: list[MixtureTexture], out_dir: str | Path) -> list[Path]:
    """Write swatch PNGs plus JSON sidecars with expected vs measured gray."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for texture in textures:
        png_path = out_dir / swatch_filename(texture.mixture_slot)
        png_path.write_bytes(encode_png(texture.image))
        sidecar = {
            "slot": texture.mixture_slot,
            "seed": texture.seed,
            "expected_gray": texture.source_ratio.expected_gray,
            "measured_mean_gray": mean_gray_rgb(texture.image).mean,
        }
        sidecar_path = png_path.with_suffix(".json")
        sidecar_path.write_text(json.dumps(sidecar, indent=2) + "\n", encoding="utf-8")
        written.extend([png_path, sidecar_path])
    return written
