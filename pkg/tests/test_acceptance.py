"""End-to-end acceptance checks for the full pipeline.

Each test covers one contract the toolkit must honor, at a pinned
tolerance. The conftest prints a PASS/FAIL line per entry in CRITERIA
after the run. Oracles here are written independently of the library
code paths they check.
"""

from __future__ import annotations

import io
import json
from fractions import Fraction
from itertools import combinations

import numpy as np
import pytest
from fastapi.testclient import TestClient

from sandtone.cli import main as cli_main
from sandtone.convert import RenderJob, default_table, lookup, render
from sandtone.imaging import RgbImage, encode_png, mean_gray_rgb, save_png, to_grayscale
from sandtone.planner import MixtureSpec, SandSample, build_plan, plan_to_json
from sandtone.service import create_app
from sandtone.texture import SynthesisParams, synthesize, synthesize_plan_swatches
from tests.conftest import constant_image, noisy_image

CRITERIA = {
    "test_default_table_reproduces_reference_ranges":
        "assignment table: 16 equal ranges, exhaustive 0-255 lookup (exact)",
    "test_bridge_reproduces_reference_parts_and_percentages":
        "bridging: gap-4 parts (3,1)/(2,2)/(1,3), 75/50/25 percent, pure ends (exact)",
    "test_four_sand_anchor_slots_and_monotone_grays":
        "four-sand plan: anchors at 1/6/10/16 vs brute-force oracle, strictly rising grays",
    "test_texture_mean_tracks_mixture_expectation":
        "texture fidelity: 3:1 of gray-50/gray-200 within 2.0 of 87.5 across 20 seeds",
    "test_every_odd_pixel_averages_its_neighbors":
        "parity: 100% of odd pixels equal rounded mean of in-bounds neighbors",
    "test_gradient_render_tone_order_and_slot_oracle":
        "render contract: 64x64 gradient at b=8, slot-map oracle exact, tone order within 4.0",
    "test_byte_identical_reruns_and_thread_counts":
        "determinism: plan/swatch/render bytes identical across reruns and thread counts",
    "test_http_and_cli_produce_identical_bytes":
        "CLI/API equivalence: plan, swatches, render, recipe bytes identical",
}

TEXTURE_MEAN_TOLERANCE = 2.0
TONE_ORDER_TOLERANCE = 4.0
TEXTURE_SEED_COUNT = 20


# -- criterion 1: assignment table ------------------------------------------

def test_default_table_reproduces_reference_ranges():
    table = default_table(16)
    assert table.ranges() == [(16 * k, 16 * k + 15) for k in range(16)]
    for gray in range(256):
        hand_coded = gray // 16 + 1
        assert lookup(table, gray) == hand_coded


# -- criterion 2: bridging ratios --------------------------------------------

def test_bridge_reproduces_reference_parts_and_percentages():
    plan = build_plan(
        [
            SandSample(id="a", name="a", mean_gray=50.0),
            SandSample(id="b", name="b", mean_gray=200.0),
        ],
        set_size=5,
    )
    mixes = plan.mixtures
    assert mixes[0].components == (("a", 1),)
    assert mixes[0].percentages == (100.0,)
    assert mixes[4].components == (("b", 1),)
    assert mixes[4].percentages == (100.0,)
    assert mixes[1].components == (("a", 3), ("b", 1))
    assert mixes[2].components == (("a", 2), ("b", 2))
    assert mixes[3].components == (("a", 1), ("b", 3))
    assert [m.percentages[0] for m in mixes[1:4]] == [75.0, 50.0, 25.0]


# -- criterion 3: four-sand anchoring ----------------------------------------

def brute_force_anchor_oracle(means: list[float], set_size: int) -> list[int]:
    """Try every strictly increasing slot assignment; minimize total distance
    to the evenly spaced targets, breaking ties toward lower slot tuples."""
    g0, gl = Fraction(means[0]), Fraction(means[-1])
    targets = {
        s: g0 + (gl - g0) * (s - 1) / (set_size - 1) for s in range(1, set_size + 1)
    }
    best = None
    for combo in combinations(range(1, set_size + 1), len(means)):
        cost = sum(abs(Fraction(m) - targets[s]) for m, s in zip(means, combo))
        if best is None or (cost, combo) < best:
            best = (cost, combo)
    return list(best[1])


def test_four_sand_anchor_slots_and_monotone_grays():
    means = [20, 90, 150, 230]
    samples = [
        SandSample.from_image(f"s{i:02d}", f"sand{i}", constant_image(g))
        for i, g in enumerate(means, start=1)
    ]
    plan = build_plan(samples, set_size=16)
    slots = [plan.anchor_slots[s.id] for s in plan.sands]
    assert slots == [1, 6, 10, 16]
    assert slots == brute_force_anchor_oracle([float(m) for m in means], 16)
    grays = [m.expected_gray for m in plan.mixtures]
    assert len(grays) == 16
    assert all(a < b for a, b in zip(grays, grays[1:]))


# -- criterion 4: texture mean fidelity ---------------------------------------

def test_texture_mean_tracks_mixture_expectation():
    sands = {"a": constant_image(50), "b": constant_image(200)}
    spec = MixtureSpec.build(1, [("a", 3), ("b", 1)], {"a": 50.0, "b": 200.0})
    assert spec.expected_gray == 87.5
    for seed in range(TEXTURE_SEED_COUNT):
        tex = synthesize(spec, sands, SynthesisParams(width=256, height=256, seed=seed))
        mean = mean_gray_rgb(tex.image).mean
        assert abs(mean - 87.5) <= TEXTURE_MEAN_TOLERANCE, f"seed {seed}: mean {mean}"


# -- criterion 5: checkerboard parity -----------------------------------------

def neighbor_mean_oracle(pixels: np.ndarray) -> np.ndarray:
    """Float-arithmetic neighbor averaging; exact because the quotient never
    lands close enough to a rounding boundary for doubles to misround."""
    h, w, _ = pixels.shape
    padded = np.zeros((h + 2, w + 2, 3), dtype=np.float64)
    padded[1:-1, 1:-1] = pixels
    present = np.zeros((h + 2, w + 2), dtype=np.float64)
    present[1:-1, 1:-1] = 1.0
    totals = (
        padded[:-2, 1:-1] + padded[2:, 1:-1] + padded[1:-1, :-2] + padded[1:-1, 2:]
    )
    counts = (
        present[:-2, 1:-1] + present[2:, 1:-1] + present[1:-1, :-2] + present[1:-1, 2:]
    )
    return np.floor(totals / counts[..., None] + 0.5)


def test_every_odd_pixel_averages_its_neighbors():
    sands = {
        "a": noisy_image(60, 20, size=48, seed=5),
        "b": noisy_image(190, 25, size=48, seed=6),
    }
    spec = MixtureSpec.build(4, [("a", 2), ("b", 2)], {"a": 60.0, "b": 190.0})
    tex = synthesize(spec, sands, SynthesisParams(width=256, height=256, seed=13))
    pixels = tex.image.data.astype(np.int64)
    ys, xs = np.mgrid[0:256, 0:256]
    odd = (xs + ys) % 2 == 1
    expected = neighbor_mean_oracle(pixels)
    matches = np.all(pixels[odd] == expected[odd], axis=-1)
    assert matches.all(), f"{(~matches).sum()} odd pixels diverge"


# -- criterion 6: gradient render ---------------------------------------------

def test_gradient_render_tone_order_and_slot_oracle():
    plan = build_plan(
        [
            SandSample.from_image("s01", "dark", constant_image(30)),
            SandSample.from_image("s02", "light", constant_image(220)),
        ],
        set_size=16,
    )
    col = np.round(np.arange(64) * 255 / 63).astype(np.uint8)
    source = RgbImage(np.repeat(col[None, :, None], 64, axis=0).repeat(3, axis=2).copy())
    job = RenderJob(
        source=source,
        plan=plan,
        table=default_table(16),
        block_size=8,
        seed=0,
        swatch_params=SynthesisParams(width=256, height=256, seed=0),
    )
    out = render(job)
    assert (out.image.width, out.image.height) == (512, 512)

    source_gray = to_grayscale(source).data
    oracle_slots = source_gray.astype(np.int64) // 16 + 1
    assert np.array_equal(out.slot_map.astype(np.int64), oracle_slots)

    gray = to_grayscale(out.image).data.astype(np.float64)
    column_means = gray.reshape(512, 64, 8).mean(axis=(0, 2))
    # distance to the nearest monotone non-decreasing sequence (sup norm):
    # half the largest drop below the running maximum
    running_max = np.maximum.accumulate(column_means)
    deviation = float((running_max - column_means).max()) / 2.0
    assert deviation <= TONE_ORDER_TOLERANCE, f"tone order off by {deviation:.3f}"


# -- criterion 7: determinism ---------------------------------------------------

def test_byte_identical_reruns_and_thread_counts():
    def sample_set():
        return [
            SandSample.from_image("s01", "dark", noisy_image(35, 10, size=32, seed=1)),
            SandSample.from_image("s02", "light", noisy_image(210, 10, size=32, seed=2)),
        ]

    plan_a = build_plan(sample_set(), set_size=8)
    plan_b = build_plan(sample_set(), set_size=8)
    assert plan_to_json(plan_a) == plan_to_json(plan_b)

    params = SynthesisParams(width=128, height=128, seed=7)
    swatches_seq = synthesize_plan_swatches(plan_a, params, workers=1)
    swatches_par = synthesize_plan_swatches(plan_b, params, workers=4)
    swatches_rerun = synthesize_plan_swatches(plan_a, params, workers=4)
    for s, p, r in zip(swatches_seq, swatches_par, swatches_rerun):
        blob = encode_png(s.image)
        assert blob == encode_png(p.image) == encode_png(r.image)

    scene = RgbImage(
        np.linspace(0, 255, 32 * 32 * 3).reshape(32, 32, 3).astype(np.uint8)
    )

    def job(plan):
        return RenderJob(
            source=scene,
            plan=plan,
            table=default_table(8),
            block_size=4,
            seed=21,
            swatch_params=SynthesisParams(width=128, height=128, seed=21),
        )

    first = encode_png(render(job(plan_a), workers=1).image)
    second = encode_png(render(job(plan_b), workers=1).image)
    threaded = encode_png(render(job(plan_a), workers=6).image)
    assert first == second == threaded


# -- criterion 8: CLI/API equivalence -------------------------------------------

def test_http_and_cli_produce_identical_bytes(tmp_path, monkeypatch):
    dark = noisy_image(35, 10, size=32, seed=1)
    light = noisy_image(210, 10, size=32, seed=2)
    scene = RgbImage(np.linspace(0, 255, 24 * 24 * 3).reshape(24, 24, 3).astype(np.uint8))
    monkeypatch.chdir(tmp_path)
    save_png(dark, tmp_path / "dark.png")
    save_png(light, tmp_path / "light.png")
    save_png(scene, tmp_path / "scene.png")

    assert cli_main(["plan", "dark.png", "light.png", "--set-size", "8",
                     "--out", "cliplan"]) == 0
    assert cli_main(["swatches", "cliplan/plan.json", "--seed", "3",
                     "--out", "clisw"]) == 0
    assert cli_main(["convert", "scene.png", "cliplan/plan.json", "--block", "4",
                     "--seed", "3", "--out", "cliconv"]) == 0

    client = TestClient(create_app(tmp_path / "state"))
    sid = client.post("/sessions", json={"seed": 3}).json()["id"]
    for name in ("dark.png", "light.png"):
        with open(tmp_path / name, "rb") as fh:
            resp = client.post(
                f"/sessions/{sid}/sands", files={"file": (name, fh, "image/png")}
            )
            assert resp.status_code == 201
    posted = client.post(f"/sessions/{sid}/plan", json={"set_size": 8, "seed": 3})
    assert posted.status_code == 200

    cli_plan = (tmp_path / "cliplan" / "plan.json").read_bytes()
    assert posted.content == cli_plan
    assert client.get(f"/sessions/{sid}/plan").content == cli_plan

    for slot in range(1, 9):
        api_swatch = client.get(f"/sessions/{sid}/swatches/{slot}")
        cli_swatch = (tmp_path / "clisw" / f"swatch_{slot:02d}.png").read_bytes()
        assert api_swatch.content == cli_swatch, f"swatch {slot} differs"

    with open(tmp_path / "scene.png", "rb") as fh:
        resp = client.post(
            f"/sessions/{sid}/render",
            files={"source": ("scene.png", fh, "image/png")},
            data={"block_size": 4},
        )
    assert resp.status_code == 200
    rid = resp.json()["render_id"]
    assert client.get(f"/renders/{rid}").content == (
        tmp_path / "cliconv" / "render.png"
    ).read_bytes()
    assert client.get(f"/renders/{rid}/slot-map").content == (
        tmp_path / "cliconv" / "slot_map.json"
    ).read_bytes()
    assert client.get(f"/sessions/{sid}/recipe").content == (
        tmp_path / "cliplan" / "recipe.csv"
    ).read_bytes()
