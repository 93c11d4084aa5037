"""HTTP surface: sessions, uploads, plans, swatches, table edits, renders."""

from __future__ import annotations

import io
import json
import time

import numpy as np
import pytest
from fastapi.testclient import TestClient

from sandtone.convert import AssignmentTable, RenderJob, default_table, render, slot_map_json
from sandtone.imaging import RgbImage, decode_image, encode_png, save_png
from sandtone.planner import build_plan, plan_to_json, recipe_csv, SandSample
from sandtone.service import MAX_UPLOAD_BYTES, create_app
from sandtone.texture import SynthesisParams, derive_slot_seed, synthesize
from tests.conftest import constant_image, noisy_image


@pytest.fixture
def state_dir(tmp_path):
    return tmp_path / "state"


@pytest.fixture
def client(state_dir):
    return TestClient(create_app(state_dir))


def png_bytes(image: RgbImage) -> bytes:
    return encode_png(image)


DARK = noisy_image(35, 10, size=32, seed=1)
LIGHT = noisy_image(210, 10, size=32, seed=2)


def upload(client, sid: str, name: str, image: RgbImage):
    return client.post(
        f"/sessions/{sid}/sands",
        files={"file": (name, io.BytesIO(png_bytes(image)), "image/png")},
    )


def make_session(client, seed: int = 3) -> str:
    resp = client.post("/sessions", json={"seed": seed})
    assert resp.status_code == 201
    return resp.json()["id"]


def seeded_session(client, seed: int = 3, set_size: int = 8) -> str:
    sid = make_session(client, seed)
    upload(client, sid, "dark.png", DARK)
    upload(client, sid, "light.png", LIGHT)
    assert client.post(f"/sessions/{sid}/plan",
                       json={"set_size": set_size, "seed": seed}).status_code == 200
    return sid


def test_session_lifecycle(client):
    resp = client.post("/sessions", json={"seed": 11})
    assert resp.status_code == 201
    doc = resp.json()
    assert doc["seed"] == 11
    assert doc["sands"] == []
    assert doc["has_plan"] is False

    got = client.get(f"/sessions/{doc['id']}")
    assert got.status_code == 200
    assert got.json()["id"] == doc["id"]

    missing = client.get("/sessions/doesnotexist")
    assert missing.status_code == 404
    assert missing.json()["code"] == "session_not_found"


def test_session_default_body_is_optional(client):
    resp = client.post("/sessions")
    assert resp.status_code == 201
    assert resp.json()["seed"] == 0


def test_upload_assigns_sequential_ids_and_means(client):
    sid = make_session(client)
    r1 = upload(client, sid, "dark.png", DARK)
    r2 = upload(client, sid, "light.png", LIGHT)
    assert r1.status_code == 201 and r2.status_code == 201
    assert r1.json()["sand_id"] == "s01"
    assert r2.json()["sand_id"] == "s02"
    from sandtone.imaging import mean_gray_rgb

    assert r1.json()["mean_gray"] == mean_gray_rgb(DARK).mean
    doc = client.get(f"/sessions/{sid}").json()
    assert [s["source_file"] for s in doc["sands"]] == ["dark.png", "light.png"]


def test_upload_rejects_garbage_and_oversize(client):
    sid = make_session(client)
    bad = client.post(
        f"/sessions/{sid}/sands",
        files={"file": ("junk.png", io.BytesIO(b"nope"), "image/png")},
    )
    assert bad.status_code == 400
    assert bad.json()["code"] == "bad_image"

    huge = client.post(
        f"/sessions/{sid}/sands",
        files={"file": ("big.png", io.BytesIO(b"0" * (MAX_UPLOAD_BYTES + 1)), "image/png")},
    )
    assert huge.status_code == 413
    assert huge.json()["code"] == "too_large"


def test_delete_sand_invalidates_plan(client):
    sid = seeded_session(client)
    assert client.get(f"/sessions/{sid}/plan").status_code == 200
    assert client.delete(f"/sessions/{sid}/sands/s01").status_code == 204
    assert client.get(f"/sessions/{sid}/plan").status_code == 404
    gone = client.delete(f"/sessions/{sid}/sands/s01")
    assert gone.status_code == 404
    assert gone.json()["code"] == "sand_not_found"


def test_plan_requires_two_sands(client):
    sid = make_session(client)
    upload(client, sid, "dark.png", DARK)
    resp = client.post(f"/sessions/{sid}/plan", json={"set_size": 8})
    assert resp.status_code == 422
    assert resp.json() == {"code": "plan_error", "message": "need at least two sands"}


def test_plan_json_matches_library_output(client):
    sid = seeded_session(client, seed=3, set_size=8)
    api_plan = client.get(f"/sessions/{sid}/plan").content
    expected = plan_to_json(
        build_plan(
            [
                SandSample.from_image("s01", "dark", DARK, source_file="dark.png"),
                SandSample.from_image("s02", "light", LIGHT, source_file="light.png"),
            ],
            set_size=8,
        )
    ).encode()
    assert api_plan == expected


def test_swatch_bytes_match_direct_synthesis(client):
    sid = seeded_session(client, seed=3, set_size=8)
    got = client.get(f"/sessions/{sid}/swatches/3")
    assert got.status_code == 200
    assert got.headers["content-type"] == "image/png"

    plan = build_plan(
        [
            SandSample.from_image("s01", "dark", DARK),
            SandSample.from_image("s02", "light", LIGHT),
        ],
        set_size=8,
    )
    tex = synthesize(
        plan.mixtures[2],
        plan.sand_images(),
        SynthesisParams(width=256, height=256, seed=derive_slot_seed(3, 3)),
    )
    assert got.content == encode_png(tex.image)
    # cache serves identical bytes
    assert client.get(f"/sessions/{sid}/swatches/3").content == got.content
    assert client.get(f"/sessions/{sid}/swatches/99").status_code == 404


def test_table_patch_and_collision(client):
    sid = seeded_session(client, set_size=4)
    doc = client.get(f"/sessions/{sid}").json()
    assert doc["table"] == [0, 64, 128, 192, 256]

    ok = client.patch(f"/sessions/{sid}/table", json={"index": 1, "threshold": 50})
    assert ok.status_code == 200
    assert ok.json()["thresholds"] == [0, 50, 128, 192, 256]

    clash = client.patch(f"/sessions/{sid}/table", json={"index": 2, "threshold": 50})
    assert clash.status_code == 422
    assert clash.json() == {"code": "threshold_collision", "message": "threshold collision"}
    # state unchanged after the rejected move
    assert client.get(f"/sessions/{sid}").json()["table"] == [0, 50, 128, 192, 256]


def test_table_patch_without_plan(client):
    sid = make_session(client)
    resp = client.patch(f"/sessions/{sid}/table", json={"index": 1, "threshold": 50})
    assert resp.status_code == 404
    assert resp.json()["code"] == "plan_missing"


def test_validation_error_shape(client):
    sid = seeded_session(client)
    resp = client.patch(f"/sessions/{sid}/table", json={"index": 1})
    assert resp.status_code == 422
    assert resp.json()["code"] == "validation_error"


def test_recipe_csv_bytes(client):
    sid = seeded_session(client, set_size=8)
    got = client.get(f"/sessions/{sid}/recipe")
    assert got.status_code == 200
    assert got.headers["content-type"].startswith("text/csv")
    expected = recipe_csv(
        build_plan(
            [
                SandSample.from_image("s01", "dark", DARK),
                SandSample.from_image("s02", "light", LIGHT),
            ],
            set_size=8,
        )
    ).encode()
    assert got.content == expected


def test_small_render_is_synchronous_and_exact(client):
    sid = seeded_session(client, seed=3, set_size=8)
    scene = RgbImage(
        np.linspace(0, 255, 16 * 16 * 3).reshape(16, 16, 3).astype(np.uint8)
    )
    resp = client.post(
        f"/sessions/{sid}/render",
        files={"source": ("scene.png", io.BytesIO(png_bytes(scene)), "image/png")},
        data={"block_size": 4},
    )
    assert resp.status_code == 200
    body = resp.json()
    assert body["status"] == "done"
    rid = body["render_id"]

    got = client.get(f"/renders/{rid}")
    assert got.status_code == 200
    assert got.headers["content-type"] == "image/png"

    plan = build_plan(
        [
            SandSample.from_image("s01", "dark", DARK),
            SandSample.from_image("s02", "light", LIGHT),
        ],
        set_size=8,
    )
    job = RenderJob(
        source=scene,
        plan=plan,
        table=default_table(8),
        block_size=4,
        seed=3,
        swatch_params=SynthesisParams(width=256, height=256, seed=3),
    )
    expected = render(job)
    assert got.content == encode_png(expected.image)

    slot_map = client.get(f"/renders/{rid}/slot-map")
    assert slot_map.status_code == 200
    assert slot_map.content == slot_map_json(expected).encode()

    assert client.get("/renders/doesnotexist").status_code == 404


def test_render_respects_patched_table(client):
    sid = seeded_session(client, seed=3, set_size=4)
    client.patch(f"/sessions/{sid}/table", json={"index": 1, "threshold": 10})
    scene = constant_image(32, size=8)  # slot 2 under default table, slot ? after move
    resp = client.post(
        f"/sessions/{sid}/render",
        files={"source": ("scene.png", io.BytesIO(png_bytes(scene)), "image/png")},
        data={"block_size": 2},
    )
    rid = resp.json()["render_id"]
    doc = client.get(f"/renders/{rid}/slot-map").json()
    # gray 32 with thresholds [0,10,128,192,256] falls in the second range
    assert set(doc["slots"]) == {2}


def test_large_render_polls_to_completion(client):
    sid = seeded_session(client, seed=1, set_size=4)
    tall = RgbImage(np.full((520, 8, 3), 128, dtype=np.uint8))
    resp = client.post(
        f"/sessions/{sid}/render",
        files={"source": ("tall.png", io.BytesIO(png_bytes(tall)), "image/png")},
        data={"block_size": 2},
    )
    assert resp.status_code == 202
    rid = resp.json()["render_id"]
    deadline = time.time() + 30
    while time.time() < deadline:
        got = client.get(f"/renders/{rid}")
        if got.status_code == 200:
            break
        assert got.status_code == 202
        time.sleep(0.1)
    else:
        pytest.fail("render did not finish in time")
    assert client.get(f"/renders/{rid}/slot-map").status_code == 200


def test_render_without_plan(client):
    sid = make_session(client)
    upload(client, sid, "dark.png", DARK)
    resp = client.post(
        f"/sessions/{sid}/render",
        files={"source": ("x.png", io.BytesIO(png_bytes(constant_image(10, 8))), "image/png")},
        data={"block_size": 4},
    )
    assert resp.status_code == 404
    assert resp.json()["code"] == "plan_missing"


def test_state_survives_restart(state_dir):
    first = TestClient(create_app(state_dir))
    sid = seeded_session(first, seed=3, set_size=8)
    plan_before = first.get(f"/sessions/{sid}/plan").content
    swatch_before = first.get(f"/sessions/{sid}/swatches/2").content

    second = TestClient(create_app(state_dir))
    assert second.get(f"/sessions/{sid}").status_code == 200
    assert second.get(f"/sessions/{sid}/plan").content == plan_before
    assert second.get(f"/sessions/{sid}/swatches/2").content == swatch_before
