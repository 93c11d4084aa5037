"""Shared fixtures plus a terminal summary for the acceptance checks."""

from __future__ import annotations

import numpy as np
import pytest

from sandtone.imaging import RgbImage
from sandtone.planner import SandSample, build_plan


def constant_image(gray: int, size: int = 32) -> RgbImage:
    return RgbImage(np.full((size, size, 3), gray, dtype=np.uint8))


def noisy_image(mean: float, std: float, size: int = 64, seed: int = 0) -> RgbImage:
    rng = np.random.default_rng(seed)
    arr = np.clip(rng.normal(mean, std, (size, size, 3)), 0, 255)
    return RgbImage(arr.astype(np.uint8))


@pytest.fixture
def two_constant_sands() -> list[SandSample]:
    return [
        SandSample.from_image("s01", "dark", constant_image(30)),
        SandSample.from_image("s02", "light", constant_image(220)),
    ]


@pytest.fixture
def two_sand_plan(two_constant_sands):
    return build_plan(two_constant_sands, set_size=16)


@pytest.fixture
def four_sand_plan():
    samples = [
        SandSample.from_image(f"s{i:02d}", f"sand{i}", constant_image(g))
        for i, g in enumerate([20, 90, 150, 230], start=1)
    ]
    return build_plan(samples, set_size=16)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Print one PASS/FAIL line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for report in terminalreporter.stats.get(outcome, ()):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance" not in nodeid:
                continue
            label = _criterion_label(nodeid)
            if label is None:
                continue
            verdict = "PASS" if outcome == "passed" else "FAIL"
            lines.append((label, verdict))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for label, verdict in lines:
        terminalreporter.write_line(f"{verdict}  {label}")


def _criterion_label(nodeid: str) -> str | None:
    try:
        from tests import test_acceptance
    except ImportError:
        import test_acceptance  # tests run with rootdir on sys.path
    name = nodeid.rsplit("::", 1)[-1]
    return test_acceptance.CRITERIA.get(name)
