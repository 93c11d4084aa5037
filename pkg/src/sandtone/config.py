"""Shared job defaults for the CLI and the HTTP service."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class JobConfig:
    set_size: int = 16
    block_size: int = 8
    swatch_width: int = 256
    swatch_height: int = 256
    seed: int = 0


DEFAULTS = JobConfig()
