"""Mixture ratio planning.

Sands are ordered by shade, pinned to slots of an N-mixture set (darkest
sand at slot 1, lightest at slot N, the rest at the equal-interval target
nearest their mean gray), and consecutive anchors are connected by linear
bridging ratios: the darker sand starts pure and is progressively
contaminated by the lighter one until only the lighter remains.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

from .imaging import RgbImage, load_image, mean_gray_rgb

PLAN_VERSION = 1
DEFAULT_SET_SIZE = 16


@dataclass(frozen=True)
class SandSample:
    """One photographed sand and its derived mean gray value."""

    id: str
    name: str
    mean_gray: float
    image: RgbImage | None = None
    source_file: str | None = None
    capture_meta: Mapping[str, str] | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise ValueError("sand id must be non-empty")
        if not 0.0 <= self.mean_gray <= 255.0:
            raise ValueError("mean gray out of [0, 255]")
        if self.image is not None:
            actual = mean_gray_rgb(self.image).mean
            if actual != self.mean_gray:
                raise ValueError(
                    f"mean gray mismatch for sand {self.id!r}: "
                    f"recorded {self.mean_gray}, image has {actual}"
                )

    @classmethod
    def from_image(
        cls,
        id: str,
        name: str,
        image: RgbImage,
        source_file: str | None = None,
        capture_meta: Mapping[str, str] | None = None,
    ) -> "SandSample":
        return cls(
            id=id,
            name=name,
            mean_gray=mean_gray_rgb(image).mean,
            image=image,
            source_file=source_file,
            capture_meta=capture_meta,
        )


@dataclass(frozen=True)
class MixtureSpec:
    """Parts ratio for one slot, with derived percentages and expected gray."""

    slot: int
    components: tuple[tuple[str, int], ...]
    percentages: tuple[float, ...]
    expected_gray: float

    def __post_init__(self) -> None:
        if self.slot < 1:
            raise ValueError("slot must be >= 1")
        if len(self.components) != len(self.percentages):
            raise ValueError("components and percentages must align")
        if not any(parts > 0 for _, parts in self.components):
            raise ValueError("empty mixture")
        if any(parts < 0 for _, parts in self.components):
            raise ValueError("parts must be non-negative")
        if len({sid for sid, _ in self.components}) > 2:
            raise ValueError("a mixture may combine at most two sands")
        if abs(sum(self.percentages) - 100.0) > 1e-9:
            raise ValueError("percentages must sum to 100")

    @classmethod
    def build(
        cls,
        slot: int,
        components: Sequence[tuple[str, int]],
        means: Mapping[str, float],
    ) -> "MixtureSpec":
        comps = tuple((sid, int(parts)) for sid, parts in components)
        total = sum(parts for _, parts in comps)
        if total <= 0:
            raise ValueError("empty mixture")
        pcts = tuple(100.0 * parts / total for _, parts in comps)
        expected = sum(pct / 100.0 * means[sid] for pct, (sid, _) in zip(pcts, comps))
        return cls(slot=slot, components=comps, percentages=pcts, expected_gray=expected)


@dataclass(frozen=True)
class MixturePlan:
    """Slot-ordered mixture set spanning the sands' darkest-to-lightest range."""

    set_size: int
    sands: tuple[SandSample, ...]
    mixtures: tuple[MixtureSpec, ...]
    anchor_slots: Mapping[str, int]

    def __post_init__(self) -> None:
        n = self.set_size
        if n < 2:
            raise ValueError("set size must be >= 2")
        if len(self.mixtures) != n:
            raise ValueError("plan must hold exactly one mixture per slot")
        if [m.slot for m in self.mixtures] != list(range(1, n + 1)):
            raise ValueError("mixtures must be slot-ordered 1..N")
        grays = [m.expected_gray for m in self.mixtures]
        if any(b <= a for a, b in zip(grays, grays[1:])):
            raise ValueError("expected gray must be strictly increasing across slots")
        pure = {m.components[0][0]: m.slot for m in self.mixtures if len(m.components) == 1}
        if dict(self.anchor_slots) != pure:
            raise ValueError("anchor slots must match the pure mixtures")
        if pure.get(self.sands[0].id) != 1 or pure.get(self.sands[-1].id) != n:
            raise ValueError("darkest sand must anchor slot 1 and lightest slot N")
        if len(pure) != len(self.sands):
            raise ValueError("every sand must appear pure at exactly one slot")

    def sand_by_id(self, sand_id: str) -> SandSample:
        for sand in self.sands:
            if sand.id == sand_id:
                return sand
        raise ValueError(f"unknown sand id: {sand_id}")

    def sand_images(self) -> dict[str, RgbImage]:
        images: dict[str, RgbImage] = {}
        for sand in self.sands:
            if sand.image is None:
                raise ValueError(f"sand image not attached: {sand.id}")
            images[sand.id] = sand.image
        return images


def sort_sands(samples: Sequence[SandSample]) -> list[SandSample]:
    """Order darkest to lightest; equal means keep their input order."""
    if len(samples) < 2:
        raise ValueError("need at least two sands")
    seen: set[str] = set()
    for sample in samples:
        if sample.id in seen:
            raise ValueError(f"duplicate sand id: {sample.id}")
        seen.add(sample.id)
    return sorted(samples, key=lambda s: s.mean_gray)


def anchor_sands(sorted_samples: Sequence[SandSample], set_size: int) -> dict[str, int]:
    """Pin each sand to a slot: endpoints fixed, middles at the nearest target.

    Targets divide [darkest mean, lightest mean] into set_size - 1 equal
    intervals. Distances are compared in exact rational arithmetic so slot
    choice never depends on float rounding; exact halfway cases take the
    lower slot. A middle sand whose nearest slot is already taken is pushed
    to the next free higher slot.
    """
    count = len(sorted_samples)
    if count < 2:
        raise ValueError("need at least two sands")
    if count > set_size:
        raise ValueError("set size too small")
    means = [Fraction(s.mean_gray) for s in sorted_samples]
    for prev, cur, a, b in zip(means, means[1:], sorted_samples, sorted_samples[1:]):
        if prev == cur:
            raise ValueError(f"equal mean gray values: {a.id} and {b.id}")

    step = (means[-1] - means[0]) / (set_size - 1)
    targets = [means[0] + step * s for s in range(set_size)]

    slots = [1]
    for mean in means[1:-1]:
        best_slot, best_dist = 1, abs(mean - targets[0])
        for s in range(2, set_size + 1):
            dist = abs(mean - targets[s - 1])
            if dist < best_dist:
                best_slot, best_dist = s, dist
        slot = max(best_slot, slots[-1] + 1)
        if slot >= set_size:
            raise ValueError("cannot separate anchors")
        slots.append(slot)
    slots.append(set_size)
    return {sample.id: slot for sample, slot in zip(sorted_samples, slots)}


def bridge(
    sand_a: SandSample, sand_b: SandSample, gap: int
) -> list[tuple[tuple[str, int], tuple[str, int]]]:
    """Parts ratios for the gap-1 mixtures between two anchored sands.

    Step t of a gap-g bridge mixes g-t parts of the darker sand with t
    parts of the lighter one. The pure endpoints are not included; they
    are the anchors themselves.
    """
    if gap < 1 or sand_a.mean_gray >= sand_b.mean_gray:
        raise ValueError("anchors out of order")
    return [((sand_a.id, gap - t), (sand_b.id, t)) for t in range(1, gap)]


def build_plan(samples: Sequence[SandSample], set_size: int = DEFAULT_SET_SIZE) -> MixturePlan:
    """Sort, anchor, and bridge a full slot-ordered mixture plan."""
    ordered = sort_sands(samples)
    anchors = anchor_sands(ordered, set_size)
    means = {s.id: s.mean_gray for s in ordered}

    mixtures: list[MixtureSpec] = []
    for darker, lighter in zip(ordered, ordered[1:]):
        slot_a, slot_b = anchors[darker.id], anchors[lighter.id]
        mixtures.append(MixtureSpec.build(slot_a, ((darker.id, 1),), means))
        for offset, comps in enumerate(bridge(darker, lighter, slot_b - slot_a), start=1):
            mixtures.append(MixtureSpec.build(slot_a + offset, comps, means))
    last = ordered[-1]
    mixtures.append(MixtureSpec.build(anchors[last.id], ((last.id, 1),), means))

    return MixturePlan(
        set_size=set_size,
        sands=tuple(ordered),
        mixtures=tuple(mixtures),
        anchor_slots=anchors,
    )


def plan_to_document(plan: MixturePlan) -> dict:
    return {
        "version": PLAN_VERSION,
        "set_size": plan.set_size,
        "sands": [
            {
                "id": s.id,
                "name": s.name,
                "mean_gray": s.mean_gray,
                "source_file": s.source_file,
            }
            for s in plan.sands
        ],
        "mixtures": [
            {
                "slot": m.slot,
                "components": [{"sand_id": sid, "parts": parts} for sid, parts in m.components],
                "percentages": list(m.percentages),
                "expected_gray": m.expected_gray,
            }
            for m in plan.mixtures
        ],
    }


def plan_to_json(plan: MixturePlan) -> str:
    return json.dumps(plan_to_document(plan), indent=2) + "\n"


def plan_from_document(doc: Mapping) -> MixturePlan:
    if doc.get("version") != PLAN_VERSION:
        raise ValueError(f"unsupported plan version: {doc.get('version')!r}")
    sands = tuple(
        SandSample(
            id=entry["id"],
            name=entry["name"],
            mean_gray=float(entry["mean_gray"]),
            source_file=entry.get("source_file"),
        )
        for entry in doc["sands"]
    )
    mixtures = tuple(
        MixtureSpec(
            slot=int(entry["slot"]),
            components=tuple((c["sand_id"], int(c["parts"])) for c in entry["components"]),
            percentages=tuple(float(p) for p in entry["percentages"]),
            expected_gray=float(entry["expected_gray"]),
        )
        for entry in doc["mixtures"]
    )
    anchors = {m.components[0][0]: m.slot for m in mixtures if len(m.components) == 1}
    return MixturePlan(
        set_size=int(doc["set_size"]),
        sands=sands,
        mixtures=mixtures,
        anchor_slots=anchors,
    )


def plan_from_json(text: str) -> MixturePlan:
    return plan_from_document(json.loads(text))


def load_plan(path: str | Path, resolve_images: bool = True) -> MixturePlan:
    """Read a plan file; by default also load each sand's source image.

    Relative source paths are resolved against the plan file's directory
    first, then the working directory.
    """
    path = Path(path)
    plan = plan_from_json(path.read_text(encoding="utf-8"))
    if resolve_images:
        plan = resolve_plan_images(plan, base_dir=path.parent)
    return plan


def resolve_plan_images(plan: MixturePlan, base_dir: Path | None = None) -> MixturePlan:
    sands = []
    for sand in plan.sands:
        if sand.image is not None:
            sands.append(sand)
            continue
        if not sand.source_file:
            raise ValueError(f"sand {sand.id} has no source file to load")
        candidate = Path(sand.source_file)
        if not candidate.is_absolute() and base_dir is not None:
            in_base = base_dir / candidate
            if in_base.exists():
                candidate = in_base
        if not candidate.exists():
            raise FileNotFoundError(f"cannot read {sand.source_file}")
        sands.append(replace(sand, image=load_image(candidate)))
    return replace(plan, sands=tuple(sands))


def attach_images(plan: MixturePlan, images: Mapping[str, RgbImage]) -> MixturePlan:
    known = {s.id for s in plan.sands}
    for sand_id in images:
        if sand_id not in known:
            raise ValueError(f"unknown sand id: {sand_id}")
    sands = tuple(
        s if s.image is not None or s.id not in images else replace(s, image=images[s.id])
        for s in plan.sands
    )
    return replace(plan, sands=sands)


def _component_label(name: str, parts: int, pct: float) -> str:
    unit = "part" if parts == 1 else "parts"
    return f"{name} {parts} {unit} ({pct:.2f}%)"


def plan_to_recipe(plan: MixturePlan) -> list[dict]:
    """Artist-facing listing: per slot, sand names, parts, percentages, gray."""
    names = {s.id: s.name for s in plan.sands}
    rows = []
    for m in plan.mixtures:
        comps = [
            {"sand": names[sid], "parts": parts, "percent": f"{pct:.2f}"}
            for (sid, parts), pct in zip(m.components, m.percentages)
        ]
        label = ", ".join(
            _component_label(names[sid], parts, pct)
            for (sid, parts), pct in zip(m.components, m.percentages)
        )
        rows.append(
            {
                "slot": m.slot,
                "components": comps,
                "expected_gray": f"{m.expected_gray:.1f}",
                "label": label,
            }
        )
    return rows


def recipe_csv(plan: MixturePlan) -> str:
    """CSV for the mixing bench: slot, sand, parts, percent, expected_gray."""
    names = {s.id: s.name for s in plan.sands}
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["slot", "sand", "parts", "percent", "expected_gray"])
    for m in plan.mixtures:
        for (sid, parts), pct in zip(m.components, m.percentages):
            writer.writerow([m.slot, names[sid], parts, f"{pct:.2f}", f"{m.expected_gray:.1f}"])
    return buf.getvalue()
