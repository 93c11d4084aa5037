"""sandtone: sand mixture planning and sand-based image rendering."""

from .config import DEFAULTS, JobConfig
from .convert import (
    AssignmentTable,
    RenderJob,
    SandRender,
    adjust_table,
    default_table,
    lookup,
    render,
    render_side_by_side,
)
from .imaging import (
    GrayImage,
    GrayStat,
    RgbImage,
    crop,
    load_image,
    mean_gray,
    mean_gray_rgb,
    save_png,
    to_grayscale,
)
from .planner import (
    MixturePlan,
    MixtureSpec,
    SandSample,
    anchor_sands,
    bridge,
    build_plan,
    load_plan,
    plan_to_json,
    plan_to_recipe,
    recipe_csv,
    sort_sands,
)
from .texture import (
    MixtureTexture,
    SynthesisParams,
    synthesize,
    synthesize_plan_swatches,
)

__version__ = "0.1.0"

__all__ = [
    "AssignmentTable",
    "DEFAULTS",
    "GrayImage",
    "GrayStat",
    "JobConfig",
    "MixturePlan",
    "MixtureSpec",
    "MixtureTexture",
    "RenderJob",
    "RgbImage",
    "SandRender",
    "SandSample",
    "SynthesisParams",
    "adjust_table",
    "anchor_sands",
    "bridge",
    "build_plan",
    "crop",
    "default_table",
    "load_image",
    "load_plan",
    "lookup",
    "mean_gray",
    "mean_gray_rgb",
    "plan_to_json",
    "plan_to_recipe",
    "recipe_csv",
    "render",
    "render_side_by_side",
    "save_png",
    "sort_sands",
    "synthesize",
    "synthesize_plan_swatches",
    "to_grayscale",
]
