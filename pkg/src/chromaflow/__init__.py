"""Temporally consistent video colorization.

Chrominance from each colorized frame is carried forward along backward
optical flow, corrupted pixels are detected by a per-pixel PSNR threshold
and repainted from a per-frame colorizer, and scene cuts reset the
propagation. Includes a metrics harness (PSNR, colorfulness, CDC) and a
subprocess protocol for plugging in external colorization models.
"""

from .colorspace import (
    LabFrame,
    LumaPlane,
    Rgb8Image,
    gray_to_luma,
    lab_to_rgb,
    luma_to_gray,
    luminance_of,
    rgb_to_lab,
)
from .colorizers import (
    Colorizer,
    ColorizeRequest,
    ColorizeResponse,
    ColorizerError,
    ExternalColorizer,
    OracleColorizer,
    PaletteColorizer,
    external_colorize,
    oracle_colorize,
    palette_colorize,
    response_frame,
)
from .correction import CorrectionMask, composite, correction_mask
from .flow import (
    FlowField,
    FlowFormatError,
    FlowParams,
    endpoint_error,
    estimate_flow,
    load_flo,
    write_flo,
)
from .metrics import (
    MetricsReport,
    cdc,
    colorfulness,
    evaluate,
    psnr,
    video_colorfulness,
)
from .pipeline import (
    PipelineConfig,
    RunManifest,
    evaluate_dirs,
    precompute_flow,
    provider_from_spec,
    run,
)
from .prompts import (
    GENERIC_PROMPT,
    PromptRecord,
    PromptSchedule,
    load_prompt_entries,
    prompt_for_frame,
)
from .scenedetect import SceneParams, detect_cuts, is_scene_change, load_cuts, save_cuts
from .warping import WarpedChroma, assemble_warp_frame, warp_chroma

__version__ = "0.1.0"

__all__ = [
    "Colorizer",
    "ColorizeRequest",
    "ColorizeResponse",
    "ColorizerError",
    "CorrectionMask",
    "ExternalColorizer",
    "FlowField",
    "FlowFormatError",
    "FlowParams",
    "GENERIC_PROMPT",
    "LabFrame",
    "LumaPlane",
    "MetricsReport",
    "OracleColorizer",
    "PaletteColorizer",
    "PipelineConfig",
    "PromptRecord",
    "PromptSchedule",
    "Rgb8Image",
    "RunManifest",
    "SceneParams",
    "WarpedChroma",
    "assemble_warp_frame",
    "cdc",
    "colorfulness",
    "composite",
    "correction_mask",
    "detect_cuts",
    "endpoint_error",
    "estimate_flow",
    "evaluate",
    "evaluate_dirs",
    "external_colorize",
    "gray_to_luma",
    "is_scene_change",
    "lab_to_rgb",
    "load_cuts",
    "load_flo",
    "load_prompt_entries",
    "luma_to_gray",
    "luminance_of",
    "oracle_colorize",
    "palette_colorize",
    "precompute_flow",
    "prompt_for_frame",
    "provider_from_spec",
    "psnr",
    "response_frame",
    "rgb_to_lab",
    "run",
    "save_cuts",
    "video_colorfulness",
    "warp_chroma",
    "write_flo",
]
