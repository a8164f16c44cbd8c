"""End-to-end colorization runs: recurrence, scene branching, ablations.

Per frame, the engine estimates (or loads) backward flow to the previous
frame, warps the previous final frame's chroma, flags corrupted pixels by
per-pixel PSNR against the previous final frame, and composites warped
and freshly colorized chroma under that mask. Frame 0 and scene-change
frames skip warping entirely and take the colorizer output directly.

The recurrence is strictly sequential in t; everything else about a run
is deterministic, so identical inputs and configuration produce
bit-identical output frames and manifest (timing fields aside).

Ablation switches mirror the reference experiments: no_correction keeps
the raw warped frame (desaturating disocclusions), no_warp colorizes
every frame independently, fixed_prompt pins the frame-0 prompt for the
whole video.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import frameio
from .colorspace import LabFrame, LumaPlane, lab_to_rgb, rgb_to_lab
from .colorizers import (
    Colorizer,
    ColorizeRequest,
    ExternalColorizer,
    OracleColorizer,
    PaletteColorizer,
    response_frame,
)
from .correction import composite, correction_mask
from .flow import FlowParams, estimate_flow, load_flo
from .metrics import MetricsReport, evaluate
from .prompts import (
    GENERIC_PROMPT,
    PromptRecord,
    PromptSchedule,
    load_prompt_entries,
    prompt_for_frame,
)
from .scenedetect import SceneParams, detect_cuts, load_cuts
from .warping import assemble_warp_frame, warp_chroma

MANIFEST_NAME = "manifest.json"


@dataclass
class PipelineConfig:
    """One colorization run.

    colorizer accepts either a Colorizer instance or a spec string:
    "oracle:<gt frame dir>", "palette:<palette json>", or
    "external:<command line>".
    """

    input_dir: Path
    output_dir: Path
    colorizer: Colorizer | str
    fps: float = 24.0
    tau_db: float = 25.0
    flow_source: str = "builtin"  # builtin | flo_dir
    flo_dir: Path | None = None
    flow_params: FlowParams = field(default_factory=FlowParams)
    prompt_mode: str = "generic"  # generic | detailed
    prompt_file: Path | None = None
    generic_text: str = GENERIC_PROMPT
    scene_source: str = "detect"  # detect | file
    scene_file: Path | None = None
    scene_params: SceneParams = field(default_factory=SceneParams)
    masks_dir: Path | None = None
    no_correction: bool = False
    no_warp: bool = False
    fixed_prompt: bool = False
    lazy_colorize: bool = False
    mask_channels: str = "chroma"  # chroma | lab
    fixed_peak: float | None = None

    def __post_init__(self):
        if self.fps <= 0:
            raise ValueError("fps must be positive")
        if not np.isfinite(self.tau_db):
            raise ValueError("tau_db must be finite")
        if self.flow_source not in ("builtin", "flo_dir"):
            raise ValueError(f"unknown flow_source {self.flow_source!r}")
        if self.flow_source == "flo_dir" and self.flo_dir is None:
            raise ValueError("flow_source=flo_dir requires flo_dir")
        if self.prompt_mode not in ("generic", "detailed"):
            raise ValueError(f"unknown prompt_mode {self.prompt_mode!r}")
        if self.prompt_mode == "detailed" and self.prompt_file is None:
            raise ValueError("prompt_mode=detailed requires prompt_file")
        if self.scene_source not in ("detect", "file"):
            raise ValueError(f"unknown scene_source {self.scene_source!r}")
        if self.scene_source == "file" and self.scene_file is None:
            raise ValueError("scene_source=file requires scene_file")


@dataclass
class FrameRecord:
    """Per-frame observability record."""

    frame: int
    name: str
    prompt_text: str
    prompt_origin: str
    scene_change: bool
    corrected_fraction: float | None
    colorizer_invoked: bool
    elapsed_s: float

    def to_dict(self) -> dict:
        return {
            "frame": self.frame,
            "name": self.name,
            "prompt": self.prompt_text,
            "prompt_origin": self.prompt_origin,
            "scene_change": self.scene_change,
            "corrected_fraction": self.corrected_fraction,
            "colorizer_invoked": self.colorizer_invoked,
            "elapsed_s": self.elapsed_s,
        }


@dataclass
class RunManifest:
    """Run-level record: configuration echo plus one record per frame."""

    input_dir: str
    output_dir: str
    provider: str
    flow_source: str
    tau_db: float
    scene_cuts: list[int] = field(default_factory=list)
    records: list[FrameRecord] = field(default_factory=list)
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "input_dir": self.input_dir,
            "output_dir": self.output_dir,
            "provider": self.provider,
            "flow_source": self.flow_source,
            "tau_db": self.tau_db,
            "scene_cuts": self.scene_cuts,
            "frames": [r.to_dict() for r in self.records],
            "error": self.error,
        }

    def save_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n")


def load_palette_file(path) -> PaletteColorizer:
    """Build a palette provider from its JSON description.

    Schema: {"default": [[luma_break, A, B], ...],
             "by_prompt": {"<prompt text>": [[...], ...]}} with by_prompt
    optional.
    """
    data = json.loads(Path(path).read_text())
    if not isinstance(data, dict) or "default" not in data:
        raise ValueError(f"{path}: palette file needs a 'default' entry")

    def parse(entries, label):
        if not isinstance(entries, list) or not entries:
            raise ValueError(f"{path}: {label} must be a nonempty array")
        palette = []
        for e in entries:
            if not isinstance(e, list) or len(e) != 3:
                raise ValueError(f"{path}: {label} entries must be [break, A, B]")
            palette.append((float(e[0]), float(e[1]), float(e[2])))
        return palette

    by_prompt = {
        text: parse(entries, f"by_prompt[{text!r}]")
        for text, entries in (data.get("by_prompt") or {}).items()
    }
    return PaletteColorizer(parse(data["default"], "default"), by_prompt)


def provider_from_spec(spec: str) -> Colorizer:
    """Resolve a provider spec string to a live provider."""
    kind, _, arg = spec.partition(":")
    if kind == "oracle":
        paths = frameio.list_frames(arg)
        frames = [rgb_to_lab(frameio.read_rgb(p)) for p in paths]
        return OracleColorizer(frames)
    if kind == "palette":
        return load_palette_file(arg)
    if kind == "external":
        if not arg:
            raise ValueError("external spec needs a command, e.g. external:python server.py")
        return ExternalColorizer(arg)
    raise ValueError(f"unknown colorizer spec {spec!r}")


def _build_schedule(config: PipelineConfig) -> PromptSchedule:
    interval = max(1, round(config.fps))  # one second of footage
    if config.prompt_mode == "generic":
        return PromptSchedule(mode="generic", generic_text=config.generic_text,
                              refresh_interval_frames=interval)
    entries = load_prompt_entries(config.prompt_file)
    return PromptSchedule(
        mode="detailed", detailed_entries=entries, refresh_interval_frames=interval
    )


def run(config: PipelineConfig) -> RunManifest:
    """Colorize a frame directory; returns the manifest (also written to disk).

    On a provider failure or mid-video validation error the partial
    manifest is written with its error field set before the exception
    propagates.
    """
    frame_paths = frameio.list_frames(config.input_dir)
    lumas: list[LumaPlane] = [frameio.read_luma(p) for p in frame_paths]
    shape = lumas[0].L.shape
    for p, luma in zip(frame_paths, lumas):
        if luma.L.shape != shape:
            raise ValueError(
                f"dimension drift: {p.name} is {luma.L.shape}, expected {shape}"
            )

    if config.scene_source == "file":
        cuts = set(load_cuts(config.scene_file))
    else:
        cuts = set(detect_cuts(lumas, config.scene_params))

    schedule = _build_schedule(config)
    frame0_prompt = prompt_for_frame(schedule, 0, cuts)

    owns_provider = isinstance(config.colorizer, str)
    provider = (
        provider_from_spec(config.colorizer) if owns_provider else config.colorizer
    )

    out_dir = Path(config.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(
        input_dir=str(config.input_dir),
        output_dir=str(out_dir),
        provider=provider.name,
        flow_source=config.flow_source,
        tau_db=config.tau_db,
        scene_cuts=sorted(cuts),
    )

    def make_request(t: int) -> ColorizeRequest:
        if config.fixed_prompt:
            prompt = PromptRecord(t, frame0_prompt.text, frame0_prompt.origin)
        else:
            prompt = prompt_for_frame(schedule, t, cuts)
        masks = None
        if config.masks_dir is not None:
            mask_path = Path(config.masks_dir) / frame_paths[t].name
            if mask_path.exists():
                masks = frameio.read_labels(mask_path)
        return ColorizeRequest(t, lumas[t], prompt, masks)

    def flow_for(t: int):
        if config.flow_source == "flo_dir":
            flo_path = Path(config.flo_dir) / (frame_paths[t].stem + ".flo")
            flow = load_flo(flo_path)
            if flow.u.shape != shape:
                raise ValueError(
                    f"{flo_path.name}: flow is {flow.u.shape}, frames are {shape}"
                )
            return flow
        return estimate_flow(lumas[t], lumas[t - 1], config.flow_params)

    prev_final: LabFrame | None = None
    try:
        for t in range(len(lumas)):
            started = time.monotonic()
            scene_change = t == 0 or t in cuts
            request = make_request(t)
            corrected: float | None = None
            invoked = False

            if config.no_warp:
                final = response_frame(request, provider.colorize(request))
                invoked = True
            elif scene_change:
                final = response_frame(request, provider.colorize(request))
                invoked = True
            else:
                flow = flow_for(t)
                warped = warp_chroma(prev_final, flow)
                warp_frame = assemble_warp_frame(lumas[t], warped)
                if config.no_correction:
                    final = warp_frame
                else:
                    mask = correction_mask(
                        warp_frame,
                        warped.valid,
                        prev_final,
                        config.tau_db,
                        channels=config.mask_channels,
                        fixed_peak=config.fixed_peak,
                    )
                    corrected = mask.corrupted_fraction
                    if config.lazy_colorize and corrected == 0.0:
                        final = warp_frame
                    else:
                        colorized = response_frame(request, provider.colorize(request))
                        invoked = True
                        final = composite(warp_frame, colorized, mask)

            frameio.write_rgb(lab_to_rgb(final), out_dir / frame_paths[t].name)
            manifest.records.append(
                FrameRecord(
                    frame=t,
                    name=frame_paths[t].name,
                    prompt_text=request.prompt.text,
                    prompt_origin=request.prompt.origin,
                    scene_change=scene_change,
                    corrected_fraction=corrected,
                    colorizer_invoked=invoked,
                    elapsed_s=time.monotonic() - started,
                )
            )
            prev_final = final
    except Exception as exc:
        manifest.error = f"{type(exc).__name__}: {exc}"
        raise
    finally:
        manifest.save_json(out_dir / MANIFEST_NAME)
        if owns_provider:
            try:
                provider.close()
            except Exception:
                if manifest.error is None:
                    raise

    return manifest


def precompute_flow(input_dir, flo_dir, params: FlowParams | None = None) -> list[Path]:
    """Estimate backward flow for frames 1..N-1 and write stem-named .flo files.

    File <stem>.flo lives on frame <stem>'s grid and points into the
    previous frame, exactly what a flo_dir run expects.
    """
    from .flow import write_flo

    frame_paths = frameio.list_frames(input_dir)
    lumas = [frameio.read_luma(p) for p in frame_paths]
    out = Path(flo_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for t in range(1, len(lumas)):
        flow = estimate_flow(lumas[t], lumas[t - 1], params)
        path = out / (frame_paths[t].stem + ".flo")
        write_flo(flow, path)
        written.append(path)
    return written


def evaluate_dirs(result_dir, gt_dir) -> MetricsReport:
    """Evaluate a result frame directory against a ground-truth directory."""
    result = [frameio.read_rgb(p) for p in frameio.list_frames(result_dir)]
    gt = [frameio.read_rgb(p) for p in frameio.list_frames(gt_dir)]
    return evaluate(result, gt)
