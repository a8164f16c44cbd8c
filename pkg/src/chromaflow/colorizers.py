"""Per-frame colorization providers.

A provider turns a grayscale frame (plus an optional instance label map
and a text prompt) into chrominance planes. Neural colorizers are out of
scope; what lives here is the uniform interface, two deterministic
in-process providers for testing and ablations, and a subprocess protocol
client so real models can be plugged in from any language.

Every response is snapped to the 16-bit chroma grid of the interchange
format before entering the pipeline, so in-process providers and
file-based external providers are bit-identical at equal inputs. Integer
chroma values are unaffected by the snap.

External protocol (line-delimited JSON on the child's stdin/stdout,
UTF-8, one message per line, unknown fields ignored):

  engine  -> provider  {"type":"hello","version":1,"workdir":"<abs path>"}
  provider -> engine   {"type":"ready","name":"<provider name>"}
  engine  -> provider  {"type":"colorize","frame":t,"luma":"<gray PNG>",
                        "masks":"<16-bit label PNG>"|null,"prompt":"<text>"}
  provider -> engine   {"type":"result","frame":t,"ab":"<stacked 16-bit PNG>"}
  engine  -> provider  {"type":"shutdown"}          (provider exits 0)
  provider -> engine   {"type":"error","frame":t,"message":"..."}  aborts t
"""

from __future__ import annotations

import json
import logging
import queue
import shlex
import subprocess
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import frameio
from .colorspace import LabFrame, LumaPlane
from .prompts import PromptRecord

logger = logging.getLogger(__name__)

PROTOCOL_VERSION = 1
DEFAULT_TIMEOUT_S = 300.0

Palette = Sequence[tuple[float, float, float]]  # (luma_break, A, B)


@dataclass
class ColorizeRequest:
    """Inputs for colorizing one frame."""

    frame_index: int
    luma: LumaPlane
    prompt: PromptRecord
    masks: np.ndarray | None = None  # integer label map, 0 = background

    def __post_init__(self):
        if self.masks is not None:
            self.masks = np.asarray(self.masks)
            if self.masks.shape != self.luma.L.shape:
                raise ValueError(
                    f"mask shape {self.masks.shape} does not match luma {self.luma.L.shape}"
                )


@dataclass
class ColorizeResponse:
    """Predicted chrominance planes for one frame."""

    frame_index: int
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=np.float64)
        self.B = np.asarray(self.B, dtype=np.float64)
        if self.A.shape != self.B.shape:
            raise ValueError("A/B shape mismatch")


class ColorizerError(Exception):
    """Base class for provider failures; carries the frame being processed."""

    def __init__(self, message: str, frame_index: int | None = None):
        super().__init__(message)
        self.frame_index = frame_index


class HandshakeError(ColorizerError):
    """The provider process did not complete the hello/ready handshake."""


class ProviderTimeoutError(ColorizerError):
    """The provider did not reply within the per-frame timeout."""


class ProviderCrashError(ColorizerError):
    """The provider exited or closed its stream mid-conversation."""


class ProviderProtocolError(ColorizerError):
    """The provider sent a malformed or out-of-sequence message."""


class ProviderDimensionError(ColorizerError):
    """A reply's planes do not match the request dimensions."""


class ProviderReportedError(ColorizerError):
    """The provider reported an error for a frame."""


def response_frame(request: ColorizeRequest, response: ColorizeResponse) -> LabFrame:
    """Assemble a provider response into a LabFrame on the request's luma.

    Validates dimensions, clamps out-of-range chroma with a warning
    (neural providers may overshoot slightly; geometry going wrong is a
    real bug and raises), and snaps chroma to the interchange grid.
    """
    if response.A.shape != request.luma.L.shape:
        raise ValueError(
            f"frame {request.frame_index}: response shape {response.A.shape} "
            f"does not match request {request.luma.L.shape}"
        )
    a, b = response.A, response.B
    lo = min(a.min(), b.min()) if a.size else 0.0
    hi = max(a.max(), b.max()) if a.size else 0.0
    if lo < -128.0 or hi > 127.0:
        logger.warning(
            "frame %d: chroma outside [-128, 127] (%.2f..%.2f); clamping",
            request.frame_index,
            lo,
            hi,
        )
    a, b = frameio.quantize_chroma(a, b)
    return LabFrame(L=request.luma.L, A=a, B=b)


def oracle_colorize(gt_frame: LabFrame, request: ColorizeRequest) -> ColorizeResponse:
    """Return the ground-truth frame's chroma verbatim (test provider)."""
    if gt_frame.L.shape != request.luma.L.shape:
        raise ValueError(
            f"ground truth shape {gt_frame.L.shape} does not match request "
            f"{request.luma.L.shape}"
        )
    return ColorizeResponse(request.frame_index, gt_frame.A.copy(), gt_frame.B.copy())


def palette_colorize(request: ColorizeRequest, palette: Palette) -> ColorizeResponse:
    """Map luminance bands (and instance labels) to fixed chroma.

    Each pixel takes the palette entry of the first luma break at or above
    its lightness; lightness above the last break clamps to the last
    entry. When a label map is present, instance label k rotates the
    palette by k entries so distinct instances get distinct colors.
    """
    if not palette:
        raise ValueError("palette must be nonempty")
    breaks = np.array([p[0] for p in palette], dtype=np.float64)
    if np.any(np.diff(breaks) < 0):
        raise ValueError("palette breaks must be sorted ascending")
    pa = np.array([p[1] for p in palette], dtype=np.float64)
    pb = np.array([p[2] for p in palette], dtype=np.float64)

    idx = np.searchsorted(breaks, request.luma.L, side="left")
    idx = np.minimum(idx, len(palette) - 1)
    if request.masks is not None:
        idx = (idx + request.masks.astype(np.intp)) % len(palette)
    return ColorizeResponse(request.frame_index, pa[idx], pb[idx])


class Colorizer:
    """Provider interface: one colorize call per frame, then close."""

    name = "colorizer"

    def colorize(self, request: ColorizeRequest) -> ColorizeResponse:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()


class OracleColorizer(Colorizer):
    """Replays ground-truth chroma by frame index."""

    name = "oracle"

    def __init__(self, gt_frames: Sequence[LabFrame]):
        self.gt_frames = list(gt_frames)

    def colorize(self, request: ColorizeRequest) -> ColorizeResponse:
        if not 0 <= request.frame_index < len(self.gt_frames):
            raise ValueError(f"no ground truth for frame {request.frame_index}")
        return oracle_colorize(self.gt_frames[request.frame_index], request)


class PaletteColorizer(Colorizer):
    """Deterministic luma-band palette provider.

    Optionally keyed by prompt text: by_prompt maps exact prompt strings
    to palettes, falling back to the default palette. This gives ablation
    tests a provider whose output actually depends on the active prompt.
    """

    name = "palette"

    def __init__(self, palette: Palette, by_prompt: dict[str, Palette] | None = None):
        if not palette:
            raise ValueError("palette must be nonempty")
        self.palette = list(palette)
        self.by_prompt = dict(by_prompt) if by_prompt else {}

    def colorize(self, request: ColorizeRequest) -> ColorizeResponse:
        palette = self.by_prompt.get(request.prompt.text, self.palette)
        return palette_colorize(request, palette)


class ExternalColorizer(Colorizer):
    """Protocol client driving a colorizer in a child process.

    Frames travel as files in a working directory (kept small and
    language-agnostic); messages are line-delimited JSON. Every failure
    mode maps to a distinct exception type naming the frame in flight.
    """

    name = "external"

    def __init__(
        self,
        command: str | Sequence[str],
        workdir: str | Path | None = None,
        timeout_s: float = DEFAULT_TIMEOUT_S,
    ):
        if isinstance(command, str):
            command = shlex.split(command)
        self.command = list(command)
        self.timeout_s = timeout_s
        self._tmp = None
        if workdir is None:
            self._tmp = tempfile.TemporaryDirectory(prefix="chromaflow-ext-")
            workdir = self._tmp.name
        self.workdir = Path(workdir).absolute()
        self.workdir.mkdir(parents=True, exist_ok=True)

        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                text=True,
                encoding="utf-8",
                bufsize=1,
            )
        except OSError:
            if self._tmp is not None:
                self._tmp.cleanup()
                self._tmp = None
            raise
        self._failed = False
        self._lines: queue.Queue = queue.Queue()
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()
        try:
            self._handshake()
        except BaseException:
            self._failed = True
            self.close()
            raise

    def _read_loop(self):
        try:
            for line in self._proc.stdout:
                self._lines.put(line)
        except (OSError, ValueError):
            pass  # pipe torn down by a force-kill
        finally:
            self._lines.put(None)  # EOF sentinel

    def _send(self, obj: dict, frame_index: int | None = None) -> None:
        try:
            self._proc.stdin.write(json.dumps(obj) + "\n")
            self._proc.stdin.flush()
        except (BrokenPipeError, ValueError, OSError) as exc:
            self._failed = True
            raise ProviderCrashError(
                f"provider pipe closed while sending: {exc}", frame_index
            ) from exc

    def _recv(self, frame_index: int | None = None) -> dict:
        try:
            line = self._lines.get(timeout=self.timeout_s)
        except queue.Empty:
            self._failed = True
            raise ProviderTimeoutError(
                f"no reply within {self.timeout_s:.0f} s", frame_index
            ) from None
        if line is None:
            self._failed = True
            rc = self._proc.poll()
            raise ProviderCrashError(
                f"provider stream ended (exit code {rc})", frame_index
            )
        try:
            msg = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProviderProtocolError(
                f"reply is not valid JSON: {line!r}", frame_index
            ) from exc
        if not isinstance(msg, dict) or "type" not in msg:
            raise ProviderProtocolError(
                f"reply is not a typed message: {line!r}", frame_index
            )
        return msg

    def _handshake(self) -> None:
        self._send(
            {"type": "hello", "version": PROTOCOL_VERSION, "workdir": str(self.workdir)}
        )
        try:
            msg = self._recv()
        except ColorizerError as exc:
            raise HandshakeError(f"handshake failed: {exc}") from exc
        if msg.get("type") != "ready":
            raise HandshakeError(f"expected ready, got {msg.get('type')!r}")
        self.name = str(msg.get("name", "external"))

    def colorize(self, request: ColorizeRequest) -> ColorizeResponse:
        t = request.frame_index
        luma_path = self.workdir / f"luma_{t:05d}.png"
        frameio.write_luma(request.luma, luma_path)
        masks_path = None
        if request.masks is not None:
            masks_path = self.workdir / f"masks_{t:05d}.png"
            frameio.write_labels(request.masks, masks_path)
        self._send(
            {
                "type": "colorize",
                "frame": t,
                "luma": str(luma_path),
                "masks": str(masks_path) if masks_path else None,
                "prompt": request.prompt.text,
            },
            frame_index=t,
        )
        msg = self._recv(frame_index=t)
        if msg.get("type") == "error":
            raise ProviderReportedError(
                f"provider error on frame {msg.get('frame', t)}: {msg.get('message')}",
                t,
            )
        if msg.get("type") != "result":
            raise ProviderProtocolError(f"expected result, got {msg.get('type')!r}", t)
        if msg.get("frame") != t:
            raise ProviderProtocolError(
                f"result frame {msg.get('frame')!r} does not match request {t}", t
            )
        ab_path = Path(str(msg.get("ab", "")))
        if not ab_path.is_absolute():
            ab_path = self.workdir / ab_path
        try:
            a, b = frameio.read_ab(ab_path)
        except (OSError, frameio.FrameFormatError) as exc:
            raise ProviderProtocolError(f"unreadable ab file {ab_path}: {exc}", t) from exc
        if a.shape != request.luma.L.shape:
            raise ProviderDimensionError(
                f"frame {t}: reply planes {a.shape} do not match request "
                f"{request.luma.L.shape}",
                t,
            )
        return ColorizeResponse(t, a, b)

    def close(self) -> None:
        """Shut the provider down.

        After a clean session this performs the shutdown handshake and
        raises if the provider ignores it or exits nonzero. Once a frame
        has already failed (crash, timeout) the session is poisoned: the
        process is killed outright and nothing further is reported, the
        original error being the one that matters.
        """
        proc, self._proc = self._proc, None
        if proc is None:
            return
        try:
            if self._failed:
                if proc.poll() is None:
                    proc.kill()
                    proc.wait()
                return
            if proc.poll() is None:
                try:
                    proc.stdin.write(json.dumps({"type": "shutdown"}) + "\n")
                    proc.stdin.flush()
                    proc.stdin.close()
                except (BrokenPipeError, ValueError, OSError):
                    pass
                try:
                    proc.wait(timeout=10)
                except subprocess.TimeoutExpired:
                    proc.kill()
                    proc.wait()
                    raise ProviderCrashError("provider ignored shutdown; killed")
            if proc.returncode != 0:
                raise ProviderCrashError(
                    f"provider exited with code {proc.returncode}"
                )
        finally:
            if self._tmp is not None:
                self._tmp.cleanup()
                self._tmp = None

    def __exit__(self, exc_type, exc, tb):
        if exc_type is not None:
            # already failing; don't let shutdown problems mask the cause
            try:
                self.close()
            except ColorizerError:
                pass
        else:
            self.close()


def external_colorize(
    command: str | Sequence[str],
    request: ColorizeRequest,
    workdir: str | Path | None = None,
    timeout_s: float = DEFAULT_TIMEOUT_S,
) -> ColorizeResponse:
    """One-shot protocol round trip: spawn, handshake, colorize, shutdown."""
    with ExternalColorizer(command, workdir=workdir, timeout_s=timeout_s) as provider:
        return provider.colorize(request)
