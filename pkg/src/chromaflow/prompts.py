"""Prompt scheduling for per-frame colorization.

Two modes: generic mode supplies one fixed text ("a colorful image") to
every frame; detailed mode plays back timestamped prompt entries,
re-activating the most recent entry at each refresh point. Refresh points
are frame 0, every refresh interval (one second of footage by default),
and every scene cut; between refresh points the active prompt persists.

Prompt authoring itself (human or language-model) is out of scope; the
detailed entries arrive as a JSON file of {frame, text} records.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

GENERIC_PROMPT = "a colorful image"

ORIGIN_GENERIC = "generic"
ORIGIN_SCHEDULED = "scheduled_refresh"
ORIGIN_SCENE = "scene_change"
ORIGIN_USER = "user_supplied"


@dataclass
class PromptRecord:
    """The prompt active at one frame, with the reason it became active."""

    frame_index: int
    text: str
    origin: str

    def __post_init__(self):
        if not self.text:
            raise ValueError("prompt text must be nonempty")


@dataclass
class PromptSchedule:
    """Prompt source for a whole video.

    In detailed mode, detailed_entries must be sorted by frame index and
    cover frame 0 so every frame has an active prompt.
    """

    mode: str = "generic"
    generic_text: str = GENERIC_PROMPT
    detailed_entries: list[tuple[int, str]] = field(default_factory=list)
    refresh_interval_frames: int = 24

    def __post_init__(self):
        if self.mode not in ("generic", "detailed"):
            raise ValueError(f"unknown prompt mode {self.mode!r}")
        if self.refresh_interval_frames < 1:
            raise ValueError("refresh_interval_frames must be >= 1")
        if self.mode == "detailed":
            if not self.detailed_entries:
                raise ValueError("detailed mode requires prompt entries")
            frames = [f for f, _ in self.detailed_entries]
            if frames != sorted(frames):
                raise ValueError("detailed entries must be sorted by frame index")
            if frames[0] != 0:
                raise ValueError("detailed entries must cover frame 0")
            if any(not text for _, text in self.detailed_entries):
                raise ValueError("prompt text must be nonempty")


def prompt_for_frame(
    schedule: PromptSchedule, frame_index: int, scene_cuts: Iterable[int] = ()
) -> PromptRecord:
    """Resolve the prompt active at a frame.

    Generic mode ignores frame index and cuts. Detailed mode finds the
    latest refresh point at or before the frame, then re-activates the
    nearest entry at or before that point (a refresh without a new entry
    repeats earlier text rather than inventing any).
    """
    if schedule.mode == "generic":
        return PromptRecord(frame_index, schedule.generic_text, ORIGIN_GENERIC)

    cuts = {c for c in scene_cuts if 0 < c <= frame_index}
    interval = schedule.refresh_interval_frames
    refresh = (frame_index // interval) * interval
    origin = ORIGIN_USER if refresh == 0 else ORIGIN_SCHEDULED
    if cuts:
        last_cut = max(cuts)
        if last_cut >= refresh:
            refresh = last_cut
            origin = ORIGIN_SCENE

    active = schedule.detailed_entries[0]
    for entry in schedule.detailed_entries:
        if entry[0] <= refresh:
            active = entry
        else:
            break
    return PromptRecord(frame_index, active[1], origin)


def load_prompt_entries(path) -> list[tuple[int, str]]:
    """Read detailed prompt entries from a JSON array of {frame, text}."""
    data = json.loads(Path(path).read_text())
    if not isinstance(data, list):
        raise ValueError(f"{path}: prompt file must be a JSON array")
    entries = []
    for item in data:
        if (
            not isinstance(item, dict)
            or not isinstance(item.get("frame"), int)
            or isinstance(item.get("frame"), bool)
            or not isinstance(item.get("text"), str)
            or not item["text"]
        ):
            raise ValueError(
                f"{path}: each entry must be {{'frame': int, 'text': nonempty str}}"
            )
        entries.append((item["frame"], item["text"]))
    entries.sort(key=lambda e: e[0])
    return entries
