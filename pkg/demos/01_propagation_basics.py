"""Walk through one propagation step by hand.

Builds two frames of a small panning scene, colorizes the first one with
a palette, then carries its chroma onto the second frame along the true
backward flow: warp, corruption mask, composite. Prints what each stage
did and writes the intermediate images next to this script.
"""

from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from chromaflow import (
    ColorizeRequest,
    FlowField,
    LabFrame,
    LumaPlane,
    PromptRecord,
    assemble_warp_frame,
    composite,
    correction_mask,
    lab_to_rgb,
    palette_colorize,
    response_frame,
    warp_chroma,
)
from chromaflow.frameio import write_rgb

OUT = Path(__file__).parent / "out" / "01_propagation"
PALETTE = [(45.0, 20.0, 12.0), (60.0, -24.0, 16.0), (75.0, 18.0, -26.0), (101.0, -14.0, -20.0)]
SHIFT = 3  # camera pans right 3 px between the frames


def save(name, frame: LabFrame):
    write_rgb(lab_to_rgb(frame), OUT / name)


def main():
    OUT.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(8)

    # a 64x96 panorama; the two frames are windows into it
    pano = gaussian_filter(rng.uniform(0, 1, (64, 96)), 2.5)
    pano = 25.0 + (pano - pano.min()) / (pano.max() - pano.min()) * 50.0
    luma_prev = LumaPlane(pano[:, SHIFT : SHIFT + 64])
    luma_curr = LumaPlane(pano[:, 0:64])  # scene moved right: new content at left

    # frame t: fresh palette colorization
    request = ColorizeRequest(0, luma_prev, PromptRecord(0, "a colorful image", "generic"))
    prev_final = response_frame(request, palette_colorize(request, PALETTE))
    save("frame_t.png", prev_final)

    # frame t+1: pull chroma backward along the known flow (u = -3)
    flow = FlowField(np.full((64, 64), -float(SHIFT), np.float32), np.zeros((64, 64), np.float32))
    warped = warp_chroma(prev_final, flow)
    print(f"warp: {int((warped.valid == 0).sum())} pixels had no source "
          f"(the {SHIFT}-px disocclusion band on the left)")
    warp_frame = assemble_warp_frame(luma_curr, warped)
    save("frame_t1_warped.png", warp_frame)

    mask = correction_mask(warp_frame, warped.valid, prev_final, tau_db=25.0)
    print(f"mask: {mask.corrupted_fraction:.1%} of pixels flagged for repair")

    request1 = ColorizeRequest(1, luma_curr, PromptRecord(1, "a colorful image", "generic"))
    colorized = response_frame(request1, palette_colorize(request1, PALETTE))
    final = composite(warp_frame, colorized, mask)
    save("frame_t1_final.png", final)

    gray_left = np.abs(final.A[:, :SHIFT]).max()
    print(f"composite: largest |A| in the former gray band is now {gray_left:.1f} "
          "(repainted by the colorizer)")
    print(f"images written to {OUT}")


if __name__ == "__main__":
    main()
