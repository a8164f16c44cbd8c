"""Acceptance gate: every release criterion at its stated tolerance.

Each test prints one PASS/FAIL line; run with `pytest tests/test_acceptance.py -s`
to see them stream. Criteria are self-contained rather than delegating to
the unit suites so this module alone certifies a build.
"""

import functools
import math
import struct
import time

import numpy as np
import pytest

from chromaflow import (
    CorrectionMask,
    FlowField,
    LabFrame,
    OracleColorizer,
    PaletteColorizer,
    PipelineConfig,
    Rgb8Image,
    cdc,
    colorfulness,
    composite,
    correction_mask,
    detect_cuts,
    endpoint_error,
    estimate_flow,
    evaluate_dirs,
    gray_to_luma,
    load_flo,
    psnr,
    rgb_to_lab,
    run,
    video_colorfulness,
    warp_chroma,
    write_flo,
)
from chromaflow.frameio import list_frames, read_rgb
from chromaflow.scenedetect import save_cuts

from conftest import smooth_texture, shifted_pair, static_scene, stable_gray_levels, write_sequence
from reference import psnr_loop
from test_pipeline import PAN_PALETTE, frames_equal, gray_fraction, make_pan_sequence, oracle_for


def criterion(name):
    def wrap(fn):
        @functools.wraps(fn)
        def inner(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"[ACCEPTANCE] {name}: FAIL")
                raise
            print(f"[ACCEPTANCE] {name}: PASS")

        return inner

    return wrap


@criterion("oracle end-to-end (static 64x64x30, ratios, runtime)")
def test_oracle_end_to_end(two_scene_video, tmp_path):
    out_dir = tmp_path / "out"
    started = time.monotonic()
    run(
        PipelineConfig(
            input_dir=two_scene_video["input_dir"],
            output_dir=out_dir,
            colorizer=oracle_for(two_scene_video["gt_dir"]),
            flow_source="builtin",
        )
    )
    elapsed = time.monotonic() - started
    assert elapsed < 30.0, f"runtime {elapsed:.1f}s exceeds 30s"

    gt_paths = list_frames(two_scene_video["gt_dir"])
    out_paths = list_frames(out_dir)
    assert len(out_paths) == 30
    for op, gp in zip(out_paths, gt_paths):
        diff = np.abs(
            read_rgb(op).data.astype(int) - read_rgb(gp).data.astype(int)
        ).max()
        assert diff <= 1, f"{op.name}: max channel error {diff} > 1"

    report = evaluate_dirs(out_dir, two_scene_video["gt_dir"])
    assert report.colorfulness_ratio is not None
    assert 0.99 <= report.colorfulness_ratio <= 1.01
    assert report.cdc_ratio is not None
    assert 0.99 <= report.cdc_ratio <= 1.01


@criterion("correction unit suite (hand PSNR, tau monotonicity, composite exactness)")
def test_correction_unit_suite():
    # hand-computed pixels at the 25 dB operating point
    prev = LabFrame(np.zeros((1, 2)), np.array([[100.0, 100.0]]), np.zeros((1, 2)))
    warped = LabFrame(
        np.zeros((1, 2)),
        prev.A + np.array([[30.0, 0.3]]),
        prev.B + np.array([[40.0, 0.4]]),
    )
    # ||d|| = 50 -> 6.02 dB < 25 corrupted; ||d|| = 0.5 -> 46.02 dB clean
    assert 20 * math.log10(100 / 50) == pytest.approx(6.0206, abs=5e-4)
    assert 20 * math.log10(100 / 0.5) == pytest.approx(46.0206, abs=5e-4)
    mask = correction_mask(warped, np.ones((1, 2)), prev, 25.0)
    assert mask.mask[0, 0] == 1 and mask.mask[0, 1] == 0

    rng = np.random.default_rng(42)
    for _ in range(100):
        prev = LabFrame(
            rng.uniform(0, 100, (10, 10)),
            rng.uniform(-80, 80, (10, 10)),
            rng.uniform(-80, 80, (10, 10)),
        )
        warped = LabFrame(
            rng.uniform(0, 100, (10, 10)),
            prev.A + rng.normal(0, 6, (10, 10)),
            prev.B + rng.normal(0, 6, (10, 10)),
        )
        validity = (rng.uniform(0, 1, (10, 10)) > 0.1).astype(np.uint8)
        t1, t2 = sorted(rng.uniform(5, 60, 2))
        m1 = correction_mask(warped, validity, prev, t1).mask
        m2 = correction_mask(warped, validity, prev, t2).mask
        assert np.all(m1 <= m2)

    for _ in range(50):
        luma = rng.uniform(0, 100, (9, 9))
        a = LabFrame(luma, rng.uniform(-50, 50, (9, 9)), rng.uniform(-50, 50, (9, 9)))
        b = LabFrame(luma, rng.uniform(-50, 50, (9, 9)), rng.uniform(-50, 50, (9, 9)))
        m = CorrectionMask((rng.uniform(0, 1, (9, 9)) > 0.5).astype(np.uint8), 25.0)
        out = composite(a, b, m)
        take = m.mask.astype(bool)
        assert np.array_equal(out.A[take], b.A[take])
        assert np.array_equal(out.A[~take], a.A[~take])
        assert np.array_equal(out.B[take], b.B[take])
        assert np.array_equal(out.B[~take], a.B[~take])


@criterion("warping suite (identity, shift table, disocclusion repair)")
def test_warping_suite(tmp_path):
    rng = np.random.default_rng(7)
    frame = LabFrame(
        rng.uniform(0, 100, (12, 12)),
        rng.uniform(-100, 100, (12, 12)),
        rng.uniform(-100, 100, (12, 12)),
    )
    zero = FlowField(np.zeros((12, 12), np.float32), np.zeros((12, 12), np.float32))
    out = warp_chroma(frame, zero)
    assert np.array_equal(out.A, frame.A) and np.array_equal(out.B, frame.B)
    assert np.all(out.valid == 1)

    a = np.arange(16, dtype=np.float64).reshape(4, 4)
    f4 = LabFrame(np.zeros((4, 4)), a, a + 100.0)
    shifted = warp_chroma(
        f4, FlowField(np.ones((4, 4), np.float32), np.zeros((4, 4), np.float32))
    )
    assert np.array_equal(shifted.A[:, :3], a[:, 1:])
    assert np.all(shifted.valid[:, 3] == 0) and np.all(shifted.A[:, 3] == 0)

    # out-of-bounds pixels are repaired: zero gray pixels in corrected output
    in_dir, flo_dir = make_pan_sequence(tmp_path)
    out_dir = tmp_path / "corrected"
    run(
        PipelineConfig(
            input_dir=in_dir,
            output_dir=out_dir,
            colorizer=PaletteColorizer(PAN_PALETTE),
            flow_source="flo_dir",
            flo_dir=flo_dir,
        )
    )
    for p in list_frames(out_dir):
        assert gray_fraction(read_rgb(p)) == 0.0


@criterion("ablation direction: warping correction (colorfulness, gray bands)")
def test_ablation_correction_direction(tmp_path):
    in_dir, flo_dir = make_pan_sequence(tmp_path)
    outputs = {}
    for label, no_corr in (("with", False), ("without", True)):
        out_dir = tmp_path / label
        run(
            PipelineConfig(
                input_dir=in_dir,
                output_dir=out_dir,
                colorizer=PaletteColorizer(PAN_PALETTE),
                flow_source="flo_dir",
                flo_dir=flo_dir,
                no_correction=no_corr,
            )
        )
        outputs[label] = [read_rgb(p) for p in list_frames(out_dir)]

    gray_without = [gray_fraction(f) for f in outputs["without"]]
    assert max(gray_without) >= 0.01, "no gray band without correction"
    assert all(gray_fraction(f) == 0.0 for f in outputs["with"])
    cf_with = video_colorfulness(outputs["with"])
    cf_without = video_colorfulness(outputs["without"])
    assert cf_with >= 1.2 * cf_without, f"{cf_with:.2f} < 1.2 * {cf_without:.2f}"


@criterion("ablation direction: dynamic vs fixed prompt PSNR")
def test_ablation_prompt_direction(tmp_path):
    import json as _json

    c1, c2 = (25.0, -18.0), (-20.0, 30.0)
    lev1, col1 = stable_gray_levels(range(40, 111), *c1)
    lev2, col2 = stable_gray_levels(range(150, 221), *c2)
    g1, gt1 = static_scene(lev1, col1, (48, 48), seed=15)
    g2, gt2 = static_scene(lev2, col2, (48, 48), seed=16)
    write_sequence(
        tmp_path / "in", [g1] * 10 + [g2] * 10, [gt1] * 10 + [gt2] * 10, tmp_path / "gt"
    )
    (tmp_path / "prompts.json").write_text(
        _json.dumps([{"frame": 0, "text": "scene one"}, {"frame": 10, "text": "scene two"}])
    )
    palettes = {
        "scene one": [(101.0, c1[0], c1[1])],
        "scene two": [(101.0, c2[0], c2[1])],
    }
    scores = {}
    for label, fixed in (("dynamic", False), ("fixed", True)):
        run(
            PipelineConfig(
                input_dir=tmp_path / "in",
                output_dir=tmp_path / label,
                colorizer=PaletteColorizer([(101.0, 0.0, 0.0)], by_prompt=palettes),
                fps=10.0,
                prompt_mode="detailed",
                prompt_file=tmp_path / "prompts.json",
                fixed_prompt=fixed,
            )
        )
        scores[label] = evaluate_dirs(tmp_path / label, tmp_path / "gt").psnr_db
    assert scores["dynamic"] > scores["fixed"], scores


@criterion("metrics oracles (colorfulness, CDC, PSNR loop)")
def test_metrics_oracles():
    gray = Rgb8Image(np.full((8, 8, 3), 77, np.uint8))
    assert colorfulness(gray) == 0.0

    red = Rgb8Image(np.zeros((8, 8, 3), np.uint8))
    red.data[..., 0] = 255
    assert colorfulness(red) == pytest.approx(85.53, abs=0.01)

    static = [Rgb8Image(np.full((6, 6, 3), 40, np.uint8))] * 6
    assert cdc(static) == 0.0

    black = Rgb8Image(np.zeros((6, 6, 3), np.uint8))
    white = Rgb8Image(np.full((6, 6, 3), 255, np.uint8))
    alternating = [black, white, black, white, black]
    assert cdc(alternating) == pytest.approx(math.log(2) / 3.0, abs=1e-6)

    rng = np.random.default_rng(123)
    for _ in range(100):
        a = Rgb8Image(rng.integers(0, 256, (7, 9, 3)).astype(np.uint8))
        b = Rgb8Image(rng.integers(0, 256, (7, 9, 3)).astype(np.uint8))
        assert psnr(a, b) == pytest.approx(psnr_loop(a.data, b.data), abs=1e-9)


@criterion("scene isolation (perturbation containment, K-1 cuts)")
def test_scene_isolation(two_scene_video, tmp_path):
    cut = two_scene_video["cut"]
    cuts_path = tmp_path / "cuts.json"
    save_cuts([cut], cuts_path)
    gt_frames = [rgb_to_lab(read_rgb(p)) for p in list_frames(two_scene_video["gt_dir"])]
    perturbed = [f.copy() for f in gt_frames]
    for f in perturbed[:cut]:
        f.A[:] = np.clip(f.A - 11.0, -128, 127)
        f.B[:] = np.clip(f.B + 13.0, -128, 127)

    base = dict(
        input_dir=two_scene_video["input_dir"], scene_source="file", scene_file=cuts_path
    )
    run(PipelineConfig(output_dir=tmp_path / "a", colorizer=OracleColorizer(gt_frames), **base))
    run(PipelineConfig(output_dir=tmp_path / "b", colorizer=OracleColorizer(perturbed), **base))
    post_cut = {f"{t:05d}.png" for t in range(cut, 30)}
    assert frames_equal(tmp_path / "a", tmp_path / "b", names=post_cut)
    assert not frames_equal(tmp_path / "a", tmp_path / "b", names={"00000.png"})

    # K unrelated clips: exactly K-1 cuts at default parameters
    k = 4
    clips = []
    ranges = [(5, 25), (35, 55), (60, 80), (82, 98)]
    for i, (lo, hi) in enumerate(ranges):
        plane = gray_to_luma(
            np.clip(
                np.rint(smooth_texture(24, 24, seed=i * 3 + 2, lo=lo, hi=hi) * 2.55), 0, 255
            ).astype(np.uint8)
        )
        clips.extend([plane] * 5)
    assert len(detect_cuts(clips)) == k - 1


@criterion(".flo round trip and builtin shift recovery")
def test_flow_criteria(tmp_path):
    rng = np.random.default_rng(99)
    for i in range(100):
        h, w = int(rng.integers(1, 24)), int(rng.integers(1, 24))
        field = FlowField(
            (rng.standard_normal((h, w)) * 20).astype(np.float32),
            (rng.standard_normal((h, w)) * 20).astype(np.float32),
        )
        path = tmp_path / "f.flo"
        write_flo(field, path)
        back = load_flo(path)
        assert np.array_equal(back.u, field.u) and np.array_equal(back.v, field.v)
    # spot-check the byte layout once
    raw = path.read_bytes()
    assert struct.unpack("<f", raw[:4])[0] == 202021.25

    margin = 10
    for dx in range(-6, 7):
        if dx == 0:
            continue
        target, source = shifted_pair(dx, 0)
        field = estimate_flow(target, source)
        interior = FlowField(
            field.u[margin:-margin, margin:-margin], field.v[margin:-margin, margin:-margin]
        )
        ref = FlowField(
            np.full(interior.u.shape, -dx, np.float32), np.zeros(interior.u.shape, np.float32)
        )
        epe = endpoint_error(interior, ref)
        assert epe < 0.5, f"shift {dx}: interior EPE {epe:.3f}"
