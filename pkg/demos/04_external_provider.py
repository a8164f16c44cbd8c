"""Drive a colorizer living in another process.

Writes a complete provider (30 lines of Python) to a temp directory,
launches it through the subprocess protocol, and colorizes a short clip
with it. The same mechanics apply to wrapping a real neural model in any
language; the TypeScript reference server under server/ is the fuller
template.
"""

import sys
import tempfile
from pathlib import Path

import numpy as np
from PIL import Image

from chromaflow import ExternalColorizer, PipelineConfig, rgb_to_lab, run
from chromaflow.frameio import list_frames, read_rgb

OUT = Path(__file__).parent / "out" / "04_external"

PROVIDER_SOURCE = '''
import json, sys
import numpy as np
from PIL import Image

def emit(obj):
    sys.stdout.write(json.dumps(obj) + "\\n")
    sys.stdout.flush()

hello = json.loads(sys.stdin.readline())
workdir = hello["workdir"]
emit({"type": "ready", "name": "teal-wash"})

for line in sys.stdin:
    msg = json.loads(line)
    if msg["type"] == "shutdown":
        break
    t = msg["frame"]
    with Image.open(msg["luma"]) as im:
        w, h = im.size
    # constant cool chroma: A=-18, B=-6, encoded as (c+128)*257
    stacked = np.empty((2 * h, w), dtype=np.uint16)
    stacked[:h] = (-18 + 128) * 257
    stacked[h:] = (-6 + 128) * 257
    ab_path = f"{workdir}/ab_{t:05d}.png"
    Image.fromarray(stacked).save(ab_path, format="PNG")
    emit({"type": "result", "frame": t, "ab": ab_path})
'''


def main():
    in_dir = OUT / "input"
    in_dir.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(5)
    base = rng.integers(60, 200, (48, 48)).astype(np.uint8)
    for t in range(8):
        Image.fromarray(base, mode="L").save(in_dir / f"{t:05d}.png")

    with tempfile.TemporaryDirectory() as td:
        provider_path = Path(td) / "teal_provider.py"
        provider_path.write_text(PROVIDER_SOURCE)
        provider = ExternalColorizer([sys.executable, str(provider_path)])
        print(f"handshake complete, provider announced itself as {provider.name!r}")
        manifest = run(
            PipelineConfig(input_dir=in_dir, output_dir=OUT / "result", colorizer=provider)
        )
        provider.close()

    print(f"colorized {len(manifest.records)} frames through the process boundary")
    lab = rgb_to_lab(read_rgb(list_frames(OUT / "result")[0]))
    print(f"first frame mean chroma: A = {lab.A.mean():+.1f}, B = {lab.B.mean():+.1f} "
          "(the provider's teal wash)")
    print(f"outputs under {OUT}")


if __name__ == "__main__":
    main()
