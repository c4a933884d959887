#!/usr/bin/env python3
"""Write the synthetic desk-corpus clips as Y4M files."""

import os
import sys

from dotenv import load_dotenv

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from mevhas.media_io import write_y4m  # noqa: E402
from mevhas.synthetic import CLIP_KINDS, make_clip  # noqa: E402

# Load .env.local first, then fall back to .env
load_dotenv('.env.local')
load_dotenv()


def get_option(argv, name, default):
    """Value following `name` in argv, or `default`."""
    if name in argv:
        idx = argv.index(name)
        if idx + 1 < len(argv):
            return argv[idx + 1]
    return default


def make_clips(kinds, width, height, frames, output_dir):
    """Write one clip per kind into `output_dir`."""
    os.makedirs(output_dir, exist_ok=True)
    for kind in kinds:
        path = os.path.join(output_dir, f"{kind}_{width}x{height}.y4m")
        sequence = make_clip(kind, width, height, frames)
        with open(path, 'wb') as f:
            f.write(write_y4m(sequence, chroma='420'))
        size_kb = os.path.getsize(path) / 1024
        print(f"  📄 {path} ({len(sequence)} frame(s), {size_kb:.1f} KB)")


if __name__ == '__main__':
    argv = sys.argv[1:]
    kinds = [arg for arg in argv if arg in CLIP_KINDS] or sorted(CLIP_KINDS)
    try:
        width = int(get_option(argv, '--width', 256))
        height = int(get_option(argv, '--height', 256))
        frames = int(get_option(argv, '--frames', 2))
    except ValueError as e:
        print(f"❌ Error: {e}")
        sys.exit(1)
    output_dir = get_option(argv, '--out', os.getenv('MEVHAS_OUTPUT_DIR', './results') + '/clips')

    print(f"\n🎞️  Writing {len(kinds)} clip(s) to '{output_dir}':\n")
    try:
        make_clips(kinds, width, height, frames, output_dir)
    except Exception as e:
        print(f"❌ Error: {e}")
        sys.exit(1)
    print("\n✅ Done")
