"""Write the small grayscale test corpus used by the acceptance tests.

Natural crops come from scikit-image's bundled sample images; the last
image is a synthetic pattern of oriented stripes.
"""

from pathlib import Path

import numpy as np
from skimage import color, data

from sdct.imageio import write_pgm

SIZE = 128


def crop(img, top, left):
    return np.ascontiguousarray(img[top:top + SIZE, left:left + SIZE])


def stripes():
    y, x = np.mgrid[0:SIZE, 0:SIZE].astype(float)
    out = np.zeros((SIZE, SIZE))
    for (r0, c0), deg, period in [((0, 0), 30, 9), ((0, 64), 120, 7), ((64, 0), 60, 11), ((64, 64), 150, 6)]:
        t = np.deg2rad(deg)
        wave = 128 + 90 * np.sin(2 * np.pi * (x * np.cos(t) + y * np.sin(t)) / period)
        out[r0:r0 + 64, c0:c0 + 64] = wave[r0:r0 + 64, c0:c0 + 64]
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def main(dest=Path(__file__).resolve().parents[1] / "tests" / "data"):
    dest.mkdir(parents=True, exist_ok=True)
    astro = np.rint(color.rgb2gray(data.astronaut()) * 255).astype(np.uint8)
    images = {
        "camera": crop(data.camera(), 60, 180),
        "astronaut": crop(astro, 30, 150),
        "brick": crop(data.brick(), 100, 100),
        "stripes": stripes(),
    }
    for name, img in images.items():
        write_pgm(dest / f"{name}.pgm", img)


if __name__ == "__main__":
    main()
