"""Regenerate src/sdct/data/hevc_dct.txt.

The HEVC core transform of size N uses rows k * (32 // N) of the 32-point
matrix, truncated to N columns.  Each entry of the 32-point matrix is an
integer approximation of 64*sqrt(2)*cos(m*pi/64) (64 for the DC row).
"""

import pathlib

# magnitudes for cos(m*pi/64), m = 0..32
ODD32 = [90, 90, 88, 85, 82, 78, 73, 67, 61, 54, 46, 38, 31, 22, 13, 4]
ODD16 = [90, 87, 80, 70, 57, 43, 25, 9]
ODD8 = [89, 75, 50, 18]
ODD4 = [83, 36]


def cos_table():
    t = [0] * 33
    t[0] = 64
    for i, v in enumerate(ODD32):
        t[2 * i + 1] = v
    for i, v in enumerate(ODD16):
        t[4 * i + 2] = v
    for i, v in enumerate(ODD8):
        t[8 * i + 4] = v
    for i, v in enumerate(ODD4):
        t[16 * i + 8] = v
    t[16] = 64
    t[32] = 0
    return t


def entry(k, j, table):
    m = ((2 * j + 1) * k) % 128
    if m > 64:
        m = 128 - m
    if m > 32:
        return -table[64 - m]
    return table[m]


def matrix(n):
    table = cos_table()
    step = 32 // n
    return [[entry(k * step, j, table) for j in range(n)] for k in range(n)]


def main():
    out = pathlib.Path(__file__).resolve().parents[1] / "src" / "sdct" / "data" / "hevc_dct.txt"
    lines = [
        "# Scaled-integer DCT-2 matrices (HEVC core transform convention).",
        "# Format: 'version <int>' line, then for each size a 'size <N>' line",
        "# followed by N rows of N whitespace-separated integers (row k = basis k).",
        "version 1",
    ]
    for n in (4, 8, 16, 32):
        lines.append(f"size {n}")
        for row in matrix(n):
            lines.append(" ".join(f"{v:4d}" for v in row))
    out.write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
