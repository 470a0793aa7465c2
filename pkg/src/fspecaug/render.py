"""Inspection output for windows: 8-bit PGM images and CSV dumps.

Images put time on the horizontal axis and frequency on the vertical one,
lowest filterbank channel at the bottom.
"""

from __future__ import annotations

import csv
from typing import TextIO

import numpy as np


def to_gray(values: np.ndarray) -> np.ndarray:
    """Min-max scale a tau x D window to uint8 pixels, shape (D, tau). Constant input maps to 0."""
    v = np.asarray(values, dtype=np.float64)
    lo, hi = v.min(), v.max()
    if hi > lo:
        scaled = np.rint((v - lo) / (hi - lo) * 255.0)
    else:
        scaled = np.zeros_like(v)
    return scaled.astype(np.uint8).T[::-1]


def pgm_bytes(values: np.ndarray) -> bytes:
    """Binary P5 PGM, maxval 255."""
    pixels = np.ascontiguousarray(to_gray(values))
    height, width = pixels.shape
    return f"P5\n{width} {height}\n255\n".encode("ascii") + pixels.tobytes()


def read_pgm(data: bytes) -> np.ndarray:
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while data[pos:pos + 1].isspace():
            pos += 1
        start = pos
        while not data[pos:pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    magic, width, height, maxval = tokens[0], int(tokens[1]), int(tokens[2]), int(tokens[3])
    if magic != b"P5" or maxval != 255:
        raise ValueError("only binary 8-bit PGM (P5, maxval 255) is supported")
    pixels = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos + 1)
    return pixels.reshape(height, width)


def write_csv(values: np.ndarray, sink: TextIO) -> None:
    """One line per frame, D comma-separated values (9 significant digits)."""
    writer = csv.writer(sink, lineterminator="\n")
    for row in np.asarray(values):
        writer.writerow(f"{x:.9g}" for x in row)


def read_csv(source: TextIO) -> np.ndarray:
    return np.array([[float(x) for x in row] for row in csv.reader(source) if row], dtype=np.float32)
