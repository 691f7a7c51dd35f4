"""Frame sources: numbered PPM/PGM directories and the packed container.

The packed container ("SVFR") is a 16-byte header, magic then u32 width,
height and frame count (little-endian), followed by raw row-major RGB
frames, 8 bits per channel. It supports both streaming reads and random
access, which the HTTP service uses to hand single frames to the UI.
"""

from __future__ import annotations

import re
import struct
from pathlib import Path
from typing import Iterator

import numpy as np

SVFR_MAGIC = b"SVFR"
SVFR_HEADER = struct.Struct("<4sIII")


class FrameFormatError(Exception):
    pass


def _read_pnm(path: Path) -> np.ndarray:
    """Binary PPM (P6) or PGM (P5); grayscale is replicated to RGB."""
    data = path.read_bytes()
    if data[:2] not in (b"P5", b"P6"):
        raise FrameFormatError(f"{path}: only binary P5/P6 files are supported")
    tokens = []
    pos = 2
    while len(tokens) < 3:
        match = re.match(rb"(?:\s+|#[^\n]*\n)*(\d+)", data[pos:])
        if not match:
            raise FrameFormatError(f"{path}: malformed header")
        tokens.append(int(match.group(1)))
        pos += match.end()
    width, height, maxval = tokens
    if maxval != 255:
        raise FrameFormatError(f"{path}: only 8-bit files are supported")
    pos += 1  # single whitespace after maxval
    channels = 3 if data[:2] == b"P6" else 1
    expected = width * height * channels
    raw = np.frombuffer(data, dtype=np.uint8, count=expected, offset=pos)
    if raw.size != expected:
        raise FrameFormatError(f"{path}: truncated pixel data")
    if channels == 1:
        return np.repeat(raw.reshape(height, width, 1), 3, axis=2)
    return raw.reshape(height, width, 3).copy()


def write_ppm(path: Path, frame: np.ndarray) -> None:
    frame = np.ascontiguousarray(frame, dtype=np.uint8)
    h, w = frame.shape[:2]
    with open(path, "wb") as fh:
        fh.write(b"P6\n%d %d\n255\n" % (w, h))
        fh.write(frame.tobytes())


class FrameSource:
    """Iterable, random-access sequence of RGB uint8 frames."""

    width: int
    height: int

    def __len__(self) -> int:
        raise NotImplementedError

    def get(self, index: int) -> np.ndarray:
        raise NotImplementedError

    def __iter__(self) -> Iterator[np.ndarray]:
        for i in range(len(self)):
            yield self.get(i)


class DirectorySource(FrameSource):
    """Numbered .ppm/.pgm files, ordered by the number in the file name."""

    def __init__(self, directory: Path):
        directory = Path(directory)
        entries = []
        for path in directory.iterdir():
            if path.suffix.lower() not in (".ppm", ".pgm"):
                continue
            digits = re.findall(r"\d+", path.stem)
            if not digits:
                raise FrameFormatError(f"{path.name}: frame files must be numbered")
            entries.append((int(digits[-1]), path))
        if not entries:
            raise FrameFormatError(f"{directory}: no .ppm/.pgm frames found")
        entries.sort()
        self._paths = [p for _, p in entries]
        first = _read_pnm(self._paths[0])
        self.height, self.width = first.shape[:2]
        self._first = first

    def __len__(self) -> int:
        return len(self._paths)

    def get(self, index: int) -> np.ndarray:
        frame = self._first if index == 0 else _read_pnm(self._paths[index])
        if frame.shape[:2] != (self.height, self.width):
            raise FrameFormatError(
                f"{self._paths[index].name}: frame size changed mid-sequence"
            )
        return frame


class PackedSource(FrameSource):
    """The SVFR container; frames are read on demand by offset."""

    def __init__(self, path: Path):
        self._path = Path(path)
        with open(self._path, "rb") as fh:
            header = fh.read(SVFR_HEADER.size)
        if len(header) < SVFR_HEADER.size:
            raise FrameFormatError(f"{path}: truncated header")
        magic, width, height, count = SVFR_HEADER.unpack(header)
        if magic != SVFR_MAGIC:
            raise FrameFormatError(f"{path}: not a packed frame container")
        self.width = width
        self.height = height
        self._count = count
        self._frame_bytes = width * height * 3
        expected = SVFR_HEADER.size + self._frame_bytes * count
        actual = self._path.stat().st_size
        if actual < expected:
            raise FrameFormatError(
                f"{path}: container holds {actual} bytes, header promises {expected}"
            )

    def __len__(self) -> int:
        return self._count

    def get(self, index: int) -> np.ndarray:
        if not (0 <= index < self._count):
            raise IndexError(f"frame {index} out of range 0..{self._count - 1}")
        with open(self._path, "rb") as fh:
            fh.seek(SVFR_HEADER.size + index * self._frame_bytes)
            raw = fh.read(self._frame_bytes)
        return np.frombuffer(raw, dtype=np.uint8).reshape(self.height, self.width, 3).copy()

    def __iter__(self) -> Iterator[np.ndarray]:
        with open(self._path, "rb") as fh:
            fh.seek(SVFR_HEADER.size)
            for _ in range(self._count):
                raw = fh.read(self._frame_bytes)
                yield np.frombuffer(raw, dtype=np.uint8).reshape(
                    self.height, self.width, 3
                ).copy()


class SvfrWriter:
    """Streaming writer; the frame count is patched into the header on close."""

    def __init__(self, path: Path, width: int, height: int):
        self._path = Path(path)
        self._fh = open(self._path, "wb")
        self._fh.write(SVFR_HEADER.pack(SVFR_MAGIC, width, height, 0))
        self.width = width
        self.height = height
        self._count = 0

    def append(self, frame: np.ndarray) -> None:
        frame = np.ascontiguousarray(frame, dtype=np.uint8)
        if frame.shape != (self.height, self.width, 3):
            raise ValueError(
                f"frame shape {frame.shape}, expected {(self.height, self.width, 3)}"
            )
        self._fh.write(frame.tobytes())
        self._count += 1

    def close(self) -> None:
        self._fh.seek(0)
        self._fh.write(SVFR_HEADER.pack(SVFR_MAGIC, self.width, self.height, self._count))
        self._fh.close()

    def __enter__(self) -> "SvfrWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def write_svfr(path: Path, frames, width: int, height: int) -> int:
    with SvfrWriter(path, width, height) as writer:
        for frame in frames:
            writer.append(frame)
        return writer._count


def open_frame_source(path: str | Path) -> FrameSource:
    path = Path(path)
    if path.is_dir():
        return DirectorySource(path)
    if not path.exists():
        raise FrameFormatError(f"{path}: no such frame source")
    return PackedSource(path)
