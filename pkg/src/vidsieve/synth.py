"""Deterministic synthetic surveillance corpora with known ground truth.

The fixed-camera corpus plants scripted route events (an object crossing the
frame west to east through three zones in order) among clutter that shares
individual ingredients with the routes but never the whole ordered pattern:
movers in other directions, partial crossings, zone visits in scrambled
order and static pop-ups. The aerial corpus plants small low-contrast movers
plus large flicker regions that only the size filter can reject.

Everything derives from one seed; regenerating a corpus is byte-identical.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .frames import SvfrWriter


@dataclass(frozen=True)
class PlantedEvent:
    kind: str
    start_frame: int
    end_frame: int  # inclusive
    row: int  # vertical center of the object path
    is_route: bool

    def overlaps_documents(self, frames_per_document: int) -> tuple[int, int]:
        return (self.start_frame // frames_per_document,
                self.end_frame // frames_per_document)


@dataclass
class SyntheticCorpus:
    path: Path
    width: int
    height: int
    frame_count: int
    seed: int
    events: list[PlantedEvent] = field(default_factory=list)
    extras: dict = field(default_factory=dict)

    @property
    def routes(self) -> list[PlantedEvent]:
        return [e for e in self.events if e.is_route]

    @property
    def clutter(self) -> list[PlantedEvent]:
        return [e for e in self.events if not e.is_route]


class _Mover:
    """A textured square following a scripted trajectory.

    The texture is blocky (4 px cells): optical flow needs gradients whose
    support exceeds the per-frame displacement, and pixel noise would alias.
    """

    def __init__(self, rng, side, color, start_frame, positions, block=4):
        self.side = side
        self.start_frame = start_frame
        self.positions = positions  # list of (x, y) float centers
        cells = (side + block - 1) // block
        blocks = rng.integers(-40, 41, size=(cells, cells, 1))
        texture = np.repeat(np.repeat(blocks, block, axis=0), block, axis=1)
        texture = texture[:side, :side]
        patch = np.clip(np.asarray(color, dtype=np.int64)[None, None, :] + texture, 0, 255)
        self.patch = patch.astype(np.uint8)

    @property
    def end_frame(self) -> int:
        return self.start_frame + len(self.positions) - 1

    def render(self, canvas: np.ndarray, frame: int) -> None:
        i = frame - self.start_frame
        if not (0 <= i < len(self.positions)):
            return
        x, y = self.positions[i]
        h, w = canvas.shape[:2]
        half = self.side // 2
        x0, y0 = int(round(x)) - half, int(round(y)) - half
        sx0, sy0 = max(0, -x0), max(0, -y0)
        dx0, dy0 = max(0, x0), max(0, y0)
        dx1, dy1 = min(w, x0 + self.side), min(h, y0 + self.side)
        if dx1 <= dx0 or dy1 <= dy0:
            return
        canvas[dy0:dy1, dx0:dx1] = self.patch[
            sy0:sy0 + (dy1 - dy0), sx0:sx0 + (dx1 - dx0)
        ]


def _line(x0, y0, x1, y1, n):
    xs = np.linspace(x0, x1, n)
    ys = np.linspace(y0, y1, n)
    return list(zip(xs, ys))


DEFAULT_CLUTTER_MIX = {
    "west": 9, "vertical": 6, "partial_east": 8, "scrambled_east": 3, "popup": 4,
}


def scaled_clutter_mix(n_routes: int) -> dict[str, int]:
    """Clutter counts proportional to the route count (3:1 as in the
    default 10-route corpus), keeping at least one of each kind."""
    scale = n_routes / 10.0
    return {k: max(1, round(v * scale)) for k, v in DEFAULT_CLUTTER_MIX.items()}


def build_cctv_corpus(
    path: str | Path,
    width: int = 256,
    height: int = 256,
    frame_count: int = 2000,
    seed: int = 99,
    n_routes: int = 10,
    clutter_mix: dict[str, int] | None = None,
    speed: float = 3.0,
) -> SyntheticCorpus:
    """Fixed-camera corpus: ``n_routes`` full west-to-east crossings in the
    middle band plus clutter in two side lanes. Raises if the script does
    not fit the frame budget."""
    rng = np.random.default_rng(seed)
    clutter_mix = clutter_mix or dict(DEFAULT_CLUTTER_MIX)
    side = 20
    third = width // 3
    route_rows = (height // 2 - 28, height // 2 + 28)
    lane_rows = {0: (40, 78), 1: (height - 80, height - 42)}

    def color():
        base = rng.choice([(200, 60, 60), (60, 70, 200), (220, 200, 70), (40, 170, 80)])
        return tuple(int(c) for c in base)

    movers: list[_Mover] = []
    events: list[PlantedEvent] = []

    specs = [("route", None)] * n_routes + [
        (kind, None) for kind, count in clutter_mix.items() for _ in range(count)
    ]
    rng.shuffle(specs)

    lane_free = [12, 12]
    for kind, _ in specs:
        if kind == "route":
            start = max(lane_free) + 4
            row = int(rng.integers(*route_rows))
            n = int(round((width + 2 * side) / speed))
            positions = _line(-side, row, width + side, row, n)
            m = _Mover(rng, side, color(), start, positions)
            movers.append(m)
            events.append(PlantedEvent("route", start, m.end_frame, row, True))
            lane_free = [m.end_frame + 4, m.end_frame + 4]
            continue

        lane = 0 if lane_free[0] <= lane_free[1] else 1
        start = lane_free[lane] + 4
        row = int(rng.integers(*lane_rows[lane]))
        if kind == "west":
            n = int(round((2 * third + side) / 4.0))
            positions = _line(width - third // 2, row, width - third // 2 - 2 * third, row, n)
        elif kind == "vertical":
            x = int(rng.integers(side, width - side))
            n = int(round((height / 2) / 4.0))
            direction = 1 if lane == 0 else -1
            positions = _line(x, row, x, row + direction * height / 2, n)
        elif kind == "partial_east":
            zone = int(rng.integers(0, 3))
            x0 = zone * third - side
            n = int(round((third + 2 * side) / speed))
            positions = _line(x0, row, x0 + third + 2 * side, row, n)
        elif kind == "scrambled_east":
            # zones visited right, middle, left: every pairwise order is
            # inverted, so no two components can align in query order
            positions = []
            for zone in (2, 1, 0):
                n = int(round(third / speed))
                positions.extend(_line(zone * third + 2, row, (zone + 1) * third - 2, row, n))
        elif kind == "popup":
            x = int(rng.integers(side, width - side))
            positions = [(x, row)] * 35
        else:
            raise ValueError(f"unknown clutter kind {kind!r}")
        m = _Mover(rng, side, color(), start, positions)
        movers.append(m)
        events.append(PlantedEvent(kind, start, m.end_frame, row, False))
        lane_free[lane] = m.end_frame + 4

    last = max(e.end_frame for e in events)
    if last >= frame_count - 4:
        raise ValueError(
            f"scripted events need {last + 4} frames, corpus only has {frame_count}"
        )

    background = np.clip(
        110 + rng.integers(-6, 7, size=(height, width, 1)), 0, 255
    ).astype(np.uint8)
    background = np.repeat(background, 3, axis=2)

    path = Path(path)
    with SvfrWriter(path, width, height) as writer:
        for frame in range(frame_count):
            canvas = background.copy()
            for m in movers:
                m.render(canvas, frame)
            writer.append(canvas)

    return SyntheticCorpus(
        path=path, width=width, height=height, frame_count=frame_count,
        seed=seed, events=sorted(events, key=lambda e: e.start_frame),
    )


def build_airborne_corpus(
    path: str | Path,
    width: int = 256,
    height: int = 256,
    frame_count: int = 600,
    seed: int = 77,
    noise_patches: int = 6,
    speed: float = 3.0,
) -> SyntheticCorpus:
    """Aerial corpus: five small movers over a textured ground plus large
    flicker regions and single-pixel speckle noise.

    Mover 1 crosses the whole width (the true route). Movers 2 and 3 are a
    relay: each covers half of the same route later, back to back, so only
    the same-track bonus separates the true route from the handoff. Movers 4
    and 5 go diagonally and vertically.
    """
    rng = np.random.default_rng(seed)
    side = 8
    row = height // 2
    gray = 120

    def mover(start, positions):
        # per-pixel texture: frame differencing must always see interior
        # change, or the leading/trailing strips split into two bodies
        return _Mover(rng, side, (gray + 46,) * 3, start, positions, block=1)

    n_full = int(round((width + 2 * side) / speed))
    m1 = mover(40, _line(-side, row, width + side, row, n_full))
    half = width // 2
    n_half = int(round((half + side) / speed))
    relay_row = row  # same path, later, split between two track ids
    m2 = mover(300, _line(-side, relay_row, half, relay_row, n_half))
    # the second half starts a few frames later and a jump ahead, so the
    # tracker cannot stitch the two movers into one track
    m3 = mover(m2.end_frame + 4,
               _line(half + 15, relay_row, width + side, relay_row, n_half))
    m4 = mover(120, _line(width - 30, 30, 30, height - 40, int(round(width / speed))))
    m5 = mover(460, _line(width // 4, 20, width // 4, height - 20, int(round(height / 2.0))))
    movers = [m1, m2, m3, m4, m5]
    events = [
        PlantedEvent("route", m1.start_frame, m1.end_frame, row, True),
        PlantedEvent("relay_first_half", m2.start_frame, m2.end_frame, relay_row, False),
        PlantedEvent("relay_second_half", m3.start_frame, m3.end_frame, relay_row, False),
        PlantedEvent("diagonal", m4.start_frame, m4.end_frame, height // 2, False),
        PlantedEvent("vertical", m5.start_frame, m5.end_frame, height // 2, False),
    ]

    background = np.clip(
        gray + rng.integers(-8, 9, size=(height, width, 1)), 0, 255
    ).astype(np.uint8)
    background = np.repeat(background, 3, axis=2)

    patches = []
    while len(patches) < noise_patches:
        ph, pw = int(rng.integers(14, 22)), int(rng.integers(16, 24))
        y = int(rng.integers(0, height - ph))
        x = int(rng.integers(0, width - pw))
        # keep flicker clear of the mover band: a mover grazing a flicker
        # region merges with it in the difference image and the size filter
        # would (correctly) reject the merged body
        if abs(y + ph / 2 - row) < 30:
            continue
        patches.append((y, x, ph, pw))

    path = Path(path)
    with SvfrWriter(path, width, height) as writer:
        for frame in range(frame_count):
            canvas = background.copy()
            if frame % 2 == 1:  # large flicker regions, far above the size cap
                for y, x, ph, pw in patches:
                    canvas[y:y + ph, x:x + pw] = np.clip(
                        canvas[y:y + ph, x:x + pw].astype(np.int64) + 35, 0, 255
                    ).astype(np.uint8)
            speckles = rng.integers(0, (height, width), size=(15, 2))
            for sy, sx in speckles:  # single-pixel flicker; opening removes it
                canvas[sy, sx] = 255
            for m in movers:
                m.render(canvas, frame)
            writer.append(canvas)

    return SyntheticCorpus(
        path=path, width=width, height=height, frame_count=frame_count,
        seed=seed, events=events,
        extras={
            "noise_patches": patches,  # (y, x, h, w) rects that flicker
            "route_interval": (m1.start_frame, m1.end_frame),
            "relay_intervals": [
                (m2.start_frame, m2.end_frame), (m3.start_frame, m3.end_frame),
            ],
            "mover_speed": speed,
        },
    )
