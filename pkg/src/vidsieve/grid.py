"""Spatio-temporal tiling of a video into documents, atoms and tree anchors.

A video of W x H pixels and F frames is cut along time into *documents* of
``frames_per_document`` frames each (trailing partial documents are dropped)
and each frame is cut into ``tile_size`` x ``tile_size`` *tiles*; the same
tile aggregated over one document is an *atom*. Atoms are grouped into
partially overlapping pyramidal trees of ``tree_depth`` levels, one tree per
anchor position.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class GridGeometry:
    """Tiling parameters plus the derived grid counts."""

    frame_width: int
    frame_height: int
    tile_size: int
    frames_per_document: int
    tree_depth: int
    atoms_per_row: int
    atoms_per_col: int

    @property
    def trees_per_document(self) -> int:
        k = self.tree_depth
        return (self.atoms_per_row - k + 1) * (self.atoms_per_col - k + 1)

    @property
    def nodes_per_tree(self) -> int:
        return nodes_per_tree(self.tree_depth)

    @property
    def anchor_cols(self) -> int:
        return self.atoms_per_row - self.tree_depth + 1

    @property
    def anchor_rows(self) -> int:
        return self.atoms_per_col - self.tree_depth + 1

    def document_of_frame(self, frame_index: int) -> int:
        return frame_index // self.frames_per_document

    def atom_of_pixel(self, x: float, y: float) -> tuple[int, int]:
        """Tile (u, v) containing pixel (x, y); clamped to the grid."""
        u = min(max(int(x) // self.tile_size, 0), self.atoms_per_row - 1)
        v = min(max(int(y) // self.tile_size, 0), self.atoms_per_col - 1)
        return u, v


@dataclass(frozen=True)
class AtomCoord:
    """Position of one atom: tile column u, tile row v, document index t."""

    u: int
    v: int
    t: int

    def __post_init__(self):
        if self.u < 0 or self.v < 0 or self.t < 0:
            raise ValueError(f"atom coordinate out of range: {self}")


def nodes_per_tree(depth: int) -> int:
    """Node count of a depth-k tree: sum of l*l for levels l = 1..k."""
    return sum(l * l for l in range(1, depth + 1))


def plan_grid(
    frame_width: int,
    frame_height: int,
    tile_size: int,
    frames_per_document: int,
    tree_depth: int,
) -> GridGeometry:
    """Compute the tiling for a video.

    Trailing partial tiles (frame_width mod tile_size, frame_height mod
    tile_size) are dropped so that every atom covers the same pixel area.
    Raises ValueError when no full tree fits the frame.
    """
    if min(frame_width, frame_height, tile_size, frames_per_document, tree_depth) < 1:
        raise ValueError("all grid parameters must be >= 1")
    if frame_width < tree_depth * tile_size or frame_height < tree_depth * tile_size:
        raise ValueError(
            f"frame {frame_width}x{frame_height} too small for a "
            f"depth-{tree_depth} tree of {tile_size}px tiles"
        )
    return GridGeometry(
        frame_width=frame_width,
        frame_height=frame_height,
        tile_size=tile_size,
        frames_per_document=frames_per_document,
        tree_depth=tree_depth,
        atoms_per_row=frame_width // tile_size,
        atoms_per_col=frame_height // tile_size,
    )
