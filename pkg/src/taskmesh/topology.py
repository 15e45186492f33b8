"""Block decomposition of n-dimensional structured grids.

A global cell grid is split into per-rank partitions ("colors") along a
Cartesian color grid.  Each color owns a contiguous block of cells and keeps a
halo of ghost cells per face that mirrors the neighboring color's owned cells
(or, on non-periodic domain edges, a physical-boundary layer filled by the
application).  An :class:`ExchangePlan` lists every face transfer needed to
refresh all ghost layers.

Corner/edge ghosts across diagonal neighbors are intentionally not exchanged;
the bundled stencils (5-point Laplacian, dimension-split WENO) read face
halos only.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

LOW = 0
HIGH = 1


@dataclass(frozen=True)
class Interval:
    """Half-open global index interval [lo, hi)."""

    lo: int
    hi: int

    @property
    def size(self) -> int:
        return self.hi - self.lo

    def shift(self, offset: int) -> "Interval":
        return Interval(self.lo + offset, self.hi + offset)

    def __contains__(self, index: int) -> bool:
        return self.lo <= index < self.hi


@dataclass(frozen=True)
class MeshTopology:
    """Structured grid of cells decomposed into a Cartesian grid of colors.

    Colors are linearized in row-major (C) order over ``color_grid``.  The
    halo must fit within the smallest neighbor block on every axis so that a
    face ghost layer always mirrors exactly one neighbor.
    """

    global_extents: tuple[int, ...]
    color_grid: tuple[int, ...]
    halo_depth: int = 1
    periodic: tuple[bool, ...] = ()

    def __post_init__(self):
        extents = tuple(int(n) for n in self.global_extents)
        colors = tuple(int(c) for c in self.color_grid)
        object.__setattr__(self, "global_extents", extents)
        object.__setattr__(self, "color_grid", colors)
        if not 1 <= len(extents) <= 3:
            raise ValueError(f"dimensionality must be 1-3, got {len(extents)}")
        if len(colors) != len(extents):
            raise ValueError(
                f"color_grid has {len(colors)} axes, extents have {len(extents)}"
            )
        if not self.periodic:
            object.__setattr__(self, "periodic", (False,) * len(extents))
        if len(self.periodic) != len(extents):
            raise ValueError("periodic flags must match dimensionality")
        for axis, (n, c) in enumerate(zip(extents, colors)):
            if n < 1:
                raise ValueError(f"axis {axis}: extent must be >= 1, got {n}")
            if c < 1:
                raise ValueError(f"axis {axis}: color count must be >= 1, got {c}")
            if c > n:
                raise ValueError(
                    f"axis {axis}: {c} colors cannot tile {n} cells"
                )
        if self.halo_depth < 1:
            raise ValueError(f"halo_depth must be >= 1, got {self.halo_depth}")
        for axis, (n, c) in enumerate(zip(extents, colors)):
            if self.halo_depth > n // c:
                raise ValueError(
                    f"axis {axis}: halo depth {self.halo_depth} exceeds the "
                    f"smallest block size {n // c}; refine the color grid"
                )

    @property
    def dims(self) -> int:
        return len(self.global_extents)

    @property
    def n_colors(self) -> int:
        total = 1
        for c in self.color_grid:
            total *= c
        return total

    def color_coords(self, color: int) -> tuple[int, ...]:
        if not 0 <= color < self.n_colors:
            raise ValueError(f"color {color} out of range [0, {self.n_colors})")
        coords = []
        for c in reversed(self.color_grid):
            coords.append(color % c)
            color //= c
        return tuple(reversed(coords))

    def color_id(self, coords: tuple[int, ...]) -> int:
        color = 0
        for c, n in zip(coords, self.color_grid):
            color = color * n + c
        return color

    def owned_interval(self, axis: int, block: int) -> Interval:
        """Owned cells of block ``block`` along ``axis``.

        Uneven splits give the leading ``extent mod colors`` blocks one extra
        cell each.
        """
        n = self.global_extents[axis]
        c = self.color_grid[axis]
        base, rem = divmod(n, c)
        lo = block * base + min(block, rem)
        size = base + (1 if block < rem else 0)
        return Interval(lo, lo + size)

    def owner_block(self, axis: int, index: int) -> int:
        """Block index owning global cell ``index`` along ``axis``."""
        n = self.global_extents[axis]
        if not 0 <= index < n:
            raise ValueError(f"axis {axis}: index {index} outside [0, {n})")
        base, rem = divmod(n, self.color_grid[axis])
        wide = rem * (base + 1)
        if index < wide:
            return index // (base + 1)
        return rem + (index - wide) // base

    def owner_of(self, cell: tuple[int, ...]) -> int:
        return self.color_id(
            tuple(self.owner_block(a, g) for a, g in enumerate(cell))
        )


@dataclass(frozen=True)
class GhostRange:
    """One face ghost layer and the neighbor cells it mirrors.

    ``raw`` is the layer in the receiver's unwrapped index frame (it may lie
    outside the global domain on periodic axes); ``owned`` is the same run of
    cells wrapped into the owner's frame.
    """

    axis: int
    side: int
    raw: Interval
    owned: Interval
    owner: int


@dataclass(frozen=True)
class LocalBlock:
    """Per-color view of the decomposition.

    ``owned`` tiles the global domain across colors.  ``ghost_ranges`` holds
    one :class:`GhostRange` per face adjacent to a neighbor; faces on
    non-periodic domain edges appear in ``boundary_ranges`` instead and are
    filled by application boundary conditions, never by exchange.
    """

    color: int
    owned: tuple[Interval, ...]
    ghost_ranges: tuple[GhostRange, ...]
    boundary_ranges: tuple[tuple[int, int, Interval], ...]  # (axis, side, raw)
    halo_depth: int

    @property
    def local_origin(self) -> tuple[int, ...]:
        return tuple(iv.lo - self.halo_depth for iv in self.owned)

    @property
    def local_shape(self) -> tuple[int, ...]:
        return tuple(iv.size + 2 * self.halo_depth for iv in self.owned)

    def owned_slices(self) -> tuple[slice, ...]:
        h = self.halo_depth
        return tuple(slice(h, h + iv.size) for iv in self.owned)

    def local_to_global(self, local: tuple[int, ...]) -> tuple[int, ...]:
        return tuple(l + o for l, o in zip(local, self.local_origin))

    def global_to_local(self, cell: tuple[int, ...]) -> tuple[int, ...]:
        local = tuple(g - o for g, o in zip(cell, self.local_origin))
        if any(l < 0 or l >= n for l, n in zip(local, self.local_shape)):
            raise ValueError(f"cell {cell} not in local frame of color {self.color}")
        return local


def decompose(
    global_extents,
    color_grid,
    halo_depth: int = 1,
    periodic=None,
) -> MeshTopology:
    """Split a global grid into a Cartesian grid of colors.

    Rejects empty extents or color counts; when an axis does not divide
    evenly, the leading blocks absorb the remainder.
    """
    extents = tuple(global_extents)
    colors = tuple(color_grid)
    if periodic is None:
        periodic = (False,) * len(extents)
    elif isinstance(periodic, bool):
        periodic = (periodic,) * len(extents)
    return MeshTopology(extents, colors, halo_depth, tuple(periodic))


@lru_cache(maxsize=None)
def local_block(topology: MeshTopology, color: int) -> LocalBlock:
    """Owned, ghost, and boundary ranges of one color."""
    if not 0 <= color < topology.n_colors:
        raise ValueError(
            f"color {color} out of range [0, {topology.n_colors})"
        )
    coords = topology.color_coords(color)
    owned = tuple(
        topology.owned_interval(a, b) for a, b in enumerate(coords)
    )
    h = topology.halo_depth
    ghosts = []
    boundaries = []
    for axis in range(topology.dims):
        n = topology.global_extents[axis]
        c = topology.color_grid[axis]
        iv = owned[axis]
        for side in (LOW, HIGH):
            raw = (
                Interval(iv.lo - h, iv.lo) if side == LOW else Interval(iv.hi, iv.hi + h)
            )
            inside = 0 <= raw.lo and raw.hi <= n
            if inside:
                neighbor = coords[axis] + (-1 if side == LOW else 1)
                wrapped = raw
            elif topology.periodic[axis]:
                neighbor = (coords[axis] + (-1 if side == LOW else 1)) % c
                wrapped = raw.shift(n if side == LOW else -n)
            else:
                boundaries.append((axis, side, raw))
                continue
            owner = topology.color_id(
                coords[:axis] + (neighbor,) + coords[axis + 1 :]
            )
            ghosts.append(GhostRange(axis, side, raw, wrapped, owner))
    return LocalBlock(color, owned, tuple(ghosts), tuple(boundaries), h)


@dataclass(frozen=True)
class Transfer:
    """One face transfer: sender-owned cells into a receiver ghost layer.

    ``interval`` is the transferred run along ``axis`` in the sender's frame;
    ``raw`` is the same run in the receiver's unwrapped frame.  On the other
    axes the transfer covers the receiver's owned range (faces only, no
    corners).
    """

    send_color: int
    recv_color: int
    axis: int
    side: int
    interval: Interval
    raw: Interval


@dataclass(frozen=True)
class ExchangePlan:
    transfers: tuple[Transfer, ...]

    def __len__(self) -> int:
        return len(self.transfers)

    def for_receiver(self, color: int) -> tuple[Transfer, ...]:
        return tuple(t for t in self.transfers if t.recv_color == color)


@lru_cache(maxsize=None)
def exchange_plan(topology: MeshTopology) -> ExchangePlan:
    """Complete, symmetric transfer list covering all ghost layers."""
    transfers = []
    for color in range(topology.n_colors):
        block = local_block(topology, color)
        for g in block.ghost_ranges:
            transfers.append(
                Transfer(g.owner, color, g.axis, g.side, g.owned, g.raw)
            )
    transfers.sort(key=lambda t: (t.recv_color, t.axis, t.side, t.raw.lo))
    return ExchangePlan(tuple(transfers))
