"""Discrete fields with block-limited Fourier support and their wave packets.

A DiscreteField holds, per finest block, the lattice points assigned to that
block (its xi_1-slab intersected with the frame box) and complex coefficients
there.  Coarser components are sharp slab re-groupings of the same assignment,
so restriction is exactly mass-conserving and coarse/fine supports nest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield

import numpy as np

from .geometry import MomentPartition, dual_box
from .grid import Grid, curve_grid

PROFILES = ("random-phase", "focusing", "single-block", "sparse-packets")


def assign_supports(grid: Grid, partition: MomentPartition,
                    dilate: float = 1.0) -> dict:
    """Flat lattice indices per block: the block's xi_1-slab intersected with
    the (dilated) frame box.  Requires at least two lattice columns per slab.
    """
    n = partition.n
    if grid.dim != n:
        raise ValueError("grid dimension does not match partition")
    if partition.width < 2.0 * grid.h[0]:
        raise ValueError(
            f"grid too coarse: slab width {partition.width} < 2 lattice steps")
    mesh = grid.freq_mesh()
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    xi1 = pts[:, 0]
    out = {}
    for blk in partition.blocks:
        in_slab = (xi1 >= blk.t0) & (xi1 < blk.t0 + blk.width)
        if not in_slab.any():
            out[blk.index] = np.empty(0, dtype=np.int64)
            continue
        cand = np.nonzero(in_slab)[0]
        lam = np.linalg.solve(blk.frame, (pts[cand] - blk.anchor).T).T
        ok = np.ones(len(cand), dtype=bool)
        for i in range(1, n):
            ok &= np.abs(lam[:, i]) <= dilate * blk.half_widths[i] * (1 + 1e-9)
        out[blk.index] = cand[ok].astype(np.int64)
    return out


@dataclass
class DiscreteField:
    """Grid-sampled field with coefficients split over a block partition."""

    grid: Grid
    partition: MomentPartition
    supports: dict
    coeffs: dict
    _spatial: np.ndarray = dfield(default=None, repr=False, compare=False)

    @property
    def n(self) -> int:
        return self.partition.n

    @property
    def block_ids(self):
        return sorted(l for l in self.coeffs if len(self.supports[l]))

    def coefficient_array(self, ids=None) -> np.ndarray:
        full = np.zeros(self.grid.sides, dtype=complex)
        flat = full.ravel()
        for l in (self.block_ids if ids is None else ids):
            flat[self.supports[l]] += self.coeffs[l]
        return full

    def spatial(self, oversample: int = 1) -> np.ndarray:
        if oversample == 1:
            if self._spatial is None:
                self._spatial = self.grid.to_spatial(self.coefficient_array())
            return self._spatial
        return self.grid.to_spatial(self.coefficient_array(), oversample)

    def component(self, l, oversample: int = 1) -> np.ndarray:
        return self.group_component([l], oversample)

    def group_component(self, ids, oversample: int = 1) -> np.ndarray:
        return self.grid.to_spatial(self.coefficient_array(ids), oversample)

    def l2sq(self) -> float:
        """Exact squared L2 norm over one period (discrete Plancherel)."""
        total = sum(float(np.sum(np.abs(c) ** 2)) for c in self.coeffs.values())
        return total * self.grid.volume

    def coarse_groups(self, width: float) -> dict:
        """Map coarse slab index -> fine block ids (width must be a multiple)."""
        ratio = width / self.partition.width
        if abs(ratio - round(ratio)) > 1e-9 or ratio < 1:
            raise ValueError("coarse width must be an integer multiple")
        ratio = int(round(ratio))
        groups = {}
        for l in self.block_ids:
            groups.setdefault(l // ratio, []).append(l)
        return groups

    def restrict(self, ids) -> "DiscreteField":
        ids = set(ids)
        sup = {l: v for l, v in self.supports.items() if l in ids}
        cf = {l: self.coeffs[l].copy() for l in self.coeffs if l in ids}
        return DiscreteField(self.grid, self.partition, sup, cf)

    def scaled(self, factor: complex) -> "DiscreteField":
        cf = {l: factor * c for l, c in self.coeffs.items()}
        return DiscreteField(self.grid, self.partition, self.supports, cf)


def synthesize(partition: MomentPartition, profile: str, seed: int = 0,
               grid: Grid = None, sides=None, packets_per_block: int = 3,
               normalize: bool = None, block_id: int = None,
               dilate: float = 1.0) -> DiscreteField:
    """Deterministic test-field generator.

    Profiles: random-phase (unit-modulus coefficients, uniform phases),
    focusing (all coefficients one, constructive at the origin), single-block,
    sparse-packets (a few position-modulated packets per block).  The
    `normalize` toggle rescales each component to unit sup norm; it defaults
    to on for sparse-packets only.
    """
    if profile not in PROFILES:
        raise ValueError(f"unknown profile {profile!r}")
    n = partition.n
    if grid is None:
        from .grid import default_sides
        grid = curve_grid(n, sides if sides is not None else default_sides(n))
    supports = assign_supports(grid, partition, dilate=dilate)
    if normalize is None:
        normalize = profile == "sparse-packets"

    coeffs = {}
    for blk in partition.blocks:
        idx = supports[blk.index]
        if len(idx) == 0:
            continue
        rng = np.random.default_rng([seed, blk.index])
        if profile == "random-phase":
            c = np.exp(2j * np.pi * rng.uniform(size=len(idx)))
        elif profile == "focusing":
            c = np.ones(len(idx), dtype=complex)
        elif profile == "single-block":
            target = len(partition) // 2 if block_id is None else block_id
            if blk.index != target:
                continue
            c = np.ones(len(idx), dtype=complex)
        else:   # sparse-packets
            xi = grid.lattice_points(idx)
            c = np.zeros(len(idx), dtype=complex)
            centers = _packet_centers(grid, rng, packets_per_block)
            for x0 in centers:
                c += np.exp(2j * np.pi * (xi @ x0 + rng.uniform()))
        coeffs[blk.index] = c

    f = DiscreteField(grid, partition, supports, coeffs)
    if normalize:
        for l in f.block_ids:
            peak = np.abs(f.component(l)).max()
            if peak > 0:
                f.coeffs[l] = f.coeffs[l] / peak
        f._spatial = None
    return f


def _packet_centers(grid, rng, count):
    out = []
    for _ in range(count):
        x = [rng.integers(0, s) / (s * h) for s, h in zip(grid.sides, grid.h)]
        out.append(np.array(x))
    return out


# ---------------------------------------------------------------------------
# tile windows (partition of unity adapted to a block's dual box)

class TileWindow1D:
    """Separable 1-d profile for wave-packet windows: the smoothed unit-cell
    indicator (|phi_check|^2 convolved with the unit interval, normalized so
    integer translates sum to one)."""

    _instance = None
    REACH = 6           # tiles beyond this offset contribute < 1e-9

    def __init__(self):
        from .weights import _radial_ft, mollifier
        u = np.linspace(0.0, 40.0, 16000)
        phic = _radial_ft(lambda s: mollifier(s, 0.25), 0.25, u, 1,
                          quad_points=2000)
        p1 = phic ** 2
        total = 2.0 * np.trapezoid(p1, u)
        # cumulative integral of p1 over (-inf, t]
        cum = np.concatenate([[0.0], np.cumsum((p1[1:] + p1[:-1]) / 2.0
                                               * np.diff(u))])
        self._u = u
        self._cum = cum
        self._half = cum[-1]
        self._total = total

    @classmethod
    def get(cls) -> "TileWindow1D":
        if cls._instance is None:
            cls._instance = cls()
        return cls._instance

    def _cdf(self, t):
        # integral of p1 over (-inf, t], using symmetry
        t = np.asarray(t, dtype=float)
        mag = np.interp(np.abs(t), self._u, self._cum)
        return np.where(t >= 0, self._half + mag, self._half - mag)

    def eval(self, u) -> np.ndarray:
        """Window value at offset u from the tile center (integral of the
        profile over the unit cell), normalized to a partition of unity."""
        u = np.asarray(u, dtype=float)
        return (self._cdf(u + 0.5) - self._cdf(u - 0.5)) / self._total

    def decay_envelope(self, k: int) -> float:
        """Upper bound for the window at tile-offset k (|u - k| <= 1/2)."""
        lo = max(abs(k) - 0.5, 0.0)
        return float(self.eval(lo))


def tile_coordinates(grid: Grid, block) -> np.ndarray:
    """Dual-box coordinates u(x) of every grid point, shape (*sides, n)."""
    d = dual_box(block)
    mesh = grid.spatial_mesh(centered=True)
    x = np.stack(mesh, axis=-1)
    u = (x @ d.axes.T) / (2.0 * d.half_lengths)
    return u


@dataclass
class WavePacket:
    block_id: int
    tile: tuple
    amplitude: float
    samples: np.ndarray = None


class TileSet:
    """Tiling of the grid by translates of a block's dual box, with a window
    partition of unity (normalized to sum exactly to one on the grid).

    The tile lattice is the full product range covering every grid point's
    nearest tile plus a margin; with a product range the normalizing total
    factorizes per axis, so construction is linear in (tiles per axis) x
    (grid size).  Windows are generated on demand.
    """

    _cache: dict = {}

    def __init__(self, grid: Grid, block, margin: int = 2):
        self.grid = grid
        self.block = block
        self.u = tile_coordinates(grid, block)
        self.nearest = np.rint(self.u).astype(np.int64)
        self._w1 = TileWindow1D.get()
        n = block.n
        flat = self.nearest.reshape(-1, n)
        self.lo = flat.min(axis=0) - margin
        self.hi = flat.max(axis=0) + margin
        self.dims = tuple(self.hi - self.lo + 1)
        # factorized partition-of-unity total over the product tile range
        self._axis_sums = []
        for i in range(n):
            s = np.zeros(grid.sides)
            for m in range(self.lo[i], self.hi[i] + 1):
                s += self._w1.eval(self.u[..., i] - m)
            self._axis_sums.append(s)
        total = self._axis_sums[0].copy()
        for i in range(1, n):
            total = total * self._axis_sums[i]
        self._total = total

    @classmethod
    def get(cls, grid: Grid, block, margin: int = 2) -> "TileSet":
        key = (grid.sides, grid.h, grid.lo, block.n, block.width,
               block.index, margin)
        if key not in cls._cache:
            cls._cache[key] = cls(grid, block, margin)
        return cls._cache[key]

    @property
    def ntiles(self) -> int:
        return int(np.prod(self.dims))

    @property
    def tiles(self):
        return [tuple(np.asarray(t) + self.lo) for t in np.ndindex(*self.dims)]

    def owned_tiles(self):
        """Tiles owning at least one grid point (nearest-tile map)."""
        flat = self.nearest.reshape(-1, self.block.n)
        return sorted(set(map(tuple, flat)))

    def _raw_window(self, tile) -> np.ndarray:
        w = self._w1.eval(self.u[..., 0] - tile[0])
        for i in range(1, self.block.n):
            w = w * self._w1.eval(self.u[..., i] - tile[i])
        return w

    def window(self, tile) -> np.ndarray:
        return self._raw_window(tuple(tile)) / self._total

    def window_sum(self, tiles) -> np.ndarray:
        """Sum of normalized windows over a subset of tiles."""
        acc = np.zeros(self.grid.sides)
        for t in tiles:
            acc += self._raw_window(tuple(t))
        return acc / self._total

    def sqrt_window_sup(self) -> float:
        """sup_x of sum_T psi_T(x)^(1/2) (factorizes over axes)."""
        acc = None
        for i in range(self.block.n):
            s = np.zeros(self.grid.sides)
            for m in range(self.lo[i], self.hi[i] + 1):
                s += np.sqrt(self._w1.eval(self.u[..., i] - m))
            acc = s if acc is None else acc * s
        return float((acc / np.sqrt(self._total)).max())

    def tile_position(self, tile) -> int:
        return int(np.ravel_multi_index(np.asarray(tile) - self.lo, self.dims))

    def position_tile(self, pos: int):
        return tuple(np.array(np.unravel_index(pos, self.dims)) + self.lo)

    def tile_index_map(self) -> np.ndarray:
        """Tile id (position in the product range) of the nearest tile."""
        offs = (self.nearest.reshape(-1, self.block.n) - self.lo).T
        return np.ravel_multi_index(offs, self.dims).reshape(self.grid.sides)


def wave_packet_decompose(field: DiscreteField, block_id: int,
                          keep_samples: bool = False, margin: int = 2,
                          tile_cap: int = 4096):
    """Split one component into windowed packets; reconstruction is exact by
    the normalized partition of unity (the packet list covers the full
    product tile range when it is small enough)."""
    blk = field.partition.blocks[block_id]
    ts = TileSet.get(field.grid, blk, margin=margin)
    if ts.ntiles > tile_cap:
        raise ValueError(f"{ts.ntiles} tiles exceed cap {tile_cap}; "
                         "decompose finer blocks or raise tile_cap")
    comp = field.component(block_id)
    out = []
    for t in ts.tiles:
        piece = ts.window(t) * comp
        amp = float(np.abs(piece).max())
        out.append(WavePacket(block_id, t, amp,
                              piece if keep_samples else None))
    return ts, out


def locally_constant_check(field: DiscreteField, block_id: int,
                           kappa: float = None) -> float:
    """Max over tiles T and x in T of ||f||_Linf(T)^2 / (|f|^2 * omega)(x)."""
    from .grid import weight_multiplier
    from .weights import omega_block
    blk = field.partition.blocks[block_id]
    comp = field.component(block_id)
    if np.abs(comp).max() == 0:
        return 0.0
    ts = TileSet.get(field.grid, blk)
    spec = omega_block(blk, kappa)
    mult = weight_multiplier(field.grid, spec)
    conv = np.real(field.grid.convolve(np.abs(comp) ** 2, mult))
    idx = ts.tile_index_map().ravel()
    mags = np.abs(comp).ravel()
    ntiles = int(idx.max()) + 1
    sup = np.zeros(ntiles)
    np.maximum.at(sup, idx, mags)
    floor = 1e-12 * conv.max()
    ratio = sup[idx] ** 2 / np.maximum(conv.ravel(), floor)
    return float(ratio.max())
