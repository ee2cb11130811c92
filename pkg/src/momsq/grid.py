"""Frequency-lattice / spatial-grid bookkeeping for discrete test functions.

A Grid fixes, per axis, a sample count N_i (power of two), a lattice spacing
h_i, and an offset lo_i (an exact lattice multiple), so frequencies are
xi = lo + k h for k = 0..N-1.  Spatial samples then live on one period of the
dual box, x_j = j / (N_i h_i), and all stored sample arrays are demodulated by
the carrier e^(2 pi i x.lo) (sums, moduli and ratios are unaffected since
every field on the grid shares the carrier).

Quadrature is the Riemann sum with cell volume prod_i 1/(N_i h_i); the
`oversample` knob zero-pads coefficients before inversion, which makes the
sum exact for integer powers of trigonometric polynomials up to that factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

DEFAULT_PAD = 0.75


@dataclass(frozen=True)
class Grid:
    sides: tuple
    lo: tuple
    h: tuple

    def __post_init__(self):
        for s in self.sides:
            if s & (s - 1):
                raise ValueError("grid sides must be powers of two")

    @property
    def dim(self) -> int:
        return len(self.sides)

    @property
    def dx(self) -> float:
        return float(np.prod([1.0 / (s * hh) for s, hh in zip(self.sides, self.h)]))

    @property
    def volume(self) -> float:
        """Volume of one spatial period (= prod 1/h_i)."""
        return float(np.prod([1.0 / hh for hh in self.h]))

    @property
    def npoints(self) -> int:
        return int(np.prod(self.sides))

    def freq_axis(self, i: int) -> np.ndarray:
        return self.lo[i] + np.arange(self.sides[i]) * self.h[i]

    def freq_mesh(self):
        axes = [self.freq_axis(i) for i in range(self.dim)]
        return np.meshgrid(*axes, indexing="ij")

    def lattice_points(self, flat_idx) -> np.ndarray:
        """Frequency-space points for flattened lattice indices, shape (P, dim)."""
        multi = np.unravel_index(np.asarray(flat_idx, dtype=np.int64), self.sides)
        cols = [self.lo[i] + multi[i] * self.h[i] for i in range(self.dim)]
        return np.stack(cols, axis=-1)

    def spatial_axis(self, i: int, centered: bool = True) -> np.ndarray:
        n = self.sides[i]
        step = 1.0 / (n * self.h[i])
        j = np.arange(n)
        if centered:
            j = (j + n // 2) % n - n // 2      # min-image convention
        return j * step

    def spatial_mesh(self, centered: bool = True):
        axes = [self.spatial_axis(i, centered) for i in range(self.dim)]
        return np.meshgrid(*axes, indexing="ij")

    def diff_freq_mesh(self):
        """Signed frequencies of grid-function DFTs (differences of lattice
        frequencies, fft ordering)."""
        axes = [np.fft.fftfreq(s) * s * hh for s, hh in zip(self.sides, self.h)]
        return np.meshgrid(*axes, indexing="ij")

    # -- transforms --------------------------------------------------------

    def to_spatial(self, coeffs: np.ndarray, oversample: int = 1) -> np.ndarray:
        """Demodulated samples of sum_k c_k e^(2 pi i x.(k h)); zero-padding
        by `oversample` refines the sample points."""
        if oversample == 1:
            return np.fft.ifftn(coeffs) * self.npoints
        shape = tuple(s * oversample for s in self.sides)
        padded = np.zeros(shape, dtype=complex)
        padded[tuple(slice(0, s) for s in self.sides)] = coeffs
        return np.fft.ifftn(padded) * int(np.prod(shape))

    def to_coeffs(self, samples: np.ndarray) -> np.ndarray:
        return np.fft.fftn(samples) / self.npoints

    def integrate(self, samples: np.ndarray, oversample: int = 1) -> float:
        return float(np.real(np.sum(samples))) * self.dx / oversample ** self.dim

    def convolve(self, values: np.ndarray, multiplier: np.ndarray) -> np.ndarray:
        """Circular convolution of a grid function with the kernel whose DFT
        values on the difference lattice are `multiplier` (fft ordering)."""
        return np.fft.ifftn(np.fft.fftn(values) * multiplier)


def curve_grid(n: int, sides, pad: float = DEFAULT_PAD) -> Grid:
    """Grid whose lattice covers [-pad, 1+pad]^n (the curve neighborhood plus
    slack so products of two lattice frequencies do not wrap ambiguously)."""
    if np.isscalar(sides):
        sides = (int(sides),) * n
    sides = tuple(int(s) for s in sides)
    span = 1.0 + 2.0 * pad
    h, lo = [], []
    for s in sides:
        hh = span / s
        k0 = round(pad / hh)
        h.append(hh)
        lo.append(-k0 * hh)
    return Grid(sides=sides, lo=tuple(lo), h=tuple(h))


def default_sides(n: int) -> tuple:
    return {1: (4096,), 2: (1024, 1024), 3: (128,) * 3, 4: (48,) * 4}[n]


def suggested_sides(n: int, R: float, points_per_cell: float = 4.0,
                    max_side: int = 4096, min_side: int = 32) -> tuple:
    """Anisotropic sample counts matched to the block scales: axis i of the
    finest blocks has extent ~ R^(-i/n), so it needs ~ R^(i/n) lattice steps
    across [0,1] (times the per-cell oversampling)."""
    span = 1.0 + 2.0 * DEFAULT_PAD
    out = []
    for i in range(1, n + 1):
        target = span * float(R) ** (i / n) * points_per_cell
        side = 2 ** int(np.clip(round(math.log2(target)),
                                math.log2(min_side), math.log2(max_side)))
        out.append(side)
    return tuple(out)


# -- smooth radial cutoffs --------------------------------------------------

def _smoothstep(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.maximum(t, 1e-300)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.maximum(1.0 - t, 1e-300)), 0.0)
    return a / (a + b)


def radial_lowpass(grid: Grid, s: float) -> np.ndarray:
    """Multiplier eta(xi/s): 1 on |xi| <= s/2, 0 outside |xi| >= s (smooth)."""
    mesh = grid.diff_freq_mesh()
    rr = np.sqrt(sum(m ** 2 for m in mesh))
    return 1.0 - _smoothstep(2.0 * rr / s - 1.0)


_MULTIPLIER_CACHE: dict = {}


def weight_multiplier(grid: Grid, spec) -> np.ndarray:
    """DFT values (difference lattice) of the grid-L1-normalized weight.

    The weight is the periodization of the continuum weight; normalizing the
    zero mode to 1 makes the grid integral exactly one.
    """
    key = (grid.sides, grid.h, spec.n, spec.kappa, spec.matrix.tobytes())
    if key in _MULTIPLIER_CACHE:
        return _MULTIPLIER_CACHE[key]
    from .weights import WeightTables
    tab = WeightTables.get(spec.n)
    mesh = grid.diff_freq_mesh()
    xi = np.stack([m.ravel() for m in mesh], axis=-1)
    v = xi @ spec.matrix                      # M^T xi
    rho = np.linalg.norm(v, axis=-1)
    vals = tab.w_hat_at(rho, spec.kappa).reshape(mesh[0].shape)
    if vals.flat[0] <= 0:
        raise ValueError("weight multiplier has nonpositive zero mode")
    vals = vals / vals.flat[0]
    if len(_MULTIPLIER_CACHE) > 256:
        _MULTIPLIER_CACHE.clear()
    _MULTIPLIER_CACHE[key] = vals
    return vals
