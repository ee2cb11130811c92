"""Moment-curve blocks, Taylor-cone sectors, dual boxes, and geometric probes.

Conventions: the curve gamma_n(t) = (t, t^2, ..., t^n) lives in R^n; the lifted
curve phi_n(t) = (1, t, t^2/2!, ..., t^n/n!) lives in R^{n+1}.  A block at
anchor t0 and scale R is the parallelotope spanned by the derivative frame
at t0 with half-widths R^{-i/n}; sectors additionally carry a lower bound on
the first m+1 frame coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

MEMBERSHIP_TOL = 1e-9   # relative slack absorbing frame-solve roundoff


# ---------------------------------------------------------------------------
# curves and frames

def moment_curve(n: int, t) -> np.ndarray:
    """Point (t, t^2, ..., t^n); t may be scalar or array (last axis = coords)."""
    t = np.asarray(t, dtype=float)
    return np.stack([t ** j for j in range(1, n + 1)], axis=-1)


def moment_deriv(n: int, i: int, t: float) -> np.ndarray:
    """i-th derivative of the moment curve at t."""
    out = np.zeros(n)
    for j in range(i, n + 1):
        out[j - 1] = math.factorial(j) // math.factorial(j - i) * t ** (j - i)
    return out


def moment_frame(n: int, t: float) -> np.ndarray:
    """n x n matrix with columns gamma^(1)(t), ..., gamma^(n)(t)."""
    return np.stack([moment_deriv(n, i, t) for i in range(1, n + 1)], axis=1)


def phi_curve(n: int, t) -> np.ndarray:
    """Point (1, t/1!, ..., t^n/n!) in R^{n+1}."""
    t = np.asarray(t, dtype=float)
    return np.stack([t ** j / math.factorial(j) for j in range(n + 1)], axis=-1)


def phi_deriv(n: int, i: int, t: float) -> np.ndarray:
    """i-th derivative of phi_n at t; phi^(i) has coordinates t^(j-i)/(j-i)!."""
    out = np.zeros(n + 1)
    for j in range(i, n + 1):
        out[j] = t ** (j - i) / math.factorial(j - i)
    return out


def phi_frame(n: int, t: float) -> np.ndarray:
    """(n+1) x (n+1) matrix with columns phi^(0)(t), ..., phi^(n)(t)."""
    return np.stack([phi_deriv(n, i, t) for i in range(n + 1)], axis=1)


# ---------------------------------------------------------------------------
# blocks

@dataclass(frozen=True)
class MomentBlock:
    """One block of the anisotropic moment-curve neighborhood.

    The block is gamma(t0) + {sum_i lam_i gamma^(i)(t0)} with lam_1 in
    [0, width] (its own xi_1-slab; the first frame coordinate equals
    xi_1 - t0 exactly) and |lam_i| <= hw_i for i >= 2, up to the
    comparability dilate used by membership tests.  At dilate 1 block
    interiors are disjoint in the t-slab coordinate.
    """

    n: int
    R: float
    t0: float
    width: float
    index: int
    frame: np.ndarray = field(repr=False, compare=False)
    half_widths: np.ndarray = field(repr=False, compare=False)

    @classmethod
    def at(cls, n: int, width: float, index: int) -> "MomentBlock":
        t0 = index * width
        R = width ** (-n)
        hw = np.array([width ** i for i in range(1, n + 1)])
        return cls(n=n, R=R, t0=t0, width=width, index=index,
                   frame=moment_frame(n, t0), half_widths=hw)

    @property
    def anchor(self) -> np.ndarray:
        return moment_curve(self.n, self.t0)

    @property
    def center(self) -> np.ndarray:
        """Center of the slab-sided box (anchor shifted half a slab)."""
        return self.anchor + 0.5 * self.width * self.frame[:, 0]

    @property
    def box_half_widths(self) -> np.ndarray:
        hw = self.half_widths.copy()
        hw[0] = 0.5 * self.width
        return hw

    def coefficients(self, xi) -> np.ndarray:
        """Frame coefficients lam of xi - gamma(t0); xi may be (..., n)."""
        xi = np.asarray(xi, dtype=float)
        diff = xi - self.anchor
        lam = np.linalg.solve(self.frame, diff.reshape(-1, self.n).T).T
        return lam.reshape(diff.shape)


def block_contains(block: MomentBlock, xi, dilate: float = 1.0) -> np.ndarray:
    """Membership in the dilated slab-sided frame box; True/False per point."""
    lam = np.array(block.coefficients(xi))
    lam[..., 0] -= 0.5 * block.width                  # recenter lam_1 on the slab
    bound = dilate * block.box_half_widths * (1 + MEMBERSHIP_TOL)
    return np.all(np.abs(lam) <= bound + 1e-300, axis=-1)


@dataclass(frozen=True)
class DualBox:
    """Polar box of a block: Gram-Schmidt axes with half-lengths R^(i/n)."""

    center: np.ndarray
    axes: np.ndarray          # rows = orthonormal directions
    half_lengths: np.ndarray

    def to_unit(self, x) -> np.ndarray:
        """Map points so the dual box becomes the unit cube [-1/2, 1/2]^n."""
        x = np.asarray(x, dtype=float)
        return (x - self.center) @ self.axes.T / (2.0 * self.half_lengths)


def dual_box(block: MomentBlock) -> DualBox:
    """Gram-Schmidt orthonormalization of the derivative flag, dual half-lengths.

    The i-th axis is the part of gamma^(i)(t0) orthogonal to the earlier
    derivatives; paired half-length R^(i/n) = width^(-i).
    """
    q, r = np.linalg.qr(block.frame)
    # fix signs so axes align with the original derivative directions
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    q = q * signs
    if abs(np.linalg.det(block.frame)) < 1e-300:
        raise ValueError("degenerate frame")
    hl = np.array([block.width ** (-i) for i in range(1, block.n + 1)])
    return DualBox(center=np.array(block.center), axes=q.T, half_lengths=hl)


@dataclass(frozen=True)
class MomentPartition:
    """Tiling of [0,1] into blocks of a common dyadic width."""

    n: int
    width: float
    blocks: tuple

    @classmethod
    def from_width_exponent(cls, n: int, m: int) -> "MomentPartition":
        w = 2.0 ** (-m)
        blocks = tuple(MomentBlock.at(n, w, l) for l in range(2 ** m))
        return cls(n=n, width=w, blocks=blocks)

    @property
    def R(self) -> float:
        return self.width ** (-self.n)

    def __len__(self):
        return len(self.blocks)

    def slab_index(self, xi1) -> np.ndarray:
        idx = np.floor(np.asarray(xi1) / self.width).astype(int)
        return np.clip(idx, 0, len(self.blocks) - 1)


def partition_moment(n: int, R) -> MomentPartition:
    """The R^(1/n) canonical blocks at scale R; R must be a power of 2^n."""
    m = _admissible_exponent(n, R)
    return MomentPartition.from_width_exponent(n, m)


def _admissible_exponent(n: int, R) -> int:
    if R <= 1:
        raise ValueError(f"scale must exceed 1, got {R}")
    m = round(math.log2(float(R)) / n)
    if not np.isclose(2.0 ** (n * m), float(R), rtol=1e-12) or m < 1:
        raise ValueError(f"R={R} is not an admissible power of 2^{n}")
    return m


# ---------------------------------------------------------------------------
# Taylor-cone sectors

@dataclass(frozen=True)
class TaylorConeSector:
    """One sector of the order-m Taylor cone at scale R, anchored at a.

    Membership needs both the frame box |lam_i| <= R^(-i/n) and the lower
    bound max_{0<=j<=m} |lam_j| 2^(m+1-j) R^(j/n) >= 1.
    """

    n: int
    m: int
    R: float
    a: float
    width: float
    index: int
    frame: np.ndarray = field(repr=False, compare=False)
    half_widths: np.ndarray = field(repr=False, compare=False)

    @classmethod
    def at(cls, n: int, m: int, R: float, width: float, index: int):
        a = index * width
        hw = np.array([R ** (-i / n) for i in range(n + 1)])
        return cls(n=n, m=m, R=R, a=a, width=width, index=index,
                   frame=phi_frame(n, a), half_widths=hw)

    def coefficients(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        lam = np.linalg.solve(self.frame, xi.reshape(-1, self.n + 1).T).T
        return lam.reshape(xi.shape)


def sector_contains(sector: TaylorConeSector, xi, dilate: float = 1.0) -> np.ndarray:
    """Box membership plus the max-lower-bound condition (dilate relaxes both)."""
    lam = sector.coefficients(xi)
    bound = dilate * sector.half_widths * (1 + MEMBERSHIP_TOL)
    in_box = np.all(np.abs(lam) <= bound, axis=-1)
    j = np.arange(sector.m + 1)
    scale = 2.0 ** (sector.m + 1 - j) * sector.R ** (j / sector.n)
    low = np.max(np.abs(lam[..., : sector.m + 1]) * scale, axis=-1) \
        >= (1.0 - MEMBERSHIP_TOL) / dilate
    return in_box & low


def partition_cone(n: int, m: int, R, c_block: float = 1.0) -> list:
    """Sectors whose t-intervals tile [0,1] at length c_block * R^(-1/n)."""
    if not (0 <= m <= n - 1):
        raise ValueError(f"require 0 <= m <= n-1, got m={m}, n={n}")
    if not (0 < c_block <= 1):
        raise ValueError("c_block must lie in (0, 1]")
    mexp = _admissible_exponent(n, R)
    width = c_block * 2.0 ** (-mexp)
    count = round(1.0 / width)
    if not np.isclose(count * width, 1.0, rtol=1e-12):
        raise ValueError("c_block must make the interval count an integer")
    return [TaylorConeSector.at(n, m, float(R), width, l) for l in range(count)]


def cone_member(n: int, m: int, scale: float, xi, anchor_spacing: float = None,
                dilate: float = 1.0) -> bool:
    """Membership of xi in the order-m cone at `scale`, scanning all anchors."""
    if anchor_spacing is None:
        anchor_spacing = scale ** (-1.0 / n)
    anchors = np.arange(0.0, 1.0 + 1e-12, anchor_spacing)
    frames = np.stack([phi_frame(n, a) for a in anchors])
    rhs = np.broadcast_to(np.asarray(xi, dtype=float), (len(anchors), n + 1))
    lam = np.linalg.solve(frames, rhs[..., None])[..., 0]
    hw = np.array([scale ** (-i / n) for i in range(n + 1)])
    in_box = np.all(np.abs(lam) <= dilate * hw * (1 + MEMBERSHIP_TOL), axis=-1)
    j = np.arange(m + 1)
    cond = 2.0 ** (m + 1 - j) * scale ** (j / n)
    low = np.max(np.abs(lam[:, : m + 1]) * cond, axis=-1) >= (1 - MEMBERSHIP_TOL) / dilate
    return bool(np.any(in_box & low))


# ---------------------------------------------------------------------------
# sumset overlap census

def sumset_overlap_census(n: int, R, max_pairs: int = 100_000):
    """Count, for every pair (theta_i, theta_j), how many pairs (theta_l, theta_k)
    have intersecting sumsets, deciding intersection conservatively.

    Separation is certified by a support-function test over candidate
    directions (all blocks' dual axes plus coordinate axes); failure to
    separate counts as intersection, and touching boundaries intersect.
    Returns (max_overlap, histogram dict, pair count).
    """
    part = partition_moment(n, R)
    B = len(part)
    if B * B > max_pairs:
        raise ValueError(f"{B * B} pairs exceeds cap {max_pairs}")

    dirs = [np.eye(n)[i] for i in range(n)]
    for blk in part.blocks:
        dirs.extend(dual_box(blk).axes)
    D = np.vstack(dirs)
    D = np.vstack([D, -D])                      # signed directions

    # support values per block per direction: h_b(d) = d.c_b + sum hw_i |d.g_i|
    centers = np.stack([b.center for b in part.blocks])          # (B, n)
    frames = np.stack([b.frame for b in part.blocks])            # (B, n, n)
    hws = np.stack([b.box_half_widths for b in part.blocks])     # (B, n)
    dc = D @ centers.T                                           # (|D|, B)
    dg = np.abs(np.einsum("dk,bki->dbi", D, frames))             # (|D|, B, n)
    h = dc + np.einsum("dbi,bi->db", dg, hws)                    # (|D|, B)

    # sumset support: h_{ij}(d) = h_i(d) + h_j(d), flattened over ordered pairs
    hp = (h[:, :, None] + h[:, None, :]).reshape(len(D), B * B)   # (|D|, P)
    # index of -d within D (first half <-> second half)
    half = len(D) // 2
    neg = np.concatenate([np.arange(half) + half, np.arange(half)])

    separated = np.zeros((B * B, B * B), dtype=bool)
    margin = 1e-12                        # touching boundaries must intersect
    for d in range(len(D)):
        lo = -hp[neg[d]]                                          # min over P of d.x
        separated |= lo[:, None] > hp[d][None, :] + margin
    overlap = ~separated
    counts = overlap.sum(axis=1)
    hist_vals, hist_cts = np.unique(counts, return_counts=True)
    hist = {int(v): int(c) for v, c in zip(hist_vals, hist_cts)}
    return int(counts.max()), hist, B * B


# ---------------------------------------------------------------------------
# cone nesting

def cone_nesting_check(n: int, R, r, samples: int = 10_000, seed: int = 0):
    """Sampled nesting of order-0 cones plus explicit symmetric-difference
    witnesses for every 0 < m <= n-1.

    Returns a report dict: m=0 violation count (expected 0) and, per m > 0,
    verified witness points in each direction of the symmetric difference.
    """
    if r > R:
        raise ValueError("require r <= R")
    rng = np.random.default_rng(seed)
    report = {"n": n, "R": R, "r": r, "m0_samples": samples}

    # m = 0: sample the scale-R cone, test membership at scale r
    viol = 0
    ts = rng.uniform(0.0, 1.0, samples)
    hw = np.array([float(R) ** (-i / n) for i in range(n + 1)])
    lam = rng.uniform(-1.0, 1.0, (samples, n + 1)) * hw
    lam[:, 0] = rng.choice([-1.0, 1.0], samples) * rng.uniform(0.5, 1.0, samples)
    for t, l in zip(ts, lam):
        xi = phi_frame(n, t) @ l
        if not cone_member(n, 0, float(r), xi, dilate=1.0 + 1e-7):
            viol += 1
    report["m0_violations"] = viol

    if r == R:
        report["symmetric_difference"] = "empty (r == R)"
        return report

    wit = {}
    for m in range(1, n):
        t = 0.5
        eta = phi_curve(n - m, t)                    # coefficient 1 on phi^(0)
        w_big = np.concatenate([np.zeros(m), float(R) ** (-m / n) * eta])
        w_small = np.concatenate([np.zeros(m), float(r) ** (-m / n) * eta])
        entry = {
            "in_R_not_r": {
                "point": w_big.tolist(),
                "member_R": cone_member(n, m, float(R), w_big, dilate=1 + 1e-7),
                "member_r": cone_member(n, m, float(r), w_big, dilate=1 + 1e-7),
            },
            "in_r_not_R": {
                "point": w_small.tolist(),
                "member_R": cone_member(n, m, float(R), w_small, dilate=1 + 1e-7),
                "member_r": cone_member(n, m, float(r), w_small, dilate=1 + 1e-7),
            },
        }
        # the first witness needs R/r > 2^(n/m) to defeat the lower bound at scale r
        entry["in_R_not_r"]["decisive"] = (float(R) / float(r)) > 2.0 ** (n / m)
        wit[m] = entry
    report["witnesses"] = wit
    return report


# ---------------------------------------------------------------------------
# coefficient-system overlap probe

def l2tech_overlap_probe(n: int, r, lam: float, trials: int = 1000, seed: int = 0,
                         C: float = 1.0, c: float = 0.5, t_max: float = 0.25,
                         grid: int = 512, attempts: int = 200):
    """Largest |T| compatible with the coefficient-closeness system, maximized
    over random admissible systems H.

    Each trial draws H2 rows inside their ranges (sign pattern s, pinned index
    k0), sets the H1 diagonal so T = 0 is admissible, then finds the largest
    |T| <= t_max satisfying every row inequality by scan plus bisection.
    Returns dict with max_T, c_probe = max_T * r^(1/n), and per-trial data.
    """
    r = float(r)
    if not (r ** (-(n - 1) / n) - 1e-12 <= lam <= 1 + 1e-12):
        raise ValueError(f"lam={lam} outside [r^(-(n-1)/n), 1]")
    rng = np.random.default_rng(seed)
    tol = C * lam / r

    caps = np.array([C * min(r ** (-i / n), lam) for i in range(n + 1)])
    ok_sign = np.array([caps[i] >= c * lam for i in range(n)])        # s_i != 0 allowed
    ok_k0 = np.array([caps[i] >= c * r ** (-i / n) for i in range(n)])
    if not ok_k0.any():
        raise ValueError("no admissible pinned index k0")

    def draw_entry(i, s_i, pinned):
        lo, hi = 0.0, caps[i]
        if pinned:
            lo = max(lo, c * r ** (-i / n))
        if s_i != 0:
            lo = max(lo, c * lam)
        if lo > hi:
            return None
        mag = rng.uniform(lo, hi)
        sgn = s_i if s_i != 0 else rng.choice([-1.0, 1.0])
        return sgn * mag

    best_T = np.zeros(trials)
    ts = np.linspace(0.0, t_max, grid)
    for trial in range(trials):
        for _ in range(attempts):
            k0 = int(rng.choice(np.nonzero(ok_k0)[0]))
            s = rng.integers(-1, 2, n)
            s[~ok_sign] = 0
            if not s.any():
                s[int(rng.choice(np.nonzero(ok_sign)[0]))] = rng.choice([-1, 1])
            H2 = np.zeros((n + 1, n + 1))      # rows 1..n, cols 0..row
            ok = True
            for row in range(1, n + 1):
                for i in range(0, row + 1):
                    v = draw_entry(i, s[i] if i < n else 0, pinned=(i == k0))
                    if v is None:
                        ok = False
                        break
                    H2[row, i] = v
                if not ok:
                    break
            if not ok:
                continue
            H1d = np.array([H2[row, row] + rng.uniform(-tol / 2, tol / 2)
                            for row in range(n + 1)])
            break
        else:
            raise ValueError("no admissible H generated")

        def resid(T):
            out = np.empty(n)
            for row in range(1, n + 1):
                acc = sum(H2[row, i] * T ** (row - i) / math.factorial(row - i)
                          for i in range(0, row + 1))
                out[row - 1] = abs(H1d[row] - acc)
            return out

        good = np.array([np.all(resid(T) <= tol) for T in ts])
        if not good[0]:
            continue                       # clamping killed T=0; contributes 0
        last = int(np.max(np.nonzero(good)[0]))
        t_lo = ts[last]
        if last + 1 < grid:
            t_hi = ts[last + 1]
            for _ in range(40):
                mid = 0.5 * (t_lo + t_hi)
                if np.all(resid(mid) <= tol):
                    t_lo = mid
                else:
                    t_hi = mid
        best_T[trial] = t_lo

    max_T = float(best_T.max())
    return {
        "n": n, "r": r, "lam": lam, "trials": trials,
        "max_T": max_T,
        "c_probe": max_T * r ** (1.0 / n),
        "mean_T": float(best_T.mean()),
    }
