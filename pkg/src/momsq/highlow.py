"""Scale ladders, wave-packet pruning, high-low splits, important sets,
broad-narrow, packet pigeonholing, and the unwinding cascade, all executed
on discrete fields.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield

import numpy as np

from .exponents import critical_exponent, even_exponent
from .field import DiscreteField, TileSet, TileWindow1D
from .geometry import MomentBlock, MomentPartition
from .grid import radial_lowpass, weight_multiplier
from .weights import WeightSpec, omega_block


# ---------------------------------------------------------------------------
# ladders

@dataclass(frozen=True)
class ScaleLadder:
    """Scales R_k (powers of 8 nearest R^(k eps), R_N = R) together with the
    dyadic slab widths actually used for the nested partitions, and the decay
    ladder standing in for d_k (strictly decreasing kappa along the cascade).
    """

    n: int
    R: float
    epsilon: float
    R_k: tuple
    width_exp: tuple          # slab width = 2^-m per level
    K: float
    A: float
    N0: int
    kappa_k: tuple
    kappa_target: float

    @property
    def N(self) -> int:
        return len(self.R_k) - 1

    def width(self, k: int) -> float:
        return 2.0 ** (-self.width_exp[k])

    def partition(self, k: int) -> MomentPartition:
        return MomentPartition.from_width_exponent(self.n, self.width_exp[k])


def _nearest_power_of_8(x: float) -> float:
    if x <= 1.0:
        return 1.0
    e = math.log(x, 8.0)
    lo, hi = 8.0 ** math.floor(e), 8.0 ** math.ceil(e)
    dlo, dhi = abs(math.log(x / lo)), abs(math.log(x / hi))
    return lo if dlo <= dhi else hi       # ties toward smaller


def build_ladder(n: int, R, epsilon: float, K: float = 4.0, A: float = None,
                 N0: int = 0) -> ScaleLadder:
    """Ladder of scales R_k in powers of 8 nearest R^(k eps), with R_0 = 1 and
    R_N = R exactly; slab widths are the nearest dyadic to R_k^(-1/n),
    monotone so the partitions nest."""
    from .geometry import _admissible_exponent
    m_top = _admissible_exponent(n, R)
    if not (0 < epsilon < 1):
        raise ValueError("epsilon must lie in (0,1)")
    N = math.ceil(1.0 / epsilon)
    if N < 2:
        raise ValueError("ladder needs at least two levels (epsilon too large)")
    R_k = [1.0]
    for k in range(1, N):
        R_k.append(min(_nearest_power_of_8(float(R) ** (k * epsilon)), float(R)))
    R_k.append(float(R))
    R_k = [max(R_k[i], R_k[i - 1]) if i else R_k[i] for i in range(len(R_k))]

    mexp = [0]
    for k in range(1, N):
        m = round(math.log2(R_k[k]) / n)
        mexp.append(int(np.clip(m, mexp[-1], m_top)))
    mexp.append(m_top)
    kappa_target = n + 2.0
    kappa_k = tuple(kappa_target + 1.0 + (N - k) for k in range(N + 1))
    return ScaleLadder(n=n, R=float(R), epsilon=epsilon, R_k=tuple(R_k),
                       width_exp=tuple(mexp), K=K,
                       A=A if A is not None else 0.0, N0=N0,
                       kappa_k=kappa_k, kappa_target=kappa_target)


# ---------------------------------------------------------------------------
# pruning

@dataclass
class PruneState:
    field: DiscreteField
    ladder: ScaleLadder
    alpha: float
    beta: float
    A: float
    levels: dict                 # k -> {tau index -> complex spatial array}
    good_tiles: dict             # (k, tau) -> list of kept tile tuples
    bad_tiles: dict
    thresholds: dict             # k -> threshold value

    def level_blocks(self, k: int):
        return self.ladder.partition(k).blocks

    def parent_sum(self, k_level: int, parent_width: float) -> dict:
        """Group the level-k_level arrays into parents of the given width."""
        arrays = self.levels[k_level]
        child_w = self.ladder.width(k_level)
        ratio = int(round(parent_width / child_w))
        out = {}
        for idx, arr in arrays.items():
            out.setdefault(idx // ratio, np.zeros_like(arr))
            out[idx // ratio] = out[idx // ratio] + arr
        return out

    def g(self, k: int, kappa: float = None) -> np.ndarray:
        """g_k = sum_{tau_k} |f^(k+1)_{tau_k}|^2 * omega_{tau_k, kappa_k}."""
        lad = self.ladder
        if k == lad.N:
            comps = self.levels[lad.N]
            width_k = lad.width(lad.N)
        else:
            comps = self.parent_sum(k + 1, lad.width(k))
            width_k = lad.width(k)
        kap = lad.kappa_k[k] if kappa is None else kappa
        part = lad.partition(k)
        grid = self.field.grid
        out = np.zeros(grid.sides)
        for idx, arr in comps.items():
            mult = weight_multiplier(grid, omega_block(part.blocks[idx], kap))
            out += np.real(grid.convolve(np.abs(arr) ** 2, mult))
        return out


def _tile_maxima(ts: TileSet, mags: np.ndarray) -> np.ndarray:
    idx = ts.tile_index_map().ravel()
    out = np.zeros(ts.ntiles)
    np.maximum.at(out, idx, mags.ravel())
    return out


def _windowed_sup_bounds(ts: TileSet, tile_max: np.ndarray,
                         reach: int = None) -> np.ndarray:
    """Conservative upper bound for sup_x psi_T(x)^(1/2) |f(x)| per tile:
    per-axis max-convolution of per-tile maxima with the window's decay
    envelope (square-rooted)."""
    w1 = TileWindow1D.get()
    reach = w1.REACH if reach is None else reach
    n = ts.block.n
    dense = tile_max.reshape(ts.dims)
    env = np.array([math.sqrt(w1.decay_envelope(j)) for j in range(reach + 1)])
    for axis in range(n):
        moved = dense * env[0]
        for j in range(1, min(reach, ts.dims[axis] - 1) + 1):
            for sgn in (1, -1):
                shifted = np.roll(dense, sgn * j, axis=axis)
                # roll wraps; zero the wrapped slab
                sl = [slice(None)] * n
                sl[axis] = slice(0, j) if sgn == 1 else \
                    slice(ts.dims[axis] - j, None)
                shifted[tuple(sl)] = 0.0
                np.maximum(moved, env[j] * shifted, out=moved)
        dense = moved
    return dense.ravel()


def prune(field: DiscreteField, ladder: ScaleLadder, alpha: float, beta: float,
          A: float = None) -> PruneState:
    """Build the pruned hierarchy top-down: level N holds the raw components,
    and each level k keeps only wave packets whose windowed sup-bound is below
    K^3 A^(N-k+1) beta/alpha.  Empty good sets are allowed."""
    if alpha <= 0 or beta <= 0:
        raise ValueError("alpha, beta must be positive")
    lad = ladder
    A = lad.A if A is None else A
    if A <= 0:
        raise ValueError("pruning constant A must be positive (set via ladder "
                         "or argument)")
    grid = field.grid
    N = lad.N
    levels = {N: {l: field.component(l) for l in field.block_ids}}
    good_tiles, bad_tiles, thresholds = {}, {}, {}
    for k in range(N - 1, lad.N0 - 1, -1):
        thr = lad.K ** 3 * A ** (N - k + 1) * beta / alpha
        thresholds[k] = thr
        parents = {}
        groups = {}
        child_w = lad.width(k + 1)
        ratio = int(round(lad.width(k) / child_w))
        for idx, arr in levels[k + 1].items():
            groups.setdefault(idx // ratio, []).append(idx)
        part = lad.partition(k)
        for pidx, children in groups.items():
            total = np.zeros(grid.sides, dtype=complex)
            for c in children:
                total += levels[k + 1][c]
            ts = TileSet.get(grid, part.blocks[pidx])
            tm = _tile_maxima(ts, np.abs(total))
            bounds = _windowed_sup_bounds(ts, tm)
            ok = bounds <= thr
            good = [ts.position_tile(i) for i in np.nonzero(ok)[0]]
            bad = [ts.position_tile(i) for i in np.nonzero(~ok)[0]]
            good_tiles[(k, pidx)] = good
            bad_tiles[(k, pidx)] = bad
            if not bad:
                parents[pidx] = total
            elif not good:
                parents[pidx] = np.zeros_like(total)
            elif len(bad) <= len(good):
                parents[pidx] = total * (1.0 - ts.window_sum(bad))
            else:
                parents[pidx] = total * ts.window_sum(good)
        levels[k] = parents
    return PruneState(field=field, ladder=lad, alpha=alpha, beta=beta, A=A,
                      levels=levels, good_tiles=good_tiles,
                      bad_tiles=bad_tiles, thresholds=thresholds)


def prune_norm_report(state: PruneState) -> dict:
    """Measured sup norms of the pruned pieces against their thresholds,
    including the window constant sup_x sum_T psi_T^(1/2) that the executable
    bound carries."""
    out = {}
    grid = state.field.grid
    for k in range(state.ladder.N - 1, state.ladder.N0 - 1, -1):
        part = state.ladder.partition(k)
        for idx, arr in state.levels[k].items():
            ts = TileSet.get(grid, part.blocks[idx])
            out[(k, idx)] = {
                "sup": float(np.abs(arr).max()),
                "threshold": state.thresholds[k],
                "window_constant": ts.sqrt_window_sup(),
            }
    return out


# ---------------------------------------------------------------------------
# high-low split and the lemma checks

def highlow_split(grid, g_k: np.ndarray, cutoff: float):
    """Split g_k into Fourier frequencies below/above the cutoff; the two
    parts sum to g_k exactly."""
    low = np.real(grid.convolve(g_k, radial_lowpass(grid, cutoff)))
    return low, g_k - low


def level_cutoff(ladder: ScaleLadder, k: int) -> float:
    return ladder.width(min(k + 1, ladder.N))


def low_lemma_ratio(state: PruneState, k: int, floor_rel: float = 1e-12):
    """sup |g_k^low| / g_{k+1} over points where g_{k+1} clears the floor."""
    grid = state.field.grid
    gk = state.g(k)
    gk1 = state.g(k + 1)
    low, _ = highlow_split(grid, gk, level_cutoff(state.ladder, k))
    floor = floor_rel * gk1.max()
    live = gk1 > floor
    if not live.any():
        raise ValueError("g_{k+1} below floor everywhere")
    return float((np.abs(low[live]) / gk1[live]).max())


@dataclass
class LevelSets:
    U: np.ndarray
    omegas: dict         # k -> mask
    L: np.ndarray
    alpha: float
    beta: float


def important_sets(state: PruneState, alpha: float = None, beta: float = None,
                   A: float = None) -> LevelSets:
    """Masks U_{alpha,beta}, Omega_k (top-down), and the low set L."""
    lad = state.ladder
    alpha = state.alpha if alpha is None else alpha
    beta = state.beta if beta is None else beta
    A = state.A if A is None else A
    f_abs = np.abs(state.field.spatial())
    h = state.g(lad.N, kappa=lad.kappa_target)
    U = (f_abs >= alpha) & (h >= beta / 2.0) & (h <= beta)
    omegas = {}
    taken = np.zeros_like(U)
    for k in range(lad.N - 1, lad.N0 - 1, -1):
        gk = state.g(k)
        om = U & (~taken) & (gk >= A ** (lad.N - k) * beta)
        omegas[k] = om
        taken |= om
    L = U & (~taken)
    return LevelSets(U=U, omegas=omegas, L=L, alpha=alpha, beta=beta)


def high_dominance_check(state: PruneState, k: int, sets: LevelSets) -> int:
    """Count of Omega_k points violating g_k <= 2 |g_k^high|."""
    grid = state.field.grid
    gk = state.g(k)
    _, high = highlow_split(grid, gk, level_cutoff(state.ladder, k))
    mask = sets.omegas[k]
    return int(np.count_nonzero(mask & (gk > 2.0 * np.abs(high))))


def pruning_error_check(state: PruneState, sets: LevelSets,
                        coarse_exp: int = 0) -> dict:
    """Max |sum_{tau_k in tau} (f_{tau_k} - f^{k+1}_{tau_k})| over each
    important set, normalized by alpha / (A^(1/2) K^3)."""
    lad = state.ladder
    K = lad.K
    bound = sets.alpha / (math.sqrt(state.A) * K ** 3)
    coarse_w = 2.0 ** (-coarse_exp)
    out = {}
    raw_by_level = {}
    for k in list(sets.omegas) + ["L"]:
        lev = lad.N0 + 1 if k == "L" else k + 1
        mask = sets.L if k == "L" else sets.omegas[k]
        if lev not in raw_by_level:
            raw = state.parent_sum(lad.N, coarse_w)
            pruned = state.parent_sum(lev, coarse_w)
            raw_by_level[lev] = {
                idx: np.abs(raw[idx] - pruned.get(idx, 0.0)) for idx in raw}
        if not mask.any():
            out[k] = 0.0
            continue
        worst = max(float(err[mask].max())
                    for err in raw_by_level[lev].values())
        out[k] = worst / bound
    return out


# ---------------------------------------------------------------------------
# broad-narrow

def broad_set(field: DiscreteField, K: int, alpha: float, beta: float = None,
              sets: LevelSets = None):
    """Mask of the broad part plus the pointwise broad-narrow violation count
    (expected zero: the inequality is a finite case analysis)."""
    n = field.n
    if K < 2 * n:
        raise ValueError(f"K={K} too small: need at least {2 * n} blocks")
    if K & (K - 1):
        raise ValueError("K must be a power of two (dyadic slab width)")
    width = 1.0 / K
    groups = field.coarse_groups(width)
    comps = {i: field.group_component(ids) for i, ids in groups.items()}
    mags = {i: np.abs(c) for i, c in comps.items()}
    idxs = sorted(comps)
    narrow = np.zeros(field.grid.sides)
    for i in idxs:
        np.maximum(narrow, mags[i], out=narrow)

    best_tuple = np.zeros(field.grid.sides)
    tuple_max = np.zeros(field.grid.sides)
    from itertools import combinations
    for combo in combinations(idxs, n):
        if any(b - a < 2 for a, b in zip(combo, combo[1:])):
            continue
        prod = np.ones(field.grid.sides)
        tmax = np.zeros(field.grid.sides)
        for i in combo:
            prod = prod * mags[i]
            np.maximum(tmax, mags[i], out=tmax)
        prod = prod ** (1.0 / n)
        upd = prod > best_tuple
        best_tuple[upd] = prod[upd]
        tuple_max[upd] = tmax[upd]

    f_abs = np.abs(field.spatial())
    violations = int(np.count_nonzero(
        f_abs > 2 * n * narrow + K ** 3 * best_tuple + 1e-9 * f_abs.max()))

    base = sets.U if sets is not None else np.ones(field.grid.sides, bool)
    br = base & (alpha <= K * best_tuple) & (tuple_max <= alpha)
    return br, violations


# ---------------------------------------------------------------------------
# packet pigeonholing

def pigeonhole_packets(field: DiscreteField, alpha: float,
                       max_classes: int = 40):
    """Dyadic amplitude classes of wave packets near the superlevel set; keeps
    the class retaining the most of it.  Returns (pruned field spatial sum,
    A, report)."""
    grid = field.grid
    f_abs = np.abs(field.spatial())
    if alpha <= 1e-8 * f_abs.max():
        raise ValueError("alpha below the degenerate threshold")
    U = f_abs >= alpha
    if not U.any():
        raise ValueError("empty superlevel set")

    per_block = {}
    amps = []
    for l in field.block_ids:
        blk = field.partition.blocks[l]
        ts = TileSet.get(grid, blk)
        comp = field.component(l)
        idx_map = ts.tile_index_map()
        owned_in_U = np.unique(idx_map[U])
        keep = set()
        for pos in owned_in_U:
            t = ts.position_tile(int(pos))
            for off in np.ndindex(*([3] * field.n)):
                keep.add(tuple(t[i] + off[i] - 1 for i in range(field.n)))
        in_range = {t for t in keep
                    if all(ts.lo[i] <= t[i] <= ts.hi[i] for i in range(field.n))}
        tm = {t: float(np.abs(ts.window(t) * comp).max())
              for t in sorted(in_range)}
        per_block[l] = (ts, comp, tm)
        amps.extend(tm.values())
    a_max = max(amps) if amps else 0.0
    if a_max == 0:
        raise ValueError("all packets vanish")

    def class_of(a):
        if a <= 0 or a < a_max * 2.0 ** (-max_classes):
            return None
        return int(np.floor(np.log2(a_max / a)))

    class_fields = {}
    for l, (ts, comp, tm) in per_block.items():
        by_class = {}
        for t, a in tm.items():
            c = class_of(a)
            if c is not None:
                by_class.setdefault(c, []).append(t)
        for c, tiles in by_class.items():
            acc = class_fields.setdefault(c, np.zeros(grid.sides, dtype=complex))
            acc += ts.window_sum(tiles) * comp

    classes = sorted(class_fields)
    thr = alpha / (2.0 * max(len(classes), 1))
    best, best_mass = None, -1
    for c in classes:
        mass = int(np.count_nonzero(U & (np.abs(class_fields[c]) >= thr)))
        if mass > best_mass:
            best, best_mass = c, mass
    A = a_max * 2.0 ** (-best)
    report = {
        "classes": len(classes),
        "chosen_class": best,
        "A": A,
        "retained_fraction": best_mass / int(np.count_nonzero(U)),
        "per_block_sup": {},
    }
    spread_lo, spread_hi = np.inf, 0.0
    for l, (ts, comp, tm) in per_block.items():
        tiles = [t for t, a in tm.items() if class_of(a) == best]
        if not tiles:
            continue
        vals = [tm[t] for t in tiles]
        spread_lo = min(spread_lo, min(vals))
        spread_hi = max(spread_hi, max(vals))
        piece = ts.window_sum(tiles) * comp
        report["per_block_sup"][l] = float(np.abs(piece).max())
    report["amplitude_spread"] = spread_hi / max(spread_lo, 1e-300)
    return class_fields[best], A, report


# ---------------------------------------------------------------------------
# the unwinding cascade

@dataclass
class CascadeStep:
    step: int
    branch: str
    sigma: float
    constant: float
    margin: float
    width: float
    level: int
    ptilde_index: int


@dataclass
class CascadeTrace:
    steps: list
    final_constant: float
    start_value: float
    target_value: float
    terminated: bool
    guard_triggered: bool = False

    def as_records(self):
        return [vars(s) for s in self.steps]


def _sigma_shells(grid, blk: MomentBlock, l: int, sigmas, c_box: float):
    """Partition of the difference lattice into the dyadic coefficient shells
    used to pick the dominant scale: boxes |lam_i| <= min(1, sigma^(l+1-i))
    c_box s^i, innermost box first, complement of the largest box last."""
    mesh = grid.diff_freq_mesh()
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    lam = np.linalg.solve(blk.frame, pts.T).T
    s = blk.width
    n = blk.n

    def box(sig):
        ok = np.ones(len(lam), dtype=bool)
        for i in range(1, n + 1):
            cap = min(1.0, sig ** (l + 1 - i)) * c_box * s ** i
            ok &= np.abs(lam[:, i - 1]) <= cap
        return ok

    shells = []
    prev = box(sigmas[0])
    shells.append(prev.copy())
    for sig in sigmas[1:]:
        cur = box(sig)
        shells.append(cur & ~prev)
        prev = cur
    shells.append(~prev)        # residue outside the largest box
    return [sh.reshape(grid.sides) for sh in shells]


def unwind_cascade(state: PruneState, k: int, p: float,
                   step_cap: int = 64, n_sigma: int = 6) -> CascadeTrace:
    """Run the exponent/scale cascade on data, starting from the level-k
    expression int (sum_{tau_k} |f^(k+1)|^2 * omega)^(p/2).

    Each step measures the competing dyadic pieces of the current expression,
    then branches: low (refine one ladder rung, back to the square function),
    high (raise the even exponent, same scale), or terminal (per-block L^p).
    Emits the realized constant of every step; the final constant relates the
    start expression to int (sum_theta |f_theta|^2 * omega_theta)^(p/2).
    """
    lad = state.ladder
    n = lad.n
    if not (2.0 <= p <= float(critical_exponent(n))):
        raise ValueError("p outside [2, p_n]")
    grid = state.field.grid

    ptildes = [even_exponent(i) for i in range(1, n + 2)]

    def expression(width, lev, l_idx, kap):
        """E = int (sum_tau |f^lev_tau|^(ptilde_l) * omega_tau,kap)^(p/ptilde_l)
        together with the per-tau convolved summands (reused by the scan)."""
        pt = ptildes[l_idx - 1]
        comps = state.parent_sum(lev, width)
        part = MomentPartition.from_width_exponent(n, int(round(-math.log2(width))))
        summands = {}
        total = np.zeros(grid.sides)
        for idx, arr in comps.items():
            mult = weight_multiplier(grid, omega_block(part.blocks[idx], kap))
            conv = np.real(grid.convolve(np.abs(arr) ** pt, mult))
            summands[idx] = (arr, conv, part.blocks[idx], mult)
            total += conv
        val = grid.integrate(np.maximum(total, 0.0) ** (p / pt))
        return val, summands, pt

    # initial expression: level k+1 components at width_k, ptilde_1 = 2
    width = lad.width(k)
    lev = min(k + 1, lad.N)
    l_idx = 1
    kap = lad.kappa_k[k]
    value, summands, pt = expression(width, lev, l_idx, kap)
    start_value = value

    # final target
    target_mult_kappa = lad.kappa_target
    theta_part = lad.partition(lad.N)
    target = np.zeros(grid.sides)
    for idx, arr in state.levels[lad.N].items():
        mult = weight_multiplier(grid, omega_block(theta_part.blocks[idx],
                                                   target_mult_kappa))
        target += np.real(grid.convolve(np.abs(arr) ** 2, mult))
    target_value = grid.integrate(target ** (p / 2.0))

    steps = []
    guard = False
    finished = False
    for m in range(1, step_cap + 1):
        at_finest = abs(width - lad.width(lad.N)) < 1e-12
        active = {i for i, (arr, _, _, _) in summands.items()
                  if np.abs(arr).max() > 0}
        singletons = all(
            len([None for j in state.levels[lad.N]
                 if int(j * lad.width(lad.N) / width) == i]) <= 1
            for i in active) if active else True

        if at_finest or singletons:
            const = value / target_value if target_value > 0 else np.inf
            steps.append(CascadeStep(m, "terminal-direct", 0.0,
                                     const, np.inf, width, lev, l_idx))
            finished = True
            break

        q = p / ptildes[l_idx - 1]
        sigmas = [2.0 ** (-j) for j in range(n_sigma, -1, -1)]
        c_box = ptildes[l_idx - 1] + 2.0
        piece_vals = []
        pieces_by_shell = None
        shell_count = n_sigma + 2
        acc = [np.zeros(grid.sides) for _ in range(shell_count)]
        for idx, (arr, conv, blk, mult) in summands.items():
            if np.abs(arr).max() == 0:
                continue
            shells = _sigma_shells(grid, blk, l_idx, sigmas, c_box)
            spec = np.fft.fftn(conv)
            for j, sh in enumerate(shells):
                acc[j] += np.real(np.fft.ifftn(spec * sh))
        piece_vals = [grid.integrate(np.abs(a) ** q) for a in acc]
        order = np.argsort(piece_vals)[::-1]
        dom = int(order[0])
        margin = piece_vals[dom] / max(piece_vals[int(order[1])], 1e-300) \
            if len(order) > 1 else np.inf

        if dom == 0:
            branch = "low"
        elif q >= 2.0 and l_idx < len(ptildes) - 1:
            branch = "high"
        else:
            branch = "terminal"
        sigma_val = sigmas[0] if dom == 0 else \
            (sigmas[dom - 1] if dom - 1 < len(sigmas) else 1.0)

        if branch == "low":
            # refine one rung: back to the square function at the next width
            new_rung = next(j for j in range(lad.N + 1)
                            if lad.width(j) < width * (1 - 1e-12))
            new_width = lad.width(new_rung)
            new_lev = max(lev, min(new_rung + 1, lad.N))
            new_l = 1
            new_kap = max(lad.kappa_target + 1.0, kap - 1.0)
        elif branch == "high":
            new_width, new_lev, new_kap = width, lev, kap
            new_l = l_idx + 1
        else:
            # terminal: per-block L^p, then compare with the target
            per_block = sum(grid.integrate(np.abs(arr) ** p)
                            for arr, _, _, _ in summands.values())
            const = per_block / target_value if target_value > 0 else np.inf
            steps.append(CascadeStep(m, "terminal", sigma_val, const,
                                     margin, width, lev, l_idx))
            finished = True
            break

        new_value, new_summands, _ = expression(new_width, new_lev, new_l,
                                                new_kap)
        const = value / new_value if new_value > 0 else np.inf
        steps.append(CascadeStep(m, branch, sigma_val, const, margin,
                                 new_width, new_lev, new_l))
        width, lev, l_idx, kap = new_width, new_lev, new_l, new_kap
        value, summands = new_value, new_summands
    else:
        guard = True

    final_constant = start_value / target_value if target_value > 0 else np.inf
    return CascadeTrace(steps=steps, final_constant=final_constant,
                        start_value=start_value, target_value=target_value,
                        terminated=finished, guard_triggered=guard)
