"""Norms, square functions, ratio estimators, and the phase-ascent optimizer.

All integrals are Riemann sums on the torus at the field's base sampling
unless an `oversample` factor is passed (zero-padded inversion, which makes
even integer powers of the field exact).  Ratios are scale invariant.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dfield

import numpy as np

from .field import DiscreteField
from .grid import weight_multiplier


def lp_norm(field: DiscreteField, p: float, weight=None,
            oversample: int = 1) -> float:
    """(integral of |f|^p [w])^(1/p) over one period."""
    if p < 1:
        raise ValueError("p must be >= 1")
    samples = field.spatial(oversample)
    vals = np.abs(samples) ** p
    if weight is not None:
        from .weights import weight_eval
        mesh = field.grid.spatial_mesh(centered=True)
        if oversample != 1:
            raise ValueError("weighted norms are base-resolution only")
        pts = np.stack(mesh, axis=-1)
        vals = vals * weight_eval(weight, pts)
    return float(field.grid.integrate(vals, oversample)) ** (1.0 / p)


def square_function(field: DiscreteField, width: float = None) -> np.ndarray:
    """Pointwise sum_tau |f_tau|^2 at the given slab width (default finest)."""
    if width is None or np.isclose(width, field.partition.width):
        groups = {l: [l] for l in field.block_ids}
    else:
        groups = field.coarse_groups(width)
    out = np.zeros(field.grid.sides)
    for ids in groups.values():
        out += np.abs(field.group_component(ids)) ** 2
    return out


def sq_constant(field: DiscreteField, p: float, oversample: int = 1) -> float:
    """Realized ratio int |sum f_theta|^p / int (sum |f_theta|^2)^(p/2)."""
    grid = field.grid
    num = grid.integrate(np.abs(field.spatial(oversample)) ** p, oversample)
    if oversample == 1:
        s = square_function(field)
    else:
        s = np.zeros(tuple(x * oversample for x in grid.sides))
        for l in field.block_ids:
            s += np.abs(field.component(l, oversample)) ** 2
    den = grid.integrate(s ** (p / 2.0), oversample)
    if den <= 0:
        raise ZeroDivisionError("zero square function")
    return float(num / den)


def two_scale_constant(field: DiscreteField, w_coarse: float, w_fine: float,
                       p: float) -> float:
    """int (sum_{tau at w_coarse} |f_tau|^2)^(p/2) over the same at w_fine."""
    if w_coarse < w_fine:
        raise ValueError("coarse width must be >= fine width")
    grid = field.grid
    num = grid.integrate(square_function(field, w_coarse) ** (p / 2.0))
    den = grid.integrate(square_function(field, w_fine) ** (p / 2.0))
    if den <= 0:
        raise ZeroDivisionError("zero square function")
    return float(num / den)


@dataclass
class RatioReport:
    n: int
    p: float
    R: float
    ensemble: str
    ratios: dict                      # seed -> realized ratio
    numerator: float = 0.0
    denominator: float = 0.0

    @property
    def mean(self) -> float:
        return float(np.mean(list(self.ratios.values())))

    @property
    def max(self) -> float:
        return float(np.max(list(self.ratios.values())))


def slope_fit(R_values, ratios) -> float:
    """Least-squares slope of log(ratio) against log(R)."""
    x = np.log(np.asarray(R_values, dtype=float))
    y = np.log(np.asarray(ratios, dtype=float))
    return float(np.polyfit(x, y, 1)[0])


# ---------------------------------------------------------------------------
# phase optimizer

@dataclass
class OptimizerResult:
    ratio: float
    phases: np.ndarray
    trace: list = dfield(default_factory=list)
    converged: bool = False


class RatioObjective:
    """Base-resolution ratio and its analytic phase gradient.

    Coefficients are exp(i phi) on the assigned lattice points; the gradient
    of both integrals follows from d/d(conj c) of the Riemann sums, pulled
    back to the phases (2 Im[conj(c) dI/d(conj c)]).
    """

    def __init__(self, field: DiscreteField, p: float):
        self.grid = field.grid
        self.partition = field.partition
        self.p = p
        self.ids = field.block_ids
        self.supports = {l: field.supports[l] for l in self.ids}
        self.sizes = [len(self.supports[l]) for l in self.ids]
        self.offsets = np.concatenate([[0], np.cumsum(self.sizes)])
        self.total = int(self.offsets[-1])

    def field_for(self, phases: np.ndarray) -> DiscreteField:
        coeffs = {}
        for pos, l in enumerate(self.ids):
            seg = phases[self.offsets[pos]:self.offsets[pos + 1]]
            coeffs[l] = np.exp(1j * seg)
        return DiscreteField(self.grid, self.partition, self.supports, coeffs)

    def value_and_grad(self, phases: np.ndarray):
        grid, p = self.grid, self.p
        f = self.field_for(phases)
        F = f.spatial()
        comps = {l: f.component(l) for l in self.ids}
        S = np.zeros(grid.sides)
        for l in self.ids:
            S += np.abs(comps[l]) ** 2
        num = grid.integrate(np.abs(F) ** p)
        den = grid.integrate(S ** (p / 2.0))
        Q = num / den

        dN = grid.dx * (p / 2.0) * np.fft.fftn(np.abs(F) ** (p - 2.0) * F)
        spow = S ** (p / 2.0 - 1.0)
        grad = np.empty(self.total)
        for pos, l in enumerate(self.ids):
            idx = self.supports[l]
            c = np.exp(1j * phases[self.offsets[pos]:self.offsets[pos + 1]])
            gN = dN.ravel()[idx]
            dD = grid.dx * (p / 2.0) * np.fft.fftn(spow * comps[l]).ravel()[idx]
            g = (gN - Q * dD) / den
            grad[self.offsets[pos]:self.offsets[pos + 1]] = \
                2.0 * np.imag(np.conj(c) * g)
        return Q, grad

    def value(self, phases: np.ndarray) -> float:
        f = self.field_for(phases)
        F = f.spatial()
        S = np.zeros(self.grid.sides)
        for l in self.ids:
            S += np.abs(f.component(l)) ** 2
        return self.grid.integrate(np.abs(F) ** self.p) / \
            self.grid.integrate(S ** (self.p / 2.0))


def maximize_ratio(field: DiscreteField, p: float, budget: int = 200,
                   seed: int = 0, step0: float = 0.5,
                   stall_tol: float = 1e-4, stall_window: int = 50):
    """Gradient ascent over coefficient phases, starting from the field's
    phases perturbed by the seed; returns the best realized ratio, the phase
    vector, and the iteration trace."""
    obj = RatioObjective(field, p)
    rng = np.random.default_rng(seed)
    phases = np.concatenate([np.angle(field.coeffs[l]) for l in obj.ids])
    if seed is not None:
        phases = phases + 0.1 * rng.standard_normal(obj.total)
    step = step0
    best, _ = obj.value_and_grad(phases)
    trace = [best]
    anchor = best
    anchor_at = 0
    for it in range(budget):
        val, grad = obj.value_and_grad(phases)
        gn = np.linalg.norm(grad)
        if not np.isfinite(val):
            raise FloatingPointError("non-finite objective")
        if gn == 0:
            break
        proposal = phases + step * grad / gn
        new_val = obj.value(proposal)
        if new_val > val:
            phases = proposal
            step = min(step * 1.25, 4.0)
            best = max(best, new_val)
        else:
            step *= 0.5
            if step < 1e-8:
                break
        trace.append(best)
        if it - anchor_at >= stall_window:
            if best < anchor * (1.0 + stall_tol):
                return OptimizerResult(best, phases, trace, converged=True)
            anchor, anchor_at = best, it
    return OptimizerResult(best, phases, trace, converged=False)


# ---------------------------------------------------------------------------
# cone-sector local L2 orthogonality

def local_l2_check(n: int, R: float, lam: float, r: float, seeds=range(5),
                   sides=None, kappa: float = None, c_block: float = 1.0):
    """LHS/RHS of the grouped local-L2 inequality for order-(n-1) sectors
    filtered by the dyadic size lam, over a random ensemble.

    Fields live in R^(n+1); sectors are grouped by t-intervals of length
    r^(-1/n) and the localizing weight is a ball of radius lam^(-1) r^(1/n)
    (capped at half the box).  Returns the per-seed ratio list.
    """
    from .geometry import partition_cone, sector_contains
    from .grid import curve_grid as _cg
    from .weights import ball_weight

    dim = n + 1
    if sides is None:
        sides = {3: (64, 64, 64), 4: (24, 24, 24, 24)}[dim]
    grid = _cg(dim, sides)
    sectors = partition_cone(n, n - 1, R, c_block=c_block)

    # lattice assignment: first sector whose lam-filtered set contains the point
    mesh = grid.freq_mesh()
    pts = np.stack([m.ravel() for m in mesh], axis=-1)
    owner = np.full(len(pts), -1, dtype=np.int64)
    for s in sectors:
        lamc = s.coefficients(pts)
        mags = np.abs(lamc)
        box = np.all(mags <= np.minimum(lam, s.half_widths) * (1 + 1e-9), axis=-1)
        peak = mags[:, :n].max(axis=-1)
        j = np.arange(s.m + 1)
        cond = 2.0 ** (s.m + 1 - j) * s.R ** (j / s.n)
        low = np.max(mags[:, : s.m + 1] * cond, axis=-1) >= 1.0 - 1e-9
        sel = box & low & (peak >= lam / 2.0) & (owner < 0)
        owner[sel] = s.index
    if (owner >= 0).sum() == 0:
        raise ValueError("empty sector selection")

    group_width = float(r) ** (-1.0 / n) * c_block
    radius = min(lam ** (-1.0) * float(r) ** (1.0 / n),
                 0.45 * min(1.0 / h for h in grid.h))
    wspec = ball_weight(dim, radius, kappa)
    mesh_x = grid.spatial_mesh(centered=True)
    from .weights import weight_eval
    wvals = weight_eval(wspec, np.stack(mesh_x, axis=-1))

    sector_group = np.array([int(s.a / group_width + 1e-9) for s in sectors])
    live = owner >= 0
    point_group = np.full(len(pts), -1, dtype=np.int64)
    point_group[live] = sector_group[owner[live]]

    ratios = []
    for seed in seeds:
        rng = np.random.default_rng([seed, 77])
        coeffs = np.zeros(len(pts), dtype=complex)
        coeffs[live] = np.exp(2j * np.pi * rng.uniform(size=int(live.sum())))
        total = grid.to_spatial(coeffs.reshape(grid.sides))
        lhs = grid.integrate(np.abs(total) ** 2 * wvals)
        rhs = 0.0
        for gidx in np.unique(point_group[live]):
            cg = np.where(point_group == gidx, coeffs, 0.0)
            piece = grid.to_spatial(cg.reshape(grid.sides))
            rhs += grid.integrate(np.abs(piece) ** 2 * wvals)
        ratios.append(lhs / rhs)
    return ratios
