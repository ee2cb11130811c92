"""Mechanical verification of the induction-closure arithmetic: halting
criteria, contradiction exponents, multi-scale fixed points, and the
two-branch recursion.  Everything is evaluated in log space; unbounded
quantifiers are replaced by finite scans plus monotonicity certificates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dfield


@dataclass
class RecursionConfig:
    epsilon: float
    n: int = 2
    C1: float = 2.0          # constant carried from the initial-scale step
    C2: float = 2.0          # constant of the per-step multi-scale inequality
    n_factor: float = None   # defaults to n
    K: float = None
    k_cap: int = 10_000

    def __post_init__(self):
        if not (0 < self.epsilon < 1):
            raise ValueError("epsilon must lie in (0,1)")
        if min(self.C1, self.C2) <= 0:
            raise ValueError("constants must be positive")
        if self.n_factor is None:
            self.n_factor = float(self.n)


def _halting_log_value(cfg: RecursionConfig, logK: float, k: int) -> float:
    """log of C1 K^(eps/8) (n C2)^k r^(-eps/2 (1+(eps/4)^n)^k) at r = K.

    K enters only through its logarithm: the genuinely minimal K is far
    beyond float range (the double-exponential tail needs eps chi log K to
    beat log(n C2)), so the search runs over log K.
    """
    eps = cfg.epsilon
    chi = (1.0 + (eps / 4.0) ** cfg.n) ** k
    return (math.log(cfg.C1) + (eps / 8.0) * logK
            + k * math.log(cfg.n_factor * cfg.C2)
            - (eps / 2.0) * chi * logK)


def _halting_ok(cfg: RecursionConfig, logK: float):
    """Check the halting inequality for all k >= 1 and r >= K.

    The log of the left side is decreasing in r for every k >= 1 (the
    coefficient eps/8 - (eps/2)(1+chi)^k of log r is negative), so r = K is
    the worst case.  In k the increments log(nC2) - (eps/2) chi (1+chi)^k
    log K strictly decrease, so the finite scan runs until the first
    negative increment and the tail is certified by monotonicity.
    """
    eps = cfg.epsilon
    if logK <= 0.0:
        return False, [(1, logK, float("inf"))]
    chi0 = (eps / 4.0) ** cfg.n
    witnesses = []
    k = 1
    while k <= cfg.k_cap:
        val = _halting_log_value(cfg, logK, k)
        witnesses.append((k, logK, val))
        if val > 0:
            return False, witnesses
        increment = (math.log(cfg.n_factor * cfg.C2)
                     - (eps / 2.0) * chi0 * (1.0 + chi0) ** k * logK)
        if increment < 0:
            return True, witnesses     # strictly decreasing from here on
        k += 1
    return False, witnesses


def snmm_halting_check(config: RecursionConfig, rel_tol: float = 1e-6):
    """Find the minimal log K making the halting inequality hold for all
    k >= 1 and r >= K; returns (passed, minimal log2 K, witness table).

    Witness rows are (k, log K, log value); a row re-evaluates true when its
    value is <= 0."""
    logK = math.log(2.0)
    while logK < 2.0 ** 60:
        ok, _ = _halting_ok(config, logK)
        if ok:
            break
        logK *= 2.0
    else:
        return False, None, []
    lo, hi = logK / 2.0, logK
    while hi - lo > rel_tol * hi:
        mid = 0.5 * (lo + hi)
        ok, _ = _halting_ok(config, mid)
        if ok:
            hi = mid
        else:
            lo = mid
    ok, wit = _halting_ok(config, hi)
    return ok, hi / math.log(2.0), wit


@dataclass
class ClosureConstants:
    """The constants of the final contradiction display; the defaults are the
    derivation's values, adjustable to probe robustness."""
    broad_loss: float = 10.0      # R^(10 eps^(1/2) N0-type loss)
    eps_sq: float = 4.0           # R^(4 eps^2)-type loss
    k_exp_1: float = 54.0         # K-power hitting the first exponent
    k_exp_2: float = 55.0         # K-power hitting the second exponent
    n: int = 3                    # narrow-branch rescaling dimension (>= 3)


def s1bd_closure_check(eta: float, constants: ClosureConstants = None,
                       eps_grid: int = 4000):
    """Given a putative growth exponent eta > 0, search for (eps, eps_1) with

        min(eta - broad_loss sqrt(eps), eta - eps_sq eps^(3/2)
            - broad_loss sqrt(eps)) > eta/2,
        eps_1 < sqrt(eps) eta / (4 k_exp_2),

    and certify the three contradiction exponents positive.  Reports
    infeasible eta (eta <= 0) rather than raising."""
    c = ClosureConstants() if constants is None else constants
    if c.n < 3:
        raise ValueError("narrow-branch dimension must be >= 3")
    if eta <= 0:
        return {"eta": eta, "feasible": False,
                "reason": "eta must be positive for the contradiction"}
    # scan eps downward from the unconstrained bound
    eps_hi = (eta / (2.0 * c.broad_loss)) ** 2
    for j in range(1, eps_grid + 1):
        eps = eps_hi * j / eps_grid
        lhs = min(eta - c.broad_loss * math.sqrt(eps),
                  eta - c.eps_sq * eps ** 1.5 - c.broad_loss * math.sqrt(eps))
        if lhs > eta / 2.0:
            best_eps = eps
    try:
        eps = best_eps
    except NameError:
        return {"eta": eta, "feasible": False, "reason": "no admissible eps"}
    eps1 = math.sqrt(eps) * eta / (4.0 * c.k_exp_2) * 0.9
    exponents = {
        "broad": eta - c.broad_loss * math.sqrt(eps) - c.k_exp_1 * eps1,
        "iterated": (math.sqrt(eps) * eta - c.eps_sq * eps ** 2
                     - c.broad_loss * eps - c.k_exp_2 * eps1),
        "narrow": (c.n - 2) * eps1,
    }
    feasible = all(v > 0 for v in exponents.values())
    return {"eta": eta, "feasible": feasible, "eps": eps, "eps1": eps1,
            "exponents": exponents}


def fixed_point_threshold(epsilon: float, N0: float = None) -> float:
    """Self-consistent growth exponent of the recursion: the middle term
    forces gamma >= (200 + 4 eps)/N0 (and the first term 10 eps N0)."""
    if N0 is None:
        N0 = max(1.0, epsilon ** -0.5)
    return max((200.0 + 4.0 * epsilon) / N0, 10.0 * epsilon * N0)


def multiscale_fixed_point(epsilon: float, N0: float = None, K_rule=None,
                           T_base: float = 1.0, A: float = 2.0,
                           delta: float = None, R_max: float = 2.0 ** 60,
                           log_overflow: float = 5000.0) -> dict:
    """Iterate the weighted-constant recursion over a dyadic R-ladder and
    report whether T(R)/R^delta stays bounded.

    T(R) = (log R)^2 ( K^53 [R^(10 eps N0) A^(1/eps)
                            + R^(4 eps^2 + 200 eps) A^(1/eps) T(R^eps)^(1/eps - N0)]
                      + T(R / K^3) ),
    computed in log space on the ladder with log-linear interpolation.  The
    default delta sits 20% above the self-consistent threshold.
    """
    if N0 is None:
        N0 = max(1.0, epsilon ** -0.5)
    if delta is None:
        delta = 1.2 * fixed_point_threshold(epsilon, N0)
    if K_rule is None:
        def K_rule(R):
            return max(2.0, R ** (epsilon ** 1.5))
    ladder = []
    R = 8.0
    while R <= R_max:
        ladder.append(R)
        R *= 2.0
    logT = {}

    def logT_at(Rq):
        if Rq <= ladder[0]:
            return math.log(T_base)
        xs = [math.log(r) for r in ladder if r <= Rq and math.log(r) in logT]
        # interpolate between computed rungs
        keys = sorted(logT)
        x = math.log(Rq)
        if not keys or x <= keys[0]:
            return math.log(T_base)
        import bisect
        i = bisect.bisect_left(keys, x)
        if i >= len(keys):
            return logT[keys[-1]]
        if keys[i] == x:
            return logT[x]
        x0, x1 = keys[i - 1], keys[i]
        return logT[x0] + (logT[x1] - logT[x0]) * (x - x0) / (x1 - x0)

    diverged = False
    traj = []
    for R in ladder:
        K = K_rule(R)
        if K ** 3 <= 2.0:
            # the shifted term T(R/K^3) stays on the same dyadic rung: no
            # scale gain, the recursion is self-referential
            diverged = True
            traj.append((R, float("inf")))
            break
        lR = math.log(R)
        t_small = logT_at(R ** epsilon)
        t_shift = logT_at(R / K ** 3)
        inv_eps = 1.0 / epsilon
        term1 = 10.0 * epsilon * N0 * lR + inv_eps * math.log(A)
        term2 = ((4.0 * epsilon ** 2 + 200.0 * epsilon) * lR
                 + inv_eps * math.log(A) + (inv_eps - N0) * t_small)
        body = 53.0 * math.log(K) + _logsumexp(term1, term2)
        total = 2.0 * math.log(max(lR, 2.0)) + _logsumexp(body, t_shift)
        if total > log_overflow:
            diverged = True
            traj.append((R, float("inf")))
            break
        logT[lR] = total
        traj.append((R, total - delta * lR))
    sup_ratio = max(v for _, v in traj)
    # bounded: no overflow and the log-ratio has stopped increasing by the
    # end of the ladder (the supremum is interior, increments nonpositive)
    bounded = not diverged
    if bounded and len(traj) >= 6:
        incs = [traj[i + 1][1] - traj[i][1] for i in range(len(traj) - 5,
                                                           len(traj) - 1)]
        bounded = sum(incs) / len(incs) <= 0.05
    return {"epsilon": epsilon, "N0": N0, "delta": delta, "bounded": bounded,
            "diverged": diverged, "sup_log_ratio": sup_ratio,
            "trajectory": traj}


def _logsumexp(a: float, b: float) -> float:
    m = max(a, b)
    if m == float("-inf"):
        return m
    return m + math.log(math.exp(a - m) + math.exp(b - m))


def ingredient_composition_check(base_const: float, progress_const: float,
                                 levels: int, epsilon: float = None,
                                 delta: float = None, K: float = None,
                                 samples=((4.0, 2.0 ** 30), (64.0, 2.0 ** 40))):
    """Unroll the two-branch recursion

        D(r, R) <= A B K^(2 delta) [ D(rK, R) + D(K^2, R K / r) ]

    to the given depth, in log space, verifying the accumulated constant
    against C R^eps for the parameter rule delta = eps/4,
    K = (2AB)^(4/eps)."""
    A, B = base_const, progress_const
    if epsilon is not None:
        if delta is None:
            delta = epsilon / 4.0
        if K is None:
            K = max(2.0, (2.0 * A * B) ** (4.0 / epsilon))
    if delta is None or K is None:
        raise ValueError("need epsilon or explicit (delta, K)")
    step_log = math.log(A) + math.log(B) + 2.0 * delta * math.log(K)

    from functools import lru_cache

    @lru_cache(maxsize=None)
    def logD(log_r, log_R, depth):
        if log_R - log_r <= 2.0 * math.log(K) + 1e-12:
            return math.log(A) + delta * math.log(K)     # base case
        if depth >= levels:
            return 0.0                                   # unit continuation
        b1 = logD(log_r + math.log(K), log_R, depth + 1)
        b2 = logD(2.0 * math.log(K), log_R + math.log(K) - log_r, depth + 1)
        return step_log + _logsumexp(b1, b2)

    out = {"delta": delta, "K": K, "levels": levels, "samples": []}
    worst = -float("inf")
    for r, R in samples:
        val = logD(math.log(r), math.log(R), 0)
        margin = val - (epsilon if epsilon else 4 * delta) * math.log(R)
        out["samples"].append({"r": r, "R": R, "log_value": val,
                               "log_margin": margin})
        worst = max(worst, margin)
    out["worst_log_margin"] = worst
    out["bounded"] = worst < math.log(1e6)
    return out
