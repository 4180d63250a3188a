"""Distance separation between guarantee polytopes.

Raising the guarantee level from w2 to w1 pushes the new polytope a
quantifiable distance away from the complement of the old one, in both
total variation and order-2 divergence.  This module exposes the two
closed-form bounds, the chi-squared/variance lemma behind the d2 bound,
and a sampling harness that checks every drawn pair against the bounds
(a violation would disprove a theorem, so the harness aborts on one).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .game import PayoffMatrix
from .lp import game_value
from .minentropy import polytope_vertices
from .rational import ValidationError, to_fraction
from .rng import stream

REJECTION_ATTEMPT_CAP = 1_000_000
D1_TOL = 1e-12
D2_TOL = 1e-9


def _check_ordering(game: PayoffMatrix, w1: Fraction, w2: Fraction):
    if not (game.v <= w2 <= w1):
        raise ValidationError(f"need v <= w2 <= w1, got v={game.v}, w2={w2}, w1={w1}")
    w_star = game_value(game).optimum
    if w1 > w_star:
        raise ValidationError(f"w1={w1} exceeds the game value {w_star}")


def d1_separation_bound(game: PayoffMatrix, w1, w2) -> Fraction:
    """TV distance between the w1-polytope and the complement of the
    w2-polytope is at least |w1-w2| / |m_hi-m_lo|."""
    w1, w2 = to_fraction(w1), to_fraction(w2)
    _check_ordering(game, w1, w2)
    if w1 == w2:
        return Fraction(0)
    return (w1 - w2) / (game.m_hi - game.m_lo)


def d2_separation_bound(game: PayoffMatrix, w1, w2) -> float:
    """Order-2 divergence bound log2(1 + (w1-w2)^2/((w1-m_lo)(m_hi-w1))).

    Infinite when w1 equals the maximum entry (zero denominator)."""
    w1, w2 = to_fraction(w1), to_fraction(w2)
    _check_ordering(game, w1, w2)
    if w1 == w2:
        return 0.0
    if w1 == game.m_hi:
        return math.inf
    return math.log2(float(1 + (w1 - w2) ** 2 / ((w1 - game.m_lo) * (game.m_hi - w1))))


def variance_ratio_bound(w1, w2, m_lo, m_hi) -> Fraction:
    """min over mean-w1 random variables in [m_lo, m_hi] of
    (E[W]-w2)^2/Var[W], which is (w1-w2)^2/((w1-m_lo)(m_hi-w1))."""
    w1, w2, m_lo, m_hi = map(to_fraction, (w1, w2, m_lo, m_hi))
    if not (m_lo <= w2 < w1 <= m_hi):
        raise ValidationError(f"need m_lo <= w2 < w1 <= m_hi, got {m_lo}, {w2}, {w1}, {m_hi}")
    denom = (w1 - m_lo) * (m_hi - w1)
    if denom == 0:
        return math.inf
    return (w1 - w2) ** 2 / denom


def chapman_robbins(p, q, x) -> dict:
    """chi^2(p, q) versus the mean-shift-over-variance ratio for payoffs x.

    chi2 >= ratio always, with equality at x = (p-q)/q.  A zero variance
    with distinct means is a support violation and yields ratio = +inf.
    """
    p = [float(v) for v in p]
    q = [float(v) for v in q]
    x = [float(v) for v in x]
    if not (len(p) == len(q) == len(x)):
        raise ValidationError("p, q, x must share a length")
    chi2 = 0.0
    for pi, qi in zip(p, q):
        diff = pi - qi
        if diff == 0.0:
            continue
        if qi == 0.0:
            chi2 = math.inf
            break
        chi2 += diff * diff / qi
    mean_q = sum(qi * xi for qi, xi in zip(q, x))
    mean_p = sum(pi * xi for pi, xi in zip(p, x))
    var_q = sum(qi * (xi - mean_q) ** 2 for qi, xi in zip(q, x))
    support_violation = False
    if var_q == 0.0:
        if mean_p == mean_q:
            ratio = 0.0
        else:
            ratio = math.inf
            support_violation = True
    else:
        ratio = (mean_q - mean_p) ** 2 / var_q
    gap = chi2 - ratio
    return {"chi2": chi2, "ratio": ratio, "gap": gap, "support_violation": support_violation}


@dataclass(frozen=True)
class SeparationCheck:
    w1: Fraction
    w2: Fraction
    n_samples: int
    bound_d1: float
    bound_d2: float
    min_observed_d1: float
    min_observed_d2: float
    violations: int
    partial: bool  # some rejection pool starved and fell back to vertices

    def to_json(self) -> str:
        return json.dumps(
            {
                "w1": float(self.w1),
                "w2": float(self.w2),
                "bound_d1": self.bound_d1,
                "bound_d2": self.bound_d2,
                "min_d1": self.min_observed_d1,
                "min_d2": self.min_observed_d2,
                "samples": self.n_samples,
                "violations": self.violations,
                "partial": self.partial,
            }
        )


def _payoffs(u, pts):
    return pts @ u


def _sample_pool(u, rng, n, accept, batch=4096):
    """Rejection-sample flat-Dirichlet points until n accepted or the
    attempt cap is hit.  accept maps a (batch, n_cols) payoff array to a
    boolean mask."""
    dim = u.shape[0]
    out = []
    attempts = 0
    while len(out) < n and attempts < REJECTION_ATTEMPT_CAP:
        pts = rng.dirichlet(np.ones(dim), size=batch)
        attempts += batch
        mask = accept(_payoffs(u, pts))
        if mask.any():
            out.extend(pts[mask][: n - len(out)])
    return out, attempts


def _perturbed_boundary_points(game: PayoffMatrix, w2: Fraction, u, delta=1e-6):
    """Vertices of the w2-polytope nudged outward through a tight column
    facet; keeps complement sampling alive when the complement is thin."""
    out = []
    try:
        vs = polytope_vertices(game, w2)
    except Exception:
        return out
    n = game.n
    for p, active in zip(vs.vertices, vs.active_sets):
        cols = [k - n for k in active if k >= n]
        for j in cols:
            col = u[:, j]
            d = -(col - col.mean())
            if np.allclose(d, 0):
                continue
            cand = np.array([float(v) for v in p]) + delta * d / np.abs(d).max()
            cand = np.clip(cand, 0.0, None)
            s = cand.sum()
            if s <= 0:
                continue
            cand /= s
            if (u.T @ cand).min() < float(w2):
                out.append(cand)
    return out


def sample_check_separation(
    game: PayoffMatrix, w1, w2, n_samples: int, seed: int
) -> SeparationCheck:
    """Draw pairs (p outside the w2-polytope, q inside the w1-polytope),
    plus all deterministic vertex pairs, and assert both separation bounds
    on every pair.  Aborts with the offending pair on any violation."""
    w1, w2 = to_fraction(w1), to_fraction(w2)
    _check_ordering(game, w1, w2)
    if n_samples < 1:
        raise ValidationError("n_samples must be >= 1")
    bound1 = float(d1_separation_bound(game, w1, w2))
    bound2 = d2_separation_bound(game, w1, w2)

    u = np.array([[float(x) for x in row] for row in game.entries])
    rng_p = stream(seed, "separation", "complement")
    rng_q = stream(seed, "separation", "polytope")

    w1f, w2f = float(w1), float(w2)
    p_pool, _ = _sample_pool(u, rng_p, n_samples, lambda pay: pay.min(axis=1) < w2f)
    q_pool, _ = _sample_pool(u, rng_q, n_samples, lambda pay: pay.min(axis=1) >= w1f)

    partial = False
    boundary_p = _perturbed_boundary_points(game, w2, u)
    vertex_q = [
        np.array([float(v) for v in p]) for p in polytope_vertices(game, w1).vertices
    ]
    if len(p_pool) < n_samples:
        partial = True
        p_pool.extend(boundary_p)
    if len(q_pool) < n_samples:
        partial = True
        q_pool.extend(vertex_q)
    if not p_pool or not q_pool:
        raise ValidationError(
            f"no usable samples on one side (w1={w1}, w2={w2}); polytope too thin"
        )

    pairs = [
        (p_pool[i % len(p_pool)], q_pool[i % len(q_pool)]) for i in range(n_samples)
    ]
    pairs += [(p, q) for p in boundary_p for q in vertex_q]

    min_d1 = math.inf
    min_d2 = math.inf
    violations = 0
    for p, q in pairs:
        d1 = 0.5 * np.abs(p - q).sum()
        with np.errstate(divide="ignore"):
            mask = p > 0
            if (q[mask] == 0).any():
                d2 = math.inf
            else:
                d2 = math.log2((p[mask] ** 2 / q[mask]).sum())
        min_d1 = min(min_d1, d1)
        min_d2 = min(min_d2, d2)
        if d1 < bound1 - D1_TOL or d2 < bound2 - D2_TOL:
            violations += 1
            raise AssertionError(
                f"separation bound violated: d1={d1} (bound {bound1}), "
                f"d2={d2} (bound {bound2}) at p={p}, q={q}"
            )
    return SeparationCheck(
        w1=w1,
        w2=w2,
        n_samples=len(pairs),
        bound_d1=bound1,
        bound_d2=bound2,
        min_observed_d1=float(min_d1),
        min_observed_d2=float(min_d2),
        violations=violations,
        partial=partial,
    )
