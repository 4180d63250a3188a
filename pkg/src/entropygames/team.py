"""Team secret-correlation value under imperfect monitoring.

A team of players privately randomizes but shares no explicit common
randomness; the adversary sees their joint action only through a noisy
channel.  The long-run maxmin value is the best R-averaged worst-column
payoff over joint distributions (R, Q, A) in which A is conditionally a
product given Q and the channel leaks no more about (Q, A) than the
shared-randomness budget H(Q|R) (cardinalities |R| = 2, |Q| = 2|A| taken
as given).

The feasible set is nonconvex, so the searcher combines exactly-feasible
structured families (best product profile; correlation over channel-
indistinguishable pure profiles, solved as an exact sub-game LP) with
penalized projected-ascent restarts, and reports the best feasible point
found: a certified LOWER bound on the maxmin value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .game import ProbVector, validate_game
from .lp import game_value
from .rational import ValidationError, to_fraction
from .rng import stream

SLACK_TOL = 1e-10
MAX_JOINT_ACTIONS = 8
MAX_ADVERSARY_ACTIONS = 4
MAX_SIGNALS = 8


@dataclass(frozen=True)
class TeamGameSpec:
    """Payoffs u[a_joint][b] and monitoring channel p(s | a_joint); the
    joint index is row-major over per-player actions (last player fastest).
    """

    action_sets: tuple
    payoff: tuple  # |A| rows of |B| Fractions
    channel: tuple  # |A| rows of |S| Fractions

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.action_sets)
        if not sizes or any(s < 1 for s in sizes):
            raise ValidationError("every player needs at least one action")
        total = math.prod(sizes)
        payoff = tuple(tuple(to_fraction(v) for v in row) for row in self.payoff)
        channel = tuple(tuple(to_fraction(v) for v in row) for row in self.channel)
        if len(payoff) != total:
            raise ValidationError(f"payoff has {len(payoff)} rows, expected {total}")
        if len(channel) != total:
            raise ValidationError(f"channel has {len(channel)} rows, expected {total}")
        if any(len(r) != len(payoff[0]) for r in payoff):
            raise ValidationError("payoff rows are ragged")
        if any(len(r) != len(channel[0]) for r in channel):
            raise ValidationError("channel rows are ragged")
        for a, row in enumerate(channel):
            if any(p < 0 for p in row) or sum(row, Fraction(0)) != 1:
                raise ValidationError(f"channel row {a} is not a pmf")
        object.__setattr__(self, "action_sets", sizes)
        object.__setattr__(self, "payoff", payoff)
        object.__setattr__(self, "channel", channel)

    @property
    def m(self) -> int:
        return len(self.action_sets)

    @property
    def n_joint(self) -> int:
        return math.prod(self.action_sets)

    @property
    def n_cols(self) -> int:
        return len(self.payoff[0])

    @property
    def n_signals(self) -> int:
        return len(self.channel[0])

    @property
    def n_shared(self) -> int:
        """|Q| = 2|A|."""
        return 2 * self.n_joint

    def digits(self, a_joint: int) -> tuple:
        out = []
        for size in reversed(self.action_sets):
            out.append(a_joint % size)
            a_joint //= size
        return tuple(reversed(out))

    @staticmethod
    def from_json_dict(payload: dict) -> "TeamGameSpec":
        sizes = [int(s) for s in payload["players"]]

        def flatten(nested, depth):
            if depth == 0:
                return [nested]
            out = []
            for part in nested:
                out.extend(flatten(part, depth - 1))
            return out

        payoff_rows = flatten(payload["payoff"], len(sizes))
        return TeamGameSpec(
            action_sets=tuple(sizes),
            payoff=tuple(tuple(row) for row in payoff_rows),
            channel=tuple(tuple(row) for row in payload["channel"]),
        )


@dataclass(frozen=True)
class TeamDistribution:
    """(R, Q, per-player conditional actions): rows are pmfs; the induced
    p(a|q) is a product by construction."""

    p_r: tuple
    p_q_given_r: tuple  # 2 rows over Q
    p_ai_given_q: tuple  # per player: |Q| rows over that player's actions

    def row_check(self):
        rows = [self.p_r, *self.p_q_given_r]
        for player in self.p_ai_given_q:
            rows.extend(player)
        for row in rows:
            if any(float(v) < -1e-12 for v in row):
                raise ValidationError("negative probability in team distribution")
            if abs(sum(float(v) for v in row) - 1.0) > 1e-9:
                raise ValidationError("team distribution row does not sum to 1")


def _joint_action_pmf_given_q(spec: TeamGameSpec, d: TeamDistribution):
    """p(a | q) as a |Q| x |A| table, exact when the inputs are exact."""
    out = []
    for q in range(len(d.p_q_given_r[0])):
        row = []
        for a in range(spec.n_joint):
            digs = spec.digits(a)
            mass = 1
            for i in range(spec.m):
                mass = mass * d.p_ai_given_q[i][q][digs[i]]
            row.append(mass)
        out.append(row)
    return out


def team_security(spec: TeamGameSpec, d: TeamDistribution):
    """pi(A|R): the R-averaged worst-column expected payoff."""
    pa_q = _joint_action_pmf_given_q(spec, d)
    total = 0
    for r in range(2):
        pa = [0] * spec.n_joint
        for q, pq in enumerate(d.p_q_given_r[r]):
            if pq == 0:
                continue
            for a in range(spec.n_joint):
                pa[a] = pa[a] + pq * pa_q[q][a]
        worst = min(
            sum(pa[a] * spec.payoff[a][b] for a in range(spec.n_joint))
            for b in range(spec.n_cols)
        )
        total = total + d.p_r[r] * worst
    return total


def entropy_constraint_slack(spec: TeamGameSpec, d: TeamDistribution) -> float:
    """H(QA|SR) - H(Q|R) under the induced joint; feasible iff >= -1e-10."""
    nq = spec.n_shared if len(d.p_q_given_r[0]) == spec.n_shared else len(d.p_q_given_r[0])
    pa_q = np.array(
        [[float(v) for v in row] for row in _joint_action_pmf_given_q(spec, d)]
    )
    ch = np.array([[float(v) for v in row] for row in spec.channel])
    pr = np.array([float(v) for v in d.p_r])
    pq = np.array([[float(v) for v in row] for row in d.p_q_given_r])
    joint = (
        pr[:, None, None, None]
        * pq[:, :, None, None]
        * pa_q[None, :nq, :, None]
        * ch[None, None, :, :]
    )

    def h(x):
        x = x[x > 1e-300]
        return float(-(x * np.log2(x)).sum())

    h_rqas = h(joint.reshape(-1))
    h_sr = h(joint.sum(axis=(1, 2)).reshape(-1))
    h_qr = h(joint.sum(axis=(2, 3)).reshape(-1))
    h_r = h(joint.sum(axis=(1, 2, 3)).reshape(-1))
    return (h_rqas - h_sr) - (h_qr - h_r)


# ---------------------------------------------------------------------------
# structured candidates


def _product_spec_matrix(spec: TeamGameSpec, mixes, player: int):
    """The player's payoff matrix when everyone else plays their mix."""
    size = spec.action_sets[player]
    rows = []
    for ai in range(size):
        row = []
        for b in range(spec.n_cols):
            acc = Fraction(0)
            for a in range(spec.n_joint):
                digs = spec.digits(a)
                if digs[player] != ai:
                    continue
                mass = Fraction(1)
                for k in range(spec.m):
                    if k != player:
                        mass *= mixes[k][digs[k]]
                acc += mass * spec.payoff[a][b]
            row.append(acc)
        rows.append(row)
    return rows


def perfect_monitoring_value(spec: TeamGameSpec, grid: int = 4, seed: int = 0):
    """max over product distributions of the worst-column payoff, by
    cyclic exact best-response ascent from grid and seeded starts.

    For a single player this is the exact game value (products are all
    mixed strategies).  Mixtures over a public R add nothing here: each
    mixture component is itself dominated by the best product.
    """
    if spec.m == 1:
        sol = game_value(validate_game([list(r) for r in spec.payoff]))
        return sol.optimum, (tuple(sol.argmax),)

    rng = stream(seed, "team", "products")
    starts = []
    # deterministic grid corners plus the uniform profile
    for corner in range(min(grid, spec.n_joint)):
        digs = spec.digits(corner % spec.n_joint)
        starts.append(
            [
                tuple(Fraction(int(x == digs[i])) for x in range(spec.action_sets[i]))
                for i in range(spec.m)
            ]
        )
    starts.append(
        [
            tuple(Fraction(1, spec.action_sets[i]) for _ in range(spec.action_sets[i]))
            for i in range(spec.m)
        ]
    )
    for _ in range(grid):
        rand = []
        for i in range(spec.m):
            w = [int(v) for v in rng.integers(1, 12, size=spec.action_sets[i])]
            rand.append(tuple(Fraction(x, sum(w)) for x in w))
        starts.append(rand)

    def sec_of(mixes):
        joint = []
        for a in range(spec.n_joint):
            digs = spec.digits(a)
            mass = Fraction(1)
            for i in range(spec.m):
                mass *= mixes[i][digs[i]]
            joint.append(mass)
        return min(
            sum((joint[a] * spec.payoff[a][b] for a in range(spec.n_joint)), Fraction(0))
            for b in range(spec.n_cols)
        )

    best_val, best_mix = None, None
    for mixes in starts:
        mixes = [tuple(p) for p in mixes]
        val = sec_of(mixes)
        for _ in range(30):
            improved = False
            for i in range(spec.m):
                sol = game_value(validate_game(_product_spec_matrix(spec, mixes, i)))
                if sol.optimum > val:
                    mixes[i] = tuple(sol.argmax)
                    val = sol.optimum
                    improved = True
            if not improved:
                break
        if best_val is None or val > best_val:
            best_val, best_mix = val, [tuple(p) for p in mixes]
    return best_val, tuple(best_mix)


def _profile_class_value(spec: TeamGameSpec):
    """Best correlated value over sets of pure profiles the channel cannot
    distinguish: an exact game-value LP per identical-channel-row class."""
    classes: dict = {}
    for a in range(spec.n_joint):
        classes.setdefault(spec.channel[a], []).append(a)
    best = None
    for members in classes.values():
        sub = [list(spec.payoff[a]) for a in members]
        sol = game_value(validate_game(sub))
        if best is None or sol.optimum > best[0]:
            best = (sol.optimum, members, tuple(sol.argmax))
    return best


def _dist_from_product(spec: TeamGameSpec, mixes) -> TeamDistribution:
    nq = spec.n_shared
    return TeamDistribution(
        p_r=(Fraction(1), Fraction(0)),
        p_q_given_r=(
            tuple([Fraction(1)] + [Fraction(0)] * (nq - 1)),
            tuple([Fraction(1)] + [Fraction(0)] * (nq - 1)),
        ),
        p_ai_given_q=tuple(tuple(tuple(mixes[i]) for _ in range(nq)) for i in range(spec.m)),
    )


def _dist_from_profile_weights(spec: TeamGameSpec, members, weights) -> TeamDistribution:
    """Q ranges over the class members with the LP weights; each q plays
    its pure profile (a product), R is constant."""
    nq = spec.n_shared
    q_row = [Fraction(0)] * nq
    for idx, w in zip(members, weights):
        q_row[idx] = w
    players = []
    for i in range(spec.m):
        rows = []
        for q in range(nq):
            a = q if q < spec.n_joint else q - spec.n_joint
            digs = spec.digits(a)
            rows.append(
                tuple(Fraction(int(x == digs[i])) for x in range(spec.action_sets[i]))
            )
        players.append(tuple(rows))
    return TeamDistribution(
        p_r=(Fraction(1), Fraction(0)),
        p_q_given_r=(tuple(q_row), tuple(q_row)),
        p_ai_given_q=tuple(players),
    )


# ---------------------------------------------------------------------------
# penalized projected ascent


def _project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho = np.nonzero(u * np.arange(1, len(v) + 1) > css)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


class _FloatDist:
    def __init__(self, spec: TeamGameSpec, pr, pq, pa):
        self.spec = spec
        self.pr = pr  # (2,)
        self.pq = pq  # (2, nQ)
        self.pa = pa  # list of (nQ, nA_i)

    def to_team_distribution(self) -> TeamDistribution:
        return TeamDistribution(
            p_r=tuple(to_fraction(repr(float(v))) for v in self.pr / self.pr.sum()),
            p_q_given_r=tuple(
                tuple(to_fraction(repr(float(v))) for v in row / row.sum())
                for row in self.pq
            ),
            p_ai_given_q=tuple(
                tuple(
                    tuple(to_fraction(repr(float(v))) for v in row / row.sum())
                    for row in player
                )
                for player in self.pa
            ),
        )

    def rows(self):
        yield self.pr
        for r in range(2):
            yield self.pq[r]
        for player in self.pa:
            for q in range(player.shape[0]):
                yield player[q]


def _float_eval(spec: TeamGameSpec, fd: _FloatDist, u, ch, digit_idx):
    pa_q = np.ones((fd.pq.shape[1], spec.n_joint))
    for i in range(spec.m):
        pa_q *= fd.pa[i][:, digit_idx[i]]
    pa_r = fd.pq @ pa_q  # (2, |A|)
    sec = float(np.dot(fd.pr, (pa_r @ u).min(axis=1)))
    joint = (
        fd.pr[:, None, None, None]
        * fd.pq[:, :, None, None]
        * pa_q[None, :, :, None]
        * ch[None, None, :, :]
    )

    def h(x):
        x = x[x > 1e-300]
        return float(-(x * np.log2(x)).sum())

    slack = (
        h(joint.reshape(-1))
        - h(joint.sum(axis=(1, 2)).reshape(-1))
        - h(joint.sum(axis=(2, 3)).reshape(-1))
        + h(joint.sum(axis=(1, 2, 3)).reshape(-1))
    )
    return sec, slack


def _ascend(spec: TeamGameSpec, fd: _FloatDist, u, ch, digit_idx, iters: int = 40):
    penalty = 200.0

    def objective():
        sec, slack = _float_eval(spec, fd, u, ch, digit_idx)
        return sec + penalty * min(slack, 0.0), sec, slack

    obj, _, _ = objective()
    step = 0.25
    h_step = 1e-5
    for _ in range(iters):
        improved = False
        for row in fd.rows():
            if len(row) < 2:
                continue
            saved = row.copy()
            grad = np.zeros(len(row))
            for c in range(len(row)):
                bumped = saved.copy()
                bumped[c] += h_step
                row[:] = bumped / bumped.sum()
                cand_obj, _, _ = objective()
                grad[c] = (cand_obj - obj) / h_step
            row[:] = _project_simplex(saved + step * grad)
            cand_obj, _, _ = objective()
            if cand_obj > obj + 1e-12:
                obj = cand_obj
                improved = True
            else:
                row[:] = saved
        if not improved:
            step /= 2
            if step < 1e-4:
                break
    return fd


@dataclass(frozen=True)
class TeamSearchResult:
    w_hat: Fraction | float
    best: TeamDistribution
    certificate: dict


def team_maxmin_search(
    spec: TeamGameSpec, restarts: int = 6, grid: int = 4, seed: int = 0
) -> TeamSearchResult:
    """Best feasible team distribution found: a certified lower bound on
    the maxmin value (the feasible set is nonconvex, so no upper
    certificate is attempted)."""
    if spec.n_joint > MAX_JOINT_ACTIONS:
        raise ValidationError(f"search supports at most {MAX_JOINT_ACTIONS} joint actions")
    if spec.n_cols > MAX_ADVERSARY_ACTIONS or spec.n_signals > MAX_SIGNALS:
        raise ValidationError("adversary/signal alphabets exceed the search caps")

    candidates = []  # (value, dist, label)

    pm_value, pm_mixes = perfect_monitoring_value(spec, grid=grid, seed=seed)
    pm_dist = _dist_from_product(spec, pm_mixes)
    candidates.append((pm_value, pm_dist, "best-product"))

    cls_value, cls_members, cls_weights = _profile_class_value(spec)
    cls_dist = _dist_from_profile_weights(spec, cls_members, cls_weights)
    candidates.append((cls_value, cls_dist, "profile-class-lp"))

    if spec.m == 1:
        # products already span every strategy: the LP value is exact
        best = max(candidates, key=lambda c: float(c[0]))
        slack = entropy_constraint_slack(spec, best[1])
        return TeamSearchResult(
            w_hat=best[0],
            best=best[1],
            certificate={"slack": slack, "family": best[2], "exact": True},
        )

    u = np.array([[float(v) for v in row] for row in spec.payoff])
    ch = np.array([[float(v) for v in row] for row in spec.channel])
    digit_idx = [
        np.array([spec.digits(a)[i] for a in range(spec.n_joint)]) for i in range(spec.m)
    ]
    nq = spec.n_shared

    numeric = []
    for restart in range(restarts):
        rng = stream(seed, "team", "ascent", restart)
        if restart == 0:
            base = cls_dist if float(cls_value) >= float(pm_value) else pm_dist
            pr = np.array([float(v) for v in base.p_r])
            pq = np.array([[float(v) for v in row] for row in base.p_q_given_r])
            pa = [
                np.array([[float(v) for v in row] for row in player])
                for player in base.p_ai_given_q
            ]
            # soften the corners so gradients exist
            pr = 0.98 * pr + 0.02 / 2
            pq = 0.98 * pq + 0.02 / nq
            pa = [0.98 * p + 0.02 / p.shape[1] for p in pa]
        else:
            pr = rng.dirichlet(np.ones(2))
            pq = rng.dirichlet(np.ones(nq), size=2)
            pa = [
                rng.dirichlet(np.ones(spec.action_sets[i]), size=nq)
                for i in range(spec.m)
            ]
        fd = _FloatDist(spec, pr, pq, pa)
        _ascend(spec, fd, u, ch, digit_idx)
        sec, slack = _float_eval(spec, fd, u, ch, digit_idx)
        if slack >= -SLACK_TOL:
            numeric.append((sec, fd.to_team_distribution(), f"ascent-{restart}"))

    for sec, dist, label in numeric:
        candidates.append((sec, dist, label))

    feasible = []
    for value, dist, label in candidates:
        dist.row_check()
        slack = entropy_constraint_slack(spec, dist)
        if slack >= -SLACK_TOL:
            exact_value = team_security(spec, dist)
            feasible.append((float(exact_value), exact_value, dist, label, slack))
    # cannot be empty: constant Q with any product is always feasible
    feasible.sort(key=lambda c: c[0], reverse=True)
    top = feasible[0]
    return TeamSearchResult(
        w_hat=top[1],
        best=top[2],
        certificate={"slack": top[4], "family": top[3], "exact": False},
    )
