import math
from fractions import Fraction

import pytest

from entropygames.game import validate_game
from entropygames.lp import game_value
from entropygames.rational import ValidationError
from entropygames.team import (
    TeamDistribution,
    TeamGameSpec,
    entropy_constraint_slack,
    perfect_monitoring_value,
    team_maxmin_search,
    team_security,
)

F = Fraction

# two players try to match each other while dodging the adversary's guess
MATCH_PAYOFF = [[0, 1], [0, 0], [0, 0], [1, 0]]
IDENTITY = [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]]
CONSTANT = [[1], [1], [1], [1]]


def match_spec(channel):
    return TeamGameSpec(action_sets=(2, 2), payoff=MATCH_PAYOFF, channel=channel)


def bsc_channel(flip):
    f = lambda a, s: (1 - flip) if a == s else flip
    rows = []
    for a1 in range(2):
        for a2 in range(2):
            rows.append([f(a1, s1) * f(a2, s2) for s1 in range(2) for s2 in range(2)])
    return rows


def uniform_dist(spec, mixes=None):
    nq = spec.n_shared
    if mixes is None:
        mixes = [
            tuple(F(1, spec.action_sets[i]) for _ in range(spec.action_sets[i]))
            for i in range(spec.m)
        ]
    return TeamDistribution(
        p_r=(F(1), F(0)),
        p_q_given_r=(
            tuple([F(1)] + [F(0)] * (nq - 1)),
            tuple([F(1)] + [F(0)] * (nq - 1)),
        ),
        p_ai_given_q=tuple(tuple(tuple(mixes[i]) for _ in range(nq)) for i in range(spec.m)),
    )


def test_team_security_uniform_match():
    spec = match_spec(IDENTITY)
    d = uniform_dist(spec)
    assert team_security(spec, d) == F(1, 4)


def test_team_security_point_mass():
    spec = match_spec(IDENTITY)
    mixes = [(F(1), F(0)), (F(1), F(0))]  # both play 0: worst column is b=0
    assert team_security(spec, uniform_dist(spec, mixes)) == 0


def test_team_security_single_player_reduces_to_security_level():
    from entropygames.game import ProbVector, security_level

    payoff = [[-1, 1, 1], [1, F(1, 2), 1], [1, 1, F(1, 2)]]
    spec = TeamGameSpec(action_sets=(3,), payoff=payoff, channel=[[1], [1], [1]])
    mix = (F(1, 9), F(4, 9), F(4, 9))
    d = uniform_dist(spec, [mix])
    game = validate_game(payoff)
    assert team_security(spec, d) == security_level(game, ProbVector(mix))


def test_team_security_permutation_invariant():
    spec = match_spec(IDENTITY)
    nq = spec.n_shared
    q_row = tuple(F(1, nq) for _ in range(nq))
    rows_a = tuple((F(1, 3), F(2, 3)) if q % 2 else (F(2, 3), F(1, 3)) for q in range(nq))
    rows_b = tuple((F(1, 4), F(3, 4)) if q % 3 else (F(3, 4), F(1, 4)) for q in range(nq))
    d = TeamDistribution(
        p_r=(F(1, 3), F(2, 3)),
        p_q_given_r=(q_row, tuple(reversed(q_row))),
        p_ai_given_q=(rows_a, rows_b),
    )
    base = team_security(spec, d)
    # relabel Q by rotation
    rot = lambda row: tuple(row[1:]) + (row[0],)
    d_rot = TeamDistribution(
        p_r=d.p_r,
        p_q_given_r=(rot(d.p_q_given_r[0]), rot(d.p_q_given_r[1])),
        p_ai_given_q=(rot(rows_a), rot(rows_b)),
    )
    assert team_security(spec, d_rot) == base
    # relabel R by swap
    d_swap = TeamDistribution(
        p_r=(d.p_r[1], d.p_r[0]),
        p_q_given_r=(d.p_q_given_r[1], d.p_q_given_r[0]),
        p_ai_given_q=d.p_ai_given_q,
    )
    assert team_security(spec, d_swap) == base


def test_slack_perfect_monitoring_constant_q():
    spec = match_spec(IDENTITY)
    d = uniform_dist(spec)  # Q constant
    # A is a function of S, so H(QA|SR) = H(Q|R) = 0: boundary feasible
    assert entropy_constraint_slack(spec, d) == pytest.approx(0.0, abs=1e-10)


def test_slack_constant_signal_always_feasible():
    spec = match_spec(CONSTANT)
    nq = spec.n_shared
    q_row = tuple(F(1, nq) for _ in range(nq))
    d = TeamDistribution(
        p_r=(F(1, 2), F(1, 2)),
        p_q_given_r=(q_row, q_row),
        p_ai_given_q=(
            tuple((F(1, 2), F(1, 2)) for _ in range(nq)),
            tuple((F(1, 3), F(2, 3)) for _ in range(nq)),
        ),
    )
    # slack = H(A|QR) >= 0
    assert entropy_constraint_slack(spec, d) >= -1e-12


def test_slack_negative_when_signal_reveals_shared_bit():
    spec = match_spec(IDENTITY)
    nq = spec.n_shared
    q_row = tuple([F(1, 2), F(1, 2)] + [F(0)] * (nq - 2))
    point = lambda x: tuple(F(int(k == x)) for k in range(2))
    d = TeamDistribution(
        p_r=(F(1), F(0)),
        p_q_given_r=(q_row, q_row),
        p_ai_given_q=(
            tuple(point(0) if q == 0 else point(1) for q in range(nq)),
            tuple(point(0) if q == 0 else point(1) for q in range(nq)),
        ),
    )
    # perfect monitoring pins Q from S: slack = -H(Q) = -1
    assert entropy_constraint_slack(spec, d) == pytest.approx(-1.0, abs=1e-9)


def test_perfect_monitoring_match_value():
    val, mixes = perfect_monitoring_value(match_spec(IDENTITY))
    assert val == F(1, 4)
    assert mixes == ((F(1, 2), F(1, 2)), (F(1, 2), F(1, 2)))


def test_perfect_monitoring_single_player_is_game_value():
    payoff = [[-1, 1, 1], [1, F(1, 2), 1], [1, 1, F(1, 2)]]
    spec = TeamGameSpec(action_sets=(3,), payoff=payoff, channel=[[1], [1], [1]])
    val, _ = perfect_monitoring_value(spec)
    assert val == F(7, 9)


def test_perfect_monitoring_separable_game_matches_flat_value():
    # payoff u1(a1,b) + u2(a2,b): products suffice, so the product optimum
    # equals the full game value of the flattened matrix
    import random

    rnd = random.Random(5)
    u1 = [[rnd.randint(-3, 3) for _ in range(2)] for _ in range(2)]
    u2 = [[rnd.randint(-3, 3) for _ in range(2)] for _ in range(2)]
    payoff = []
    for a1 in range(2):
        for a2 in range(2):
            payoff.append([u1[a1][b] + u2[a2][b] for b in range(2)])
    spec = TeamGameSpec(action_sets=(2, 2), payoff=payoff, channel=IDENTITY)
    val, _ = perfect_monitoring_value(spec)
    flat = game_value(validate_game(payoff)).optimum
    assert float(val) == pytest.approx(float(flat), abs=1e-9)


def test_search_match_game_three_channels():
    ident = team_maxmin_search(match_spec(IDENTITY), restarts=4, seed=1)
    noisy = team_maxmin_search(match_spec(bsc_channel(F(1, 4))), restarts=4, seed=1)
    const = team_maxmin_search(match_spec(CONSTANT), restarts=4, seed=1)

    assert abs(float(ident.w_hat) - 0.25) <= 1e-3
    assert abs(float(const.w_hat) - 0.5) <= 1e-3
    # noisier monitoring can only help the team
    assert float(const.w_hat) >= float(noisy.w_hat) - 1e-6
    assert float(noisy.w_hat) >= float(ident.w_hat) - 1e-6
    for res in (ident, noisy, const):
        assert res.certificate["slack"] >= -1e-10
        res.best.row_check()
        # full-correlation upper bound
        flat = game_value(validate_game([list(r) for r in MATCH_PAYOFF])).optimum
        assert float(res.w_hat) <= float(flat) + 1e-9


def test_search_single_player_exact():
    payoff = [[-1, 1, 1], [1, F(1, 2), 1], [1, 1, F(1, 2)]]
    spec = TeamGameSpec(action_sets=(3,), payoff=payoff, channel=[[1], [1], [1]])
    res = team_maxmin_search(spec, seed=3)
    assert res.w_hat == F(7, 9)
    assert res.certificate["exact"]


def test_search_at_least_product_value():
    spec = match_spec(bsc_channel(F(1, 10)))
    res = team_maxmin_search(spec, restarts=3, seed=2)
    pm, _ = perfect_monitoring_value(spec)
    assert float(res.w_hat) >= float(pm) - 1e-9


def test_spec_validation():
    with pytest.raises(ValidationError):
        TeamGameSpec(action_sets=(2, 2), payoff=MATCH_PAYOFF[:3], channel=IDENTITY)
    bad_channel = [[1, 0], [0, 1], [0, 2], [1, 0]]
    with pytest.raises(ValidationError, match="pmf"):
        TeamGameSpec(action_sets=(2, 2), payoff=MATCH_PAYOFF, channel=bad_channel)


def test_from_json_dict():
    payload = {
        "players": [2, 2],
        "payoff": [[[0, 1], [0, 0]], [[0, 0], [1, 0]]],
        "channel": IDENTITY,
    }
    spec = TeamGameSpec.from_json_dict(payload)
    assert spec.payoff == match_spec(IDENTITY).payoff
