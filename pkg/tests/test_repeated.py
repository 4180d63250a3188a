import math
from fractions import Fraction

import pytest

from entropygames.game import validate_game
from entropygames.info import JointPmf
from entropygames.randomness import EntropyDeficitError, compose_block_map
from entropygames.rational import ValidationError
from entropygames.repeated import (
    RepeatedGameConfig,
    alice_block_strategy,
    resolve_targets,
    run,
    theoretical_maxmin,
)

F = Fraction
MP = validate_game([[1, 0], [0, 1]])
FAIR = JointPmf(((F(1, 2),), (F(1, 2),)))
COPY = JointPmf(((F(1, 2), 0), (0, F(1, 2))))
LEAK_HALF = JointPmf(((F(1, 4), 0, F(1, 4)), (0, F(1, 4), F(1, 4))))


def test_theoretical_maxmin_values():
    assert theoretical_maxmin(MP, FAIR) == pytest.approx(0.5, abs=1e-12)
    assert theoretical_maxmin(MP, LEAK_HALF) == pytest.approx(0.25, abs=1e-12)
    assert theoretical_maxmin(MP, COPY) == 0.0  # no secret randomness left


def test_auto_targets_back_off_strictly():
    cfg = RepeatedGameConfig(game=MP, source=FAIR, L=6, N=1, seed=0)
    gamma, p1, p2 = resolve_targets(cfg)
    assert gamma == F(5, 6)
    assert tuple(p1) == (F(1, 2), F(1, 2))
    assert tuple(p2) == (F(1), F(0))
    st = alice_block_strategy(cfg)
    assert st.block_map.simulator.split == 5  # one stage of back-off
    assert st.block_map.measured_marginal_tv == 0


def test_explicit_targets_strictness():
    half = (F(1, 2), F(1, 2))
    with pytest.raises(EntropyDeficitError):
        resolve_targets(
            RepeatedGameConfig(
                game=MP, source=FAIR, L=10, N=1, seed=0, gamma=F(1), p1=half, p2=half
            )
        )
    # backing off the mix passes
    gamma, _, _ = resolve_targets(
        RepeatedGameConfig(
            game=MP,
            source=FAIR,
            L=10,
            N=1,
            seed=0,
            gamma=F(9, 10),
            p1=half,
            p2=(F(1), F(0)),
        )
    )
    assert gamma == F(9, 10)


def test_first_block_plays_pure_action():
    tr = run(RepeatedGameConfig(game=MP, source=FAIR, L=6, N=2, seed=5))
    first = [row for row in tr.stages if row[0] <= 6]
    assert all(row[3] == 0 for row in first)
    # myopic Bob nails the pure action: payoff 0 throughout block 1
    assert all(row[5] == 0.0 for row in first)


def test_zero_tv_blocks_pay_half_conditionally():
    # with the fair-coin source the block map is exactly uniform, so Bob's
    # posterior is uniform on the p1 stages and the expected payoff is 1/2
    tr = run(RepeatedGameConfig(game=MP, source=FAIR, L=12, N=10, seed=2))
    split = 11
    for k in range(1, 11):
        rows = tr.stages[k * 12 : k * 12 + split]
        assert all(abs(r[6] - 0.5) < 1e-12 for r in rows)
        tail = tr.stages[k * 12 + split : (k + 1) * 12]
        assert all(r[6] == 0.0 for r in tail)
    n_blocks = 10
    expect = (n_blocks * split * 0.5) / (12 * 11)
    assert tr.lambda_T_cond == pytest.approx(expect, abs=1e-12)


def test_full_leak_caps_payoff_at_pure_level():
    # when Bob sees X exactly he predicts every action: payoff at most v
    tr = run(RepeatedGameConfig(game=MP, source=COPY, L=10, N=20, seed=3))
    assert tr.lambda_T_cond <= float(MP.v) + 1.0 / 10
    assert tr.lambda_T <= float(MP.v) + 1.0 / 10


def test_defend_side_bound():
    for src in (FAIR, LEAK_HALF):
        for seed in (1, 2):
            tr = run(RepeatedGameConfig(game=MP, source=src, L=10, N=50, seed=seed))
            assert tr.lambda_T_cond <= tr.target + 0.02


def test_per_block_tv_matches_certified_compose():
    cfg = RepeatedGameConfig(game=MP, source=FAIR, L=10, N=3, seed=7)
    tr = run(cfg)
    gamma, p1, p2 = resolve_targets(cfg)
    bm = compose_block_map(FAIR, 10, p1, p2, gamma, cfg.eps, cfg.seed, max_tries=cfg.max_tries)
    # constant leak column: the joint and marginal TVs coincide
    assert bm.measured_joint_tv == bm.measured_marginal_tv
    for b in tr.blocks[1:]:
        assert b.tv_to_ideal == float(bm.measured_joint_tv)


def test_payoff_tv_bridge_fixed_column_exact():
    for src in (FAIR, LEAK_HALF):
        for j in (0, 1):
            tr = run(
                RepeatedGameConfig(
                    game=MP, source=src, L=8, N=5, seed=11, bob="fixed", bob_column=j
                )
            )
            for b in tr.blocks:
                assert b.exact_expected is not None
                assert abs(b.exact_expected - b.ideal_expected) <= b.bridge_bound


def test_replay_determinism():
    cfg = RepeatedGameConfig(game=MP, source=LEAK_HALF, L=8, N=4, seed=13, bob="uniform")
    assert run(cfg) == run(cfg)


def test_trace_shape_and_csv(tmp_path):
    tr = run(RepeatedGameConfig(game=MP, source=FAIR, L=6, N=2, seed=1))
    assert len(tr.stages) == 18
    assert len(tr.blocks) == 3
    assert tr.lambda_T == pytest.approx(
        sum(r[5] for r in tr.stages) / 18, abs=1e-12
    )
    out = tmp_path / "trace.csv"
    with open(out, "w", newline="") as fh:
        tr.write_csv(fh)
    text = out.read_text()
    assert "kind,t,x,y,a,b,payoff,expected_payoff" in text
    assert "summary," in text


def test_config_validation():
    with pytest.raises(ValidationError):
        RepeatedGameConfig(game=MP, source=FAIR, L=0, N=2, seed=1)
    with pytest.raises(ValidationError):
        RepeatedGameConfig(game=MP, source=FAIR, L=4, N=2, seed=1, bob="psychic")
    with pytest.raises(ValidationError):
        RepeatedGameConfig(game=MP, source=FAIR, L=4, N=2, seed=1, bob="fixed", bob_column=5)
