"""Monte-Carlo simulation of the repeated game with a leaked randomness
source.

The row player (Alice) plays the block-Markov construction: pure action 0
through the first block, then each block is a deterministic map of the
randomness observed during the previous block (extract-then-simulate,
from the randomness module).  The column player (Bob) defaults to the
myopic best response, computed from his exact posterior over the previous
block's source realization given his leak observations and Alice's
revealed prefix; Bob is handed Alice's map, making the simulated payoff
an honest worst-case test of the secure side.

Total stage count is always (1+N)*L here, so the extend-the-first-block
remainder rule never triggers.  Traces record both the realized stage
payoff and its conditional expectation given Bob's information; their
means (lambda_T and lambda_T_cond) estimate the same expected average
payoff, the latter with far less sampling noise.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .game import PayoffMatrix, ProbVector
from .info import JointPmf, conditional_entropy
from .minentropy import envelope_support, payoff_envelope
from .randomness import BlockMap, BlockSpace, EntropyDeficitError, compose_block_map
from .rational import ValidationError, to_fraction
from .rng import stream


def theoretical_maxmin(game: PayoffMatrix, source: JointPmf, grid_size: int = 129) -> float:
    """The repeated game's maxmin value: the payoff envelope evaluated at
    the per-stage secret entropy H(X|Y)."""
    return float(payoff_envelope(game, conditional_entropy(source), grid_size))


@dataclass(frozen=True)
class RepeatedGameConfig:
    game: PayoffMatrix
    source: JointPmf
    L: int
    N: int
    seed: int
    bob: str = "myopic"  # myopic | fixed | uniform
    bob_column: int = 0
    # targets: None means auto (envelope segment at H(X|Y)*(1-1/L))
    gamma: Fraction | None = None
    p1: ProbVector | None = None
    p2: ProbVector | None = None
    grid_size: int = 129
    eps: float = 0.05
    max_tries: int = 16

    def __post_init__(self):
        if self.L < 1 or self.N < 1:
            raise ValidationError("need L >= 1 and N >= 1")
        if self.bob not in ("myopic", "fixed", "uniform"):
            raise ValidationError(f"unknown bob strategy {self.bob!r}")
        if self.bob == "fixed" and not 0 <= self.bob_column < self.game.n_cols:
            raise ValidationError(f"fixed column {self.bob_column} out of range")


@dataclass(frozen=True)
class AliceStrategy:
    block_map: BlockMap
    act_table: np.ndarray  # (|X|^L, L) action of each previous-block atom
    gamma: Fraction
    p1: ProbVector
    p2: ProbVector
    first_action: int = 0


@dataclass(frozen=True)
class BlockRecord:
    index: int
    tv_to_ideal: float
    avg_payoff: float
    expected_avg_payoff: float
    # exact rationals for the payoff-TV bridge against a fixed column
    exact_expected: Fraction | None = None
    ideal_expected: Fraction | None = None
    bridge_bound: Fraction | None = None


@dataclass(frozen=True)
class SimulationTrace:
    stages: tuple  # (t, x, y, a, b, payoff, expected_payoff)
    blocks: tuple
    lambda_T: float
    lambda_T_cond: float
    target: float
    L: int
    N: int
    seed: int
    bob: str

    def summary(self) -> dict:
        return {
            "lambda_T": self.lambda_T,
            "lambda_T_cond": self.lambda_T_cond,
            "target": self.target,
            "L": self.L,
            "N": self.N,
            "seed": self.seed,
            "bob": self.bob,
        }

    def write_csv(self, fh, header_lines=()):
        for line in header_lines:
            fh.write(f"# {line}\r\n")
        fh.write("kind,t,x,y,a,b,payoff,expected_payoff\r\n")
        for row in self.stages:
            fh.write("stage," + ",".join(str(v) for v in row) + "\r\n")
        fh.write("kind,block,tv,avg_payoff,expected_avg_payoff\r\n")
        for b in self.blocks:
            fh.write(
                f"block,{b.index},{b.tv_to_ideal!r},{b.avg_payoff!r},"
                f"{b.expected_avg_payoff!r}\r\n"
            )
        fh.write("kind,summary\r\n")
        fh.write(f"summary,{json.dumps(self.summary())}\r\n")


def resolve_targets(cfg: RepeatedGameConfig):
    """Either the explicit (gamma, p1, p2) under the strict rate check, or
    the envelope supporting segment at H(X|Y)*(1-1/L), whose 1/L back-off
    enforces the strict inequality the block map needs."""
    from .info import entropy

    h_source = conditional_entropy(cfg.source)
    if cfg.gamma is not None or cfg.p1 is not None or cfg.p2 is not None:
        if cfg.gamma is None or cfg.p1 is None or cfg.p2 is None:
            raise ValidationError("explicit targets need gamma, p1 and p2 together")
        gamma = to_fraction(cfg.gamma)
        rate = float(gamma) * entropy(cfg.p1) + (1 - float(gamma)) * entropy(cfg.p2)
        if not rate < h_source:
            raise EntropyDeficitError(
                f"entropy deficit: target rate {rate:.6f} must be strictly "
                f"below H(X|Y) = {h_source:.6f}"
            )
        return gamma, cfg.p1, cfg.p2
    h_budget = to_fraction(repr(h_source)) * (1 - Fraction(1, cfg.L))
    lo, hi, _ = envelope_support(cfg.game, float(h_budget), cfg.grid_size)
    if lo is hi:
        return Fraction(1), hi.strategy, hi.strategy
    # exact mixing weight, so ceil(gamma*L) cannot overshoot the budget
    # when the segment endpoints are dyadic-friendly
    h_a = to_fraction(repr(lo.h))
    h_b = to_fraction(repr(hi.h))
    gamma = (h_budget - h_a) / (h_b - h_a)
    gamma = min(max(gamma, Fraction(0)), Fraction(1))
    return gamma, hi.strategy, lo.strategy


def alice_block_strategy(cfg: RepeatedGameConfig) -> AliceStrategy:
    """Build Alice's per-block map and tabulate it over all source atoms."""
    gamma, p1, p2 = resolve_targets(cfg)
    bm = compose_block_map(
        cfg.source,
        cfg.L,
        p1,
        p2,
        gamma,
        cfg.eps,
        cfg.seed,
        max_tries=cfg.max_tries,
        certify_joint=False,
    )
    phi = np.array(bm.phi_table, dtype=np.int64)
    act_table = phi[bm.bucket_of_atom]
    return AliceStrategy(block_map=bm, act_table=act_table, gamma=gamma, p1=p1, p2=p2)


def _atom_digits(space: BlockSpace, t: int, atoms: np.ndarray) -> np.ndarray:
    return (atoms // (space.nx ** (space.n - 1 - t))) % space.nx


def _stage_action_marginals(space: BlockSpace, strategy: AliceStrategy):
    """Exact stage-wise pmf of Alice's actions in a steady block."""
    num = space.x_marginal_numerators()
    n_actions = int(strategy.act_table.max()) + 1
    out = []
    for t in range(space.n):
        counts = np.bincount(
            strategy.act_table[:, t], weights=num, minlength=n_actions
        )
        out.append([Fraction(int(c), space.denom_pow) for c in counts])
    return out


def run(cfg: RepeatedGameConfig) -> SimulationTrace:
    """Simulate T = (1+N)*L stages; deterministic given (cfg, seed)."""
    game, source = cfg.game, cfg.source
    L, N = cfg.L, cfg.N
    strategy = alice_block_strategy(cfg)
    space = BlockSpace(source, L)
    u = np.array([[float(x) for x in row] for row in game.entries])
    n_act = game.n

    # draw the whole (x, y) source path
    cells = [(x, y) for x in range(source.nx) for y in range(source.ny)]
    probs = np.array([float(source.table[x][y]) for x, y in cells])
    probs /= probs.sum()
    rng_src = stream(cfg.seed, "source")
    draws = rng_src.choice(len(cells), size=(1 + N) * L, p=probs)
    xs = np.array([cells[i][0] for i in draws])
    ys = np.array([cells[i][1] for i in draws])
    rng_bob = stream(cfg.seed, "bob")

    # conditional p(x | y) numerators for Bob's posterior
    py = source.p_y()
    cond = np.zeros((source.nx, source.ny))
    for x in range(source.nx):
        for y in range(source.ny):
            if py[y] > 0:
                cond[x, y] = float(source.table[x][y] / py[y])

    atoms = np.arange(space.atoms_x, dtype=np.int64)
    digits = [_atom_digits(space, t, atoms) for t in range(L)]

    target_mass_pure = strategy.block_map.simulator.target_mass(
        (strategy.first_action,) * L
    )
    tv_first = float(1 - target_mass_pure)
    tv_steady = float(strategy.block_map.measured_marginal_tv)

    marginals = _stage_action_marginals(space, strategy)
    targets = [strategy.block_map.simulator.stage_target(t) for t in range(L)]
    m_scale = game.abs_max

    stages = []
    blocks = []
    total_pay = 0.0
    total_exp = 0.0
    for k in range(1 + N):
        base = k * L
        if k == 0:
            block_actions = np.full(L, strategy.first_action, dtype=np.int64)
            posterior0 = np.zeros(n_act)
            posterior0[strategy.first_action] = 1.0
            alive = None
            weights = None
        else:
            prev = slice(base - L, base)
            x_prev = xs[prev]
            atom = int(sum(int(x) * source.nx ** (L - 1 - t) for t, x in enumerate(x_prev)))
            block_actions = strategy.act_table[atom]
            y_prev = ys[prev]
            weights = np.ones(space.atoms_x)
            for t in range(L):
                weights *= cond[digits[t], y_prev[t]]
            alive = weights > 0

        block_pay = 0.0
        block_exp = 0.0
        for t in range(L):
            a = int(block_actions[t])
            if k == 0:
                post = posterior0
            else:
                wsum = weights[alive].sum()
                post = (
                    np.bincount(
                        strategy.act_table[alive, t],
                        weights=weights[alive],
                        minlength=n_act,
                    )
                    / wsum
                )
            col_values = post @ u
            if cfg.bob == "myopic":
                b = int(np.argmin(col_values))
            elif cfg.bob == "fixed":
                b = cfg.bob_column
            else:
                b = int(rng_bob.integers(0, game.n_cols))
            pay = float(u[a, b])
            exp_pay = float(col_values[b])
            total_pay += pay
            total_exp += exp_pay
            block_pay += pay
            block_exp += exp_pay
            stages.append((base + t + 1, int(xs[base + t]), int(ys[base + t]), a, b, pay, exp_pay))
            if k > 0:
                alive = alive & (strategy.act_table[:, t] == a)

        rec = BlockRecord(
            index=k + 1,
            tv_to_ideal=tv_first if k == 0 else tv_steady,
            avg_payoff=block_pay / L,
            expected_avg_payoff=block_exp / L,
        )
        if cfg.bob == "fixed":
            j = cfg.bob_column
            if k == 0:
                exact = Fraction(game.entries[strategy.first_action][j])
                tv_b = 1 - target_mass_pure
            else:
                exact = sum(
                    (
                        sum(
                            (marginals[t][a] * game.entries[a][j] for a in range(n_act)),
                            Fraction(0),
                        )
                        for t in range(L)
                    ),
                    Fraction(0),
                ) / L
                tv_b = strategy.block_map.measured_marginal_tv
            ideal = sum(
                (
                    sum(
                        (targets[t][a] * game.entries[a][j] for a in range(n_act)),
                        Fraction(0),
                    )
                    for t in range(L)
                ),
                Fraction(0),
            ) / L
            rec = BlockRecord(
                index=rec.index,
                tv_to_ideal=rec.tv_to_ideal,
                avg_payoff=rec.avg_payoff,
                expected_avg_payoff=rec.expected_avg_payoff,
                exact_expected=exact,
                ideal_expected=ideal,
                bridge_bound=2 * m_scale * tv_b,
            )
        blocks.append(rec)

    t_total = (1 + N) * L
    return SimulationTrace(
        stages=tuple(stages),
        blocks=tuple(blocks),
        lambda_T=total_pay / t_total,
        lambda_T_cond=total_exp / t_total,
        target=theoretical_maxmin(game, source, cfg.grid_size),
        L=L,
        N=N,
        seed=cfg.seed,
        bob=cfg.bob,
    )
