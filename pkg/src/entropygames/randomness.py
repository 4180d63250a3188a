"""Constructive randomness extraction and source simulation.

Extraction draws seeded 2-universal hashes (GF(2) linear maps on
bit-encoded blocks, or fully random tables) and certifies each candidate
by computing the *exact* total variation between (hash(X^n), Y^n) and
uniform x p_{Y^n}; existence-by-averaging becomes construction-by-search.
Simulation maps uniform bits to a two-piece i.i.d. product target through
the interval algorithm (dyadic midpoint decoding of the lexicographic CDF
tree, exact rational arithmetic).  Composing the two gives the block map
used by block-Markov strategies, again with its joint TV measured
exactly.

Two exact-TV engines exist: a full-grid enumerator capped at 2^22 joint
atoms, and a closed-form coset decomposition over leak masks for
uniform-symbol erasure sources (where the conditional block distribution
is uniform on an affine GF(2) subspace), which handles block lengths far
beyond the grid cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .game import ProbVector
from .info import (
    JointPmf,
    collision_entropy_cond,
    conditional_entropy,
    entropy,
    typical_collision_bound,
)
from .rational import ResourceCapError, ValidationError, to_fraction
from .rng import stream

GRID_CELL_CAP = 1 << 22
MARGINAL_ATOM_CAP = 1 << 20
MASK_CAP = 1 << 20
FLOAT_EXACT_LIMIT = 1 << 52


class EntropyDeficitError(ValidationError):
    """The requested target consumes more entropy than the source yields."""


def leftover_bound(h2, ell: int, eps=0.0) -> float:
    """TV guarantee of hashing to ell bits from collision entropy h2:
    2*eps + (1/2) 2^{-(h2-ell)/2}; eps=0 is the unsmoothed form."""
    if ell < 0:
        raise ValidationError("output width must be nonnegative")
    return 2.0 * float(eps) + 0.5 * 2.0 ** (-(float(h2) - ell) / 2.0)


@dataclass(frozen=True)
class ErasureInfo:
    """Marks a joint as 'uniform symbols leaked through an erasure': each
    symbol reaches Bob intact with probability alpha, else as a fixed null
    signal, and X itself is uniform on a power-of-two alphabet."""

    alpha: Fraction
    y_of_x: tuple  # bijection x -> leak column
    null_y: int | None


def detect_uniform_erasure(j: JointPmf) -> ErasureInfo | None:
    nx = j.nx
    if nx & (nx - 1):
        return None
    px = j.p_x()
    if any(p != Fraction(1, nx) for p in px):
        return None
    null_candidates = [
        y
        for y in range(j.ny)
        if all(j.table[x][y] == j.table[0][y] for x in range(nx)) and j.table[0][y] > 0
    ]
    null_y = null_candidates[0] if len(null_candidates) == 1 else None
    one_minus_alpha = j.table[0][null_y] * nx if null_y is not None else Fraction(0)
    alpha = 1 - one_minus_alpha
    y_of_x = []
    for x in range(nx):
        leak_cols = [
            y for y in range(j.ny) if y != null_y and j.table[x][y] > 0
        ]
        if alpha == 0:
            if leak_cols:
                return None
            y_of_x.append(-1)
            continue
        if len(leak_cols) != 1 or j.table[x][leak_cols[0]] != alpha / nx:
            return None
        y_of_x.append(leak_cols[0])
    if alpha > 0 and len(set(y_of_x)) != nx:
        return None
    return ErasureInfo(alpha=alpha, y_of_x=tuple(y_of_x), null_y=null_y)


class BlockSpace:
    """The n-fold i.i.d. block of a joint pmf, with integer-numerator
    machinery for exact TV computation."""

    def __init__(self, j: JointPmf, n: int):
        if n < 1:
            raise ValidationError("block length must be >= 1")
        self.j = j
        self.n = n
        self.nx, self.ny = j.nx, j.ny
        denom = math.lcm(*(v.denominator for row in j.table for v in row))
        self.denom = denom
        self.cell_num = np.array(
            [[int(v * denom) for v in row] for row in j.table], dtype=np.int64
        )
        self.denom_pow = denom**n
        self.atoms_x = j.nx**n
        self.atoms_y = j.ny**n
        self.erasure = detect_uniform_erasure(j)
        self._grid = None
        self._x_marg = None

    def nbits(self) -> int | None:
        """Bits per block when |X| is a power of two, else None."""
        if self.nx & (self.nx - 1):
            return None
        return self.n * (self.nx.bit_length() - 1)

    def grid_numerators(self) -> np.ndarray:
        """(atoms_x, atoms_y) integer-valued float64 grid of joint-block
        mass numerators over denom**n.  Exact while values stay < 2^53."""
        if self._grid is None:
            if self.atoms_x * self.atoms_y > GRID_CELL_CAP:
                raise ResourceCapError(
                    f"joint block has {self.atoms_x * self.atoms_y} atoms, "
                    f"over the enumeration cap {GRID_CELL_CAP}"
                )
            if self.denom_pow >= FLOAT_EXACT_LIMIT:
                raise ResourceCapError(
                    "mass denominators too large for exact float64 enumeration"
                )
            g = np.array([[1.0]])
            cell = self.cell_num.astype(np.float64)
            for _ in range(self.n):
                g = np.kron(g, cell)
            self._grid = g
        return self._grid

    def x_marginal_numerators(self) -> np.ndarray:
        """Length atoms_x exact-integer float64 numerators of the X-block
        marginal over denom**n."""
        if self._x_marg is None:
            if self.atoms_x > MARGINAL_ATOM_CAP:
                raise ResourceCapError(
                    f"{self.atoms_x} X-block atoms exceed the cap {MARGINAL_ATOM_CAP}"
                )
            if self.denom_pow >= FLOAT_EXACT_LIMIT:
                raise ResourceCapError(
                    "mass denominators too large for exact float64 enumeration"
                )
            row = self.cell_num.sum(axis=1).astype(np.float64)
            m = np.array([1.0])
            for _ in range(self.n):
                m = np.kron(m, row)
            self._x_marg = m
        return self._x_marg


# ---------------------------------------------------------------------------
# hash families


def gf2_draw_columns(nbits: int, ell: int, rng) -> tuple:
    """A random ell x nbits GF(2) matrix, stored column-wise as ell-bit ints."""
    return tuple(int(v) for v in rng.integers(0, 1 << ell, size=nbits, dtype=np.int64))


def gf2_apply(cols, nbits: int, atoms: np.ndarray) -> np.ndarray:
    """Multiply the column-encoded matrix by every atom's bit vector.
    Bit (nbits-1-c) of an atom multiplies column c (big-endian blocks)."""
    out = np.zeros(atoms.shape, dtype=np.int64)
    for c in range(nbits):
        bit = (atoms >> (nbits - 1 - c)) & 1
        out ^= cols[c] * bit
    return out


def table_draw(atoms_x: int, ell: int, rng) -> np.ndarray:
    return rng.integers(0, 1 << ell, size=atoms_x, dtype=np.int64)


# ---------------------------------------------------------------------------
# exact extraction TV


def extraction_tv_grid(space: BlockSpace, ell: int, buckets: np.ndarray) -> Fraction:
    """Exact TV of (bucket(X^n), Y^n) from uniform x p_{Y^n}, by full-grid
    enumeration with integer numerators."""
    grid = space.grid_numerators()
    num_y = grid.sum(axis=0)
    scale = 1 << ell
    if space.denom_pow * scale >= FLOAT_EXACT_LIMIT:
        raise ResourceCapError("bucket scaling exceeds exact float64 range")
    agg = np.zeros((scale, grid.shape[1]))
    np.add.at(agg, buckets, grid)
    total = int(np.abs(agg * scale - num_y[None, :]).sum())
    return Fraction(total, 2 * scale * space.denom_pow)


def _echelon_insert(basis: list, vec: int) -> bool:
    """Reduce vec against an int-encoded echelon basis; insert if new."""
    for b in basis:
        vec = min(vec, vec ^ b)
    if vec:
        basis.append(vec)
        basis.sort(reverse=True)
        return True
    return False


def _reduce(basis, vec: int) -> int:
    for b in basis:
        vec = min(vec, vec ^ b)
    return vec


def extraction_tv_erasure(space: BlockSpace, ell: int, cols) -> Fraction:
    """Exact TV for uniform-erasure sources without grid enumeration.

    Conditioned on Bob's view, the bucket is uniform on a coset of the
    span of the unleaked symbol columns; a coset of dimension d misses
    uniformity by exactly 1 - 2^(d-ell), independent of the leak values,
    so the TV is a rank-weighted sum over the 2^n leak masks.
    """
    era = space.erasure
    L = space.n
    if (1 << L) > MASK_CAP:
        raise ResourceCapError(f"2^{L} leak masks exceed the cap {MASK_CAP}")
    b = space.nx.bit_length() - 1
    alpha = era.alpha
    sym_cols = [cols[t * b : (t + 1) * b] for t in range(L)]
    pow_a = [alpha**k * (1 - alpha) ** (L - k) for k in range(L + 1)]
    counts: dict = {}
    for mask in range(1 << L):
        k = mask.bit_count()
        if pow_a[k] == 0:
            continue
        basis: list = []
        for t in range(L):
            if not (mask >> t) & 1:
                for c in sym_cols[t]:
                    _echelon_insert(basis, c)
        key = (k, len(basis))
        counts[key] = counts.get(key, 0) + 1
    tv = Fraction(0)
    for (k, d), cnt in counts.items():
        tv += pow_a[k] * cnt * (1 - Fraction(1, 1 << (ell - d)))
    return tv


@dataclass(frozen=True)
class Extractor:
    """A seeded hash certified (or best-effort) against the leftover bound."""

    n: int
    ell: int
    seed: int
    family: str  # "gf2" | "table"
    try_index: int
    measured_tv: Fraction
    certified: bool
    certified_bound: float
    gf2_cols: tuple | None = None

    def spec(self) -> dict:
        return {
            "n": self.n,
            "ell": self.ell,
            "seed": self.seed,
            "family": self.family,
            "try_index": self.try_index,
            "measured_tv": float(self.measured_tv),
            "certified": self.certified,
            "certified_bound": self.certified_bound,
        }


def _draw_buckets(space: BlockSpace, ell: int, family: str, seed: int, try_index: int):
    """(bucket array over x-atoms, gf2 columns or None) for one hash draw."""
    if family == "gf2":
        nbits = space.nbits()
        rng = stream(seed, "extractor", "gf2", try_index)
        cols = gf2_draw_columns(nbits, ell, rng)
        atoms = np.arange(space.atoms_x, dtype=np.int64)
        return gf2_apply(cols, nbits, atoms), cols
    rng = stream(seed, "extractor", "table", try_index)
    return table_draw(space.atoms_x, ell, rng), None


def _extraction_tv(space: BlockSpace, ell: int, buckets, cols) -> Fraction:
    if cols is not None and space.erasure is not None:
        return extraction_tv_erasure(space, ell, cols)
    return extraction_tv_grid(space, ell, buckets)


def build_extractor(
    j: JointPmf,
    n: int,
    ell: int,
    seed: int,
    max_tries: int = 64,
    eps: float = 0.05,
    family: str | None = None,
) -> Extractor:
    """Search seeded hashes for one whose exact TV meets the smoothed
    leftover bound at the given eps; return the first certified hit, else
    the best try flagged uncertified."""
    space = BlockSpace(j, n)
    if family is None:
        family = "gf2" if space.nbits() is not None else "table"
    if family == "gf2" and space.nbits() is None:
        raise ValidationError("gf2 family needs |X| to be a power of two")
    if ell < 0 or ell > n * math.log2(space.nx) + 1e-9:
        raise ValidationError(
            f"cannot extract {ell} bits from {n} symbols over an alphabet of {space.nx}"
        )
    if eps > 0:
        h2_floor = typical_collision_bound(j, n, eps).bound
    else:
        # unsmoothed form: the block collision entropy is additive
        h2_floor = n * collision_entropy_cond(j)
    bound = leftover_bound(h2_floor, ell, eps)

    # A certificate needs an actual entropy margin (the guarantee term is
    # below 1/2 only when h2_floor >= ell) and a hash beating the trivial
    # TV of 1/2; a measured TV of exactly 0 certifies on its own.
    certifiable = bound < 1.0 and h2_floor >= ell

    best = None
    for t in range(max_tries):
        buckets, cols = _draw_buckets(space, ell, family, seed, t)
        tv = _extraction_tv(space, ell, buckets, cols)
        if best is None or tv < best[0]:
            best = (tv, t, cols)
        if tv == 0 or (certifiable and tv <= bound and tv < Fraction(1, 2)):
            return Extractor(
                n=n,
                ell=ell,
                seed=seed,
                family=family,
                try_index=t,
                measured_tv=tv,
                certified=True,
                certified_bound=bound,
                gf2_cols=cols,
            )
    tv, t, cols = best
    return Extractor(
        n=n,
        ell=ell,
        seed=seed,
        family=family,
        try_index=t,
        measured_tv=tv,
        certified=False,
        certified_bound=bound,
        gf2_cols=cols,
    )


def extractor_buckets(space: BlockSpace, ext: Extractor) -> np.ndarray:
    buckets, _ = _draw_buckets(space, ext.ell, ext.family, ext.seed, ext.try_index)
    return buckets


# ---------------------------------------------------------------------------
# source simulation (interval algorithm)


@dataclass(frozen=True)
class SourceSimulator:
    """Deterministic map from input_bits uniform bits to an A^L block
    targeting p1 on the first ceil(gamma*L) stages and p2 after.

    decode() walks the lexicographic CDF tree of the product target and
    emits the symbol whose interval contains the dyadic midpoint of the
    input atom; exact rational arithmetic throughout.
    """

    p1: ProbVector
    p2: ProbVector
    gamma: Fraction
    L: int
    input_bits: int

    def __post_init__(self):
        if len(self.p1) != len(self.p2):
            raise ValidationError("the two target alphabets must match")
        if not (0 <= self.gamma <= 1):
            raise ValidationError("gamma must be in [0, 1]")
        if self.input_bits < 1 or self.input_bits > 22:
            raise ValidationError("input_bits must be in 1..22")

    @property
    def alphabet(self) -> int:
        return len(self.p1)

    @property
    def split(self) -> int:
        """Stages drawn from p1 (ceil(gamma * L))."""
        return int(math.ceil(self.gamma * self.L)) if self.gamma < 1 else self.L

    def stage_target(self, t: int) -> ProbVector:
        return self.p1 if t < self.split else self.p2

    def decode(self, uniform_index: int) -> tuple:
        if not 0 <= uniform_index < (1 << self.input_bits):
            raise ValidationError("uniform index out of range")
        m = Fraction(2 * uniform_index + 1, 1 << (self.input_bits + 1))
        lo, hi = Fraction(0), Fraction(1)
        out = []
        for t in range(self.L):
            p = self.stage_target(t)
            width = hi - lo
            acc = lo
            # m lies in [lo, hi) exactly, so the scan always lands in a
            # positive-mass cell (zero-mass cells are empty intervals)
            for s in range(self.alphabet):
                nxt = acc + width * p[s]
                if m < nxt:
                    lo, hi = acc, nxt
                    out.append(s)
                    break
                acc = nxt
            else:
                raise AssertionError("midpoint escaped the CDF partition")
        return tuple(out)

    def target_mass(self, sequence) -> Fraction:
        mass = Fraction(1)
        for t, s in enumerate(sequence):
            mass *= self.stage_target(t)[s]
        return mass

    def output_pmf(self) -> dict:
        """Exact pushforward of the uniform input through decode()."""
        counts: dict = {}
        for idx in range(1 << self.input_bits):
            seq = self.decode(idx)
            counts[seq] = counts.get(seq, 0) + 1
        scale = Fraction(1, 1 << self.input_bits)
        return {seq: c * scale for seq, c in counts.items()}

    def measured_tv(self) -> Fraction:
        """Exact TV between the induced output pmf and the product target."""
        if self.alphabet**self.L > MARGINAL_ATOM_CAP:
            raise ResourceCapError("output space too large for exact TV")
        out = self.output_pmf()
        hit_target = Fraction(0)
        acc = Fraction(0)
        for seq, mass in out.items():
            t = self.target_mass(seq)
            hit_target += t
            acc += abs(mass - t)
        return (acc + (1 - hit_target)) / 2


def simulate_source(sim: SourceSimulator, uniform_index: int) -> tuple:
    """Evaluate the interval-algorithm map on one uniform atom."""
    return sim.decode(uniform_index)


# ---------------------------------------------------------------------------
# composed block map


@dataclass(frozen=True)
class BlockMap:
    """psi = simulator . extractor : X^L -> A^L, with exact diagnostics."""

    extractor: Extractor
    simulator: SourceSimulator
    L: int
    bucket_of_atom: np.ndarray
    phi_table: tuple  # bucket -> action sequence
    measured_joint_tv: Fraction | None
    measured_marginal_tv: Fraction
    rates: dict

    def psi(self, x_atom: int) -> tuple:
        return self.phi_table[int(self.bucket_of_atom[x_atom])]


def _sequence_key(seq, alphabet: int) -> int:
    key = 0
    for s in seq:
        key = key * alphabet + s
    return key


def composed_joint_tv_grid(
    space: BlockSpace, sim: SourceSimulator, buckets: np.ndarray, phi_table
) -> Fraction:
    grid = space.grid_numerators()
    num_y = grid.sum(axis=0)
    alphabet = sim.alphabet
    keys = [_sequence_key(seq, alphabet) for seq in phi_table]
    uniq = sorted(set(keys))
    key_id = {k: i for i, k in enumerate(uniq)}
    id_of_bucket = np.array([key_id[k] for k in keys], dtype=np.int64)

    dt = math.lcm(
        *(p.denominator for p in sim.p1), *(p.denominator for p in sim.p2)
    ) ** sim.L
    first = {}
    for b, k in enumerate(keys):
        first.setdefault(k, phi_table[b])
    t_num = np.array(
        [int(sim.target_mass(first[k]) * dt) for k in uniq], dtype=np.float64
    )
    if space.denom_pow * dt >= FLOAT_EXACT_LIMIT:
        raise ResourceCapError("joint target scaling exceeds exact float64 range")

    agg = np.zeros((len(uniq), grid.shape[1]))
    np.add.at(agg, id_of_bucket[buckets], grid)
    total = int(np.abs(agg * dt - t_num[:, None] * num_y[None, :]).sum())
    # sequences psi never outputs still carry target mass
    missing = dt - int(t_num.sum())
    total += missing * space.denom_pow
    return Fraction(total, 2 * space.denom_pow * dt)


def composed_joint_tv_erasure(
    space: BlockSpace, sim: SourceSimulator, cols, phi_table
) -> Fraction:
    """Erasure fast path for the composed map: average the per-coset
    distance to the target over reachable cosets, per leak mask."""
    era = space.erasure
    L = space.n
    if (1 << L) > MASK_CAP:
        raise ResourceCapError(f"2^{L} leak masks exceed the cap {MASK_CAP}")
    b = space.nx.bit_length() - 1
    ell = int(math.log2(len(phi_table)))
    alphabet = sim.alphabet
    dt = math.lcm(
        *(p.denominator for p in sim.p1), *(p.denominator for p in sim.p2)
    ) ** sim.L
    key_of_bucket = [_sequence_key(seq, alphabet) for seq in phi_table]
    tnum_of_bucket = [int(sim.target_mass(seq) * dt) for seq in phi_table]

    full_basis: list = []
    for c in cols:
        _echelon_insert(full_basis, c)
    rc = len(full_basis)
    span_c = [0]
    for v in full_basis:
        span_c += [x ^ v for x in span_c]

    sym_cols = [cols[t * b : (t + 1) * b] for t in range(L)]
    alpha = era.alpha
    pow_a = [alpha**k * (1 - alpha) ** (L - k) for k in range(L + 1)]
    stuff_by_k = [0] * (L + 1)
    denom_scale = 2 * dt * (1 << rc)
    for mask in range(1 << L):
        k = mask.bit_count()
        if pow_a[k] == 0:
            continue
        basis: list = []
        for t in range(L):
            if not (mask >> t) & 1:
                for c in sym_cols[t]:
                    _echelon_insert(basis, c)
        d = len(basis)
        cosets: dict = {}
        for vec in span_c:
            cosets.setdefault(_reduce(basis, vec), []).append(vec)
        stuff = 0
        scale = 1 << d
        for members in cosets.values():
            cnt: dict = {}
            t_in = 0
            for m_vec in members:
                key = key_of_bucket[m_vec]
                if key in cnt:
                    cnt[key] += 1
                else:
                    cnt[key] = 1
                    t_in += tnum_of_bucket[m_vec]
            hit = 0
            seen: dict = {}
            for m_vec in members:
                key = key_of_bucket[m_vec]
                if key in seen:
                    continue
                seen[key] = True
                hit += abs(cnt[key] * dt - tnum_of_bucket[m_vec] * scale)
            stuff += hit + (dt - t_in) * scale
        stuff_by_k[k] += stuff
    tv = Fraction(0)
    for k in range(L + 1):
        if stuff_by_k[k]:
            tv += pow_a[k] * Fraction(stuff_by_k[k], denom_scale)
    return tv


def marginal_tv(space: BlockSpace, sim: SourceSimulator, buckets: np.ndarray, phi_table) -> Fraction:
    """Exact TV of psi(X^L) alone against the product target."""
    masses = np.zeros(len(phi_table))
    np.add.at(masses, buckets, space.x_marginal_numerators())
    by_key: dict = {}
    for bkt, seq in enumerate(phi_table):
        key = _sequence_key(seq, sim.alphabet)
        if key in by_key:
            by_key[key][0] += int(masses[bkt])
        else:
            by_key[key] = [int(masses[bkt]), sim.target_mass(seq)]
    acc = Fraction(0)
    hit = Fraction(0)
    dp = space.denom_pow
    for num, target in by_key.values():
        acc += abs(Fraction(num, dp) - target)
        hit += target
    return (acc + (1 - hit)) / 2


def compose_block_map(
    j: JointPmf,
    L: int,
    p1,
    p2,
    gamma,
    eps: float,
    seed: int,
    rate=None,
    max_tries: int = 64,
    certify_joint: bool = True,
) -> BlockMap:
    """Build psi = simulate . extract for one block, checking the rate
    budget target <= ell/L <= H(X|Y) and measuring TV exactly.

    The extracted width is ceil of the block's target entropy by default
    (so dyadic envelope targets are simulated exactly), or floor(rate*L)
    when a rate is supplied.
    """
    p1 = p1 if isinstance(p1, ProbVector) else ProbVector(tuple(p1))
    p2 = p2 if isinstance(p2, ProbVector) else ProbVector(tuple(p2))
    gamma = to_fraction(gamma)
    split = int(math.ceil(gamma * L)) if gamma < 1 else L
    target_bits = split * entropy(p1) + (L - split) * entropy(p2)
    capacity_bits = L * conditional_entropy(j)
    if rate is not None:
        ell = int(math.floor(float(to_fraction(rate)) * L + 1e-12))
    else:
        ell = int(math.ceil(target_bits - 1e-9))
    if target_bits - 1e-9 > ell or ell > capacity_bits + 1e-9:
        raise EntropyDeficitError(
            "entropy deficit: target rate "
            f"{target_bits / L:.6f} vs extracted {ell}/{L} = {ell / L:.6f} "
            f"vs source capacity H(X|Y) = {capacity_bits / L:.6f} bits/stage"
        )
    ell = max(ell, 1)

    ext = build_extractor(j, L, ell, seed, max_tries=max_tries, eps=eps)
    sim = SourceSimulator(p1=p1, p2=p2, gamma=gamma, L=L, input_bits=ell)
    space = BlockSpace(j, L)
    buckets = extractor_buckets(space, ext)
    phi_table = tuple(sim.decode(idx) for idx in range(1 << ell))

    joint_tv = None
    if certify_joint:
        if ext.gf2_cols is not None and space.erasure is not None:
            joint_tv = composed_joint_tv_erasure(space, sim, ext.gf2_cols, phi_table)
        else:
            joint_tv = composed_joint_tv_grid(space, sim, buckets, phi_table)

    return BlockMap(
        extractor=ext,
        simulator=sim,
        L=L,
        bucket_of_atom=buckets,
        phi_table=phi_table,
        measured_joint_tv=joint_tv,
        measured_marginal_tv=marginal_tv(space, sim, buckets, phi_table),
        rates={
            "target_bits_per_stage": target_bits / L,
            "extracted_bits_per_stage": ell / L,
            "capacity_bits_per_stage": capacity_bits / L,
        },
    )
