"""Random rational models and perturbations for tests and experiments.

All generators take a ``random.Random`` so results are reproducible.
Entries are small-denominator rationals to keep exact arithmetic cheap.
"""

from __future__ import annotations

import random
from fractions import Fraction

import numpy as np

from . import kronlab as kl
from .finprob import JointChain
from .models import HmcModel, SigmaPModel, SigmaSModel, build_q, hmc_to_sigma_p, hmc_to_sigma_s

__all__ = [
    "random_prob",
    "random_stochastic",
    "random_hmc",
    "random_dyadic_hmc",
    "random_matrix",
    "perturb_column",
    "perturbed_sigma_p",
    "perturbed_sigma_s",
    "perturbed_joint_chain",
    "random_deterministic_g",
]


def random_prob(rng: random.Random, k: int, zero_prob: float = 0.0,
                max_weight: int = 6) -> list[Fraction]:
    while True:
        w = [0 if rng.random() < zero_prob else rng.randint(1, max_weight) for _ in range(k)]
        if sum(w):
            break
    s = sum(w)
    return [Fraction(v, s) for v in w]


def random_stochastic(rng: random.Random, rows: int, cols: int, zero_prob: float = 0.0,
                      max_weight: int = 6) -> np.ndarray:
    cols_ = [random_prob(rng, rows, zero_prob, max_weight) for _ in range(cols)]
    return kl.as_exact([[cols_[j][i] for j in range(cols)] for i in range(rows)])


def random_hmc(rng: random.Random, n: int, m: int, zero_prob: float = 0.0) -> HmcModel:
    """Random exact HMC; retries until no row of ``G`` is zero."""
    while True:
        G = random_stochastic(rng, m, n, zero_prob)
        if all(any(v != 0 for v in G[k]) for k in range(m)):
            break
    A = random_stochastic(rng, n, n, zero_prob)
    return HmcModel(A, G, random_prob(rng, n))


def _dyadic_prob(rng: random.Random, k: int, bits: int) -> list[Fraction]:
    """Probability vector with denominator ``2**bits``."""
    total = 2 ** bits
    cuts = sorted(rng.randint(0, total) for _ in range(k - 1))
    parts = [b - a for a, b in zip([0] + cuts, cuts + [total])]
    return [Fraction(p, total) for p in parts]


def random_dyadic_hmc(rng: random.Random, n: int, m: int, bits: int = 4) -> HmcModel:
    while True:
        A = [_dyadic_prob(rng, n, bits) for _ in range(n)]
        G = [_dyadic_prob(rng, m, bits) for _ in range(n)]
        Gm = kl.as_exact([[G[j][i] for j in range(n)] for i in range(m)])
        if all(any(v != 0 for v in Gm[k]) for k in range(m)):
            break
    Am = kl.as_exact([[A[j][i] for j in range(n)] for i in range(n)])
    return HmcModel(Am, Gm, _dyadic_prob(rng, n, bits))


def random_matrix(rng: random.Random, rows: int, cols: int, lo: int = -5, hi: int = 5,
                  den: int = 4) -> np.ndarray:
    return kl.as_exact([[Fraction(rng.randint(lo, hi), rng.randint(1, den))
                         for _ in range(cols)] for _ in range(rows)])


def perturb_column(mat: np.ndarray, col: int, src: int, dst: int,
                   amount: Fraction = Fraction(1, 100)) -> np.ndarray:
    """Move ``amount`` of mass from ``mat[src, col]`` to ``mat[dst, col]``."""
    if mat[src, col] < amount:
        raise ValueError("source entry too small to move the requested mass")
    out = mat.copy()
    out.flags.writeable = True
    out[src, col] -= amount
    out[dst, col] += amount
    return kl.freeze(out)


def _first_pair(col, n: int, different_state: bool, amount: Fraction):
    """Pick (src, dst) rows in a column so the move breaks the factor form."""
    for src in range(len(col)):
        if col[src] < amount:
            continue
        for dst in range(len(col)):
            if dst == src:
                continue
            if different_state and dst % n == src % n:
                continue
            if not different_state and (dst % n != src % n):
                continue
            return src, dst
    return None


def perturbed_sigma_p(model: HmcModel, amount: Fraction = Fraction(1, 100)) -> SigmaPModel:
    """Sigma_P model whose stacked blocks no longer factor as ``Delta(G) A``.

    Mass is moved between two outputs of the same successor state in column
    0, which keeps ``A`` fixed and changes the output law given the
    predecessor. Requires ``m >= 2``.
    """
    sp = hmc_to_sigma_p(model)
    n = model.n
    pair = _first_pair(sp.stacked[:, 0], n, different_state=False, amount=amount)
    if pair is None:
        raise ValueError("no entry large enough to perturb")
    qbar = perturb_column(sp.stacked, 0, *pair, amount=amount)
    return SigmaPModel(tuple(kl.blocks_of(qbar, n)), sp.q0)


def perturbed_sigma_s(model: HmcModel, amount: Fraction = Fraction(1, 100)) -> SigmaSModel:
    """Sigma_S model whose stacked blocks are not ``(I (x) A) Delta(G)``."""
    ss = hmc_to_sigma_s(model)
    n = model.n
    pair = _first_pair(ss.stacked[:, 0], n, different_state=True, amount=amount)
    if pair is None:
        raise ValueError("no entry large enough to perturb")
    # keep both marginals fixed by a 2x2 swap pattern when possible
    rbar = perturb_column(ss.stacked, 0, *pair, amount=amount)
    return SigmaSModel(tuple(kl.blocks_of(rbar, n)), ss.p0)


def perturbed_joint_chain(model: HmcModel, column: int = 0,
                          amount: Fraction = Fraction(1, 100)) -> JointChain:
    """Joint ``Z`` chain equal to the HMC's except in one column of ``Q``.

    Mass moves between different successor states, so the next state's law
    depends on the current output as well as the current state.
    """
    Q = build_q(model)
    n, m = model.n, model.m
    pair = _first_pair(Q[:, column], n, different_state=True, amount=amount)
    if pair is None:
        raise ValueError("no entry large enough to perturb")
    return JointChain(perturb_column(Q, column, *pair, amount=amount),
                      kl.delta(model.G) @ model.p0, n, m)


def random_deterministic_g(rng: random.Random, n: int, m: int) -> np.ndarray:
    """``m x n`` 0/1 matrix of a random surjective map from states to outputs."""
    if m > n:
        raise ValueError("a surjection needs m <= n")
    while True:
        f = [rng.randrange(m) for _ in range(n)]
        if len(set(f)) == m:
            break
    return kl.as_exact([[1 if f[i] == k else 0 for i in range(n)] for k in range(m)])
