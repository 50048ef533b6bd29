"""Shared fixtures: a reproducible model grid and an independent Bayes oracle.

The oracle here deliberately avoids finprob: it sums joint path probabilities
over ``itertools.product`` of hidden paths with plain Fractions.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from hypothesis import strategies as st

from finhmc import kronlab as kl
from finhmc import randgen as rg
from finhmc.models import HmcModel

GRID_SEED = 20240611


def model_grid(count: int = 20, seed: int = GRID_SEED) -> list[HmcModel]:
    """``count`` rational HMCs cycling over ``(n, m)`` in ``{2,3}^2``.

    Every fourth model has structural zeros so some observation histories
    are impossible.
    """
    rng = random.Random(seed)
    shapes = [(2, 2), (2, 3), (3, 2), (3, 3)]
    out = []
    for i in range(count):
        n, m = shapes[i % 4]
        out.append(rg.random_hmc(rng, n, m, zero_prob=0.3 if i % 4 == 3 else 0.0))
    return out


def _entry(mat, i, j):
    return Fraction(mat[i, j])


def brute_joint(model: HmcModel, xs, ys) -> Fraction:
    p = Fraction(model.p0[xs[0]]) * _entry(model.G, ys[0], xs[0])
    for t in range(1, len(ys)):
        p *= _entry(model.A, xs[t], xs[t - 1]) * _entry(model.G, ys[t], xs[t])
    return p


def brute_posterior(model: HmcModel, ys, predictor: bool = False):
    """``P(X_t = . | y_0..y_t)`` (or of ``X_{t+1}``) and ``P(y_0..y_t)``."""
    n = model.n
    T = len(ys)
    post = [Fraction(0)] * n
    total = Fraction(0)
    for xs in itertools.product(range(n), repeat=T):
        p = brute_joint(model, xs, ys)
        if p == 0:
            continue
        total += p
        if predictor:
            for k in range(n):
                post[k] += p * _entry(model.A, k, xs[-1])
        else:
            post[xs[-1]] += p
    if total == 0:
        return None, total
    return [v / total for v in post], total


def all_histories(m: int, T: int):
    return itertools.product(range(m), repeat=T)


# -- hypothesis strategies ----------------------------------------------------

small_fraction = st.builds(Fraction, st.integers(-6, 6), st.integers(1, 5))


@st.composite
def rational_matrix(draw, rows=None, cols=None, max_dim=4):
    r = rows if rows is not None else draw(st.integers(1, max_dim))
    c = cols if cols is not None else draw(st.integers(1, max_dim))
    vals = draw(st.lists(small_fraction, min_size=r * c, max_size=r * c))
    return kl.as_exact([vals[i * c:(i + 1) * c] for i in range(r)])


@st.composite
def prob_vector(draw, k, allow_zero=True):
    lo = 0 if allow_zero else 1
    w = draw(st.lists(st.integers(lo, 6), min_size=k, max_size=k).filter(lambda v: sum(v) > 0))
    s = sum(w)
    return [Fraction(v, s) for v in w]


@st.composite
def stochastic_matrix(draw, rows, cols, allow_zero=True):
    columns = [draw(prob_vector(rows, allow_zero)) for _ in range(cols)]
    return kl.as_exact([[columns[j][i] for j in range(cols)] for i in range(rows)])


@st.composite
def hmc_models(draw, max_n=3, max_m=3, allow_zero=True):
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(1, max_m))
    G = draw(stochastic_matrix(m, n, allow_zero).filter(
        lambda g: all(any(v != 0 for v in row) for row in g)))
    A = draw(stochastic_matrix(n, n, allow_zero))
    p0 = draw(prob_vector(n, allow_zero))
    return HmcModel(A, G, p0)


def random_lemma_space(rng: random.Random, force_null: bool = False):
    """Random rational space (at most 32 atoms) with a vector ``U`` and two
    partitions of at most 4 cells. With ``force_null`` one ``H`` cell has zero
    probability."""
    from finhmc import finprob as fp

    N = rng.randint(4, 32)
    k_f, k_h = rng.randint(1, 4), rng.randint(2 if force_null else 1, 4)
    f_of = _onto(rng, N, k_f)
    h_of = _onto(rng, N, k_h)
    w = [0 if rng.random() < 0.2 else rng.randint(1, 9) for _ in range(N)]
    if force_null:
        w = [0 if h_of[a] == 0 else v for a, v in enumerate(w)]
    if sum(w) == 0:
        w[next(a for a in range(N) if h_of[a] != 0 or not force_null)] = 1
    s = sum(w)
    space = fp.FiniteSpace(tuple(range(N)), tuple(Fraction(v, s) for v in w))
    d = rng.randint(1, 2)
    u = kl.as_exact([[Fraction(rng.randint(-5, 5), rng.randint(1, 4)) for _ in range(d)]
                     for _ in range(N)])
    return space, u, fp.Partition.from_assignment(f_of), fp.Partition.from_assignment(h_of)


def _onto(rng: random.Random, N: int, k: int) -> list[int]:
    """Random assignment of ``N`` atoms onto exactly ``k`` labels."""
    k = min(k, N)
    out = list(range(k)) + [rng.randrange(k) for _ in range(N - k)]
    rng.shuffle(out)
    return out


def null_cells(space, *parts) -> int:
    """Number of zero-probability cells in the join of the given partitions."""
    from finhmc import finprob as fp

    joined = parts[0]
    for p in parts[1:]:
        joined = fp.join(joined, p)
    return sum(1 for cell in joined.cells if sum(space.weights[a] for a in cell) == 0)


# -- independent algebra oracles ---------------------------------------------

def naive_kron(a, b):
    """Index-by-index Kronecker product, independent of numpy.kron."""
    ar, ac = a.shape
    br, bc = b.shape
    out = [[Fraction(0)] * (ac * bc) for _ in range(ar * br)]
    for i in range(ar):
        for j in range(ac):
            for k in range(br):
                for l in range(bc):
                    out[i * br + k][j * bc + l] = Fraction(a[i, j]) * Fraction(b[k, l])
    return kl.as_exact(out)


def naive_vec(m):
    return kl.as_exact([m[i, j] for j in range(m.shape[1]) for i in range(m.shape[0])])


def direct_sides(space, u, f0, h):
    """Both sides of the three conditional-Bayes identities by explicit sums.

    Returns ``(lhs, rhs)`` pairs, one per atom and identity. Averages over
    empty or null cells are zero, matching the package convention.
    """
    zero = Fraction(0)
    w = space.weights
    N, d = u.shape
    fc, hc = f0.cell_index(), h.cell_index()
    nh = len(h.cells)

    def mass(pred):
        return sum((w[a] for a in range(N) if pred(a)), zero)

    def avg(pred, f=lambda a, k: u[a, k]):
        p = mass(pred)
        if p == 0:
            return [zero] * d
        return [sum((w[a] * f(a, k) for a in range(N) if pred(a)), zero) / p for k in range(d)]

    out = []
    for a in range(N):
        same_f = lambda b: fc[b] == fc[a]  # noqa: E731
        pf = mass(same_f)
        e_i = [avg(lambda b, i=i: same_f(b) and hc[b] == i) for i in range(nh)]
        p_h = [mass(lambda b, i=i: same_f(b) and hc[b] == i) / pf if pf else zero
               for i in range(nh)]
        out.append((avg(lambda b: same_f(b) and hc[b] == hc[a]), e_i[hc[a]]))
        out.append((avg(same_f),
                    [sum((e_i[i][k] * p_h[i] for i in range(nh)), zero) for k in range(d)]))
        for j in range(nh):
            lhs = avg(same_f, lambda b, k, j=j: u[b, k] if hc[b] == j else zero)
            out.append((lhs, [p_h[j] * e_i[j][k] for k in range(d)]))
    return out
