"""Model records for hidden Markov chains and the two finite stochastic systems.

All indices are 0-based. ``HmcModel`` holds ``(A, G, p0)``; ``SigmaPModel``
holds blocks ``Q_0..Q_{m-1}`` with ``Q_i[r, c] = P(X' = r, Y' = i | X = c)``
and the joint initial law ``q0`` of ``Z_0``; ``SigmaSModel`` holds blocks
``R_0..R_{m-1}`` with ``R_i[r, c] = P(X' = r, Y = i | X = c)`` (output at the
*current* time) and the state initial law ``p0``.

Generative semantics used throughout the package:

* sigma_p: ``(x0, y0) ~ q0``, then ``(x_{t+1}, y_{t+1})`` jointly from column
  ``x_t`` of the stacked blocks.
* sigma_s: ``x0 ~ p0``, then ``(y_t, x_{t+1})`` jointly from column ``x_t``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kronlab as kl

__all__ = [
    "ModelError",
    "HmcModel",
    "SigmaPModel",
    "SigmaSModel",
    "FactorRecovery",
    "InvariantResult",
    "build_q",
    "build_r",
    "hmc_to_sigma_p",
    "hmc_to_sigma_s",
    "sigma_p_marginals",
    "sigma_s_marginals",
    "recover_hmc_sigma_p",
    "recover_hmc_sigma_s",
    "is_hmc_sigma_p",
    "is_hmc_sigma_s",
    "invariant_distribution",
]

DEFAULT_TOL = 1e-9


class ModelError(ValueError):
    """Validation failure; ``field`` and ``index`` locate the offending entry."""

    def __init__(self, message: str, field: str | None = None, index=None):
        super().__init__(message)
        self.field = field
        self.index = index


def _convert(a, exact: bool) -> np.ndarray:
    if isinstance(a, np.ndarray) and kl.is_exact(a) == exact:
        return kl.freeze(a.copy()) if a.flags.writeable else a
    return kl.as_exact(a) if exact else kl.as_float(a)


def _check_shape(arr: np.ndarray, shape: tuple, name: str) -> None:
    if arr.shape != shape:
        raise ModelError(f"{name}: expected shape {shape}, got {arr.shape}", name)


def _check_nonneg(arr: np.ndarray, name: str) -> None:
    for idx, v in np.ndenumerate(arr):
        if v < 0:
            raise ModelError(f"{name}{list(idx)} is negative ({v})", name, idx)


def _check_col_sums(arr: np.ndarray, name: str, tol: float) -> None:
    exact = kl.is_exact(arr)
    for j, s in enumerate(arr.sum(axis=0)):
        ok = s == 1 if exact else abs(float(s) - 1.0) <= tol
        if not ok:
            raise ModelError(
                f"{name}: column {j} sums to {kl.format_scalar(s)}, expected 1 "
                "(kernels are column-stochastic)", name, (j,))


def _check_prob(arr: np.ndarray, length: int, name: str, tol: float) -> None:
    _check_shape(arr, (length,), name)
    _check_nonneg(arr, name)
    s = arr.sum()
    ok = s == 1 if kl.is_exact(arr) else abs(float(s) - 1.0) <= tol
    if not ok:
        raise ModelError(f"{name}: sums to {kl.format_scalar(s)}, expected 1", name)


@dataclass(frozen=True, eq=False)
class HmcModel:
    """Hidden Markov chain ``(A, G, p0)``.

    ``A`` is ``n x n`` with ``A[i, j] = P(X' = i | X = j)``; ``G`` is ``m x n``
    with ``G[k, i] = P(Y = k | X = i)``. No row of ``G`` may be all zero.
    """

    A: np.ndarray
    G: np.ndarray
    p0: np.ndarray
    exact: bool = True

    def __post_init__(self):
        A = _convert(self.A, self.exact)
        G = _convert(self.G, self.exact)
        p0 = _convert(self.p0, self.exact)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "p0", p0)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
            raise ModelError(f"A: expected a square matrix, got shape {A.shape}", "A")
        n = A.shape[0]
        if G.ndim != 2 or G.shape[1] != n or G.shape[0] < 1:
            raise ModelError(f"G: expected shape (m, {n}), got {G.shape}", "G")
        tol = kl.FLOAT_TOL
        _check_nonneg(A, "A")
        _check_col_sums(A, "A", tol)
        _check_nonneg(G, "G")
        _check_col_sums(G, "G", tol)
        for k in range(G.shape[0]):
            if all(v == 0 for v in G[k]):
                raise ModelError(f"G: row {k} is all zero", "G", (k,))
        _check_prob(p0, n, "p0", tol)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.G.shape[0]

    def astype(self, exact: bool) -> "HmcModel":
        return HmcModel(self.A, self.G, self.p0, exact=exact)


@dataclass(frozen=True, eq=False)
class SigmaPModel:
    """Sigma_P system: blocks ``Q_i`` (stacked column-stochastic) and ``q0``."""

    blocks: tuple
    q0: np.ndarray
    exact: bool = True

    def __post_init__(self):
        blocks = tuple(_convert(b, self.exact) for b in self.blocks)
        q0 = _convert(self.q0, self.exact)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "q0", q0)
        _validate_blocks(blocks, "blocks")
        n, m = blocks[0].shape[0], len(blocks)
        _check_prob(q0, n * m, "q0", kl.FLOAT_TOL)

    @property
    def n(self) -> int:
        return self.blocks[0].shape[0]

    @property
    def m(self) -> int:
        return len(self.blocks)

    @property
    def stacked(self) -> np.ndarray:
        return kl.block_stack(self.blocks)

    def astype(self, exact: bool) -> "SigmaPModel":
        return SigmaPModel(self.blocks, self.q0, exact=exact)


@dataclass(frozen=True, eq=False)
class SigmaSModel:
    """Sigma_S system: blocks ``R_i`` (stacked column-stochastic) and ``p0``."""

    blocks: tuple
    p0: np.ndarray
    exact: bool = True

    def __post_init__(self):
        blocks = tuple(_convert(b, self.exact) for b in self.blocks)
        p0 = _convert(self.p0, self.exact)
        object.__setattr__(self, "blocks", blocks)
        object.__setattr__(self, "p0", p0)
        _validate_blocks(blocks, "blocks")
        _check_prob(p0, blocks[0].shape[0], "p0", kl.FLOAT_TOL)

    @property
    def n(self) -> int:
        return self.blocks[0].shape[0]

    @property
    def m(self) -> int:
        return len(self.blocks)

    @property
    def stacked(self) -> np.ndarray:
        return kl.block_stack(self.blocks)

    def astype(self, exact: bool) -> "SigmaSModel":
        return SigmaSModel(self.blocks, self.p0, exact=exact)


def _validate_blocks(blocks: Sequence[np.ndarray], name: str) -> None:
    if not blocks:
        raise ModelError(f"{name}: at least one block required", name)
    n = blocks[0].shape[0] if blocks[0].ndim == 2 else 0
    if n < 1:
        raise ModelError(f"{name}[0]: expected a square matrix", name, (0,))
    for i, b in enumerate(blocks):
        if b.shape != (n, n):
            raise ModelError(f"{name}[{i}]: expected shape {(n, n)}, got {b.shape}",
                             name, (i,))
        for idx, v in np.ndenumerate(b):
            if v < 0:
                raise ModelError(f"{name}[{i}]{list(idx)} is negative ({v})",
                                 name, (i, *idx))
    _check_col_sums(kl.block_stack(blocks), name, kl.FLOAT_TOL)


# -- constructions ---------------------------------------------------------

def build_q(model: HmcModel) -> np.ndarray:
    """Transition matrix of ``Z = Y (x) X``: ``Delta(G) A (1_m^T (x) I_n)``."""
    return kl.delta(model.G) @ model.A @ kl.x_selector(model.n, model.m, model.exact)


def build_r(model: HmcModel) -> np.ndarray:
    """Transition matrix of ``W_t = Y_{t-1} (x) X_t``: ``(I_m (x) A) Delta(G) (1_m^T (x) I_n)``."""
    n, m, ex = model.n, model.m, model.exact
    return kl.kron(kl.eye(m, ex), model.A) @ kl.delta(model.G) @ kl.x_selector(n, m, ex)


def hmc_to_sigma_p(model: HmcModel) -> SigmaPModel:
    blocks = tuple(kl.diag(model.G[i]) @ model.A for i in range(model.m))
    return SigmaPModel(blocks, kl.delta(model.G) @ model.p0, exact=model.exact)


def hmc_to_sigma_s(model: HmcModel) -> SigmaSModel:
    blocks = tuple(model.A @ kl.diag(model.G[i]) for i in range(model.m))
    return SigmaSModel(blocks, model.p0, exact=model.exact)


def sigma_p_marginals(model: SigmaPModel) -> tuple[np.ndarray, np.ndarray]:
    """``(A, C)`` with ``A = sum_i Q_i`` and ``C[i, :] = 1^T Q_i``."""
    n, m, ex = model.n, model.m, model.exact
    qbar = model.stacked
    return kl.x_selector(n, m, ex) @ qbar, kl.y_selector(n, m, ex) @ qbar


def sigma_s_marginals(model: SigmaSModel) -> tuple[np.ndarray, np.ndarray]:
    """``(A, G)`` with ``A = sum_i R_i`` and ``G[i, :] = 1^T R_i``."""
    n, m, ex = model.n, model.m, model.exact
    rbar = model.stacked
    return kl.x_selector(n, m, ex) @ rbar, kl.y_selector(n, m, ex) @ rbar


# -- structural membership ---------------------------------------------------

@dataclass(frozen=True)
class FactorRecovery:
    """Outcome of recovering HMC factors ``(A, G, p0)`` from a stochastic system.

    ``ambiguous_states`` lists states whose ``G`` column is not identified by
    the model (zero mass both as a successor and initially); their column in
    ``G`` is left as the first basis vector and does not influence the law.
    """

    is_hmc: bool
    A: np.ndarray
    G: np.ndarray
    p0: np.ndarray
    ambiguous_states: tuple = ()
    reason: str = ""


def _eq(a, b, exact: bool, tol: float) -> bool:
    return a == b if exact else abs(float(a) - float(b)) <= tol


def _positive(v, exact: bool, tol: float) -> bool:
    return v > 0 if exact else float(v) > tol


def recover_hmc_sigma_p(model: SigmaPModel, tol: float = DEFAULT_TOL) -> FactorRecovery:
    """Try to write ``Q_i = diag(G_i.) A`` and ``q0 = Delta(G) p0``."""
    n, m, ex = model.n, model.m, model.exact
    A, _ = sigma_p_marginals(model)
    p0 = kl.x_selector(n, m, ex) @ model.q0
    G = kl.zeros((m, n), ex)
    ambiguous = []
    for r in range(n):
        c = next((c for c in range(n) if _positive(A[r, c], ex, tol)), None)
        if c is not None:
            for i in range(m):
                G[i, r] = model.blocks[i][r, c] / A[r, c]
        elif _positive(p0[r], ex, tol):
            for i in range(m):
                G[i, r] = model.q0[i * n + r] / p0[r]
        else:
            ambiguous.append(r)
            G[0, r] = Fraction(1) if ex else 1.0
    for i in range(m):
        expected = kl.diag(G[i]) @ A
        for (r, c), v in np.ndenumerate(model.blocks[i]):
            if not _eq(v, expected[r, c], ex, tol):
                return FactorRecovery(False, A, G, p0, tuple(ambiguous),
                                      f"Q_{i}[{r}][{c}] != G'[{i}][{r}] * A'[{r}][{c}]")
    q0_expected = kl.delta(G) @ p0
    for k, v in enumerate(model.q0):
        if not _eq(v, q0_expected[k], ex, tol):
            return FactorRecovery(False, A, G, p0, tuple(ambiguous),
                                  f"q0[{k}] != (Delta(G') p0')[{k}]")
    return FactorRecovery(True, A, G, p0, tuple(ambiguous))


def recover_hmc_sigma_s(model: SigmaSModel, tol: float = DEFAULT_TOL) -> FactorRecovery:
    """Try to write ``R_i = A diag(G_i.)`` with ``(A, G)`` from the marginals."""
    ex = model.exact
    A, G = sigma_s_marginals(model)
    for i in range(model.m):
        expected = A @ kl.diag(G[i])
        for (r, c), v in np.ndenumerate(model.blocks[i]):
            if not _eq(v, expected[r, c], ex, tol):
                return FactorRecovery(False, A, G, model.p0, (),
                                      f"R_{i}[{r}][{c}] != A'[{r}][{c}] * G'[{i}][{c}]")
    return FactorRecovery(True, A, G, model.p0)


def is_hmc_sigma_p(model: SigmaPModel, tol: float = DEFAULT_TOL) -> bool:
    return recover_hmc_sigma_p(model, tol).is_hmc


def is_hmc_sigma_s(model: SigmaSModel, tol: float = DEFAULT_TOL) -> bool:
    return recover_hmc_sigma_s(model, tol).is_hmc


# -- invariant vectors -------------------------------------------------------

@dataclass(frozen=True)
class InvariantResult:
    pi: np.ndarray
    unique: bool
    nullity: int = field(default=1)


def _exact_null_space(M: np.ndarray) -> list[np.ndarray]:
    """Basis of the right null space of an exact matrix by Gauss-Jordan."""
    rows, cols = M.shape
    R = [list(M[i]) for i in range(rows)]
    pivots = []
    r = 0
    for c in range(cols):
        p = next((i for i in range(r, rows) if R[i][c] != 0), None)
        if p is None:
            continue
        R[r], R[p] = R[p], R[r]
        pv = R[r][c]
        R[r] = [v / pv for v in R[r]]
        for i in range(rows):
            if i != r and R[i][c] != 0:
                f = R[i][c]
                R[i] = [a - f * b for a, b in zip(R[i], R[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    free = [c for c in range(cols) if c not in pivots]
    basis_vecs = []
    for fcol in free:
        v = [Fraction(0)] * cols
        v[fcol] = Fraction(1)
        for i, pc in enumerate(pivots):
            v[pc] = -R[i][fcol]
        basis_vecs.append(np.array(v, dtype=object))
    return basis_vecs


def _closed_classes(A: np.ndarray, tol: float) -> list[list[int]]:
    """Closed communicating classes of the chain with column-stochastic ``A``."""
    n = A.shape[0]
    exact = kl.is_exact(A)
    reach = [[False] * n for _ in range(n)]
    for j in range(n):
        reach[j][j] = True
        stack = [j]
        while stack:
            c = stack.pop()
            for i in range(n):
                if _positive(A[i, c], exact, tol) and not reach[j][i]:
                    reach[j][i] = True
                    stack.append(i)
    seen = set()
    classes = []
    for j in range(n):
        if j in seen:
            continue
        cls = [i for i in range(n) if reach[j][i] and reach[i][j]]
        seen.update(cls)
        if all(not reach[i][k] or k in cls for i in cls for k in range(n)):
            classes.append(cls)
    return classes


def invariant_distribution(a: np.ndarray, tol: float = 1e-13,
                           max_iter: int = 100_000) -> InvariantResult:
    """Invariant probability vector ``pi`` with ``a @ pi == pi``.

    Exact matrices are solved over the rationals. When the invariant vector is
    not unique (several closed classes), the stationary law of the first
    closed class is returned and ``unique`` is False.
    """
    exact = kl.is_exact(a)
    n = a.shape[0]
    classes = _closed_classes(a, tol)
    unique = len(classes) == 1
    cls = classes[0]
    sub = a[np.ix_(cls, cls)]
    if exact:
        ns = _exact_null_space(sub - kl.eye(len(cls), True))
        v = ns[0]
        if any(x < 0 for x in v):
            v = -v
        v = v / v.sum()
        pi = kl.zeros(n, True)
    else:
        # lazy power iteration converges for periodic classes too
        k = len(cls)
        P = 0.5 * (np.asarray(sub, float) + np.eye(k))
        v = np.full(k, 1.0 / k)
        for _ in range(max_iter):
            nxt = P @ v
            if np.max(np.abs(nxt - v)) <= tol:
                v = nxt
                break
            v = nxt
        v = v / v.sum()
        pi = np.zeros(n)
    for idx, c in enumerate(cls):
        pi[c] = v[idx]
    return InvariantResult(kl.freeze(pi), unique, len(classes))
