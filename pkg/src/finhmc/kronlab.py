"""Dense matrix kernel for the vec / Kronecker / Delta calculus.

Matrices are plain numpy arrays in one of two scalar realizations:

* exact: ``dtype=object`` arrays holding :class:`fractions.Fraction`
* float: ``dtype=float64`` arrays

Every operation here accepts either and returns the same realization it was
given. Kernel matrices follow the *column-stochastic* convention: entry
``(i, j)`` is the probability of moving to state ``i`` from state ``j``.
Vectors are 1-d arrays; ``vec`` returns a 1-d array as well.

The joint state index of ``Z = Y (x) X`` is ``k = j*n + i`` (0-based) for the
pair ``(X = e_i, Y = f_j)``.
"""

from __future__ import annotations

from fractions import Fraction
from numbers import Rational
from typing import Iterable, Sequence

import numpy as np

FLOAT_TOL = 1e-12

__all__ = [
    "FLOAT_TOL",
    "StochasticityError",
    "as_exact",
    "as_float",
    "matrix",
    "is_exact",
    "zeros",
    "eye",
    "ones",
    "diag",
    "basis",
    "kron",
    "vec",
    "delta",
    "x_selector",
    "y_selector",
    "block_stack",
    "blocks_of",
    "is_column_stochastic",
    "is_prob_vector",
    "stoch_matrix",
    "prob_vector",
    "parse_scalar",
    "format_scalar",
    "allclose_or_equal",
    "freeze",
]


class StochasticityError(ValueError):
    """Raised when a matrix or vector is not (column-)stochastic."""


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, Rational)):
        return Fraction(x)
    if isinstance(x, str):
        return parse_scalar(x)
    if isinstance(x, (float, np.floating)):
        return Fraction(float(x))
    if isinstance(x, np.integer):
        return Fraction(int(x))
    raise TypeError(f"cannot convert {x!r} to an exact rational")


def freeze(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


def as_exact(a) -> np.ndarray:
    """Convert a nested sequence or array to an exact (Fraction) array.

    Floats are converted by their exact binary value, so dyadic inputs stay
    exact.
    """
    arr = np.asarray(a, dtype=object)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = _to_fraction(v)
    return freeze(out)


def as_float(a) -> np.ndarray:
    arr = np.asarray(a, dtype=object)
    out = np.empty(arr.shape, dtype=np.float64)
    for idx, v in np.ndenumerate(arr):
        out[idx] = float(_to_fraction(v)) if isinstance(v, str) else float(v)
    return freeze(out)


def is_exact(a: np.ndarray) -> bool:
    return a.dtype == object


def matrix(rows: Sequence[Sequence], exact: bool = True) -> np.ndarray:
    """Build a 2-d matrix; rows must be nonempty and of equal length."""
    arr = as_exact(rows) if exact else as_float(rows)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"expected a nonempty 2-d matrix, got shape {arr.shape}")
    return arr


def _like(shape, like: np.ndarray | bool, fill=0) -> np.ndarray:
    exact = like if isinstance(like, bool) else is_exact(like)
    if exact:
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(fill))
        return out
    return np.full(shape, float(fill))


def zeros(shape, exact: bool = True) -> np.ndarray:
    return _like(shape, exact, 0)


def ones(n: int, exact: bool = True) -> np.ndarray:
    return _like((n,), exact, 1)


def eye(n: int, exact: bool = True) -> np.ndarray:
    out = _like((n, n), exact, 0)
    for i in range(n):
        out[i, i] = Fraction(1) if exact else 1.0
    return out


def basis(i: int, n: int, exact: bool = True) -> np.ndarray:
    out = _like((n,), exact, 0)
    out[i] = Fraction(1) if exact else 1.0
    return out


def diag(w: np.ndarray) -> np.ndarray:
    w = np.asarray(w)
    out = _like((len(w), len(w)), w)
    for i, v in enumerate(w):
        out[i, i] = v
    return out


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; block ``(i, j)`` equals ``a[i, j] * b``.

    1-d inputs are treated as column vectors and the result is 1-d.
    """
    if a.ndim == 1 and b.ndim == 1:
        return np.kron(a, b)
    a2 = a.reshape(-1, 1) if a.ndim == 1 else a
    b2 = b.reshape(-1, 1) if b.ndim == 1 else b
    return np.kron(a2, b2)


def vec(m: np.ndarray) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(m).reshape(-1, order="F").copy()


def delta(g: np.ndarray) -> np.ndarray:
    """The ``nm x n`` matrix stacking ``diag(g[i, :])`` for ``i = 0..m-1``."""
    m, n = g.shape
    out = _like((m * n, n), g)
    for i in range(m):
        for r in range(n):
            out[i * n + r, r] = g[i, r]
    return out


def x_selector(n: int, m: int, exact: bool = True) -> np.ndarray:
    """``(1_m^T (x) I_n)``: maps ``Z`` to its ``X`` component."""
    return kron(ones(m, exact).reshape(1, -1), eye(n, exact))


def y_selector(n: int, m: int, exact: bool = True) -> np.ndarray:
    """``(I_m (x) 1_n^T)``: maps ``Z`` to its ``Y`` component."""
    return kron(eye(m, exact), ones(n, exact).reshape(1, -1))


def block_stack(blocks: Iterable[np.ndarray]) -> np.ndarray:
    return np.vstack(list(blocks))


def blocks_of(stacked: np.ndarray, n: int) -> list[np.ndarray]:
    """Split an ``(m*n) x k`` matrix into its ``m`` row blocks of height ``n``."""
    rows = stacked.shape[0]
    if rows % n:
        raise ValueError(f"{rows} rows do not split into blocks of height {n}")
    return [stacked[i * n:(i + 1) * n] for i in range(rows // n)]


def _sums_to_one(s, exact: bool, tol: float) -> bool:
    return s == 1 if exact else abs(float(s) - 1.0) <= tol


def is_column_stochastic(a: np.ndarray, tol: float = FLOAT_TOL) -> bool:
    if a.ndim != 2:
        return False
    exact = is_exact(a)
    if any(v < 0 for v in a.flat):
        return False
    return all(_sums_to_one(s, exact, tol) for s in a.sum(axis=0))


def is_prob_vector(p: np.ndarray, tol: float = FLOAT_TOL) -> bool:
    if p.ndim != 1 or len(p) == 0:
        return False
    if any(v < 0 for v in p):
        return False
    return _sums_to_one(p.sum(), is_exact(p), tol)


def stoch_matrix(a, exact: bool = True, name: str = "matrix") -> np.ndarray:
    """Validate and freeze a column-stochastic matrix."""
    arr = a if isinstance(a, np.ndarray) and is_exact(a) == exact else (
        as_exact(a) if exact else as_float(a))
    if arr.ndim != 2:
        raise StochasticityError(f"{name}: expected 2-d, got shape {arr.shape}")
    for (i, j), v in np.ndenumerate(arr):
        if v < 0:
            raise StochasticityError(f"{name}[{i}][{j}] is negative ({v})")
    exact_arr = is_exact(arr)
    for j, s in enumerate(arr.sum(axis=0)):
        if not _sums_to_one(s, exact_arr, FLOAT_TOL):
            raise StochasticityError(f"{name}: column {j} sums to {s}, not 1")
    return freeze(arr)


def prob_vector(p, exact: bool = True, name: str = "vector") -> np.ndarray:
    arr = p if isinstance(p, np.ndarray) and is_exact(p) == exact else (
        as_exact(p) if exact else as_float(p))
    if arr.ndim != 1 or len(arr) == 0:
        raise StochasticityError(f"{name}: expected a nonempty vector")
    for i, v in enumerate(arr):
        if v < 0:
            raise StochasticityError(f"{name}[{i}] is negative ({v})")
    if not _sums_to_one(arr.sum(), is_exact(arr), FLOAT_TOL):
        raise StochasticityError(f"{name}: sums to {arr.sum()}, not 1")
    return freeze(arr)


def parse_scalar(s: str) -> Fraction:
    """Parse ``"3/4"``, ``"0.25"`` or ``"2"`` exactly."""
    try:
        return Fraction(s.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"not a rational number: {s!r}") from exc


def format_scalar(x) -> str:
    """``Fraction`` -> ``"p/q"`` (or ``"p"``); float -> shortest repr."""
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    r = repr(float(x))
    return r[:-2] if r.endswith(".0") else r


def allclose_or_equal(a: np.ndarray, b: np.ndarray, tol: float = 1e-9) -> bool:
    """Exact equality for two exact arrays, otherwise entrywise ``|a-b| <= tol``."""
    if a.shape != b.shape:
        return False
    if is_exact(a) and is_exact(b):
        return bool(np.all(a == b))
    return bool(np.all(np.abs(np.asarray(a, float) - np.asarray(b, float)) <= tol))
