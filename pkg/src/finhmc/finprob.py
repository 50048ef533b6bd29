"""Exact finite probability spaces over enumerated trajectories.

A :class:`FiniteSpace` is a list of atoms with exact rational weights. For
trajectory spaces each label is a pair ``(xs, ys)`` of 0-based index tuples.
sigma-algebras are represented by :class:`Partition` objects (the generating
partition). The filtrations used by the verifiers are generated by
trajectory prefixes:

* ``F_t``: ``x_0..x_t, y_0..y_t``
* ``G_t``: ``x_0..x_t, y_0..y_{t-1}``

Conditional expectations on zero-probability cells are defined as zero.
Verifiers skip zero-probability cells and report one :class:`CheckResult`
per ``(check, t)``, carrying the first violating cell as a witness.
"""

from __future__ import annotations

import json
import os
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Hashable, Iterable, Sequence

import numpy as np

from . import kronlab as kl
from .models import (
    HmcModel,
    SigmaPModel,
    SigmaSModel,
    ModelError,
)

__all__ = [
    "DEFAULT_ATOM_BUDGET",
    "AtomBudgetExceeded",
    "FiniteSpace",
    "Partition",
    "JointChain",
    "CheckResult",
    "Report",
    "atom_budget",
    "enumerate_hmc",
    "enumerate_sigma_p",
    "enumerate_sigma_s",
    "enumerate_joint",
    "enumerate_model",
    "rand_vec",
    "cond_exp",
    "join",
    "lemma_a1_check",
    "oracle_posteriors",
    "observation_probability",
    "verify_factorization",
    "verify_splitting",
    "verify_output_properties",
    "verify_markov",
    "verify_w_relations",
    "in_sigma_p",
    "in_sigma_s",
    "hmc_law_check",
    "theorem_3_5_suite",
    "filtering_lemma_suite",
]

DEFAULT_ATOM_BUDGET = 10**6
ZERO = Fraction(0)
ONE = Fraction(1)


class AtomBudgetExceeded(RuntimeError):
    def __init__(self, count: int, budget: int):
        self.count = count
        self.budget = budget
        super().__init__(f"enumeration needs {count} atoms, budget is {budget}")


def atom_budget() -> int:
    raw = os.environ.get("HMC_ATOM_BUDGET")
    return int(raw) if raw else DEFAULT_ATOM_BUDGET


# -- spaces, partitions, random vectors ----------------------------------------

@dataclass(frozen=True, eq=False)
class FiniteSpace:
    """Atoms with exact weights summing to one.

    ``n``, ``m`` and ``kind`` are set for trajectory spaces produced by the
    enumerators; ``kind`` is ``"hmc"``, ``"sigma_p"``, ``"sigma_s"`` or
    ``"joint"``.
    """

    labels: tuple
    weights: tuple
    n: int | None = None
    m: int | None = None
    kind: str | None = None

    def __post_init__(self):
        if len(self.labels) != len(self.weights):
            raise ValueError("labels and weights differ in length")
        ws = tuple(Fraction(w) for w in self.weights)
        object.__setattr__(self, "weights", ws)
        for i, w in enumerate(ws):
            if w < 0:
                raise ValueError(f"atom {i} has negative weight {w}")
        if sum(ws) != 1:
            raise ValueError(f"weights sum to {sum(ws)}, not 1")

    def __len__(self):
        return len(self.labels)

    @property
    def horizon(self) -> int:
        return len(self.labels[0][0]) - 1

    @property
    def y_len(self) -> int:
        return len(self.labels[0][1])

    def law(self) -> dict:
        return dict(zip(self.labels, self.weights))


@dataclass(frozen=True)
class Partition:
    cells: tuple
    keys: tuple | None = None

    def __post_init__(self):
        seen = set()
        for c, cell in enumerate(self.cells):
            if not cell:
                raise ValueError(f"partition cell {c} is empty")
            for a in cell:
                if a in seen:
                    raise ValueError(f"atom {a} appears in more than one cell")
                seen.add(a)

    def validate(self, space: FiniteSpace) -> "Partition":
        covered = set().union(*map(set, self.cells))
        if covered != set(range(len(space))):
            raise ValueError("partition does not cover the space exactly")
        return self

    @classmethod
    def trivial(cls, space: FiniteSpace) -> "Partition":
        return cls((tuple(range(len(space))),), ((),))

    @classmethod
    def finest(cls, space: FiniteSpace) -> "Partition":
        return cls(tuple((i,) for i in range(len(space))))

    @classmethod
    def from_key(cls, space: FiniteSpace, key: Callable) -> "Partition":
        groups: dict = {}
        for i, lab in enumerate(space.labels):
            groups.setdefault(key(lab), []).append(i)
        return cls(tuple(tuple(v) for v in groups.values()), tuple(groups))

    @classmethod
    def from_assignment(cls, assignment: Sequence[Hashable]) -> "Partition":
        groups: dict = {}
        for i, k in enumerate(assignment):
            groups.setdefault(k, []).append(i)
        return cls(tuple(tuple(v) for v in groups.values()), tuple(groups))

    def cell_index(self) -> list[int]:
        out = [0] * sum(len(c) for c in self.cells)
        for c, cell in enumerate(self.cells):
            for a in cell:
                out[a] = c
        return out


def join(p1: Partition, p2: Partition) -> Partition:
    """Coarsest common refinement (the partition generating the joined sigma-algebra)."""
    i1, i2 = p1.cell_index(), p2.cell_index()
    return Partition.from_assignment(list(zip(i1, i2)))


def rand_vec(space: FiniteSpace, fn: Callable) -> np.ndarray:
    """Evaluate ``fn(label)`` (a scalar or sequence) at every atom; shape ``(N, d)``."""
    rows = []
    for lab in space.labels:
        v = fn(lab)
        rows.append(list(v) if isinstance(v, (list, tuple, np.ndarray)) else [v])
    d = len(rows[0])
    if any(len(r) != d for r in rows):
        raise ValueError("random vector dimension varies across atoms")
    return kl.as_exact(rows)


def cond_exp(space: FiniteSpace, u: np.ndarray, sigma: Partition) -> np.ndarray:
    """``E[U | sigma]`` as an atom-indexed array; zero on null cells."""
    u = np.asarray(u, dtype=object)
    if u.ndim == 1:
        u = u.reshape(-1, 1)
    d = u.shape[1]
    out = np.empty((len(space), d), dtype=object)
    w = space.weights
    for cell in sigma.cells:
        mass = sum((w[a] for a in cell), ZERO)
        if mass == 0:
            val = [ZERO] * d
        else:
            val = [sum((w[a] * u[a, k] for a in cell), ZERO) / mass for k in range(d)]
        for a in cell:
            out[a] = val
    return out


# -- conditional Bayes identities -----------------------------------------------

@dataclass
class CheckResult:
    check: str
    t: int | None
    passed: bool
    cell: object = None
    lhs: object = None
    rhs: object = None

    def to_dict(self) -> dict:
        return {
            "check": self.check,
            "t": self.t,
            "cell": _jsonable(self.cell),
            "lhs": _jsonable(self.lhs),
            "rhs": _jsonable(self.rhs),
            "pass": self.passed,
        }


@dataclass
class Report:
    name: str
    results: list = field(default_factory=list)
    details: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def witness(self) -> CheckResult | None:
        return next((r for r in self.results if not r.passed), None)

    def extend(self, other: "Report") -> None:
        self.results.extend(other.results)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "pass": self.passed,
            "checks": [r.to_dict() for r in self.results],
            "details": _jsonable(self.details),
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def _jsonable(v):
    if v is None or isinstance(v, (bool, str)):
        return v
    if isinstance(v, Fraction):
        return kl.format_scalar(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return kl.format_scalar(v)
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, Report):
        return v.to_dict()
    return str(v)


def _conditional_given_h(space: FiniteSpace, u: np.ndarray, f0: Partition,
                         h: Partition) -> tuple[list, list]:
    """``E_i[U | F0]`` for every ``H_i``, evaluated at every atom.

    Computed directly from the restricted sums ``sum_{F cap H_i} w u`` and
    ``sum_{F cap H_i} w``; returns ``(values, masses)`` where ``values[i]`` is
    an ``(N, d)`` array and ``masses[i] = P(H_i)``.
    """
    w = space.weights
    d = u.shape[1]
    values, masses = [], []
    for i, hcell in enumerate(h.cells):
        hset = set(hcell)
        masses.append(sum((w[a] for a in hcell), ZERO))
        vals = np.empty((len(space), d), dtype=object)
        for fcell in f0.cells:
            inter = [a for a in fcell if a in hset]
            mass = sum((w[a] for a in inter), ZERO)
            if mass == 0:
                v = [ZERO] * d
            else:
                v = [sum((w[a] * u[a, k] for a in inter), ZERO) / mass for k in range(d)]
            for a in fcell:
                vals[a] = v
        values.append(vals)
    return values, masses


def _compare_atoms(name: str, lhs: np.ndarray, rhs: np.ndarray, t=None) -> CheckResult:
    for a in range(lhs.shape[0]):
        if any(x != y for x, y in zip(lhs[a], rhs[a])):
            return CheckResult(name, t, False, a, list(lhs[a]), list(rhs[a]))
    return CheckResult(name, t, True)


def lemma_a1_check(space: FiniteSpace, u: np.ndarray, f0: Partition, h: Partition,
                   t: int | None = None) -> Report:
    """Evaluate both sides of the three conditional-Bayes identities atomwise.

    * bayes:  ``E[U | F0 v H] = sum_i E_i[U|F0] 1_{H_i}``
    * bayes3: ``E[U | F0] = sum_i E_i[U|F0] E[1_{H_i}|F0]``
    * bayes2: ``E[1_{H_j} U | F0] = E[1_{H_j}|F0] E_j[U|F0]`` for every ``j``
    """
    u = np.asarray(u, dtype=object)
    if u.ndim == 1:
        u = u.reshape(-1, 1)
    N, d = u.shape
    e_i, masses = _conditional_given_h(space, u, f0, h)
    h_of = h.cell_index()
    report = Report("lemma-a1", details={"null_h_cells": sum(1 for p in masses if p == 0)})

    lhs = cond_exp(space, u, join(f0, h))
    rhs = np.empty((N, d), dtype=object)
    for a in range(N):
        rhs[a] = e_i[h_of[a]][a]
    report.results.append(_compare_atoms("bayes", lhs, rhs, t))

    ind = [np.array([[ONE if h_of[a] == i else ZERO] for a in range(N)], dtype=object)
           for i in range(len(h.cells))]
    p_h = [cond_exp(space, ind[i], f0) for i in range(len(h.cells))]

    lhs3 = cond_exp(space, u, f0)
    rhs3 = np.empty((N, d), dtype=object)
    for a in range(N):
        rhs3[a] = [sum((e_i[i][a, k] * p_h[i][a, 0] for i in range(len(h.cells))), ZERO)
                   for k in range(d)]
    report.results.append(_compare_atoms("bayes3", lhs3, rhs3, t))

    ok = CheckResult("bayes2", t, True)
    for j in range(len(h.cells)):
        lhs2 = cond_exp(space, u * ind[j], f0)
        rhs2 = np.empty((N, d), dtype=object)
        for a in range(N):
            rhs2[a] = [p_h[j][a, 0] * e_i[j][a, k] for k in range(d)]
        res = _compare_atoms("bayes2", lhs2, rhs2, t)
        if not res.passed:
            res.cell = {"atom": res.cell, "h": j}
            ok = res
            break
    report.results.append(ok)
    return report


# -- enumeration ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class JointChain:
    """A general Markov chain on ``Z = Y (x) X`` with an ``nm x nm`` kernel.

    Unlike the model records, the next joint state may depend on the current
    output as well as the state; used to build counterexamples.
    """

    kernel: np.ndarray
    q0: np.ndarray
    n: int
    m: int

    def __post_init__(self):
        k = kl.stoch_matrix(self.kernel, True, "kernel")
        q = kl.prob_vector(self.q0, True, "q0")
        if k.shape != (self.n * self.m, self.n * self.m) or len(q) != self.n * self.m:
            raise ModelError("joint chain dimensions do not match n*m")
        object.__setattr__(self, "kernel", k)
        object.__setattr__(self, "q0", q)


def _check_budget(count: int, budget: int | None) -> None:
    budget = atom_budget() if budget is None else budget
    if count > budget:
        raise AtomBudgetExceeded(count, budget)


def _exact(model):
    return model if model.exact else model.astype(True)


def _expand(start: list, steps: int, step_fn) -> list:
    """Breadth-first trajectory expansion with zero-weight pruning."""
    level = [s for s in start if s[2] != 0]
    for _ in range(steps):
        nxt = []
        for xs, ys, w in level:
            for x2, y2, p in step_fn(xs, ys):
                if p != 0:
                    nxt.append((xs + (x2,), ys if y2 is None else ys + (y2,), w * p))
        level = nxt
    return level


def _space(level: list, n: int, m: int, kind: str) -> FiniteSpace:
    return FiniteSpace(tuple((xs, ys) for xs, ys, _ in level),
                       tuple(w for _, _, w in level), n, m, kind)


def _hmc_atoms(p0, A, G, T: int, y_len: int) -> list:
    n, m = A.shape[0], G.shape[0]
    start = [((x,), (y,) if y_len > 0 else (), p0[x] * (G[y, x] if y_len > 0 else ONE))
             for x in range(n) for y in (range(m) if y_len > 0 else [0])]

    def step(xs, ys):
        x = xs[-1]
        emit = len(xs) < y_len
        for x2 in range(n):
            a = A[x2, x]
            if a == 0:
                continue
            if emit:
                for y2 in range(m):
                    yield x2, y2, a * G[y2, x2]
            else:
                yield x2, None, a

    return _expand(start, T, step)


def enumerate_hmc(model: HmcModel, T: int, budget: int | None = None) -> FiniteSpace:
    """One atom per trajectory ``(x_0..x_T, y_0..y_T)`` with positive weight."""
    model = _exact(model)
    n, m = model.n, model.m
    _check_budget((n * m) ** (T + 1), budget)
    atoms = _hmc_atoms(model.p0, model.A, model.G, T, T + 1)
    return _space(atoms, n, m, "hmc")


def enumerate_sigma_p(model: SigmaPModel, T: int, budget: int | None = None) -> FiniteSpace:
    model = _exact(model)
    n, m = model.n, model.m
    _check_budget((n * m) ** (T + 1), budget)
    start = [((k % n,), (k // n,), model.q0[k]) for k in range(n * m)]
    blocks = model.blocks

    def step(xs, ys):
        x = xs[-1]
        for y2 in range(m):
            col = blocks[y2][:, x]
            for x2 in range(n):
                yield x2, y2, col[x2]

    return _space(_expand(start, T, step), n, m, "sigma_p")


def enumerate_sigma_s(model: SigmaSModel, T: int, budget: int | None = None) -> FiniteSpace:
    """Atoms ``(x_0..x_T, y_0..y_{T-1})``."""
    model = _exact(model)
    n, m = model.n, model.m
    _check_budget(n * (n * m) ** T, budget)
    start = [((x,), (), model.p0[x]) for x in range(n)]
    blocks = model.blocks

    def step(xs, ys):
        x = xs[-1]
        for y in range(m):
            col = blocks[y][:, x]
            for x2 in range(n):
                yield x2, y, col[x2]

    return _space(_expand(start, T, step), n, m, "sigma_s")


def enumerate_joint(chain: JointChain, T: int, budget: int | None = None) -> FiniteSpace:
    n, m = chain.n, chain.m
    _check_budget((n * m) ** (T + 1), budget)
    start = [((k % n,), (k // n,), chain.q0[k]) for k in range(n * m)]
    Q = chain.kernel

    def step(xs, ys):
        z = ys[-1] * n + xs[-1]
        for k in range(n * m):
            yield k % n, k // n, Q[k, z]

    return _space(_expand(start, T, step), n, m, "joint")


def enumerate_model(model, T: int, budget: int | None = None) -> FiniteSpace:
    if isinstance(model, HmcModel):
        return enumerate_hmc(model, T, budget)
    if isinstance(model, SigmaPModel):
        return enumerate_sigma_p(model, T, budget)
    if isinstance(model, SigmaSModel):
        return enumerate_sigma_s(model, T, budget)
    if isinstance(model, JointChain):
        return enumerate_joint(model, T, budget)
    raise TypeError(f"cannot enumerate {type(model).__name__}")


# -- trajectory helpers -----------------------------------------------------

def _f_key(t: int):
    return lambda lab: (lab[0][:t + 1], lab[1][:t + 1])


def _g_key(t: int):
    return lambda lab: (lab[0][:t + 1], lab[1][:t])


def _groups(space: FiniteSpace, key: Callable) -> dict:
    out: dict = defaultdict(list)
    for i, lab in enumerate(space.labels):
        out[key(lab)].append(i)
    return out


def _law(space: FiniteSpace, idxs: Iterable[int], value: Callable, size: int):
    """``(mass, law)`` of an index-valued quantity over a set of atoms."""
    vec = [ZERO] * size
    mass = ZERO
    for a in idxs:
        w = space.weights[a]
        mass += w
        vec[value(space.labels[a])] += w
    if mass == 0:
        return mass, None
    return mass, np.array([v / mass for v in vec], dtype=object)


def _vec_eq(a, b) -> bool:
    return all(x == y for x, y in zip(a, b))


def _cell_repr(key) -> dict:
    if key == ():
        return {"x": [], "y": []}
    xs, ys = key
    return {"x": list(xs), "y": list(ys)}


def oracle_posteriors(space: FiniteSpace, t: int, kind: str = "filter") -> dict:
    """Exact conditional law of ``X_t`` (filter) or ``X_{t+1}`` (predictor)
    given ``y_0..y_t``, for every positive-probability observation prefix."""
    n = space.n
    if kind not in ("filter", "predictor"):
        raise ValueError(f"unknown kind {kind!r}")
    target = t if kind == "filter" else t + 1
    if target > space.horizon or t >= space.y_len:
        raise ValueError("space horizon too short for the requested posterior")
    out = {}
    for key, idxs in _groups(space, lambda lab: lab[1][:t + 1]).items():
        mass, law = _law(space, idxs, lambda lab: lab[0][target], n)
        if mass != 0:
            out[key] = law
    return out


def observation_probability(space: FiniteSpace, ys: Sequence[int]) -> Fraction:
    ys = tuple(ys)
    k = len(ys)
    return sum((w for lab, w in zip(space.labels, space.weights) if lab[1][:k] == ys), ZERO)


# -- verifiers ----------------------------------------------------------------

_MARKOV_KINDS = {
    # which: (filtration, current quantity, next quantity)
    "Z-in-F": ("F", "Z", "Z"),
    "X-in-F": ("F", "X", "X"),
    "W-in-G": ("G", "W", "W"),
    "X-in-G": ("G", "X", "X"),
    "Z-on-X-in-F": ("F", "X", "Z"),
    "W-on-X-in-G": ("G", "X", "W"),
}


def _markov_range(space: FiniteSpace, which: str) -> range:
    """Times ``t`` at which every quantity of the one-step check exists."""
    T, L = space.horizon, space.y_len
    filt, cur, nxt = _MARKOV_KINDS[which]
    stop = T
    if nxt == "Z":
        stop = min(stop, L - 1)
    elif filt == "F" or nxt == "W":
        stop = min(stop, L)
    start = 1 if cur == "W" else 0
    return range(start, max(start, stop))


def _quantity(kind: str, n: int, t: int) -> Callable:
    if kind == "X":
        return lambda lab: lab[0][t]
    if kind == "Z":
        return lambda lab: lab[1][t] * n + lab[0][t]
    if kind == "W":
        return lambda lab: lab[1][t - 1] * n + lab[0][t]
    raise ValueError(kind)


def verify_markov(space: FiniteSpace, which: str, matrix: np.ndarray | None = None) -> Report:
    """Check that a process is Markov w.r.t. a prefix filtration.

    On every positive-probability history cell the conditional law of the
    next value must depend only on the designated current coordinate, be the
    same at every time, and (when ``matrix`` is given) equal the matching
    column of ``matrix``. ``details["kernel"]`` holds the observed kernel with
    zero columns for unvisited current values (listed in
    ``details["unvisited"]``).
    """
    if which not in _MARKOV_KINDS:
        raise ValueError(f"unknown Markov check {which!r}")
    n, m = space.n, space.m
    filt, cur_kind, nxt_kind = _MARKOV_KINDS[which]
    size = {"X": n, "Z": n * m, "W": n * m}
    kernel: list = [None] * size[cur_kind]
    first_seen: list = [None] * size[cur_kind]
    report = Report(f"markov:{which}")
    for t in _markov_range(space, which):
        key_fn = _f_key(t) if filt == "F" else _g_key(t)
        cur = _quantity(cur_kind, n, t)
        nxt = _quantity(nxt_kind, n, t + 1)
        result = CheckResult(which, t, True)
        for key, idxs in _groups(space, key_fn).items():
            mass, law = _law(space, idxs, nxt, size[nxt_kind])
            if law is None:
                continue
            c = cur(space.labels[idxs[0]])
            if matrix is not None:
                expected = matrix[:, c]
            elif kernel[c] is None:
                kernel[c], first_seen[c] = law, (t, key)
                continue
            else:
                expected = kernel[c]
            if not _vec_eq(law, expected):
                result = CheckResult(which, t, False, _cell_repr(key), list(law),
                                     list(expected))
                break
            if kernel[c] is None:
                kernel[c] = law
        report.results.append(result)
        if not result.passed:
            break
    mat = kl.zeros((size[nxt_kind], size[cur_kind]), True)
    for c, col in enumerate(kernel):
        if col is not None:
            mat[:, c] = col
    report.details["kernel"] = mat
    report.details["unvisited"] = [c for c, col in enumerate(kernel) if col is None]
    return report


def verify_factorization(space: FiniteSpace, k: np.ndarray | None = None) -> Report:
    """``E[Z_t | F_{t-1}] = Delta(K) E[X_t | F_{t-1}]`` for ``t >= 1``.

    With ``k=None`` the factor is recovered from the first cell where each
    state has positive mass and must then be the same everywhere. The initial
    law is not constrained here; ``hmc_law_check`` covers it.
    """
    n, m = space.n, space.m
    K: list = [None] * n if k is None else [k[:, r] for r in range(n)]
    report = Report("factorization")
    for t in range(1, min(space.horizon + 1, space.y_len)):
        key_fn = _f_key(t - 1)
        z_of = _quantity("Z", n, t)
        result = CheckResult("factorization", t, True)
        for key, idxs in _groups(space, key_fn).items():
            mass, zlaw = _law(space, idxs, z_of, n * m)
            if zlaw is None:
                continue
            xlaw = kl.x_selector(n, m, True) @ zlaw
            bad = None
            for r in range(n):
                if xlaw[r] == 0:
                    continue
                col = np.array([zlaw[i * n + r] / xlaw[r] for i in range(m)], dtype=object)
                if K[r] is None:
                    K[r] = col
                elif not _vec_eq(col, K[r]):
                    bad = r
                    break
            if bad is not None:
                lhs = list(zlaw)
                rhs = list(kl.delta(_k_matrix(K, m)) @ xlaw)
                result = CheckResult("factorization", t, False,
                                     dict(_cell_repr(key), state=bad), lhs, rhs)
                break
        report.results.append(result)
        if not result.passed:
            break
    report.details["K"] = _k_matrix(K, m)
    return report


def _k_matrix(cols: list, m: int) -> np.ndarray:
    """Assemble columns; unidentified columns default to the first basis vector."""
    out = kl.zeros((m, len(cols)), True)
    for r, c in enumerate(cols):
        if c is None:
            out[0, r] = ONE
        else:
            out[:, r] = c
    return out


def verify_splitting(space: FiniteSpace) -> Report:
    """``E[W_{t+1} | G_t] = E[Y_t | G_t] (x) E[X_{t+1} | G_t]``."""
    n, m = space.n, space.m
    report = Report("splitting")
    for t in range(0, min(space.horizon, space.y_len)):
        w_of = _quantity("W", n, t + 1)
        result = CheckResult("splitting", t, True)
        for key, idxs in _groups(space, _g_key(t)).items():
            mass, wlaw = _law(space, idxs, w_of, n * m)
            if wlaw is None:
                continue
            ylaw = kl.y_selector(n, m, True) @ wlaw
            xlaw = kl.x_selector(n, m, True) @ wlaw
            rhs = kl.kron(ylaw, xlaw)
            if not _vec_eq(wlaw, rhs):
                result = CheckResult("splitting", t, False, _cell_repr(key), list(wlaw),
                                     list(rhs))
                break
        report.results.append(result)
        if not result.passed:
            break
    return report


def verify_output_properties(space: FiniteSpace, g: np.ndarray | None = None) -> Report:
    """Output property ``E[Y_t | G_t] = G X_t`` and extended output property
    ``E[Z_t | G_t] = B X_t`` with constant ``G`` and ``B``; when both hold,
    also checks ``B = Delta(G)``."""
    n, m = space.n, space.m
    report = Report("output-properties")
    identified = {}
    for name, size, quantity in (("output", m, "Y"), ("extended-output", n * m, "Z")):
        cols: list = [None] * n
        if name == "output" and g is not None:
            cols = [g[:, r] for r in range(n)]
        for t in range(0, min(space.horizon + 1, space.y_len)):
            if quantity == "Y":
                val = (lambda tt: lambda lab: lab[1][tt])(t)
            else:
                val = _quantity("Z", n, t)
            result = CheckResult(name, t, True)
            for key, idxs in _groups(space, _g_key(t)).items():
                mass, law = _law(space, idxs, val, size)
                if law is None:
                    continue
                r = space.labels[idxs[0]][0][t]
                if cols[r] is None:
                    cols[r] = law
                elif not _vec_eq(law, cols[r]):
                    result = CheckResult(name, t, False, _cell_repr(key), list(law),
                                         list(cols[r]))
                    break
            report.results.append(result)
            if not result.passed:
                break
        report.details["G" if quantity == "Y" else "B"] = _k_matrix(cols, size)
        identified[quantity] = [r for r in range(n) if cols[r] is not None]
    if report.passed:
        G, B = report.details["G"], report.details["B"]
        dg = kl.delta(G)
        ok = all(_vec_eq(B[:, r], dg[:, r]) for r in identified["Z"])
        report.results.append(CheckResult("B=Delta(G)", None, ok, None,
                                          None if ok else B, None if ok else dg))
    return report


def verify_w_relations(space: FiniteSpace, A: np.ndarray, G: np.ndarray) -> Report:
    """``E[W_t|F_{t-1}] = (I (x) A) Z_{t-1}`` and
    ``E[W_t|G_{t-1}] = (I (x) A) Delta(G) X_{t-1}`` cellwise."""
    n, m = space.n, space.m
    IA = kl.kron(kl.eye(m, True), kl.as_exact(A))
    IAD = IA @ kl.delta(kl.as_exact(G))
    report = Report("w-relations")
    stop = min(space.horizon, space.y_len) + 1
    for name, key_of, cur_kind, M in (("zandw", _f_key, "Z", IA), ("gmarkov", _g_key, "X", IAD)):
        for t in range(1, stop):
            w_of = _quantity("W", n, t)
            cur = _quantity(cur_kind, n, t - 1)
            result = CheckResult(name, t, True)
            for key, idxs in _groups(space, key_of(t - 1)).items():
                mass, law = _law(space, idxs, w_of, n * m)
                if law is None:
                    continue
                expected = M[:, cur(space.labels[idxs[0]])]
                if not _vec_eq(law, expected):
                    result = CheckResult(name, t, False, _cell_repr(key), list(law),
                                         list(expected))
                    break
            report.results.append(result)
            if not result.passed:
                break
    return report


def in_sigma_p(space: FiniteSpace) -> Report:
    """``Z`` is ``F``-Markov with transitions depending on ``X_t`` only."""
    rep = verify_markov(space, "Z-on-X-in-F")
    rep.name = "sigma_p-membership"
    return rep


def in_sigma_s(space: FiniteSpace) -> Report:
    """``W`` is ``G``-Markov with transitions depending on ``X_t`` only."""
    rep = verify_markov(space, "W-on-X-in-G")
    rep.name = "sigma_s-membership"
    return rep


# -- factor-form checks on observed kernels -----------------------------------

def _depends_on_x_only(kernel: np.ndarray, unvisited, n: int, m: int, name: str):
    """Collapse an ``nm x nm`` kernel whose columns ``(y, x)`` agree across ``y``."""
    bar: list = [None] * n
    for k in range(n * m):
        if k in unvisited:
            continue
        x = k % n
        if bar[x] is None:
            bar[x] = kernel[:, k]
        elif not _vec_eq(bar[x], kernel[:, k]):
            return None, CheckResult(f"{name}:depends-on-x", None, False,
                                     {"column": k}, list(kernel[:, k]), list(bar[x]))
    return bar, CheckResult(f"{name}:depends-on-x", None, True)


def _q_form(bar: list, n: int, m: int) -> CheckResult:
    """Visited columns of ``Qbar`` satisfy ``Qbar = Delta(G) A`` for some ``G``."""
    cols = [c for c in range(n) if bar[c] is not None]
    A = {c: [sum((bar[c][i * n + r] for i in range(m)), ZERO) for r in range(n)] for c in cols}
    G: list = [None] * n
    for r in range(n):
        src = next((c for c in cols if A[c][r] != 0), None)
        if src is not None:
            G[r] = [bar[src][i * n + r] / A[src][r] for i in range(m)]
    for c in cols:
        for r in range(n):
            for i in range(m):
                g = G[r][i] if G[r] is not None else ZERO
                if bar[c][i * n + r] != g * A[c][r]:
                    return CheckResult("Q-form", None, False, {"column": c, "row": i * n + r},
                                       bar[c][i * n + r], g * A[c][r])
    return CheckResult("Q-form", None, True)


def _r_form(bar: list, n: int, m: int) -> CheckResult:
    """Visited columns of ``Rbar`` satisfy ``Rbar = (I (x) A) Delta(G)``."""
    for c in range(n):
        if bar[c] is None:
            continue
        col = bar[c]
        a = [sum((col[i * n + r] for i in range(m)), ZERO) for r in range(n)]
        g = [sum((col[i * n + r] for r in range(n)), ZERO) for i in range(m)]
        for i in range(m):
            for r in range(n):
                if col[i * n + r] != a[r] * g[i]:
                    return CheckResult("R-form", None, False, {"column": c, "row": i * n + r},
                                       col[i * n + r], a[r] * g[i])
    return CheckResult("R-form", None, True)


def hmc_law_check(space: FiniteSpace) -> Report:
    """The space's law equals that of an HMC built from its own marginals.

    ``p0`` is the law of ``X_0``; column ``r`` of ``G`` (``A``) is the law of
    ``Y_t`` (``X_{t+1}``) given ``X_t = r`` at the first time ``r`` has mass.
    """
    n, m = space.n, space.m
    T, L = space.horizon, space.y_len
    _, p0 = _law(space, range(len(space)), lambda lab: lab[0][0], n)
    G: list = [None] * n
    A: list = [None] * n
    for t in range(T + 1):
        for r, idxs in _groups(space, lambda lab: lab[0][t]).items():
            if t < L and G[r] is None:
                _, G[r] = _law(space, idxs, (lambda tt: lambda lab: lab[1][tt])(t), m)
            if t < T and A[r] is None:
                _, A[r] = _law(space, idxs, (lambda tt: lambda lab: lab[0][tt + 1])(t), n)
    Gm, Am = _k_matrix(G, m), _k_matrix(A, n)
    law = {(xs, ys): w for xs, ys, w in _hmc_atoms(p0, Am, Gm, T, L)}
    actual = space.law()
    report = Report("hmc-law", details={"A": Am, "G": Gm, "p0": p0})
    for lab in sorted(set(law) | set(actual)):
        lw, aw = law.get(lab, ZERO), actual.get(lab, ZERO)
        if lw != aw:
            report.results.append(CheckResult("hmc-law", None, False,
                                              {"x": list(lab[0]), "y": list(lab[1])}, aw, lw))
            return report
    report.results.append(CheckResult("hmc-law", None, True))
    return report


def theorem_3_5_suite(model_or_space, T: int | None = None,
                      budget: int | None = None) -> Report:
    """Evaluate the five equivalent characterizations of a hidden Markov chain.

    (a) ``X`` F-Markov and factorization; (b) ``X`` G-Markov and splitting;
    (c) ``Z`` F-Markov with ``Q = Delta(G) A (1^T (x) I)``; (d) ``W`` G-Markov
    with ``R = (I (x) A) Delta(G) (1^T (x) I)``; (e) the law is that of an HMC.
    ``details["clauses"]`` maps each clause to its truth value and
    ``details["agree"]`` records whether all five coincide.
    """
    if isinstance(model_or_space, FiniteSpace):
        space = model_or_space
    else:
        if T is None:
            raise ValueError("horizon T required when passing a model")
        space = enumerate_model(model_or_space, T, budget)
    n, m = space.n, space.m
    subs: dict = {}

    subs["a:X-in-F"] = verify_markov(space, "X-in-F")
    subs["a:factorization"] = verify_factorization(space)
    subs["b:X-in-G"] = verify_markov(space, "X-in-G")
    subs["b:splitting"] = verify_splitting(space)

    zrep = verify_markov(space, "Z-in-F")
    if zrep.passed:
        bar, res = _depends_on_x_only(zrep.details["kernel"], zrep.details["unvisited"],
                                      n, m, "Z")
        zrep.results.append(res)
        if bar is not None:
            zrep.results.append(_q_form(bar, n, m))
    subs["c:Z-in-F"] = zrep

    wrep = verify_markov(space, "W-in-G")
    if wrep.passed:
        bar, res = _depends_on_x_only(wrep.details["kernel"], wrep.details["unvisited"],
                                      n, m, "W")
        wrep.results.append(res)
        if bar is not None:
            wrep.results.append(_r_form(bar, n, m))
    subs["d:W-in-G"] = wrep

    subs["e:hmc-law"] = hmc_law_check(space)

    clauses = {
        "a": subs["a:X-in-F"].passed and subs["a:factorization"].passed,
        "b": subs["b:X-in-G"].passed and subs["b:splitting"].passed,
        "c": subs["c:Z-in-F"].passed,
        "d": subs["d:W-in-G"].passed,
        "e": subs["e:hmc-law"].passed,
    }
    agree = len(set(clauses.values())) == 1
    report = Report("theorem-3-5", details={"clauses": clauses, "agree": agree,
                                            "atoms": len(space)})
    for name, sub in subs.items():
        for r in sub.results:
            report.results.append(CheckResult(f"{name}/{r.check}", r.t, r.passed,
                                              r.cell, r.lhs, r.rhs))
    report.results.append(CheckResult("clauses-agree", None, agree,
                                      None, clauses if not agree else None))
    return report


def filtering_lemma_suite(space: FiniteSpace) -> Report:
    """Conditional Bayes identities in the filtering configuration: ``U = X_t``,
    ``F0 = sigma(Y_0..Y_{t-1})``, ``H = sigma(Y_t)``, for every ``t``."""
    n = space.n
    report = Report("lemma-a1", details={"null_h_cells": 0})
    for t in range(min(space.horizon + 1, space.y_len)):
        u = rand_vec(space, (lambda tt: lambda lab: kl.basis(lab[0][tt], n))(t))
        f0 = Partition.from_key(space, (lambda tt: lambda lab: lab[1][:tt])(t))
        h = Partition.from_key(space, (lambda tt: lambda lab: lab[1][tt])(t))
        sub = lemma_a1_check(space, u, f0, h, t)
        report.results.extend(sub.results)
        report.details["null_h_cells"] += sub.details["null_h_cells"]
    return report
