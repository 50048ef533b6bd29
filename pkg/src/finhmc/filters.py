"""Exact recursive filters and predictors for HMC, sigma_p and sigma_s systems.

Conventions for the first observation ``y_0``:

* HMC: :func:`hmc_filter_step` with ``t=0`` takes ``p0`` and applies
  ``X_0 = diag(p0) G^T diag(G p0)^{-1} Y_0``.
* sigma_p: :func:`sigma_p_init` conditions the joint initial law ``q0`` on ``y_0``.
* sigma_s: the predictor starts from ``X_{0|-1} = p0``.

Every state carries ``lik_inc = P(y_t | y_0..y_{t-1})`` in the model's scalar
type (a ``Fraction`` in exact mode); ``loglik_inc`` is its natural log.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kronlab as kl
from .models import (
    HmcModel,
    SigmaPModel,
    SigmaSModel,
    hmc_to_sigma_p,
    hmc_to_sigma_s,
    sigma_p_marginals,
    sigma_s_marginals,
)

__all__ = [
    "ImpossibleObservation",
    "SingularOutputMass",
    "FilterState",
    "FilterRun",
    "sigma_p_init",
    "sigma_p_step",
    "sigma_p_step_ratio",
    "sigma_s_predict_step",
    "sigma_s_filter",
    "hmc_filter_step",
    "g_map",
    "run_filter",
]


class ImpossibleObservation(ValueError):
    """The observation at time ``t`` has conditional probability zero."""

    def __init__(self, t: int | None, y: int, message: str | None = None):
        self.t = t
        self.y = y
        where = f"t={t}" if t is not None else "this step"
        super().__init__(message or f"impossible observation y={y} at {where}")


class SingularOutputMass(ValueError):
    """Some output has zero predicted mass, so ``diag(Gx)`` is not invertible."""


@dataclass(frozen=True, eq=False)
class FilterState:
    t: int
    x_filt: np.ndarray
    x_pred: np.ndarray
    y_pred: np.ndarray
    lik_inc: object
    reset: bool = False

    @property
    def loglik_inc(self) -> float:
        v = float(self.lik_inc)
        return math.log(v) if v > 0 else -math.inf

    def __eq__(self, other):
        if not isinstance(other, FilterState):
            return NotImplemented
        return (self.t == other.t and self.reset == other.reset
                and self.lik_inc == other.lik_inc
                and all(np.array_equal(a, b) for a, b in (
                    (self.x_filt, other.x_filt),
                    (self.x_pred, other.x_pred),
                    (self.y_pred, other.y_pred))))


def _check_y(y: int, m: int) -> None:
    if not 0 <= y < m:
        raise IndexError(f"output index {y} out of range 0..{m - 1}")


def _is_zero(v) -> bool:
    return v == 0


def _ones(n: int, like: np.ndarray) -> np.ndarray:
    return kl.ones(n, kl.is_exact(like))


# -- sigma_p -----------------------------------------------------------------

def sigma_p_init(model: SigmaPModel, y0: int, marginals=None) -> FilterState:
    n = model.n
    _check_y(y0, model.m)
    A, C = marginals or sigma_p_marginals(model)
    block = model.q0[y0 * n:(y0 + 1) * n]
    mass = block.sum()
    if _is_zero(mass):
        raise ImpossibleObservation(0, y0)
    x = block / mass
    return FilterState(0, x, A @ x, C @ x, mass)


def sigma_p_step(model: SigmaPModel, prev: FilterState, y_t: int,
                 marginals=None) -> FilterState:
    """One step in the form ``[Q_1 x, ..., Q_m x] diag(C x)^{-1} Y_t``."""
    _check_y(y_t, model.m)
    A, C = marginals or sigma_p_marginals(model)
    x_prev = prev.x_filt
    y_mass = C @ x_prev
    denom = y_mass[y_t]
    if _is_zero(denom):
        raise ImpossibleObservation(prev.t + 1, y_t)
    x = (model.blocks[y_t] @ x_prev) / denom
    return FilterState(prev.t + 1, x, A @ x, C @ x, denom)


def sigma_p_step_ratio(model: SigmaPModel, x_prev: np.ndarray, y_t: int) -> np.ndarray:
    """Definitional column-ratio form ``Q_y x / (1^T Q_y x)``; used as a cross-check."""
    v = model.blocks[y_t] @ x_prev
    s = v.sum()
    if _is_zero(s):
        raise ImpossibleObservation(None, y_t)
    return v / s


# -- sigma_s -----------------------------------------------------------------

def sigma_s_predict_step(model: SigmaSModel, x_pred_prev: np.ndarray, y_t: int,
                         g: np.ndarray | None = None) -> np.ndarray:
    """``X_{t+1|t} = R_y X_{t|t-1} / (G X_{t|t-1})_y``."""
    _check_y(y_t, model.m)
    if g is None:
        _, g = sigma_s_marginals(model)
    denom = (g @ x_pred_prev)[y_t]
    if _is_zero(denom):
        raise ImpossibleObservation(None, y_t)
    return (model.blocks[y_t] @ x_pred_prev) / denom


def sigma_s_filter(g: np.ndarray, x_pred: np.ndarray, y: int) -> np.ndarray:
    """``diag(x_pred) G^T diag(G x_pred)^{-1} Y``, evaluated componentwise."""
    _check_y(y, g.shape[0])
    denom = (g @ x_pred)[y]
    if _is_zero(denom):
        raise ImpossibleObservation(None, y)
    return x_pred * g[y] / denom


# -- HMC ---------------------------------------------------------------------

def g_map(g: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``G_x = diag(x) G^T diag(G x)^{-1}`` (an ``n x m`` matrix)."""
    gx = g @ x
    for j, v in enumerate(gx):
        if _is_zero(v):
            raise SingularOutputMass(f"(G x)[{j}] is zero")
    inv = np.array([1 / v for v in gx], dtype=gx.dtype)
    return kl.diag(x) @ g.T @ kl.diag(inv)


def hmc_filter_step(model: HmcModel, x_filt_prev: np.ndarray, y_t: int,
                    t: int = 1) -> FilterState:
    """``X_t = diag(A X_{t-1}) G^T diag(G A X_{t-1})^{-1} Y_t``.

    With ``t == 0`` pass ``p0`` as ``x_filt_prev``; no transition is applied.
    """
    _check_y(y_t, model.m)
    prior = x_filt_prev if t == 0 else model.A @ x_filt_prev
    denom = (model.G @ prior)[y_t]
    if _is_zero(denom):
        raise ImpossibleObservation(t, y_t)
    x = prior * model.G[y_t] / denom
    x_pred = model.A @ x
    return FilterState(t, x, x_pred, model.G @ x_pred, denom)


# -- driver ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class FilterRun:
    states: tuple

    @property
    def loglik(self) -> float:
        return sum(s.loglik_inc for s in self.states)

    @property
    def likelihood(self):
        """Product of the increments; exact in rational mode."""
        out = Fraction(1) if isinstance(self.states[0].lik_inc, Fraction) else 1.0
        for s in self.states:
            out *= s.lik_inc
        return out

    def __iter__(self):
        return iter(self.states)

    def __len__(self):
        return len(self.states)

    def __getitem__(self, i):
        return self.states[i]


def _uniform(n: int, exact: bool) -> np.ndarray:
    return np.array([Fraction(1, n)] * n, dtype=object) if exact else np.full(n, 1.0 / n)


def _reset_state(t: int, n: int, exact: bool, A, Cy) -> FilterState:
    x = _uniform(n, exact)
    zero = Fraction(0) if exact else 0.0
    x_pred = A @ x
    return FilterState(t, x, x_pred, Cy(x, x_pred), zero, reset=True)


def _run_hmc(model: HmcModel, ys, on_impossible):
    out = []
    x = model.p0
    for t, y in enumerate(ys):
        try:
            st = hmc_filter_step(model, x, y, t=t)
        except ImpossibleObservation as exc:
            if on_impossible == "error":
                raise ImpossibleObservation(t, y) from exc
            st = _reset_state(t, model.n, model.exact, model.A,
                              lambda _x, xp: model.G @ xp)
        out.append(st)
        x = st.x_filt
    return out


def _run_sigma_p(model: SigmaPModel, ys, on_impossible):
    marg = sigma_p_marginals(model)
    A, C = marg
    out = []
    for t, y in enumerate(ys):
        try:
            if t == 0:
                st = sigma_p_init(model, y, marg)
            else:
                st = sigma_p_step(model, out[-1], y, marg)
        except ImpossibleObservation as exc:
            if on_impossible == "error":
                raise ImpossibleObservation(t, y) from exc
            st = _reset_state(t, model.n, model.exact, A, lambda x, _xp: C @ x)
        out.append(st)
    return out


def _run_sigma_s(model: SigmaSModel, ys, on_impossible):
    A, G = sigma_s_marginals(model)
    out = []
    x_pred = model.p0
    for t, y in enumerate(ys):
        _check_y(y, model.m)
        denom = (G @ x_pred)[y]
        if _is_zero(denom):
            if on_impossible == "error":
                raise ImpossibleObservation(t, y)
            st = _reset_state(t, model.n, model.exact, A, lambda _x, xp: G @ xp)
        else:
            x = sigma_s_filter(G, x_pred, y)
            nxt = sigma_s_predict_step(model, x_pred, y, G)
            st = FilterState(t, x, nxt, G @ nxt, denom)
        out.append(st)
        x_pred = st.x_pred
    return out


def run_filter(model, ys: Sequence[int], mode: str = "exact", route: str = "native",
               on_impossible: str = "error") -> FilterRun:
    """Filter an observation sequence (0-based output indices).

    ``route`` selects the recursion for HMC inputs: ``native`` (HMC
    recursion), ``sigma-p`` (via ``Q_i = diag(G_i.) A``) or ``sigma-s`` (via
    ``R_i = A diag(G_i.)``). Sigma models only support ``native``.
    ``on_impossible="uniform-reset"`` restarts from the uniform law, recording
    a zero likelihood increment, instead of raising.
    """
    if len(ys) == 0:
        raise ValueError("observation sequence is empty")
    if mode not in ("exact", "float"):
        raise ValueError(f"unknown mode {mode!r}")
    if on_impossible not in ("error", "uniform-reset"):
        raise ValueError(f"unknown on_impossible policy {on_impossible!r}")
    exact = mode == "exact"
    if model.exact != exact:
        model = model.astype(exact)
    for t, y in enumerate(ys):
        if not 0 <= int(y) < model.m:
            raise IndexError(f"observation {y} at t={t} out of range 0..{model.m - 1}")
    ys = [int(y) for y in ys]

    if isinstance(model, HmcModel):
        if route == "native":
            states = _run_hmc(model, ys, on_impossible)
        elif route == "sigma-p":
            states = _run_sigma_p(hmc_to_sigma_p(model), ys, on_impossible)
        elif route == "sigma-s":
            states = _run_sigma_s(hmc_to_sigma_s(model), ys, on_impossible)
        else:
            raise ValueError(f"unknown route {route!r}")
    elif route != "native":
        raise ValueError(f"route {route!r} is only available for HMC models")
    elif isinstance(model, SigmaPModel):
        states = _run_sigma_p(model, ys, on_impossible)
    elif isinstance(model, SigmaSModel):
        states = _run_sigma_s(model, ys, on_impossible)
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")
    return FilterRun(tuple(states))
