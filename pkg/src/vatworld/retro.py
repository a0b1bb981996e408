"""Joint posteriors over (start state, current state) and smoothing.

Conditioning on a window of actions and outputs, the square matrix with
entry [current, start] = Pr(start state, current state | window) carries both
directions of inference at once: its row sums are the forward-filtered belief
and its column sums are the posterior over where the machine began.  Products
of step matrices against a diagonal prior compute it directly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .beliefs import BeliefState
from .core import DEFAULT_TOL, History, Transducer
from .errors import ImpossibleHistoryError, SingularDiagonalError, StructureError

# A posterior over where the machine started is structurally just a belief;
# the alias marks intent at call sites.
RetrodictiveBelief = BeliefState


@dataclass(frozen=True)
class BDMSM:
    """Bi-directional posterior matrix for a conditioning window.

    matrix[i, j] = Pr(start state j, current state i | window); entries are
    non-negative and sum to one.
    """

    matrix: np.ndarray
    window: History

    def __init__(self, matrix, window: History, tol: float = 1e-8):
        m = np.asarray(matrix, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise StructureError("posterior matrix must be square")
        if np.any(m < -tol):
            raise StructureError(f"posterior matrix has a negative entry: {m.min():.3g}")
        if abs(m.sum() - 1.0) > tol:
            raise StructureError(f"posterior matrix sums to {m.sum():.12g}, not 1")
        m = m.copy()
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "window", window)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]


def bdmsm_from_word(t: Transducer, h: History) -> BDMSM:
    """Joint (start, current) posterior from scratch for a whole window.

    The time-ordered product of step matrices hits a diagonal matrix of the
    initial distribution; normalizing by the window's probability makes it
    the posterior.  The empty window returns the diagonal prior itself.
    """
    a_idx, y_idx = t.word_indices(h)
    mat = np.diag(t.initial)
    for a, y in zip(a_idx, y_idx):
        mat = t.kernel[a, y] @ mat
    z = float(mat.sum())
    if z <= 0.0:
        raise ImpossibleHistoryError(f"window {h} has probability {z}")
    return BDMSM(mat / z, h)


def bdmsm_forward(t: Transducer, rho: BDMSM, action, output) -> BDMSM:
    """Extend the window by one later (action, output) pair."""
    a = t.actions.index(action)
    y = t.outputs.index(output)
    mat = t.kernel[a, y] @ rho.matrix
    z = float(mat.sum())
    if z <= 0.0:
        raise ImpossibleHistoryError(
            f"extending window {rho.window} with ({action}, {output}) has probability 0"
        )
    return BDMSM(mat / z, rho.window.extended(action, output))


def predictive_from_bdmsm(rho: BDMSM) -> BeliefState:
    """Belief over the current state: marginalize out the start state."""
    return BeliefState(rho.matrix.sum(axis=1))


def retrodictive_from_bdmsm(rho: BDMSM) -> RetrodictiveBelief:
    """Posterior over the start state: marginalize out the current state."""
    return RetrodictiveBelief(rho.matrix.sum(axis=0))


def bdmsm_reverse_extend(
    t: Transducer,
    rho: BDMSM,
    a_prev,
    y_prev,
    rho_prev_diag: np.ndarray,
    rho_cur_diag: np.ndarray,
    tol: float = DEFAULT_TOL,
) -> BDMSM:
    """Prepend one earlier (action, output) pair to the window.

    The caller supplies the state-marginal diagonals at the window's current
    start time and one step earlier (under their declared action law; the
    result is only meaningful when the start state is uncorrelated with
    future actions under that law).  The current diagonal must be invertible
    wherever the posterior puts start-state mass.
    """
    d_prev = np.asarray(rho_prev_diag, dtype=float)
    d_cur = np.asarray(rho_cur_diag, dtype=float)
    if d_prev.shape != (rho.n,) or d_cur.shape != (rho.n,):
        raise StructureError("marginal diagonals must be length-n vectors")
    col_mass = np.abs(rho.matrix).sum(axis=0)
    needed = col_mass > 1e-15
    if np.any(needed & (d_cur <= tol)):
        bad = int(np.flatnonzero(needed & (d_cur <= tol))[0])
        raise SingularDiagonalError(
            f"current marginal diagonal is ~0 at state {t.states[bad]}, "
            "which carries posterior mass"
        )
    inv = np.where(needed, 1.0 / np.where(d_cur > tol, d_cur, 1.0), 0.0)
    a = t.actions.index(a_prev)
    y = t.outputs.index(y_prev)
    mat = (rho.matrix * inv[None, :]) @ t.kernel[a, y] * d_prev[None, :]
    z = float(mat.sum())
    if z <= 0.0:
        raise ImpossibleHistoryError(
            f"prepending ({a_prev}, {y_prev}) to window {rho.window} has probability 0"
        )
    window = History((str(a_prev),) + rho.window.actions, (str(y_prev),) + rho.window.outputs)
    return BDMSM(mat / z, window)


def _posterior_with_prior(t: Transducer, h: History, prior: np.ndarray) -> np.ndarray:
    """Unnormalized (current, start-of-window) joint for a window and prior."""
    a_idx, y_idx = t.word_indices(h)
    mat = np.diag(prior)
    for a, y in zip(a_idx, y_idx):
        mat = t.kernel[a, y] @ mat
    return mat


def smooth(t: Transducer, h: History) -> list[BeliefState]:
    """Posterior over the state at every time 0..t+1 given the whole history.

    Slice tau comes from a fresh window posterior over the history's suffix
    from tau, seeded with the forward-filtered belief at tau as its diagonal
    prior; its start-state marginal is exactly Pr(state at tau | whole
    history).
    """
    a_idx, y_idx = t.word_indices(h)
    forward = [t.initial / t.initial.sum()]
    for a, y in zip(a_idx, y_idx):
        raw = t.kernel[a, y] @ forward[-1]
        z = float(raw.sum())
        if z <= 0.0:
            raise ImpossibleHistoryError(f"history {h} has probability 0")
        forward.append(raw / z)

    slices: list[BeliefState] = []
    for tau in range(len(h) + 1):
        suffix = History(h.actions[tau:], h.outputs[tau:])
        mat = _posterior_with_prior(t, suffix, forward[tau])
        z = float(mat.sum())
        if z <= 0.0:
            raise ImpossibleHistoryError(f"history {h} has probability 0")
        slices.append(BeliefState(mat.sum(axis=0) / z))
    return slices
