"""History-vector spans, canonical dimension, and rank-minimal realizations.

For each history h, the vector w(h) holds the probability of h's outputs
given its actions from every possible start state.  The dimension of the span
of these vectors lower-bounds the state count of any machine generating the
same process; projecting the step matrices onto that span gives a (generally
quasi-probabilistic) realization of exactly that dimension.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from . import budget
from .core import (
    DEFAULT_TOL,
    GeneralizedTransducer,
    History,
    Transducer,
    ValidationReport,
    Violation,
)
from .oracle import _boundary

Source = Union[Transducer, GeneralizedTransducer]


@dataclass(frozen=True)
class HistoryMatrix:
    """Start-state likelihood vectors, one column per enumerated history."""

    columns: dict
    max_len: int

    @property
    def matrix(self) -> np.ndarray:
        return np.stack(list(self.columns.values()), axis=1)

    def __len__(self):
        return len(self.columns)


def _numeric_rank(mat: np.ndarray, tol: float) -> int:
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > tol * sv[0]))


def history_vectors(
    t: Source, max_len: int, tol: float = DEFAULT_TOL, force: bool = False
) -> HistoryMatrix:
    """Likelihood vectors for the empty history and every history up to max_len.

    Vectors for longer histories arise from shorter ones by applying a
    transposed step matrix, so the span can only stop growing once; levels are
    generated until max_len or until the rank is unchanged by a full level.
    """
    final, kern, _ = _boundary(t)
    n_actions, n_outputs = kern.shape[0], kern.shape[1]
    budget.check(float(n_actions * n_outputs) ** max(max_len, 0), force, "history enumeration")
    columns: dict[History, np.ndarray] = {History.empty(): final.astype(float)}
    level = {History.empty(): final.astype(float)}
    rank = _numeric_rank(np.stack(list(columns.values()), axis=1), tol)
    a_syms = t.actions.symbols
    y_syms = t.outputs.symbols
    for _ in range(max_len):
        nxt: dict[History, np.ndarray] = {}
        for h, w in level.items():
            for a in range(n_actions):
                for y in range(n_outputs):
                    longer = History((a_syms[a],) + h.actions, (y_syms[y],) + h.outputs)
                    nxt[longer] = kern[a, y].T @ w
        columns.update(nxt)
        level = nxt
        new_rank = _numeric_rank(np.stack(list(columns.values()), axis=1), tol)
        if new_rank == rank:
            break
        rank = new_rank
    return HistoryMatrix(columns, max_len)


def canonical_dimension(t: Source, tol: float = DEFAULT_TOL, force: bool = False) -> int:
    """Dimension of the history-vector span (a state-count lower bound).

    The span stabilizes by history length n - 1 for an n-state machine, so
    enumeration never needs to go further.
    """
    hm = history_vectors(t, max(t.n - 1, 0), tol, force)
    return _numeric_rank(hm.matrix, tol)


def _observability_basis(t: Source, tol: float, force: bool) -> np.ndarray:
    hm = history_vectors(t, max(t.n - 1, 0), tol, force)
    mat = hm.matrix
    u_svd, sv, _ = np.linalg.svd(mat, full_matrices=False)
    if sv.size == 0 or sv[0] == 0.0:
        raise RuntimeError(
            "history-vector span is degenerate; a valid machine always spans the "
            "all-ones direction"
        )
    r = int(np.sum(sv > tol * sv[0]))
    return u_svd[:, :r]


def _reachability_basis(g: GeneralizedTransducer, tol: float, force: bool) -> np.ndarray:
    """Orthonormal basis for the span of forward vectors M(word) @ v."""
    kern = g.matrices
    n_actions, n_outputs = kern.shape[0], kern.shape[1]
    max_len = max(g.dims - 1, 0)
    budget.check(float(n_actions * n_outputs) ** max_len, force, "reachability enumeration")
    vectors = [g.v.astype(float)]
    level = [g.v.astype(float)]
    rank = _numeric_rank(np.stack(vectors, axis=1), tol)
    for _ in range(max_len):
        nxt = []
        for w in level:
            for a in range(n_actions):
                for y in range(n_outputs):
                    nxt.append(kern[a, y] @ w)
        vectors.extend(nxt)
        level = nxt
        new_rank = _numeric_rank(np.stack(vectors, axis=1), tol)
        if new_rank == rank:
            break
        rank = new_rank
    mat = np.stack(vectors, axis=1)
    u_svd, sv, _ = np.linalg.svd(mat, full_matrices=False)
    if sv.size == 0 or sv[0] == 0.0:
        raise RuntimeError("reachable span is degenerate (v must be nonzero)")
    r = int(np.sum(sv > tol * sv[0]))
    return u_svd[:, :r]


def _standard_form(
    dims: int, actions, outputs, mats: np.ndarray, u: np.ndarray, v: np.ndarray, name: str
) -> GeneralizedTransducer:
    """Change basis so the evaluation vector is all-ones and v sums to one.

    Any invertible map R with column sums equal to u leaves every word value
    u (prod M) v untouched while sending u to the all-ones vector and v to a
    genuine quasi-distribution (its components then sum to u . v = 1).
    """
    m = int(np.argmax(np.abs(u)))
    if u[m] == 0.0:
        raise RuntimeError("evaluation vector is zero; cannot normalize")
    r_mat = np.eye(dims)
    r_mat[m, :] = u - 1.0
    r_mat[m, m] = u[m]
    r_inv = np.linalg.inv(r_mat)
    new_mats = np.einsum("ki,ayij,jl->aykl", r_mat, mats, r_inv)
    return GeneralizedTransducer(
        dims, actions, outputs, new_mats, np.ones(dims), r_mat @ v, name=name
    )


def reduce_generalized(
    t: Source,
    tol: float = DEFAULT_TOL,
    both_sides: bool = False,
    force: bool = False,
) -> GeneralizedTransducer:
    """Project the machine onto its history-vector span.

    With C an orthonormal basis of the span, the projected matrices
    C' M C together with boundary vectors C' 1 (or C' u) and C' p (or C' v)
    reproduce every word probability of the original machine: the span is
    closed under the transposed step maps and contains the final vector, so
    the projector is transparent to every time-ordered product that matters.
    The result is re-based so its evaluation vector is all-ones.

    ``both_sides`` follows with the dual pass over the span of forward
    vectors, which may shrink the dimension further when the start vector
    does not excite every observable direction.
    """
    final, kern, start = _boundary(t)
    name = f"{getattr(t, 'name', 'source')}/reduced"
    c_mat = _observability_basis(t, tol, force)
    mats = np.einsum("ki,ayij,jl->aykl", c_mat.T, kern, c_mat)
    u_vec = c_mat.T @ final
    v_vec = c_mat.T @ start
    if both_sides:
        probe = _standard_form(c_mat.shape[1], t.actions, t.outputs, mats, u_vec, v_vec, name)
        d_mat = _reachability_basis(probe, tol, force)
        mats = np.einsum("ki,ayij,jl->aykl", d_mat.T, probe.matrices, d_mat)
        u_vec = d_mat.T @ probe.u
        v_vec = d_mat.T @ probe.v
    return _standard_form(mats.shape[2], t.actions, t.outputs, mats, u_vec, v_vec, name)


def gt_validate_interface(
    g: GeneralizedTransducer,
    depth: int = 6,
    tol: float = DEFAULT_TOL,
    force: bool = False,
) -> ValidationReport:
    """Check that induced word probabilities behave like probabilities.

    Flags any word of length <= depth whose value leaves [-tol, 1 + tol], and
    any action word whose output-word values miss a total of one by more than
    depth * tol.
    """
    n_actions, n_outputs = len(g.actions), len(g.outputs)
    budget.check(float(n_actions * n_outputs) ** depth, force, "interface validation")
    found: list[Violation] = []
    sum_tol = depth * tol

    stack = [((), g.v[:, None], [()])]
    while stack:
        a_word, v_cols, out_words = stack.pop()
        if len(a_word) == depth:
            continue
        for a in range(n_actions):
            children = np.einsum("yij,jk->yik", g.matrices[a], v_cols)
            probs = np.einsum("i,yik->yk", g.u, children)
            bad = np.argwhere((probs < -tol) | (probs > 1.0 + tol))
            for y, k in bad:
                word_a = tuple(g.actions.symbols[x] for x in a_word + (a,))
                word_y = tuple(g.outputs.symbols[x] for x in out_words[k] + (int(y),))
                found.append(
                    Violation(
                        "word_probability_range",
                        (word_a, word_y),
                        float(probs[y, k]),
                        f"word (a={','.join(word_a)}; y={','.join(word_y)}) has "
                        f"probability {probs[y, k]:.6g} outside [0, 1]",
                    )
                )
            # columns are never pruned here, so this is the full level total
            total = float(probs.sum())
            if abs(total - 1.0) > sum_tol:
                word_a = tuple(g.actions.symbols[x] for x in a_word + (a,))
                found.append(
                    Violation(
                        "normalization",
                        (word_a,),
                        total - 1.0,
                        f"output-word probabilities for actions {','.join(word_a)} "
                        f"sum to {total:.9g}",
                    )
                )
            new_words = [w + (int(y),) for y in range(n_outputs) for w in out_words]
            nv = np.concatenate([children[y] for y in range(n_outputs)], axis=1)
            stack.append((a_word + (a,), nv, new_words))
    return ValidationReport(tuple(found))
