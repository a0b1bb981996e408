"""Canonical hand-built machines used throughout the tests and the CLI.

These four small machines exercise every structural feature the library cares
about: determinism, redundant (mergeable) states, linear rank deficiency
without mergeable states, and one-step output delay.
"""

import numpy as np

from .core import Alphabet, Transducer


def parity_flip() -> Transducer:
    """Two-state deterministic machine: emits its state, then XORs the action in.

    Output at time t is the parity of all actions before t.  Deterministic,
    unifilar, and reversible (every action is a permutation of states).
    """
    kernel = np.zeros((2, 2, 2, 2))
    for s in range(2):
        for a in range(2):
            kernel[a, s, s ^ a, s] = 1.0
    return Transducer(
        "parity-flip",
        ["s0", "s1"],
        Alphabet(["0", "1"]),
        Alphabet(["0", "1"]),
        kernel,
        [1.0, 0.0],
    )


def parity_flip_redundant() -> Transducer:
    """Parity flip with its one-state split in two: s1a and s1b behave alike.

    Action 1 from s0 moves to s1a or s1b with equal chance; both emit 1 and
    return to s0 under action 1.  The two split states are bisimilar, so the
    machine reduces back to the two-state parity flip.
    """
    emit = [0, 1, 1]  # s0 -> 0, s1a -> 1, s1b -> 1
    trans = np.zeros((2, 3, 3))  # [a, to, from]
    trans[0] = np.eye(3)
    trans[1, 1, 0] = 0.5
    trans[1, 2, 0] = 0.5
    trans[1, 0, 1] = 1.0
    trans[1, 0, 2] = 1.0
    kernel = np.zeros((2, 2, 3, 3))
    for a in range(2):
        for j in range(3):
            kernel[a, emit[j], :, j] = trans[a, :, j]
    return Transducer(
        "parity-flip-redundant",
        ["s0", "s1a", "s1b"],
        Alphabet(["0", "1"]),
        Alphabet(["0", "1"]),
        kernel,
        [1.0, 0.0, 0.0],
    )


def mixture_hmm() -> Transducer:
    """Single-action machine whose third state is a coin-flip mixture of the first two.

    States s0 and s1 have product (emission x transition) rows; s2's joint row
    is their average, which makes the history-vector span two-dimensional
    while no two states are bisimilar.
    """
    joint0 = np.outer([0.8, 0.2], [0.5, 0.5, 0.0])  # [y, to]
    joint1 = np.outer([0.2, 0.8], [0.1, 0.9, 0.0])
    joint2 = 0.5 * joint0 + 0.5 * joint1
    kernel = np.zeros((1, 2, 3, 3))
    for j, joint in enumerate((joint0, joint1, joint2)):
        kernel[0, :, :, j] = joint
    return Transducer(
        "mixture-hmm",
        ["s0", "s1", "s2"],
        Alphabet(["0"]),
        Alphabet(["0", "1"]),
        kernel,
        [0.2, 0.3, 0.5],
    )


def delay_channel() -> Transducer:
    """Machine that parrots the previous action: emits its state, stores the action.

    Running it backwards would let an action determine an earlier output, so
    it is the standard non-reversible example.
    """
    kernel = np.zeros((2, 2, 2, 2))
    for s in range(2):
        for a in range(2):
            kernel[a, s, a, s] = 1.0
    return Transducer(
        "delay-channel",
        ["s0", "s1"],
        Alphabet(["0", "1"]),
        Alphabet(["0", "1"]),
        kernel,
        [1.0, 0.0],
    )


ALL_FIXTURES = {
    "parity-flip": parity_flip,
    "parity-flip-redundant": parity_flip_redundant,
    "mixture-hmm": mixture_hmm,
    "delay-channel": delay_channel,
}
