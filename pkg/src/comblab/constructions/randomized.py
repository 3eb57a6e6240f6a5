"""Seeded random states, channels and circuits for tests and searches.

Every function takes a ``numpy.random.Generator``; nothing touches global
random state.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from ..comb import Channel, Circuit, choi_of_isometry
from ..tensorlab import Operator
from .examples import three_party_legs

__all__ = [
    "random_unitary",
    "random_isometry",
    "random_density",
    "random_pure",
    "random_channel",
    "random_povm",
    "random_two_step_circuit",
    "bloch_projector",
]


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary."""
    return unitary_group.rvs(d, random_state=rng)


def random_isometry(d_in: int, d_out: int, rng: np.random.Generator) -> np.ndarray:
    return random_unitary(d_out, rng)[:, :d_in]


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Induced-measure mixed state of the given rank (full rank by default)."""
    rank = d if rank is None else rank
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def random_pure(d: int, rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return v / np.linalg.norm(v)


def random_channel(inputs, outputs, in_dims, out_dims, rng: np.random.Generator, env_dim: int = 2) -> Channel:
    """CPTP map from a random Stinespring isometry with a traced environment."""
    din, dout = int(np.prod(in_dims)), int(np.prod(out_dims))
    v = random_isometry(din, dout * env_dim, rng).reshape(dout, env_dim, din)
    kraus = [v[:, e, :] for e in range(env_dim)]
    op = None
    for k in kraus:
        piece = choi_of_isometry(k, inputs, outputs, in_dims, out_dims).op
        op = piece if op is None else op + piece
    return Channel(op, tuple(inputs), tuple(outputs))


def random_povm(d: int, n: int, rng: np.random.Generator) -> list[np.ndarray]:
    """``n`` random positive elements summing to the identity."""
    xs = [random_density(d, rng) for _ in range(n)]
    s = sum(xs)
    w, v = np.linalg.eigh(s)
    inv = (v / np.sqrt(w)) @ v.conj().T
    return [inv @ x @ inv for x in xs]


def random_two_step_circuit(rng: np.random.Generator, env_dim: int = 2, pure: bool = False) -> Circuit:
    """Qubit circuit: random state on (A, R), random channel (B, R) -> C.

    With ``pure=True`` the initial state is a Haar-random pure state and the
    channel is a Haar-random unitary on (B, R) whose second output is
    discarded.
    """
    if pure:
        psi = random_pure(2 * env_dim, rng)
        init = Operator(np.outer(psi, psi.conj()), (2, env_dim), ("A", "R"))
        u = random_unitary(2 * env_dim, rng)
        step = choi_of_isometry(u, ("B", "R"), ("C", "R2"), (2, env_dim), (2, env_dim))
    else:
        init = Operator(random_density(2 * env_dim, rng), (2, env_dim), ("A", "R"))
        step = random_channel(("B", "R"), ("C",), (2, env_dim), (2,), rng)
    return Circuit(init, (step,), three_party_legs())


def bloch_projector(theta, phi) -> np.ndarray:
    """``(1 + cos t cos p X + cos t sin p Y + sin t Z) / 2`` for arrays of angles."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    c, s = np.cos(theta), np.sin(theta)
    out = np.empty(theta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = (1 + s) / 2
    out[..., 1, 1] = (1 - s) / 2
    out[..., 0, 1] = c * (np.cos(phi) - 1j * np.sin(phi)) / 2
    out[..., 1, 0] = c * (np.cos(phi) + 1j * np.sin(phi)) / 2
    return out
