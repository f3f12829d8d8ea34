"""Shared helpers: brute-force oracles, candidate builders, CLI runner."""

from __future__ import annotations

import contextlib
import io
import itertools

import numpy as np

from theta_selftest.cli import main as cli_main
from theta_selftest.graphs import WeightedGraph
from theta_selftest.scenarios import Realization


def brute_force_independence(g: WeightedGraph) -> tuple[float, tuple[int, ...]]:
    """Exhaustive 2^n maximum-weight stable set, lex-smallest witness."""
    best_value = -1.0
    best_set: tuple[int, ...] = ()
    for r in range(g.n + 1):
        for subset in itertools.combinations(range(g.n), r):
            chosen = set(subset)
            if any(u in chosen and v in chosen for u, v in g.edges):
                continue
            value = sum(g.weights[v] for v in subset)
            if value > best_value + 1e-12:
                best_value = value
                best_set = subset
    return best_value, best_set


def brute_force_maximal_cliques(g: WeightedGraph) -> list[tuple[int, ...]]:
    adj = g.neighbor_sets
    cliques = []
    for r in range(1, g.n + 1):
        for subset in itertools.combinations(range(g.n), r):
            if not all(v in adj[u] for u, v in itertools.combinations(subset, 2)):
                continue
            if any(
                all(w in adj[u] for u in subset)
                for w in range(g.n)
                if w not in subset
            ):
                continue
            cliques.append(subset)
    return sorted(cliques)


def random_graph(rng: np.random.Generator, max_n: int = 12) -> WeightedGraph:
    n = int(rng.integers(1, max_n + 1))
    edges = [
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if rng.random() < 0.5
    ]
    weights = rng.uniform(0.0, 2.0, size=n)
    return WeightedGraph(n, edges, weights)


def _kets_to_projectors(kets):
    return tuple(
        tuple(tuple(np.outer(k, np.conj(k)) for k in setting) for setting in party)
        for party in kets
    )


def rotated_candidate(r: Realization, seed: int) -> Realization:
    """Apply an independent random orthogonal rotation on each party."""
    rng = np.random.default_rng(seed)
    qs = [np.linalg.qr(rng.normal(size=(d, d)))[0] for d in r.dims]
    kets = tuple(
        tuple(
            tuple(qs[j] @ np.asarray(k, dtype=complex) for k in setting)
            for setting in party
        )
        for j, party in enumerate(r.kets)
    )
    big = qs[0]
    for q in qs[1:]:
        big = np.kron(big, q)
    return Realization(
        r.dims, big @ np.asarray(r.state, dtype=complex), _kets_to_projectors(kets), kets
    )


def padded_candidate(r: Realization, extra: int = 1, seed: int = 3) -> Realization:
    """Embed each party into a larger space through a random isometry."""
    rng = np.random.default_rng(seed)
    ws = [
        np.linalg.qr(rng.normal(size=(d + extra, d + extra)))[0][:, :d]
        for d in r.dims
    ]
    kets = tuple(
        tuple(
            tuple(ws[j] @ np.asarray(k, dtype=complex) for k in setting)
            for setting in party
        )
        for j, party in enumerate(r.kets)
    )
    big = ws[0]
    for w in ws[1:]:
        big = np.kron(big, w)
    return Realization(
        tuple(d + extra for d in r.dims),
        big @ np.asarray(r.state, dtype=complex),
        _kets_to_projectors(kets),
        kets,
    )


def tensor_padded_candidate(r: Realization, ancilla: np.ndarray, k: int = 2) -> Realization:
    """Tensor a k-dimensional ancilla register onto each party; projectors act
    as identity on the ancilla and the state carries `ancilla` across the
    ancilla registers (interleaved with the original party ordering)."""
    parties = len(r.dims)
    projs = tuple(
        tuple(
            tuple(np.kron(np.asarray(p, dtype=complex), np.eye(k)) for p in setting)
            for setting in party
        )
        for party in r.projectors
    )
    full = np.outer(np.asarray(r.state, dtype=complex), ancilla).reshape(
        tuple(r.dims) + (k,) * parties
    )
    perm = [a for j in range(parties) for a in (j, parties + j)]
    state = full.transpose(perm).reshape(-1)
    return Realization(tuple(d * k for d in r.dims), state, projs, None)


def perturbed_candidate(r: Realization, angle: float = 0.05) -> Realization:
    """Rotate the first party's first measurement basis by `angle`."""
    c, s = np.cos(angle), np.sin(angle)
    rot = np.zeros((r.dims[0], r.dims[0]), dtype=complex)
    rot[:2, :2] = [[c, -s], [s, c]]
    for i in range(2, r.dims[0]):
        rot[i, i] = 1.0
    kets = [
        [[np.asarray(k, dtype=complex) for k in setting] for setting in party]
        for party in r.kets
    ]
    kets[0][0] = [rot @ k for k in kets[0][0]]
    kets = tuple(tuple(tuple(setting) for setting in party) for party in kets)
    return Realization(r.dims, r.state, _kets_to_projectors(kets), kets)


def run_cli(argv: list[str]) -> tuple[int, str, str]:
    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = cli_main(argv)
    return code, out.getvalue(), err.getvalue()
