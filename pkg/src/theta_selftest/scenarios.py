"""Bell witnesses as weighted sums of event probabilities, their exclusivity
graphs, correlator-to-probability conversion, and reference realizations.

Events are p[a|x] with per-party outcome labels a and setting labels x.
Realizations carry a shared state and per-party, per-setting, per-outcome
projectors; reference realizations are rank one and also carry the kets.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import cos, pi, sin, sqrt

import numpy as np

from .graphs import WeightedGraph


@dataclass(frozen=True)
class BellScenario:
    parties: int
    settings: tuple[int, ...]  # per-party setting count
    outcomes: tuple[int, ...]  # per-party outcome count

    def __post_init__(self) -> None:
        if self.parties < 1 or len(self.settings) != self.parties or len(
            self.outcomes
        ) != self.parties:
            raise ValueError("per-party counts must match the party count")
        if any(k < 1 for k in self.settings) or any(k < 1 for k in self.outcomes):
            raise ValueError("counts must be >= 1")


@dataclass(frozen=True)
class Event:
    """Joint event: outcome labels and setting labels, one per party."""

    outcomes: tuple[int, ...]
    settings: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "outcomes", tuple(int(a) for a in self.outcomes))
        object.__setattr__(self, "settings", tuple(int(x) for x in self.settings))
        if len(self.outcomes) != len(self.settings):
            raise ValueError("outcome and setting tuples must have equal length")


def events_exclusive(e1: Event, e2: Event) -> bool:
    """Some party keeps its setting but changes its outcome."""
    return any(
        x == y and a != b
        for a, b, x, y in zip(e1.outcomes, e2.outcomes, e1.settings, e2.settings)
    )


@dataclass(frozen=True)
class BellWitness:
    """Positive combination sum_i w_i p(event_i) with a classical bound.

    `affine` optionally records (gain, offset) mapping the probability sum P
    to a correlator-form expectation gain*P + offset.
    """

    scenario: BellScenario
    terms: tuple[tuple[Event, float], ...]
    classical_bound: float
    affine: tuple[float, float] | None = None

    def __post_init__(self) -> None:
        events = [e for e, _ in self.terms]
        if len(set(events)) != len(events):
            raise ValueError("witness events must be distinct")
        for e, w in self.terms:
            if w <= 0:
                raise ValueError("weights must be strictly positive")
            if len(e.outcomes) != self.scenario.parties:
                raise ValueError("event arity does not match the scenario")
            for j in range(self.scenario.parties):
                if not (
                    0 <= e.settings[j] < self.scenario.settings[j]
                    and 0 <= e.outcomes[j] < self.scenario.outcomes[j]
                ):
                    raise ValueError(f"event {e} outside scenario label ranges")


def exclusivity_graph(wit: BellWitness) -> WeightedGraph:
    """One vertex per term (with its weight); edges join exclusive events."""
    events = [e for e, _ in wit.terms]
    n = len(events)
    edges = tuple(
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if events_exclusive(events[i], events[j])
    )
    return WeightedGraph(n, edges, tuple(w for _, w in wit.terms))


def correlator_to_probability_terms(
    sign: int, settings: tuple[int, int], outcome_labels: tuple[int, int] = (1, -1)
) -> tuple[list[tuple[Event, float]], float]:
    """Expand +-<A_x B_y> for binary observables into event terms plus offset.

    <A B> = 2 P(equal outcomes) - 1 and -<A B> = 2 P(different outcomes) - 1.
    `outcome_labels` maps the +1 and -1 observable outcomes (in that order) to
    scenario outcome labels.  Returns ([(event, weight), ...], offset).
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    if len(set(outcome_labels)) != 2:
        raise ValueError("binary observables need two distinct outcome labels")
    x, y = settings
    up, dn = outcome_labels
    pairs = [(up, up), (dn, dn)] if sign == 1 else [(up, dn), (dn, up)]
    terms = [(Event((a, b), (x, y)), 2.0) for a, b in pairs]
    return terms, -1.0


def chsh_witness() -> BellWitness:
    """Eight unit-weight two-party events; exclusivity graph Ci_8(1,4)."""
    raw = [
        ((0, 0), (0, 0)),
        ((1, 1), (0, 1)),
        ((1, 0), (1, 1)),
        ((0, 0), (1, 0)),
        ((1, 1), (0, 0)),
        ((0, 0), (0, 1)),
        ((0, 1), (1, 1)),
        ((1, 1), (1, 0)),
    ]
    scenario = BellScenario(2, (2, 2), (2, 2))
    terms = tuple((Event(a, x), 1.0) for a, x in raw)
    return BellWitness(scenario, terms, classical_bound=3.0)


def chained_witness(N: int) -> BellWitness:
    """4N unit-weight events: correlated pairs along the measurement chain,
    anti-correlated pair closing it; classical bound 2N - 1."""
    if N < 2:
        raise ValueError("chained witnesses require N >= 2")
    setting_pairs = [(0, 0)]
    for m in range(1, N):
        setting_pairs.append((m, m - 1))
        setting_pairs.append((m, m))
    terms: list[tuple[Event, float]] = []
    for x, y in setting_pairs:
        terms.append((Event((0, 0), (x, y)), 1.0))
        terms.append((Event((1, 1), (x, y)), 1.0))
    terms.append((Event((0, 1), (0, N - 1)), 1.0))
    terms.append((Event((1, 0), (0, N - 1)), 1.0))
    scenario = BellScenario(2, (N, N), (2, 2))
    return BellWitness(scenario, tuple(terms), classical_bound=2.0 * N - 1.0)


# Sixteen three-party events; settings grouped as in the exclusivity-graph
# generator so the two constructions stay aligned index by index.
_MERMIN_RAW: tuple[tuple[tuple[int, int, int], tuple[int, int, int]], ...] = tuple(
    (outs, setts)
    for setts, group in (
        ((0, 1, 1), ((1, 1, 1), (0, 0, 1), (0, 1, 0), (1, 0, 0))),
        ((1, 0, 1), ((1, 1, 1), (0, 0, 1), (0, 1, 0), (1, 0, 0))),
        ((1, 1, 0), ((1, 1, 1), (0, 0, 1), (0, 1, 0), (1, 0, 0))),
        ((0, 0, 0), ((0, 0, 0), (1, 1, 0), (1, 0, 1), (0, 1, 1))),
    )
    for outs in group
)


def mermin_witness() -> BellWitness:
    """16 unit-weight three-party events; the correlator form of the witness
    equals 2 * (probability sum) - 4, recorded in `affine`."""
    scenario = BellScenario(3, (2, 2, 2), (2, 2, 2))
    terms = tuple((Event(a, x), 1.0) for a, x in _MERMIN_RAW)
    return BellWitness(scenario, terms, classical_bound=3.0, affine=(2.0, -4.0))


# Setting pairs carrying anti-correlated events in the 26-event witness.
_AS4_ANTI = {(0, 2), (1, 2), (1, 3), (3, 1)}
_AS4_PAIRS = [
    (0, 0), (0, 1), (0, 2), (0, 3),
    (1, 0), (1, 1), (1, 2), (1, 3),
    (2, 0), (2, 1), (2, 2),
    (3, 0), (3, 1),
]


def as4_witness() -> BellWitness:
    """26 two-party events on 13 setting pairs; the two events on setting
    pair (2,2) carry weight 2; classical bound 10."""
    scenario = BellScenario(2, (4, 4), (2, 2))
    terms: list[tuple[Event, float]] = []
    for x, y in _AS4_PAIRS:
        w = 2.0 if (x, y) == (2, 2) else 1.0
        pair = ((0, 1), (1, 0)) if (x, y) in _AS4_ANTI else ((0, 0), (1, 1))
        for a in pair:
            terms.append((Event(a, (x, y)), w))
    return BellWitness(scenario, tuple(terms), classical_bound=10.0)


@dataclass(frozen=True)
class Realization:
    """Shared state plus per-party, per-setting, per-outcome projectors.

    `projectors[j][x][a]` acts on the party-j factor of dimension dims[j].
    Rank-one realizations also carry the defining unit kets in `kets` with
    the same nesting.  Arrays are complex.
    """

    dims: tuple[int, ...]
    state: np.ndarray
    projectors: tuple[tuple[tuple[np.ndarray, ...], ...], ...]
    kets: tuple[tuple[tuple[np.ndarray, ...], ...], ...] | None = None


def validate_realization(r: Realization, tol: float = 1e-10) -> None:
    state = np.asarray(r.state)
    if state.shape != (int(np.prod(r.dims)),):
        raise ValueError("state length must equal the product of the dims")
    if abs(np.linalg.norm(state) - 1.0) > 1e-12:
        raise ValueError("state must be normalized")
    for j, party in enumerate(r.projectors):
        for x, setting in enumerate(party):
            for a, p in enumerate(setting):
                p = np.asarray(p)
                if p.shape != (r.dims[j], r.dims[j]):
                    raise ValueError(f"projector {j}:{x}:{a} has wrong shape")
                if np.abs(p - p.conj().T).max() > tol:
                    raise ValueError(f"projector {j}:{x}:{a} not Hermitian")
                if np.abs(p @ p - p).max() > tol:
                    raise ValueError(f"projector {j}:{x}:{a} not idempotent")
            for a in range(len(setting)):
                for b in range(a + 1, len(setting)):
                    if np.abs(setting[a] @ setting[b]).max() > tol:
                        raise ValueError(
                            f"projectors {j}:{x}:{a} and {j}:{x}:{b} not orthogonal"
                        )


def event_projectors(r: Realization, e: Event) -> list[np.ndarray]:
    return [r.projectors[j][e.settings[j]][e.outcomes[j]] for j in range(len(e.settings))]


def kron_all(mats) -> np.ndarray:
    out = np.asarray(mats[0])
    for m in mats[1:]:
        out = np.kron(out, np.asarray(m))
    return out


def evaluate_witness(wit: BellWitness, r: Realization) -> tuple[float, np.ndarray]:
    """Witness value sum_i w_i p_i and the per-event behavior vector.

    Validates the realization and checks exclusivity: tr(Pi_i Pi_j) <= 1e-10
    for every edge of the exclusivity graph.
    """
    validate_realization(r)
    if len(r.dims) != wit.scenario.parties:
        raise ValueError("realization party count does not match the witness")
    state = np.asarray(r.state, dtype=complex)
    ops = [kron_all(event_projectors(r, e)) for e, _ in wit.terms]
    behavior = np.array([np.real(np.vdot(state, op @ state)) for op in ops])
    g = exclusivity_graph(wit)
    for i, j in g.edges:
        overlap = float(np.abs(np.trace(ops[i] @ ops[j])))
        if overlap > 1e-10:
            raise ValueError(
                f"events {i} and {j} are exclusive but tr(Pi_i Pi_j) = {overlap:.3e}"
            )
    value = float(sum(w * p for (_, w), p in zip(wit.terms, behavior)))
    return value, behavior


def _rank_one_realization(
    dims: tuple[int, ...], state: np.ndarray, kets
) -> Realization:
    """Assemble projectors |k><k| from nested kets [party][setting][outcome]."""
    kets = tuple(
        tuple(
            tuple(np.asarray(k, dtype=complex) / np.linalg.norm(k) for k in setting)
            for setting in party
        )
        for party in kets
    )
    projectors = tuple(
        tuple(tuple(np.outer(k, k.conj()) for k in setting) for setting in party)
        for party in kets
    )
    state = np.asarray(state, dtype=complex)
    return Realization(dims, state / np.linalg.norm(state), projectors, kets)


def chsh_realization() -> Realization:
    """Two-qubit maximally entangled state with the standard tilted bases."""
    a = 1.0 / sqrt(2.0)
    c, d = cos(pi / 8.0), sin(pi / 8.0)
    alice = (
        ((1.0, 0.0), (0.0, -1.0)),  # setting 0: outcomes 0, 1
        ((a, a), (a, -a)),  # setting 1
    )
    bob = (
        ((c, d), (d, -c)),
        ((c, -d), (-d, -c)),
    )
    psi = np.array([1.0, 0.0, 0.0, 1.0]) / sqrt(2.0)
    return _rank_one_realization((2, 2), psi, (alice, bob))


def chained_realization(N: int) -> Realization:
    """Maximally entangled state; party kets at evenly interleaved angles."""
    if N < 2:
        raise ValueError("chained realizations require N >= 2")

    def ket(theta: float, outcome: int):
        if outcome == 0:
            return (cos(theta / 2.0), sin(theta / 2.0))
        return (-sin(theta / 2.0), cos(theta / 2.0))

    alice = tuple(
        (ket(x * pi / N, 0), ket(x * pi / N, 1)) for x in range(N)
    )
    bob = tuple(
        (ket((2 * y + 1) * pi / (2 * N), 0), ket((2 * y + 1) * pi / (2 * N), 1))
        for y in range(N)
    )
    psi = np.array([1.0, 0.0, 0.0, 1.0]) / sqrt(2.0)
    return _rank_one_realization((2, 2), psi, (alice, bob))


def mermin_realization() -> Realization:
    """Three-qubit realization; all 16 event probabilities equal 1/4.

    The state is locally equivalent to the three-qubit maximally entangled
    state; each party measures the computational basis (setting 0, outcome 1
    on the first basis vector) or the conjugate basis (setting 1).
    """
    z = (1.0, 0.0)
    o = (0.0, 1.0)
    p = (1.0 / sqrt(2.0), 1.0 / sqrt(2.0))
    m = (1.0 / sqrt(2.0), -1.0 / sqrt(2.0))
    # setting 0: outcome 0 -> o, outcome 1 -> z; setting 1: 0 -> m, 1 -> p
    party = ((o, z), (m, p))
    psi = np.zeros(8)
    psi[0b111] = 0.5
    psi[0b001] = -0.5
    psi[0b010] = -0.5
    psi[0b100] = -0.5
    return _rank_one_realization((2, 2, 2), psi, (party, party, party))


def _bloch_ket(n: np.ndarray) -> np.ndarray:
    if n[2] < -1.0 + 1e-14:
        return np.array([0.0, 1.0], dtype=complex)
    v = np.array([1.0 + n[2], n[0] + 1j * n[1]], dtype=complex)
    return v / np.linalg.norm(v)


def as4_realization() -> Realization:
    """Two-qubit realization of the 26-event witness.

    Party measurement directions are fixed by a closed-form Gram target: both
    parties share the pairwise-overlap matrix with entries (1, 2/3, 1/6,
    -+1/sqrt 6), which forces complex kets.  Outcome 0 projects along the
    direction, outcome 1 along its antipode.
    """
    s6, s5 = sqrt(6.0), sqrt(5.0)
    k = np.array(
        [
            [11 * s6 / 36 - 1 / 6, 11 * s6 / 36 + 1 / 6, 2 * s6 / 9, 1 / s6],
            [11 * s6 / 36 + 1 / 6, 11 * s6 / 36 - 1 / 6, 2 * s6 / 9, -1 / s6],
            [2 * s6 / 9, 2 * s6 / 9, -5 * s6 / 18, 0.0],
            [1 / s6, -1 / s6, 0.0, -1.0],
        ]
    )
    n = np.array(
        [
            [0.0, 0.0, 1.0],
            [s5 / 3.0, 0.0, 2.0 / 3.0],
            [1.0 / (6.0 * s5), sqrt(29.0 / 30.0), 1.0 / 6.0],
            [sqrt(5.0 / 6.0), 0.0, -1.0 / s6],
        ]
    )
    mu = np.linalg.solve(n[:3], k[:3]).T  # Bob directions, one per row
    m = (np.diag([1.0, -1.0, 1.0]) @ mu.T).T
    m[2] = -m[2]  # outcome relabel on Bob setting 2
    alice = tuple((_bloch_ket(n[x]), _bloch_ket(-n[x])) for x in range(4))
    bob = tuple((_bloch_ket(m[y]), _bloch_ket(-m[y])) for y in range(4))
    psi = np.array([1.0, 0.0, 0.0, 1.0]) / sqrt(2.0)
    return _rank_one_realization((2, 2), psi, (alice, bob))


_BUILTIN_WITNESSES = {
    "chsh": chsh_witness,
    "mermin": mermin_witness,
    "as4": as4_witness,
}


def parse_scenario_name(name: str) -> tuple[str, int | None]:
    """Normalize a scenario selector: 'chsh', 'mermin', 'as4', 'chained:N'."""
    key = name.strip().lower()
    if key.startswith("chained:"):
        try:
            N = int(key.split(":", 1)[1])
        except ValueError as exc:
            raise ValueError(f"bad chained selector {name!r}") from exc
        return "chained", N
    if key in _BUILTIN_WITNESSES:
        return key, None
    raise ValueError(f"unknown scenario {name!r}")


def builtin_witness(name: str) -> BellWitness:
    kind, N = parse_scenario_name(name)
    if kind == "chained":
        return chained_witness(N)
    return _BUILTIN_WITNESSES[kind]()


def reference_realization(name: str) -> Realization:
    kind, N = parse_scenario_name(name)
    if kind == "chained":
        return chained_realization(N)
    return {
        "chsh": chsh_realization,
        "mermin": mermin_realization,
        "as4": as4_realization,
    }[kind]()


def _c_pair(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def _c_matrix(m: np.ndarray) -> list[list[list[float]]]:
    return [[_c_pair(v) for v in row] for row in np.asarray(m, dtype=complex)]


def _from_c_pair(v) -> complex:
    return complex(float(v[0]), float(v[1]))


def witness_to_json_dict(wit: BellWitness) -> dict:
    d = {
        "scenario": {
            "parties": wit.scenario.parties,
            "settings": list(wit.scenario.settings),
            "outcomes": list(wit.scenario.outcomes),
        },
        "terms": [
            {"a": list(e.outcomes), "x": list(e.settings), "w": float(w)}
            for e, w in wit.terms
        ],
        "classical_bound": float(wit.classical_bound),
    }
    if wit.affine is not None:
        d["affine"] = [float(wit.affine[0]), float(wit.affine[1])]
    return d


def witness_from_json_dict(d: dict) -> BellWitness:
    try:
        sc = d["scenario"]
        scenario = BellScenario(
            int(sc["parties"]),
            tuple(int(v) for v in sc["settings"]),
            tuple(int(v) for v in sc["outcomes"]),
        )
        terms = tuple(
            (Event(tuple(t["a"]), tuple(t["x"])), float(t["w"])) for t in d["terms"]
        )
        affine = tuple(float(v) for v in d["affine"]) if "affine" in d else None
        return BellWitness(scenario, terms, float(d["classical_bound"]), affine)
    except (KeyError, TypeError, IndexError) as exc:
        raise ValueError(f"malformed witness document: {exc}") from exc


def realization_to_json_dict(r: Realization) -> dict:
    d = {
        "dims": list(r.dims),
        "state": [_c_pair(v) for v in np.asarray(r.state, dtype=complex)],
        "projectors": [
            [[_c_matrix(p) for p in setting] for setting in party]
            for party in r.projectors
        ],
    }
    if r.kets is not None:
        d["kets"] = [
            [
                [[_c_pair(v) for v in np.asarray(k, dtype=complex)] for k in setting]
                for setting in party
            ]
            for party in r.kets
        ]
    return d


def realization_from_json_dict(d: dict) -> Realization:
    try:
        dims = tuple(int(v) for v in d["dims"])
        state = np.array([_from_c_pair(v) for v in d["state"]])
        projectors = tuple(
            tuple(
                tuple(
                    np.array([[_from_c_pair(v) for v in row] for row in p])
                    for p in setting
                )
                for setting in party
            )
            for party in d["projectors"]
        )
        kets = None
        if "kets" in d:
            kets = tuple(
                tuple(
                    tuple(
                        np.array([_from_c_pair(v) for v in k]) for k in setting
                    )
                    for setting in party
                )
                for party in d["kets"]
            )
        return Realization(dims, state, projectors, kets)
    except (KeyError, TypeError, IndexError) as exc:
        raise ValueError(f"malformed realization document: {exc}") from exc
