"""Lovasz theta SDPs for weighted graphs, closed-form dual certificates,
and uniqueness of the primal optimizer via dual nondegeneracy.

The primal over (1+n)-dimensional symmetric X (index 0 = handle):
    max sum_i w_i X_ii   s.t.  X_00 = 1,  X_ii = X_0i,  X_ij = 0 (i ~ j),  X >= 0.
A dual certificate is Z = t E_00 + sum_i lambda_i (E_ii - E_0i)
+ sum_{i~j} mu_ij E_ij - sum_i w_i E_ii  with Z >= 0, certifying theta <= t.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import cos, pi, sqrt

import numpy as np

from .graphs import WeightedGraph, circulant, complement, shrikhande_complement
from .sdp import SdpProblem, SdpSolution, SolverError, min_eigenvalue, solve_sdp


class CertificateError(Exception):
    """Base class for dual-certificate verification failures."""


class MalformedCertificateError(CertificateError):
    """Certificate matrix disagrees with its structural decomposition."""


class NotPsdError(CertificateError):
    """Certificate matrix has an eigenvalue below the PSD tolerance."""


def _basis_e(dim: int, i: int, j: int) -> np.ndarray:
    m = np.zeros((dim, dim))
    if i == j:
        m[i, i] = 1.0
    else:
        m[i, j] = m[j, i] = 0.5
    return m


def theta_problem(g: WeightedGraph) -> SdpProblem:
    """Assemble the theta SDP; constraint order: normalization, one
    diagonal-border row per vertex, one zero per edge (sorted)."""
    d = g.n + 1
    c = np.zeros((d, d))
    for i in range(g.n):
        c[i + 1, i + 1] = g.weights[i]
    cons: list[tuple[np.ndarray, float]] = [(_basis_e(d, 0, 0), 1.0)]
    for i in range(g.n):
        cons.append((_basis_e(d, i + 1, i + 1) - _basis_e(d, 0, i + 1), 0.0))
    for i, j in g.edges:
        cons.append((_basis_e(d, i + 1, j + 1), 0.0))
    return SdpProblem(c, tuple(cons))


def theta_start(
    g: WeightedGraph, primal_scale: float = 0.5, dual_scale: float = 1.0
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """A strictly feasible primal/dual starting point for the theta SDP.

    Primal: X_00 = 1, border and diagonal s = primal_scale/(n+1) < 1/n, zeros
    elsewhere.  Dual: t = dual_scale*(sum max(w_i,1) + 1), lambda_i =
    2*dual_scale*max(w_i,1), mu = 0; positive definite by a Schur-complement
    argument since lambda_i >= 2 w_i and t exceeds sum lambda_i / 2.
    """
    if not 0 < primal_scale <= 1:
        raise ValueError("primal_scale must lie in (0, 1]")
    if dual_scale < 1:
        raise ValueError("dual_scale must be >= 1")
    n = g.n
    s = primal_scale / (n + 1)
    x = s * np.eye(n + 1)
    x[0, 0] = 1.0
    x[0, 1:] = x[1:, 0] = s
    wcap = np.maximum(np.asarray(g.weights), 1.0)
    t = dual_scale * (float(wcap.sum()) + 1.0)
    lam = 2.0 * dual_scale * wcap
    y = np.concatenate(([t], lam, np.zeros(len(g.edges))))
    z = np.zeros((n + 1, n + 1))
    z[0, 0] = t
    z[0, 1:] = z[1:, 0] = -lam / 2.0
    z[np.arange(1, n + 1), np.arange(1, n + 1)] = lam - np.asarray(g.weights)
    return x, y, z


# Interior starting points tried in order when none is requested explicitly.
# Trajectories from a single start can stall short of tolerance on instances
# without strict complementarity; a differently centered start then converges.
_START_LADDER: tuple[tuple[float, float], ...] = (
    (0.5, 1.0), (0.9, 1.5), (0.1, 3.0), (0.25, 2.0), (0.75, 1.25)
)


def solve_theta_problem(
    g: WeightedGraph,
    tol: float = 1e-9,
    start: tuple[float, float] | None = None,
) -> SdpSolution:
    """Solve the theta SDP; `start` = (primal_scale, dual_scale) if given.

    With the default start, a fixed ladder of interior points is tried until
    one converges, keeping the result deterministic; an explicit `start` is
    used alone and failures propagate.
    """
    problem = theta_problem(g)
    if start is not None:
        return solve_sdp(problem, tol=tol, start=theta_start(g, *start))
    err: SolverError | None = None
    for scales in _START_LADDER:
        try:
            return solve_sdp(problem, tol=tol, start=theta_start(g, *scales))
        except SolverError as exc:
            err = exc
    raise err


def lovasz_theta(
    g: WeightedGraph, tol: float = 1e-9, start: tuple[float, float] | None = None
) -> tuple[float, np.ndarray]:
    """Theta number of (g, w) and the optimal (1+n)-dimensional primal matrix."""
    sol = solve_theta_problem(g, tol=tol, start=start)
    return sol.value, sol.primal


@dataclass(frozen=True)
class ThetaDualCertificate:
    """Dual feasible point in structural form plus its materialized matrix."""

    t: float
    lambdas: tuple[float, ...]
    mus: dict[tuple[int, int], float]
    matrix: np.ndarray


def certificate_matrix(
    g: WeightedGraph, t: float, lambdas, mus: dict[tuple[int, int], float]
) -> np.ndarray:
    z = np.zeros((g.n + 1, g.n + 1))
    z[0, 0] = t
    lam = np.asarray([float(v) for v in lambdas])
    z[0, 1:] = z[1:, 0] = -lam / 2.0
    z[np.arange(1, g.n + 1), np.arange(1, g.n + 1)] = lam - np.asarray(g.weights)
    for (i, j), mu in mus.items():
        if not g.has_edge(i, j):
            raise ValueError(f"mu given for non-edge ({i},{j})")
        z[i + 1, j + 1] = z[j + 1, i + 1] = mu / 2.0
    return z


def make_certificate(
    g: WeightedGraph, t: float, lambdas, mus: dict[tuple[int, int], float]
) -> ThetaDualCertificate:
    mus = {(min(i, j), max(i, j)): float(v) for (i, j), v in mus.items()}
    return ThetaDualCertificate(
        t=float(t),
        lambdas=tuple(float(v) for v in lambdas),
        mus=mus,
        matrix=certificate_matrix(g, t, lambdas, mus),
    )


def certificate_from_multipliers(g: WeightedGraph, y: np.ndarray) -> ThetaDualCertificate:
    """Certificate from solver multipliers ordered as in theta_problem."""
    y = np.asarray(y, dtype=float)
    if y.shape != (1 + g.n + len(g.edges),):
        raise ValueError("multiplier vector length mismatch")
    t = float(y[0])
    lambdas = y[1 : 1 + g.n]
    mus = {e: float(v) for e, v in zip(g.edges, y[1 + g.n :])}
    return make_certificate(g, t, lambdas, mus)


def chsh_dual_certificate() -> ThetaDualCertificate:
    """The 9x9 dual optimal certificate for circulant(8, [1, 4]), t = 2 + sqrt(2)."""
    g = circulant(8, [1, 4])
    h = 2.0 - sqrt(2.0)  # cycle edges
    k = 3.0 - 2.0 * sqrt(2.0)  # antipodal edges
    mus = {}
    for i in range(8):
        mus[(min(i, (i + 1) % 8), max(i, (i + 1) % 8))] = 2.0 * h
    for i in range(4):
        mus[(i, i + 4)] = 2.0 * k
    return make_certificate(g, 2.0 + sqrt(2.0), [2.0] * 8, mus)


def chained_dual_certificate(N: int) -> ThetaDualCertificate:
    """Dual optimal certificate for circulant(4N, [1, 2N]), t = N(1 + cos(pi/2N))."""
    if N < 2:
        raise ValueError("chained certificates require N >= 2")
    k = cos(pi / (2 * N))
    f = (1.0 - k) / (1.0 + k)
    l = 1.0 / (1.0 + k)
    n = 4 * N
    g = circulant(n, [1, 2 * N])
    mus = {}
    for i in range(n):
        mus[(min(i, (i + 1) % n), max(i, (i + 1) % n))] = 2.0 * l
    for i in range(2 * N):
        mus[(i, i + 2 * N)] = 2.0 * f
    return make_certificate(g, N / l, [2.0] * n, mus)


def mobius_theta_closed_form(N: int) -> float:
    """N (1 + cos(pi / 2N)), the theta number of circulant(4N, [1, 2N])."""
    if N < 2:
        raise ValueError("closed form requires N >= 2")
    return N * (1.0 + cos(pi / (2 * N)))


def verify_dual_certificate(
    g: WeightedGraph, cert: ThetaDualCertificate, tol: float = 1e-9
) -> float:
    """Check structural form and positive semidefiniteness; return the bound t.

    Structural checks (entry tolerance 1e-9): Z_00 = t, border = -lambda/2,
    diagonal = lambda - w, edge entries = mu/2, non-edge off-diagonals zero.
    """
    z = np.asarray(cert.matrix, dtype=float)
    if z.shape != (g.n + 1, g.n + 1):
        raise MalformedCertificateError("certificate dimension mismatch")
    if not np.allclose(z, z.T, atol=1e-9):
        raise MalformedCertificateError("certificate matrix not symmetric")
    etol = 1e-9

    def entry_check(val, want, what):
        if abs(val - want) > etol:
            raise MalformedCertificateError(f"{what}: {val!r} != {want!r}")

    entry_check(z[0, 0], cert.t, "entry (0,0) vs t")
    if len(cert.lambdas) != g.n:
        raise MalformedCertificateError("lambda vector length mismatch")
    for i in range(g.n):
        entry_check(z[0, i + 1], -cert.lambdas[i] / 2.0, f"border entry {i}")
        entry_check(
            z[i + 1, i + 1], cert.lambdas[i] - g.weights[i], f"diagonal entry {i}"
        )
    for i in range(g.n):
        for j in range(i + 1, g.n):
            if g.has_edge(i, j):
                mu = cert.mus.get((i, j), 0.0)
                entry_check(z[i + 1, j + 1], mu / 2.0, f"edge entry ({i},{j})")
            else:
                entry_check(z[i + 1, j + 1], 0.0, f"non-edge entry ({i},{j})")
    lam_min = min_eigenvalue(z)
    if lam_min < -tol:
        raise NotPsdError(f"minimum eigenvalue {lam_min:.3e} below -{tol:.1e}")
    return float(cert.t)


@dataclass(frozen=True)
class UniquenessVerdict:
    nondegenerate: bool
    nullspace_dim: int
    residual: float


def dual_nondegenerate(
    g: WeightedGraph, z: np.ndarray, threshold: float = 1e-8
) -> UniquenessVerdict:
    """Decide dual nondegeneracy of an optimal slack Z.

    Builds the homogeneous system over symmetric M:
        M_00 = 0,  M_0i = M_ii,  M_ij = 0 (i ~ j),  M Z = 0,
    parameterized by the upper triangle of M, and counts its null space by
    singular-value thresholding (relative threshold).  Nondegenerate (hence
    the primal optimizer is unique) iff the null space is trivial.
    """
    z = np.asarray(z, dtype=float)
    d = g.n + 1
    if z.shape != (d, d):
        raise ValueError("slack matrix dimension mismatch")
    unknowns = [(p, q) for p in range(d) for q in range(p, d)]
    col_of = {pq: idx for idx, pq in enumerate(unknowns)}
    n_rows = 1 + g.n + len(g.edges) + d * d
    s = np.zeros((n_rows, len(unknowns)))
    row = 0
    s[row, col_of[(0, 0)]] = 1.0  # M_00 = 0
    row += 1
    for i in range(g.n):  # M_0i - M_ii = 0
        s[row, col_of[(0, i + 1)]] = 1.0
        s[row, col_of[(i + 1, i + 1)]] = -1.0
        row += 1
    for i, j in g.edges:  # M_ij = 0
        s[row, col_of[(i + 1, j + 1)]] = 1.0
        row += 1
    # M Z = 0, flattened row-major: with M = E_pq (ones, both triangles),
    # column (p,q) of the system is kron(e_p, Z_q) [+ kron(e_q, Z_p) if p != q].
    eye = np.eye(d)
    for p, q in unknowns:
        col = np.kron(eye[p], z[q])
        if p != q:
            col = col + np.kron(eye[q], z[p])
        s[row : row + d * d, col_of[(p, q)]] = col
    row += d * d
    sv = np.linalg.svd(s, compute_uv=False)
    smax = float(sv.max()) if sv.size else 0.0
    if smax == 0.0:
        dim = len(unknowns)
        residual = 0.0
    else:
        dim = int(np.sum(sv <= threshold * smax))
        residual = float(sv.min() / smax)
    return UniquenessVerdict(
        nondegenerate=(dim == 0), nullspace_dim=dim, residual=residual
    )


def chsh_primal_matrix() -> np.ndarray:
    """The unique 9x9 theta optimizer for circulant(8, [1, 4])."""
    chi = (2.0 + sqrt(2.0)) / 8.0
    xi = (1.0 + sqrt(2.0)) / 8.0
    p = np.zeros((9, 9))
    p[0, 0] = 1.0
    p[0, 1:] = p[1:, 0] = chi
    by_offset = {0: chi, 1: 0.0, 2: chi / 2.0, 3: xi, 4: 0.0}
    for i in range(8):
        for j in range(8):
            off = min((i - j) % 8, (j - i) % 8)
            p[i + 1, j + 1] = by_offset[off]
    return p


def mermin_primal_matrix() -> np.ndarray:
    """The unique 17x17 theta optimizer for the 16-event three-party graph."""
    g = shrikhande_complement()
    a, b = 0.25, 0.125
    p = np.zeros((17, 17))
    p[0, 0] = 1.0
    p[0, 1:] = p[1:, 0] = a
    p[1:, 1:] = a * np.eye(16) + b * complement(g).adjacency_matrix()
    return p


def certificate_to_json_dict(cert: ThetaDualCertificate) -> dict:
    return {
        "t": float(cert.t),
        "lambda": [float(v) for v in cert.lambdas],
        "mu": {f"{i}-{j}": float(v) for (i, j), v in sorted(cert.mus.items())},
        "matrix": [[float(v) for v in row] for row in cert.matrix],
    }


def certificate_from_json_dict(g: WeightedGraph, d: dict) -> ThetaDualCertificate:
    try:
        mus = {}
        for key, val in d["mu"].items():
            i, j = key.split("-")
            mus[(int(i), int(j))] = float(val)
        cert = make_certificate(g, float(d["t"]), [float(v) for v in d["lambda"]], mus)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed certificate document: {exc}") from exc
    if "matrix" in d and not np.allclose(
        np.asarray(d["matrix"], dtype=float), cert.matrix, atol=1e-9
    ):
        raise MalformedCertificateError("matrix disagrees with t/lambda/mu fields")
    return cert
