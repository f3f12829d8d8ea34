"""Dense primal-dual interior-point SDP solver and spectral utilities.

Problems are the standard pair
    primal:  max <C, X>   s.t.  <A_i, X> = b_i,  X >= 0
    dual:    min b.y      s.t.  Z = sum_i y_i A_i - C >= 0
solved by an HKM-direction predictor-corrector method on dense symmetric
matrices.  Sizes here are tiny (dimension <= ~70), so everything is dense.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class SolverError(RuntimeError):
    """Non-convergence diagnostic carrying the final residuals."""

    def __init__(self, message: str, pinfeas: float, dinfeas: float, gap: float):
        super().__init__(
            f"{message} (primal infeas {pinfeas:.3e}, dual infeas {dinfeas:.3e}, "
            f"gap {gap:.3e})"
        )
        self.pinfeas = pinfeas
        self.dinfeas = dinfeas
        self.gap = gap


def sym(m: np.ndarray) -> np.ndarray:
    return (m + m.T) / 2.0


@dataclass(frozen=True)
class SdpProblem:
    """Objective matrix C and equality constraints (A_i, b_i), all symmetric."""

    objective: np.ndarray
    constraints: tuple[tuple[np.ndarray, float], ...]

    def __post_init__(self) -> None:
        c = sym(np.asarray(self.objective, dtype=float))
        if c.ndim != 2 or c.shape[0] != c.shape[1]:
            raise ValueError("objective must be a square matrix")
        d = c.shape[0]
        cons = []
        for a, b in self.constraints:
            a = sym(np.asarray(a, dtype=float))
            if a.shape != (d, d):
                raise ValueError("constraint matrix dimension mismatch")
            cons.append((a, float(b)))
        if not cons:
            raise ValueError("constraint list must be nonempty")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "constraints", tuple(cons))

    @property
    def dim(self) -> int:
        return self.objective.shape[0]


@dataclass(frozen=True)
class SdpSolution:
    primal: np.ndarray
    dual_multipliers: np.ndarray
    dual_slack: np.ndarray
    value: float
    dual_value: float
    gap: float
    pinfeas: float
    dinfeas: float
    iterations: int
    # (primal objective, dual objective, gap, pinfeas, dinfeas) per iterate
    history: tuple[tuple[float, float, float, float, float], ...] = field(default=())


def _restore_cone(s: np.ndarray) -> np.ndarray:
    """Nudge an iterate that rounding pushed marginally outside the PSD cone.

    Near convergence the boundary is approached to within machine precision
    and an update can leave a slightly negative eigenvalue; a small diagonal
    shift restores strict interiority, and the Newton system absorbs the
    perturbation through the recomputed residuals.  Gross infeasibility
    (relative to the matrix scale) is left untouched so real divergence still
    surfaces as a factorization error.
    """
    lam = float(np.linalg.eigvalsh(s).min())
    scale = max(float(np.abs(s).max()), np.finfo(float).tiny)
    if lam > 1e-14 * scale or lam < -1e-6 * scale:
        return s
    return s + (2.0 * abs(lam) + 1e-13 * scale) * np.eye(s.shape[0])


def _max_step(s: np.ndarray, ds: np.ndarray) -> float:
    """Largest step a in (0, 1] with s + a*ds psd, via Cholesky scaling."""
    l = np.linalg.cholesky(s)
    linv_ds = np.linalg.solve(l, ds)
    w = np.linalg.solve(l, linv_ds.T)
    lam = float(np.linalg.eigvalsh(sym(w)).min())
    if lam >= -1e-14:
        return 1.0
    return min(1.0, -1.0 / lam)


def solve_sdp(
    problem: SdpProblem,
    tol: float = 1e-9,
    max_iter: int = 200,
    start: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None,
) -> SdpSolution:
    """Solve the primal/dual pair to duality gap and feasibility residuals <= tol.

    `start` optionally supplies (X0, y0, Z0) with X0, Z0 strictly positive
    definite; the default is an identity start.  Deterministic for fixed inputs.
    """
    d = problem.dim
    m = len(problem.constraints)
    a_stack = np.stack([a for a, _ in problem.constraints])
    b = np.array([bi for _, bi in problem.constraints])
    c = problem.objective

    if start is None:
        scale = max(1.0, float(np.abs(c).max()), float(np.abs(b).max()))
        x = np.eye(d)
        y = np.zeros(m)
        z = scale * np.eye(d)
    else:
        x, y, z = (np.array(v, dtype=float) for v in start)
        x, z = sym(x), sym(z)

    bnorm = 1.0 + float(np.linalg.norm(b))
    cnorm = 1.0 + float(np.linalg.norm(c))
    history: list[tuple[float, float, float, float, float]] = []
    merits: list[float] = []

    def residuals(x, y, z):
        rp = b - np.einsum("kab,ab->k", a_stack, x)
        rd = np.einsum("k,kab->ab", y, a_stack) - z - c
        return rp, rd

    for it in range(max_iter):
        rp, rd = residuals(x, y, z)
        pobj = float(np.sum(c * x))
        dobj = float(b @ y)
        gap = float(np.sum(x * z))
        pinf = float(np.linalg.norm(rp)) / bnorm
        dinf = float(np.linalg.norm(rd)) / cnorm
        gap_rel = abs(pobj - dobj) / (1.0 + abs(pobj) + abs(dobj))
        history.append((pobj, dobj, gap, pinf, dinf))
        if pinf <= tol and dinf <= tol and gap_rel <= tol:
            return SdpSolution(
                primal=x, dual_multipliers=y, dual_slack=z, value=pobj,
                dual_value=dobj, gap=abs(pobj - dobj), pinfeas=pinf, dinfeas=dinf,
                iterations=it, history=tuple(history),
            )
        # Bail out once progress flatlines: without strict complementarity the
        # attainable gap bottoms out near sqrt(machine eps) and iterating
        # further cannot help.
        merits.append(max(gap_rel, pinf, dinf))
        if len(merits) > 25 and merits[-1] > 0.95 * merits[-26]:
            raise SolverError("progress stalled before reaching tolerance",
                              pinf, dinf, gap)

        try:
            zinv = sym(np.linalg.solve(z, np.eye(d)))
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"numerical breakdown: {exc}", pinf, dinf, gap) from exc
        mu = gap / d

        # Schur complement M_ij = tr(A_i Z^-1 A_j X), shared by both solves.
        g = np.einsum("ab,jbc,cd->jad", zinv, a_stack, x, optimize=True)
        schur = np.einsum("iab,jba->ij", a_stack, g, optimize=True)
        tr_a_zinv = np.einsum("iab,ba->i", a_stack, zinv)
        zinv_rd_x = zinv @ rd @ x

        def newton(nu: float, k: np.ndarray):
            rhs = (
                nu * tr_a_zinv
                - b
                - np.einsum("iab,ba->i", a_stack, zinv_rd_x)
                - np.einsum("iab,ba->i", a_stack, k)
            )
            dy = np.linalg.solve(schur, rhs)
            dz = np.einsum("k,kab->ab", dy, a_stack) + rd
            dx = sym(nu * zinv - x - zinv @ dz @ x - k)
            return dx, dy, dz

        try:
            dx_aff, dy_aff, dz_aff = newton(0.0, np.zeros((d, d)))
            tau = 0.998 if mu < 1e-6 else 0.98
            ap = tau * _max_step(x, dx_aff)
            ad = tau * _max_step(z, dz_aff)
            gap_aff = float(np.sum((x + ap * dx_aff) * (z + ad * dz_aff)))
            sigma = min(1.0, max(0.0, (gap_aff / gap) ** 3)) if gap > 0 else 0.0

            k = zinv @ dz_aff @ dx_aff
            dx, dy, dz = newton(sigma * mu, k)
            ap = tau * _max_step(x, dx)
            ad = tau * _max_step(z, dz)
        except np.linalg.LinAlgError as exc:
            raise SolverError(f"numerical breakdown: {exc}", pinf, dinf, gap) from exc
        x = _restore_cone(sym(x + ap * dx))
        y = y + ad * dy
        z = _restore_cone(sym(z + ad * dz))

    rp, rd = residuals(x, y, z)
    raise SolverError(
        f"no convergence within {max_iter} iterations",
        float(np.linalg.norm(rp)) / bnorm,
        float(np.linalg.norm(rd)) / cnorm,
        float(np.sum(x * z)),
    )


def min_eigenvalue(m: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric (or Hermitian) matrix."""
    return float(np.linalg.eigvalsh(sym(np.asarray(m))).min())


def circulant_eigenvalues(first_row) -> np.ndarray:
    """Eigenvalues of the symmetric circulant with the given first row.

    Requires c_j = c_{n-j} so the spectrum is real; returns
    lambda_j = sum_k c_k cos(2 pi j k / n) in index order j = 0..n-1.
    """
    c = np.asarray(first_row, dtype=float)
    n = c.shape[0]
    if n < 1:
        raise ValueError("row must be nonempty")
    if not np.allclose(c[1:], c[1:][::-1], atol=1e-12):
        raise ValueError("row must satisfy c_j = c_{n-j} for a real spectrum")
    j = np.arange(n)
    k = np.arange(n)
    return (c[None, :] * np.cos(2.0 * np.pi * np.outer(j, k) / n)).sum(axis=1)


def schur_psd_check(
    m: np.ndarray, pivot: float, border: np.ndarray, tol: float = 1e-9
) -> bool:
    """Whether [[pivot, -border^T], [-border, M]] is positive semidefinite.

    With pivot > 0 this is equivalent to M - border border^T / pivot >= 0,
    decided via its minimum eigenvalue against -tol.
    """
    if pivot <= 0:
        raise ValueError("pivot must be positive")
    border = np.asarray(border, dtype=float).reshape(-1)
    m = sym(np.asarray(m, dtype=float))
    return min_eigenvalue(m - np.outer(border, border) / pivot) >= -tol


def problem_to_json_dict(p: SdpProblem) -> dict:
    return {
        "dim": p.dim,
        "objective": [[float(v) for v in row] for row in p.objective],
        "constraints": [
            {"matrix": [[float(v) for v in row] for row in a], "rhs": float(b)}
            for a, b in p.constraints
        ],
    }


def solution_to_json_dict(s: SdpSolution) -> dict:
    return {
        "primal": [[float(v) for v in row] for row in s.primal],
        "dual_multipliers": [float(v) for v in s.dual_multipliers],
        "dual_slack": [[float(v) for v in row] for row in s.dual_slack],
        "value": float(s.value),
        "dual_value": float(s.dual_value),
        "gap": float(s.gap),
        "pinfeas": float(s.pinfeas),
        "dinfeas": float(s.dinfeas),
        "iterations": int(s.iterations),
    }
