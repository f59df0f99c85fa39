"""Embedded primal-dual interior-point solver.

Infeasible path following with Nesterov-Todd scaling and a Mehrotra
predictor-corrector step. All linear algebra is dense per block.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import structlog
from scipy import linalg

from roundsos.config.constants import SolveStatus
from roundsos.config.settings import Settings, get_settings
from roundsos.sdp.problem import SdpProblem, SdpSolution, inner

logger = structlog.get_logger()

Blocks = list[np.ndarray]


@dataclass(frozen=True)
class SolverParams:
    gap_tol: float = 1e-8
    feas_tol: float = 1e-8
    max_iter: int = 100
    step_fraction: float = 0.95

    @classmethod
    def from_settings(cls, settings: Optional[Settings] = None) -> SolverParams:
        s = settings or get_settings()
        return cls(gap_tol=s.gap_tol, feas_tol=s.feas_tol, max_iter=s.max_iter)


@dataclass
class _Scaling:
    """NT scaling of one block: ``W = G G^T`` with ``W Z W = X`` and ``G^T Z G = D^2``."""

    g: np.ndarray
    g_inv: np.ndarray
    w: np.ndarray
    d: np.ndarray

    @classmethod
    def of(cls, x: np.ndarray, z: np.ndarray) -> _Scaling:
        chol = np.linalg.cholesky(x)
        s = chol.T @ z @ chol
        lam, u = np.linalg.eigh(_sym(s))
        lam = np.maximum(lam, np.finfo(float).tiny)
        quarter = lam**0.25
        g = (chol @ u) / quarter
        chol_inv = linalg.solve_triangular(chol, np.eye(len(x)), lower=True)
        g_inv = quarter[:, None] * (u.T @ chol_inv)
        return cls(g=g, g_inv=g_inv, w=g @ g.T, d=np.sqrt(lam))


@dataclass
class _Iterate:
    x: Blocks
    y: np.ndarray
    z: Blocks


def _sym(a: np.ndarray) -> np.ndarray:
    return (a + a.T) / 2


def _max_step(x: np.ndarray, dx: np.ndarray) -> float:
    """Largest ``alpha`` keeping ``x + alpha dx`` positive semidefinite."""
    chol = np.linalg.cholesky(x)
    half = linalg.solve_triangular(chol, dx, lower=True)
    scaled = linalg.solve_triangular(chol, half.T, lower=True)
    lam_min = float(np.linalg.eigvalsh(_sym(scaled))[0])
    return np.inf if lam_min >= 0 else -1.0 / lam_min


def _step_length(blocks: Blocks, deltas: Blocks, fraction: float = 1.0) -> float:
    return min(1.0, fraction * min((_max_step(b, d) for b, d in zip(blocks, deltas)), default=np.inf))


def _finite(it: _Iterate) -> bool:
    return bool(np.isfinite(it.y).all()) and all(np.isfinite(b).all() for b in (*it.x, *it.z))


class InteriorPointSolver:
    """Solves ``max <C, X>`` s.t. ``<A_i, X> = b_i``, ``X >= 0`` and its dual."""

    def __init__(self, problem: SdpProblem, params: Optional[SolverParams] = None) -> None:
        self.problem = problem
        self.params = params or SolverParams()
        self.c = problem.cost_blocks()
        self.tensors = problem.constraint_tensors()
        self.b = problem.rhs()
        self.m = problem.m
        self.order = max(sum(problem.dims), 1)

    # Linear maps

    def op_a(self, blocks: Blocks) -> np.ndarray:
        out = np.zeros(self.m)
        for (ids, t), x in zip(self.tensors, blocks):
            if len(ids):
                out[ids] += t.reshape(len(ids), -1) @ x.ravel()
        return out

    def op_at(self, y: np.ndarray) -> Blocks:
        out = []
        for (ids, t), c in zip(self.tensors, self.c):
            out.append(np.tensordot(y[ids], t, axes=1) if len(ids) else np.zeros_like(c))
        return out

    def schur(self, scalings: list[_Scaling]) -> np.ndarray:
        """``M_ij = sum_k <A_ik, W_k A_jk W_k>``."""
        big = np.zeros((self.m, self.m))
        for (ids, t), sc in zip(self.tensors, scalings):
            if not len(ids):
                continue
            waw = sc.w[None, :, :] @ t @ sc.w[None, :, :]
            flat = t.reshape(len(ids), -1)
            big[np.ix_(ids, ids)] += flat @ waw.reshape(len(ids), -1).T
        return _sym(big)

    def initial_point(self) -> _Iterate:
        """``X = tau_p I``, ``Z = tau_d I`` and ``y = 0`` with ``tau`` scaled to the data."""
        dims = self.problem.dims
        size = max(dims, default=1)
        a_norms = np.zeros(self.m)
        for ids, t in self.tensors:
            if len(ids):
                a_norms[ids] += np.einsum("kij,kij->k", t, t)
        a_norms = np.sqrt(a_norms)
        c_norm = float(np.sqrt(sum(np.vdot(c, c) for c in self.c)))
        tau_p = max([10.0, float(np.sqrt(size)), *(size * (1 + np.abs(self.b)) / (1 + a_norms))])
        tau_d = max([10.0, float(np.sqrt(size)), c_norm, *a_norms])
        return _Iterate(
            x=[tau_p * np.eye(s) for s in dims],
            y=np.zeros(self.m),
            z=[tau_d * np.eye(s) for s in dims],
        )

    def _factor(self, schur: np.ndarray):  # type: ignore[no-untyped-def]
        if not np.isfinite(schur).all():
            raise np.linalg.LinAlgError("Schur complement is not finite")
        try:
            return linalg.cho_factor(schur, lower=True)
        except linalg.LinAlgError:
            shift = 1e-12 * max(1.0, float(np.max(np.abs(np.diag(schur)))))
            logger.debug("Regularized Schur complement", shift=shift)
            return linalg.cho_factor(schur + shift * np.eye(self.m), lower=True)

    def _step(self, it: _Iterate, rp: np.ndarray, rd: Blocks, mu: float) -> tuple[_Iterate, float, float]:
        scalings = [_Scaling.of(xk, zk) for xk, zk in zip(it.x, it.z)]
        factor = self._factor(self.schur(scalings)) if self.m else None

        def direction(h: Blocks) -> tuple[Blocks, np.ndarray, Blocks]:
            # Solve dX + W dZ W = G H G^T together with the residual equations
            rc = [sc.g @ hk @ sc.g.T for sc, hk in zip(scalings, h)]
            rhs = self.op_a([r - sc.w @ dk @ sc.w for r, sc, dk in zip(rc, scalings, rd)]) - rp
            dy = linalg.cho_solve(factor, rhs) if factor is not None else np.zeros(0)
            dz = [a + r for a, r in zip(self.op_at(dy), rd)]
            dx = [_sym(r - sc.w @ dzk @ sc.w) for r, sc, dzk in zip(rc, scalings, dz)]
            return dx, dy, dz

        # Predictor: aim at mu = 0
        dx, dy, dz = direction([np.diag(-sc.d) for sc in scalings])
        ap = _step_length(it.x, dx)
        ad = _step_length(it.z, dz)
        mu_aff = inner(
            [xk + ap * d for xk, d in zip(it.x, dx)], [zk + ad * d for zk, d in zip(it.z, dz)]
        ) / self.order
        sigma = min(1.0, max(0.0, mu_aff / mu) ** 3) if mu > 0 else 0.0

        # Corrector: centring plus the second-order term, solved as a Lyapunov equation in D
        targets = []
        for sc, dxk, dzk in zip(scalings, dx, dz):
            sx = sc.g_inv @ dxk @ sc.g_inv.T
            sz = sc.g.T @ dzk @ sc.g
            r = sigma * mu * np.eye(len(sc.d)) - np.diag(sc.d**2) - _sym(sx @ sz)
            targets.append(2 * r / (sc.d[:, None] + sc.d[None, :]))
        dx, dy, dz = direction(targets)

        ap = _step_length(it.x, dx, self.params.step_fraction)
        ad = _step_length(it.z, dz, self.params.step_fraction)
        nxt = _Iterate(
            x=[xk + ap * d for xk, d in zip(it.x, dx)],
            y=it.y + ad * dy,
            z=[zk + ad * d for zk, d in zip(it.z, dz)],
        )
        return nxt, ap, ad

    def solve(self) -> SdpSolution:
        params = self.params
        it = self.initial_point()
        b_norm = 1 + float(np.linalg.norm(self.b))
        c_norm = 1 + float(np.sqrt(sum(np.vdot(c, c) for c in self.c)))
        status = SolveStatus.ITERATION_LIMIT
        message: Optional[str] = None
        pobj = dobj = gap = p_inf = d_inf = float("nan")
        stalled = 0
        iteration = 0

        for iteration in range(params.max_iter + 1):
            rp = self.b - self.op_a(it.x)
            rd = [a - c - zk for a, c, zk in zip(self.op_at(it.y), self.c, it.z)]
            mu = inner(it.x, it.z) / self.order
            pobj = inner(self.c, it.x)
            dobj = float(self.b @ it.y)
            gap = abs(pobj - dobj) / (1 + abs(pobj) + abs(dobj))
            p_inf = float(np.linalg.norm(rp)) / b_norm
            d_inf = float(np.sqrt(sum(np.vdot(r, r) for r in rd))) / c_norm
            logger.debug(
                "Interior-point iteration",
                iteration=iteration,
                pobj=pobj,
                dobj=dobj,
                gap=gap,
                primal_infeasibility=p_inf,
                dual_infeasibility=d_inf,
            )
            if gap <= params.gap_tol and p_inf <= params.feas_tol and d_inf <= params.feas_tol:
                status = SolveStatus.OPTIMAL
                break
            if max(abs(pobj), abs(dobj)) > 1e12 * max(b_norm, c_norm):
                status = SolveStatus.INFEASIBLE
                message = "objective diverged"
                break
            if iteration == params.max_iter:
                break
            try:
                candidate, ap, ad = self._step(it, rp, rd, mu)
            except (np.linalg.LinAlgError, ValueError) as e:
                status = SolveStatus.NUMERICAL_TROUBLE
                message = f"linear algebra failed: {e}"
                break
            if not _finite(candidate):
                status = SolveStatus.NUMERICAL_TROUBLE
                message = "iterate left the finite range"
                break
            it = candidate
            stalled = stalled + 1 if max(ap, ad) < 1e-8 else 0
            if stalled >= 3:
                status = SolveStatus.NUMERICAL_TROUBLE
                message = "step lengths collapsed"
                break

        logger.info(
            "Solved SDP",
            status=status.value,
            iterations=iteration,
            constraints=self.m,
            blocks=len(it.x),
            primal_objective=pobj,
            gap=gap,
        )
        return SdpSolution(
            status=status,
            x=it.x,
            y=it.y,
            z=it.z,
            primal_objective=pobj,
            dual_objective=dobj,
            gap=gap,
            iterations=iteration,
            message=message,
            extras={"primal_infeasibility": p_inf, "dual_infeasibility": d_inf},
        )


def solve(problem: SdpProblem, params: Optional[SolverParams] = None) -> SdpSolution:
    """Solve with the embedded interior-point method; numerical failures become statuses."""
    return InteriorPointSolver(problem, params).solve()
