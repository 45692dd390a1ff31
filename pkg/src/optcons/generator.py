"""Distributed optimal signal generator: gains, vector field, equilibrium, Lyapunov monitor.

Each agent runs

    r_i' = -alpha grad f_i(r_i) - beta sum_j a_ij (r_i - r_j) - sum_j a_ij (v_i - v_j)
    v_i' =  alpha beta sum_j a_ij (r_i - r_j)

and every ``r_i`` converges to the minimizer of ``sum_i f_i`` on weight-balanced,
strongly connected digraphs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .costs import CostEnsemble, global_optimum
from .errors import AssumptionError, InvalidParameterError, ShapeError, SpectralGapError
from .graph import ComplementBasis, Digraph, build_laplacian, complement_basis, laplacian


@dataclass(frozen=True)
class GeneratorGains:
    alpha: float
    beta: float
    # set when the gains come from the user and fall below the sufficient bounds
    below_bound: bool = False

    def to_json(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "below_bound": self.below_bound}


@dataclass(frozen=True)
class GeneratorState:
    r: NDArray[np.float64]
    v: NDArray[np.float64]


@dataclass(frozen=True)
class GeneratorEquilibrium:
    r_star: NDArray[np.float64]
    v_star: NDArray[np.float64]
    y_star: float


def alpha_bound(l_lower: float, l_upper: float, lambda2: float) -> float:
    return max(1.0, 1.0 / l_lower, 2.0 * l_upper**2 / (l_lower * lambda2))


def beta_bound(alpha: float, lambda2: float, lambdaN: float) -> float:
    return max(1.0, 1.0 / lambda2, 6.0 * alpha**2 * lambdaN**2 / lambda2**2)


def select_gains(l_lower: float, l_upper: float, lambda2: float, lambdaN: float) -> GeneratorGains:
    """Smallest ``(alpha, beta)`` satisfying the sufficient convergence bounds."""
    if not lambda2 > 0:
        raise SpectralGapError(f"lambda2 = {lambda2} <= 0: graph has no spectral gap")
    if not (l_lower > 0 and l_upper > 0 and lambdaN > 0):
        raise InvalidParameterError("Hessian bounds and lambdaN must be positive")
    if l_lower > l_upper:
        raise InvalidParameterError(f"l_lower = {l_lower} exceeds l_upper = {l_upper}")
    alpha = alpha_bound(l_lower, l_upper, lambda2)
    return GeneratorGains(alpha, beta_bound(alpha, lambda2, lambdaN))


def check_gains(
    alpha: float, beta: float, l_lower: float, l_upper: float, lambda2: float, lambdaN: float
) -> GeneratorGains:
    """Wrap user gains, flagging them when they violate the sufficient bounds."""
    if not (alpha > 0 and beta > 0):
        raise InvalidParameterError(f"gains must be positive, got alpha={alpha}, beta={beta}")
    if not lambda2 > 0:
        raise SpectralGapError(f"lambda2 = {lambda2} <= 0: graph has no spectral gap")
    below = alpha < alpha_bound(l_lower, l_upper, lambda2) or beta < beta_bound(alpha, lambda2, lambdaN)
    return GeneratorGains(float(alpha), float(beta), below_bound=below)


def generator_field(
    s: GeneratorState, e: CostEnsemble, weights: NDArray[np.float64], g: GeneratorGains
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Agent-local evaluation: each agent reads only its in-neighbors."""
    r = np.asarray(s.r, dtype=np.float64)
    v = np.asarray(s.v, dtype=np.float64)
    n = len(e)
    if r.shape != (n,) or v.shape != (n,) or weights.shape != (n, n):
        raise ShapeError(f"inconsistent shapes r{r.shape} v{v.shape} A{weights.shape} for {n} costs")
    r_dot = np.empty(n)
    v_dot = np.empty(n)
    for i in range(n):
        nbrs = np.flatnonzero(weights[i])
        a = weights[i, nbrs]
        dr = float(a @ (r[i] - r[nbrs]))
        dv = float(a @ (v[i] - v[nbrs]))
        r_dot[i] = -g.alpha * e.costs[i].grad(r[i]) - g.beta * dr - dv
        v_dot[i] = g.alpha * g.beta * dr
    return r_dot, v_dot


def generator_field_matrix(
    s: GeneratorState, e: CostEnsemble, lap: NDArray[np.float64], g: GeneratorGains
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Stacked form ``r' = -alpha grad f(r) - beta L r - L v``, ``v' = alpha beta L r``."""
    r, v = s.r, s.v
    return -g.alpha * e.grad(r) - g.beta * lap @ r - lap @ v, g.alpha * g.beta * lap @ r


def generator_equilibrium(e: CostEnsemble, g: Digraph, alpha: float, tol: float = 1e-12) -> GeneratorEquilibrium:
    rep = build_laplacian(g)
    if not rep.satisfies_assumption:
        raise AssumptionError("generator equilibrium needs a weight-balanced, strongly connected digraph")
    n = g.n_nodes
    y_star = global_optimum(e, tol=tol)
    r_star = np.full(n, y_star)
    if n == 1:
        return GeneratorEquilibrium(r_star, np.zeros(1), y_star)
    basis = complement_basis(n)
    m2 = basis.m2
    ml = m2.T @ rep.laplacian @ m2
    if abs(np.linalg.det(ml)) < 1e-14:
        raise SpectralGapError("projected Laplacian is singular")
    v_star = -alpha * m2 @ np.linalg.solve(ml, m2.T @ e.grad(r_star))
    return GeneratorEquilibrium(r_star, v_star, y_star)


def lyapunov_vo(
    s: GeneratorState, eq: GeneratorEquilibrium, basis: ComplementBasis | None, alpha: float
) -> float:
    """Quadratic Lyapunov function in the consensus/disagreement coordinates.

    The disagreement part of ``v`` is shifted by ``alpha * r`` before projection.
    """
    r = np.asarray(s.r) - eq.r_star
    v = np.asarray(s.v) - eq.v_star
    if basis is None:
        basis = complement_basis(len(r))
    m1, m2 = basis.m1, basis.m2
    r1 = m1 @ r
    r2 = m2.T @ r
    v1 = m1 @ v
    v2 = m2.T @ (v + alpha * r)
    return float(r1 * r1 + r2 @ r2 + (v1 * v1 + v2 @ v2) / alpha**3)


def lyapunov_vo_series(
    r: NDArray[np.float64], v: NDArray[np.float64], eq: GeneratorEquilibrium, alpha: float
) -> NDArray[np.float64]:
    """``lyapunov_vo`` over rows of logged ``r`` and ``v`` arrays of shape (T, N)."""
    basis = complement_basis(r.shape[1])
    return np.array([lyapunov_vo(GeneratorState(ri, vi), eq, basis, alpha) for ri, vi in zip(r, v)])


def graph_laplacian(g: Digraph) -> NDArray[np.float64]:
    return laplacian(g)
