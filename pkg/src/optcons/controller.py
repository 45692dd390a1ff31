"""Per-agent distributed controllers.

Each agent tracks its generator output ``r_i`` with a high-gain feedback on the
scalar error ``zeta_i`` and a first-order compensator ``eta_i`` that rebuilds the
unknown steady-state input. The full law adapts a gain ``theta_i``; the reduced
law replaces it with a ``rho`` sized from declared bounds.
"""

from __future__ import annotations

import ast
import math
from dataclasses import dataclass
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from numpy.typing import NDArray

from .costs import CostFunction
from .errors import ConfigurationError, InvalidParameterError, ShapeError
from .generator import GeneratorGains

HURWITZ_MARGIN = 1e-6


@dataclass(frozen=True)
class ChainDesign:
    k: tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.k) + 1

    def char_roots(self) -> NDArray[np.complex128]:
        """Roots of ``lambda^(n-1) + k_{n-1} lambda^(n-2) + ... + k_1``."""
        if not self.k:
            return np.array([], dtype=complex)
        return np.roots([1.0, *reversed(self.k)])

    def is_hurwitz(self, margin: float = HURWITZ_MARGIN) -> bool:
        roots = self.char_roots()
        return bool(roots.size == 0 or roots.real.max() <= -margin)


def hurwitz_coeffs(n: int, pole: float = 1.0) -> ChainDesign:
    """Coefficients of ``(lambda + pole)^(n-1)`` without the leading one, lowest order first."""
    if n < 1:
        raise InvalidParameterError(f"chain length must be >= 1, got {n}")
    if not pole > 0:
        raise InvalidParameterError(f"pole must be positive, got {pole}")
    deg = n - 1
    return ChainDesign(tuple(float(math.comb(deg, j) * pole ** (deg - j)) for j in range(deg)))


def chain_design(n: int, k: Sequence[float] | None = None, pole: float = 1.0) -> ChainDesign:
    if k is None:
        return hurwitz_coeffs(n, pole)
    d = ChainDesign(tuple(float(c) for c in k))
    if d.n != n:
        raise ShapeError(f"chain of length {n} needs {n - 1} coefficients, got {len(d.k)}")
    if not d.is_hurwitz():
        raise ConfigurationError(f"coefficients {d.k} do not give a Hurwitz polynomial")
    return d


def error_coords(x: Sequence[float], r: float, d: ChainDesign) -> tuple[NDArray[np.float64], NDArray[np.float64], float]:
    """Tracking error ``x - (r, 0, ..., 0)``, its first ``n-1`` entries, and ``zeta``."""
    x_bar = np.array(x, dtype=np.float64)
    if x_bar.shape != (d.n,):
        raise ShapeError(f"state has shape {x_bar.shape}, chain design expects ({d.n},)")
    x_bar[0] -= r
    return x_bar, x_bar[:-1].copy(), zeta_of(x_bar, d.k)


def zeta_of(x_bar: Sequence[float], k: Sequence[float]) -> float:
    z = x_bar[len(k)]
    for kj, xj in zip(k, x_bar):
        z += kj * xj
    return float(z)


# ---------------------------------------------------------------------------
# design functions


_ALLOWED_BINOPS = (ast.Add, ast.Sub, ast.Mult, ast.Pow)
_VARIABLES = {"zeta": "zeta", "ζ": "zeta", "r": "r"}


def parse_polynomial(expr: str, variables: Sequence[str] = ("zeta", "r")) -> Callable[..., float]:
    """Compile a polynomial expression string over the given variables.

    Only ``+ - *``, non-negative integer powers, numeric literals and the named
    variables are accepted; anything else raises ``ConfigurationError``.
    """
    try:
        tree = ast.parse(expr.strip(), mode="eval")
    except SyntaxError as exc:
        raise ConfigurationError(f"cannot parse expression {expr!r}: {exc.msg}") from exc
    allowed = {name for name, canon in _VARIABLES.items() if canon in variables}

    def check(node: ast.AST) -> None:
        if isinstance(node, ast.Expression):
            check(node.body)
        elif isinstance(node, ast.BinOp):
            if not isinstance(node.op, _ALLOWED_BINOPS):
                raise ConfigurationError(f"operator {type(node.op).__name__} not allowed in {expr!r}")
            if isinstance(node.op, ast.Pow):
                exp = node.right
                if not (isinstance(exp, ast.Constant) and isinstance(exp.value, int) and exp.value >= 0):
                    raise ConfigurationError(f"powers must be non-negative integer literals in {expr!r}")
            check(node.left)
            check(node.right)
        elif isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            check(node.operand)
        elif isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            pass
        elif isinstance(node, ast.Name) and node.id in allowed:
            pass
        else:
            raise ConfigurationError(f"unsupported element {ast.dump(node)} in {expr!r}")

    check(tree)
    tree = ast.fix_missing_locations(_Rename().visit(tree))
    code = compile(tree, "<design>", "eval")
    args = list(variables)

    def fn(*vals: float) -> float:
        return float(eval(code, {"__builtins__": {}}, dict(zip(args, vals))))

    fn.__doc__ = expr
    return fn


class _Rename(ast.NodeTransformer):
    def visit_Name(self, node: ast.Name) -> ast.Name:
        return ast.copy_location(ast.Name(id=_VARIABLES.get(node.id, node.id), ctx=node.ctx), node)


@dataclass(frozen=True)
class DesignFunctions:
    kappa: Callable[[float], float]
    rho: Callable[[float, float], float]
    tau: Callable[[float, float], float]
    label: str = "custom"


def _with_tau(kappa, rho, label: str) -> DesignFunctions:
    def tau(zeta: float, r: float) -> float:
        return rho(zeta, r) * zeta * zeta

    return DesignFunctions(kappa, rho, tau, label)


def make_design_example1() -> DesignFunctions:
    """kappa = 1, rho = zeta^4 + 1."""
    return _with_tau(lambda r: 1.0, lambda zeta, r: zeta**4 + 1.0, "example1")


def make_design_example2() -> DesignFunctions:
    """kappa = r^4 + 1, rho = zeta^4 + r^4 + 1."""
    return _with_tau(lambda r: r**4 + 1.0, lambda zeta, r: zeta**4 + r**4 + 1.0, "example2")


def make_design_reduced(
    b0: float,
    gamma_zeta: Callable[[float, float], float],
    phi1: Callable[[float], float],
    phi3: Callable[[float], float],
    kappa: Callable[[float], float],
) -> DesignFunctions:
    """Fixed-gain ``rho = (gamma_zeta(zeta, r) + phi1(r) + phi3(zeta) + 2) / (2 b0)`` from declared bounds."""
    if not b0 > 0:
        raise ConfigurationError(f"b0 must be positive, got {b0}")

    def rho(zeta: float, r: float) -> float:
        return (gamma_zeta(zeta, r) + phi1(r) + phi3(zeta) + 2.0) / (2.0 * b0)

    return _with_tau(kappa, rho, "reduced")


def design_from_json(obj: Any) -> DesignFunctions:
    if obj == "example1":
        return make_design_example1()
    if obj == "example2":
        return make_design_example2()
    if isinstance(obj, Mapping):
        if "kappa" not in obj or "rho" not in obj:
            raise ConfigurationError("custom design needs 'kappa' and 'rho' expressions")
        kappa = parse_polynomial(str(obj["kappa"]), ("r",))
        rho = parse_polynomial(str(obj["rho"]), ("zeta", "r"))
        if "tau" in obj:
            return DesignFunctions(kappa, rho, parse_polynomial(str(obj["tau"]), ("zeta", "r")), "custom")
        return _with_tau(kappa, rho, "custom")
    raise ConfigurationError(f"unknown design {obj!r}")


def reduced_design_from_json(obj: Mapping[str, Any] | None, kappa: Callable[[float], float]) -> DesignFunctions:
    """Reduced-mode ``rho``; refuses to guess when the bound data is missing."""
    needed = ("b0", "gamma_zeta", "phi1", "phi3")
    if not obj or any(key not in obj for key in needed):
        raise ConfigurationError(f"reduced controller needs a 'reduced' block with {', '.join(needed)}")
    return make_design_reduced(
        float(obj["b0"]),
        parse_polynomial(str(obj["gamma_zeta"]), ("zeta", "r")),
        parse_polynomial(str(obj["phi1"]), ("r",)),
        parse_polynomial(str(obj["phi3"]), ("zeta",)),
        kappa,
    )


def check_design(d: DesignFunctions, grid: Sequence[float] = tuple(np.linspace(-5.0, 5.0, 21))) -> None:
    """Raise if ``kappa, rho >= 1`` or ``tau = rho zeta^2`` fails on a test grid."""
    for r in grid:
        if not d.kappa(r) >= 1.0:
            raise ConfigurationError(f"kappa({r}) = {d.kappa(r)} < 1")
        for zeta in grid:
            rho = d.rho(zeta, r)
            if not rho >= 1.0:
                raise ConfigurationError(f"rho({zeta}, {r}) = {rho} < 1")
            if abs(d.tau(zeta, r) - rho * zeta * zeta) > 1e-12 * max(1.0, abs(rho * zeta * zeta)):
                raise ConfigurationError(f"tau({zeta}, {r}) differs from rho * zeta^2")


# ---------------------------------------------------------------------------
# control laws


@dataclass(frozen=True)
class ControllerState:
    eta: float
    theta: float
    r: float
    v: float


def generator_local(
    r: float,
    v: float,
    neighbor_r: Sequence[float],
    neighbor_v: Sequence[float],
    weights: Sequence[float],
    cost: CostFunction,
    gains: GeneratorGains,
) -> tuple[float, float]:
    """One agent's generator update from its own and in-neighbor values only."""
    if not len(neighbor_r) == len(neighbor_v) == len(weights):
        raise ShapeError("neighbor lists and weights must align")
    dr = 0.0
    dv = 0.0
    for a, rj, vj in zip(weights, neighbor_r, neighbor_v):
        dr += a * (r - rj)
        dv += a * (v - vj)
    return -gains.alpha * cost.grad(r) - gains.beta * dr - dv, gains.alpha * gains.beta * dr


def control_full(
    cs: ControllerState,
    zeta: float,
    d: DesignFunctions,
    neighbor_r: Sequence[float],
    neighbor_v: Sequence[float],
    weights: Sequence[float],
    cost: CostFunction,
    gains: GeneratorGains,
) -> tuple[float, float, float, float, float]:
    """Adaptive law; returns ``(u, eta', theta', r', v')``."""
    kr = d.kappa(cs.r)
    u = -cs.theta * d.rho(zeta, cs.r) * zeta + kr * cs.eta
    r_dot, v_dot = generator_local(cs.r, cs.v, neighbor_r, neighbor_v, weights, cost, gains)
    return u, -kr * cs.eta + u, d.tau(zeta, cs.r), r_dot, v_dot


def control_reduced(
    cs: ControllerState,
    zeta: float,
    d: DesignFunctions,
    neighbor_r: Sequence[float],
    neighbor_v: Sequence[float],
    weights: Sequence[float],
    cost: CostFunction,
    gains: GeneratorGains,
) -> tuple[float, float, float, float]:
    """Fixed-gain law; returns ``(u, eta', r', v')``. ``cs.theta`` is ignored."""
    kr = d.kappa(cs.r)
    u = -d.rho(zeta, cs.r) * zeta + kr * cs.eta
    r_dot, v_dot = generator_local(cs.r, cs.v, neighbor_r, neighbor_v, weights, cost, gains)
    return u, -kr * cs.eta + u, r_dot, v_dot
