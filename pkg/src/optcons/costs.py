"""Local strongly convex costs, Hessian bound estimates and the centralized optimum."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, InvalidRangeError, UnboundedProblemError

# Example-2 costs -----------------------------------------------------------


def _f1(y: float) -> float:
    return (y - 8.0) ** 2


def _df1(y: float) -> float:
    return 2.0 * (y - 8.0)


def _f2(y: float) -> float:
    return y * y / (80.0 * math.log(y * y + 2.0)) + (y - 5.0) ** 2


def _df2(y: float) -> float:
    s = y * y + 2.0
    ln = math.log(s)
    return (2.0 * y * ln - 2.0 * y**3 / s) / (80.0 * ln * ln) + 2.0 * (y - 5.0)


def _f3(y: float) -> float:
    return y * y / (20.0 * math.sqrt(y * y + 1.0)) + y * y


def _df3(y: float) -> float:
    s = y * y + 1.0
    return (y**3 + 2.0 * y) / (20.0 * s * math.sqrt(s)) + 2.0 * y


def _f4(y: float) -> float:
    return float(np.logaddexp(-0.05 * y, 0.05 * y)) + y * y


def _df4(y: float) -> float:
    return 0.05 * math.tanh(0.05 * y) + 2.0 * y


_EXAMPLE2 = {
    "example2_f1": (_f1, _df1),
    "example2_f2": (_f2, _df2),
    "example2_f3": (_f3, _df3),
    "example2_f4": (_f4, _df4),
}

# bounds stated alongside the example; valid for all four functions
EXAMPLE2_DECLARED_BOUNDS = (1.0, 3.0)
DEFAULT_BOUND_RANGE = (-10.0, 10.0)
DEFAULT_BOUND_SAMPLES = 2001


@dataclass(frozen=True)
class CostFunction:
    kind: str
    center: float = 0.0
    weight: float = 1.0
    declared_bounds: tuple[float, float] | None = None
    _f: Callable[[float], float] = field(init=False, repr=False, compare=False)
    _df: Callable[[float], float] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.kind == "quadratic":
            if not self.weight > 0:
                raise ConfigurationError(f"quadratic weight must be positive, got {self.weight}")
            c, q = float(self.center), float(self.weight)
            f = lambda y: 0.5 * q * (y - c) ** 2  # noqa: E731
            df = lambda y: q * (y - c)  # noqa: E731
        elif self.kind in _EXAMPLE2:
            f, df = _EXAMPLE2[self.kind]
        else:
            raise ConfigurationError(f"unknown cost kind {self.kind!r}")
        if self.declared_bounds is not None:
            lo, hi = self.declared_bounds
            if not 0 < lo <= hi < math.inf:
                raise ConfigurationError(f"declared Hessian bounds must satisfy 0 < l <= u < inf, got {self.declared_bounds}")
        object.__setattr__(self, "_f", f)
        object.__setattr__(self, "_df", df)

    @classmethod
    def quadratic(cls, center: float, weight: float = 1.0) -> "CostFunction":
        """``f(y) = weight/2 * (y - center)**2``."""
        return cls("quadratic", center=float(center), weight=float(weight), declared_bounds=(weight, weight))

    @classmethod
    def example2(cls, index: int) -> "CostFunction":
        return cls(f"example2_f{index}")

    def __call__(self, y: float) -> float:
        return self._f(float(y))

    def grad(self, y: float) -> float:
        return self._df(float(y))

    def bounds(self) -> tuple[float, float]:
        """Declared Hessian bounds if present, otherwise the sampled estimate."""
        if self.declared_bounds is not None:
            return self.declared_bounds
        return hessian_bounds(self, *DEFAULT_BOUND_RANGE, DEFAULT_BOUND_SAMPLES)

    def to_json(self) -> dict:
        out: dict[str, Any] = {"kind": self.kind}
        if self.kind == "quadratic":
            out.update(center=self.center, weight=self.weight)
        if self.declared_bounds is not None:
            out["hessian_bounds"] = list(self.declared_bounds)
        return out


def cost_from_json(obj: Mapping[str, Any], *, initial_output: float | None = None) -> CostFunction:
    """Parse a scenario cost entry.

    ``"center": "initial_output"`` ties a quadratic to the agent's initial output,
    which is how the rendezvous example defines its costs.
    """
    kind = obj.get("kind")
    bounds = obj.get("hessian_bounds")
    bounds = (float(bounds[0]), float(bounds[1])) if bounds is not None else None
    if kind == "quadratic":
        center = obj.get("center", 0.0)
        if center == "initial_output":
            if initial_output is None:
                raise ConfigurationError("cost center 'initial_output' needs the agent's initial output")
            center = initial_output
        weight = float(obj.get("weight", 1.0))
        return CostFunction("quadratic", center=float(center), weight=weight, declared_bounds=bounds or (weight, weight))
    if kind in _EXAMPLE2:
        return CostFunction(kind, declared_bounds=bounds)
    raise ConfigurationError(f"unknown cost kind {kind!r}")


def eval_gradient(c: CostFunction, y: float) -> float:
    return c.grad(y)


def hessian_bounds(c: CostFunction, lo: float, hi: float, n_samples: int) -> tuple[float, float]:
    """Sampled (not certified) min/max of the second central difference on a uniform grid."""
    if not (np.isfinite(lo) and np.isfinite(hi)) or not lo < hi:
        raise InvalidRangeError(f"need lo < hi, got [{lo}, {hi}]")
    if n_samples < 3:
        raise InvalidRangeError(f"need at least 3 samples, got {n_samples}")
    grid = np.linspace(lo, hi, n_samples)
    step = grid[1] - grid[0]
    vals = np.array([c(y) for y in grid])
    second = (vals[2:] - 2.0 * vals[1:-1] + vals[:-2]) / step**2
    return float(second.min()), float(second.max())


@dataclass(frozen=True)
class CostEnsemble:
    costs: tuple[CostFunction, ...]
    l_lower: float
    l_upper: float

    def __len__(self) -> int:
        return len(self.costs)

    def grad(self, r: Sequence[float]) -> np.ndarray:
        """Stacked local gradients ``(grad f_1(r_1), ..., grad f_N(r_N))``."""
        return np.array([c.grad(x) for c, x in zip(self.costs, r)])

    def total_grad(self, y: float) -> float:
        # fsum is exactly rounded, hence independent of agent order
        return math.fsum(c.grad(y) for c in self.costs)

    def total(self, y: float) -> float:
        return math.fsum(c(y) for c in self.costs)


def make_ensemble(costs: Sequence[CostFunction]) -> CostEnsemble:
    if not costs:
        raise ConfigurationError("cost ensemble is empty")
    bounds = [c.bounds() for c in costs]
    lo = min(b[0] for b in bounds)
    hi = max(b[1] for b in bounds)
    if not 0 < lo <= hi < math.inf:
        raise ConfigurationError(f"ensemble is not uniformly strongly convex: bounds ({lo}, {hi})")
    return CostEnsemble(tuple(costs), lo, hi)


def global_optimum(e: CostEnsemble, tol: float = 1e-10, *, limit: float = 1e9) -> float:
    """Minimizer of ``sum_i f_i`` by bracket expansion and bisection on the summed gradient."""
    if not tol > 0:
        raise InvalidRangeError(f"tol must be positive, got {tol}")
    g0 = e.total_grad(0.0)
    if abs(g0) <= tol:
        return 0.0
    # the root lies on the side where the gradient points away from
    direction = -1.0 if g0 > 0 else 1.0
    width = 1.0
    while True:
        far = direction * width
        gf = e.total_grad(far)
        if abs(gf) <= tol:
            return far
        if (gf > 0) != (g0 > 0):
            break
        width *= 2.0
        if width > limit:
            raise UnboundedProblemError(f"summed gradient keeps its sign beyond |y| = {limit:g}")
    lo, hi = (far, 0.0) if direction < 0 else (0.0, far)
    while True:
        mid = 0.5 * (lo + hi)
        gm = e.total_grad(mid)
        if abs(gm) <= tol or mid in (lo, hi):
            return mid
        if gm > 0:
            hi = mid
        else:
            lo = mid
