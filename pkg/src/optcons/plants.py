"""Agent dynamics in normal form: zero dynamics ``z`` plus an integrator chain ``x``.

    z' = h(z, y, w)
    x_k' = x_{k+1}               (k < n)
    x_n' = g(z, x, w) + b(w) u
    y = x_1

The built-in plants are the flexible-joint manipulator, the FitzHugh-Nagumo
neuron and the Van der Pol oscillator, plus a bare integrator chain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigurationError, InvalidParameterError, ShapeError

Vec = Sequence[float]


@dataclass(frozen=True)
class Plant:
    name: str
    n: int
    m: int
    h: Callable[[Vec, float, Vec], list[float]]
    g: Callable[[Vec, Vec, Vec], float]
    b: Callable[[Vec], float]
    b0: float
    w: tuple[float, ...] = ()
    # solution z*(s, w) of h(z*, s, w) = 0 with z*(0, w) = 0
    zstar: Callable[[float, Vec], list[float]] | None = None
    params: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        if self.n < 1 or self.m < 0:
            raise InvalidParameterError(f"need n >= 1 and m >= 0, got n={self.n}, m={self.m}")
        if not self.b0 > 0:
            raise InvalidParameterError(f"b0 must be positive, got {self.b0}")

    def with_w(self, w: Vec) -> "Plant":
        return Plant(self.name, self.n, self.m, self.h, self.g, self.b, self.b0, tuple(float(x) for x in w), self.zstar, self.params)

    def z_star(self, s: float, w: Vec | None = None) -> list[float]:
        w = self.w if w is None else w
        if self.m == 0:
            return []
        if self.zstar is None:
            raise ConfigurationError(f"plant {self.name!r} has no regulator solution z*")
        return self.zstar(s, w)

    def u_star(self, s: float, w: Vec | None = None) -> float:
        """Steady-state input holding the output at ``s``: ``-g(z*(s), (s, 0, ..., 0)) / b``."""
        w = self.w if w is None else w
        x = [s] + [0.0] * (self.n - 1)
        return -self.g(self.z_star(s, w), x, w) / self.b(w)

    def rhs(self) -> Callable[[Vec, Vec, float], tuple[list[float], list[float]]]:
        """Closure evaluating ``(z', x')`` with this plant's ``w`` frozen in."""
        w, h, g, n = self.w, self.h, self.g, self.n
        bw = self.b(w)

        def f(z: Vec, x: Vec, u: float) -> tuple[list[float], list[float]]:
            zd = h(z, x[0], w) if z else []
            xd = list(x[1:n])
            xd.append(g(z, x, w) + bw * u)
            return zd, xd

        return f


@dataclass(frozen=True)
class AgentState:
    z: NDArray[np.float64]
    x: NDArray[np.float64]

    @property
    def y(self) -> float:
        return float(self.x[0])


@dataclass(frozen=True)
class UncertaintySpec:
    lower: tuple[float, ...]
    upper: tuple[float, ...]
    nonneg: tuple[bool, ...] | None = None

    def __post_init__(self) -> None:
        if len(self.lower) != len(self.upper):
            raise ShapeError("uncertainty bounds differ in length")
        if self.nonneg is not None and len(self.nonneg) != len(self.lower):
            raise ShapeError("sign constraints differ in length from the bounds")
        for lo, hi in zip(self.lower, self.upper):
            if lo > hi:
                raise InvalidParameterError(f"lower bound {lo} exceeds upper bound {hi}")
            if not lo <= 0.0 <= hi:
                raise InvalidParameterError(f"box [{lo}, {hi}] must contain 0")

    @property
    def dim(self) -> int:
        return len(self.lower)


def sample_uncertainty(spec: UncertaintySpec, seed) -> NDArray[np.float64]:
    """Uniform draw from the box; sign-constrained components are drawn from their nonnegative part."""
    rng = np.random.default_rng(seed)
    lower = np.array(spec.lower, dtype=np.float64)
    if spec.nonneg is not None:
        lower = np.where(spec.nonneg, np.maximum(lower, 0.0), lower)
    upper = np.array(spec.upper, dtype=np.float64)
    return lower + (upper - lower) * rng.random(spec.dim)


def plant_field(p: Plant, s: AgentState, u: float, w: Vec | None = None) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    z = np.asarray(s.z, dtype=np.float64)
    x = np.asarray(s.x, dtype=np.float64)
    if z.shape != (p.m,) or x.shape != (p.n,):
        raise ShapeError(f"{p.name}: expected z{(p.m,)} x{(p.n,)}, got z{z.shape} x{x.shape}")
    w = p.w if w is None else tuple(w)
    zd = p.h(z, x[0], w) if p.m else []
    xd = np.empty(p.n)
    xd[:-1] = x[1:]
    xd[-1] = p.g(z, x, w) + p.b(w) * u
    return np.asarray(zd, dtype=np.float64), xd


# ---------------------------------------------------------------------------
# integrator chain


def _no_h(z, y, w):
    return []


def make_chain(n: int, b: float = 1.0) -> Plant:
    """``n`` integrators in series with constant input gain: the trivial normal form."""
    if not b > 0:
        raise InvalidParameterError(f"input gain must be positive, got {b}")
    return Plant(
        "chain" if n > 1 else "integrator",
        n=n,
        m=0,
        h=_no_h,
        g=lambda z, x, w: 0.0,
        b=lambda w: b,
        b0=b,
        params={"n": n, "b": b},
    )


# ---------------------------------------------------------------------------
# single-link flexible-joint manipulator, state x = (q1, q1', q1'', q1''')


def make_manipulator(
    J1: float = 1.0,
    J2: float = 1.0,
    M0: float = 1.0,
    L0: float = 1.0,
    k: float = 1.0,
    grav: float = 9.8,
    w: Vec = (0.0, 0.0),
) -> Plant:
    """Flexible-joint arm with uncertain mass ``(1+w1) M0`` and length ``(1+w2) L0``."""
    for name, val in dict(J1=J1, J2=J2, M0=M0, L0=L0, k=k, grav=grav).items():
        if not val > 0:
            raise InvalidParameterError(f"manipulator parameter {name} must be positive, got {val}")
    if len(w) != 2:
        raise ShapeError(f"manipulator takes 2 uncertain parameters, got {len(w)}")
    stiff = k / J1 + k / J2

    def gain(w: Vec) -> float:
        # M g L / J1 with the uncertain mass and length
        return (1.0 + w[0]) * M0 * grav * (1.0 + w[1]) * L0 / J1

    def g(z: Vec, x: Vec, w: Vec) -> float:
        c = gain(w)
        return -x[2] * (c * math.cos(x[0]) + stiff) + c * (x[1] * x[1] - k / J2) * math.sin(x[0])

    b_val = k / (J1 * J2)
    return Plant(
        "manipulator",
        n=4,
        m=0,
        h=_no_h,
        g=g,
        b=lambda w: b_val,
        b0=b_val,
        w=tuple(float(v) for v in w),
        params=dict(J1=J1, J2=J2, M0=M0, L0=L0, k=k, grav=grav),
    )


def manipulator_second_order(p: Plant, q: Vec, u: float, w: Vec | None = None) -> list[float]:
    """Original two-link form: ``q = (q1, q1', q2, q2')`` -> ``q'``."""
    w = p.w if w is None else w
    J1, J2, M0, L0, k, grav = (p.params[key] for key in ("J1", "J2", "M0", "L0", "k", "grav"))
    mgl = (1.0 + w[0]) * M0 * grav * (1.0 + w[1]) * L0
    q1, dq1, q2, dq2 = q
    ddq1 = -(mgl * math.sin(q1) + k * (q1 - q2)) / J1
    ddq2 = (k * (q1 - q2) + u) / J2
    return [dq1, ddq1, dq2, ddq2]


def manipulator_chain_state(p: Plant, q: Vec, w: Vec | None = None) -> list[float]:
    """Chain coordinates ``(q1, q1', q1'', q1''')`` from physical ``(q1, q1', q2, q2')``."""
    w = p.w if w is None else w
    J1, M0, L0, k, grav = (p.params[key] for key in ("J1", "M0", "L0", "k", "grav"))
    mgl = (1.0 + w[0]) * M0 * grav * (1.0 + w[1]) * L0
    q1, dq1, q2, dq2 = q
    ddq1 = -(mgl * math.sin(q1) + k * (q1 - q2)) / J1
    dddq1 = -(mgl * math.cos(q1) * dq1 + k * (dq1 - dq2)) / J1
    return [q1, dq1, ddq1, dddq1]


# ---------------------------------------------------------------------------
# FitzHugh-Nagumo; w = (w3, w4, w5, w6) in the example's indexing


def make_fhn(a: float = 0.2, b_par: float = 0.8, c: float = 0.8, w: Vec = (0.0, 0.0, 0.0, 0.0)) -> Plant:
    for name, val in dict(a=a, b=b_par, c=c).items():
        if not val > 0:
            raise InvalidParameterError(f"FitzHugh-Nagumo parameter {name} must be positive, got {val}")
    if len(w) != 4:
        raise ShapeError(f"FitzHugh-Nagumo takes 4 uncertain parameters, got {len(w)}")

    def h(z: Vec, y: float, w: Vec) -> list[float]:
        return [-(1.0 + w[0]) * c * z[0] + (1.0 - w[1]) * b_par * y]

    def g(z: Vec, x: Vec, w: Vec) -> float:
        y = x[0]
        return (1.0 + w[3]) * y * (a - y) * (y - 1.0) - z[0]

    def zstar(s: float, w: Vec) -> list[float]:
        return [(1.0 - w[1]) * b_par * s / ((1.0 + w[0]) * c)]

    return Plant(
        "fhn",
        n=1,
        m=1,
        h=h,
        g=g,
        b=lambda w: 1.0 + w[2],
        b0=1.0,
        w=tuple(float(v) for v in w),
        zstar=zstar,
        params=dict(a=a, b=b_par, c=c),
    )


# ---------------------------------------------------------------------------
# Van der Pol; w = (w3, w4, w5)


def make_vdp(w: Vec = (0.0, 0.0, 0.0)) -> Plant:
    if len(w) != 3:
        raise ShapeError(f"Van der Pol takes 3 uncertain parameters, got {len(w)}")

    def g(z: Vec, x: Vec, w: Vec) -> float:
        return -(1.0 + w[0]) * x[0] + (1.0 + w[1]) * (1.0 - x[0] * x[0]) * x[1]

    return Plant("vdp", n=2, m=0, h=_no_h, g=g, b=lambda w: 1.0 + w[2], b0=1.0, w=tuple(float(v) for v in w))


# ---------------------------------------------------------------------------
# scenario entries

# default boxes; components flagged True are sign-constrained as in the examples
DEFAULT_UNCERTAINTY = {
    "manipulator": UncertaintySpec((0.0, 0.0), (0.5, 0.5), (True, True)),
    "fhn": UncertaintySpec((0.0, -0.2, 0.0, -0.2), (0.5, 0.2, 0.5, 0.2), (True, False, True, False)),
    "vdp": UncertaintySpec((0.0, -0.2, 0.0), (0.5, 0.2, 0.5), (True, False, True)),
    "integrator": UncertaintySpec((), ()),
    "chain": UncertaintySpec((), ()),
}

_BUILDERS: dict[str, Callable[..., Plant]] = {
    "manipulator": make_manipulator,
    "fhn": make_fhn,
    "vdp": make_vdp,
}


def plant_from_json(obj: Mapping[str, Any], seed) -> Plant:
    """Build a plant entry; ``seed`` feeds ``w`` sampling when the entry asks for it.

    ``"w"`` is either a list or ``{"sample": {"lower": .., "upper": .., "nonneg": .., "seed": ..}}``.
    An entry-level ``"seed"`` is mixed with the caller's seed so sweeps still vary ``w``.
    """
    kind = obj.get("type")
    params = dict(obj.get("params", {}))
    if kind in ("integrator", "chain"):
        n = int(params.get("n", 1)) if kind == "chain" else 1
        return make_chain(n, float(params.get("b", 1.0)))
    if kind not in _BUILDERS:
        raise ConfigurationError(f"unknown plant type {kind!r}")
    w_entry = obj.get("w")
    default = DEFAULT_UNCERTAINTY[kind]
    if w_entry is None:
        w = [0.0] * default.dim
    elif isinstance(w_entry, Mapping):
        sample = w_entry.get("sample")
        if sample is None:
            raise ConfigurationError(f"w entry must be a list or {{'sample': ...}}, got {w_entry!r}")
        spec = UncertaintySpec(
            tuple(sample.get("lower", default.lower)),
            tuple(sample.get("upper", default.upper)),
            tuple(sample["nonneg"]) if "nonneg" in sample else default.nonneg,
        )
        if spec.dim != default.dim:
            raise ShapeError(f"{kind} takes {default.dim} uncertain parameters, box has {spec.dim}")
        entry_seed = sample.get("seed")
        mixed = list(seed) if isinstance(seed, (list, tuple)) else [seed]
        if entry_seed is not None:
            mixed = [int(entry_seed)] + mixed
        w = sample_uncertainty(spec, mixed).tolist()
    else:
        w = [float(v) for v in w_entry]
    try:
        return _BUILDERS[kind](**params, w=w)
    except TypeError as exc:
        raise ConfigurationError(f"bad parameters for {kind}: {exc}") from exc
