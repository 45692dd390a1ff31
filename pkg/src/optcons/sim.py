"""Closed-loop simulation: fixed-step RK4, trajectory logging and convergence metrics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np
from numpy.typing import NDArray

from .controller import ChainDesign, ControllerState, DesignFunctions, control_full, control_reduced, zeta_of
from .costs import CostEnsemble
from .errors import AssumptionError, ConfigurationError, DivergenceError, ShapeError
from .generator import (
    GeneratorEquilibrium,
    GeneratorGains,
    generator_equilibrium,
    generator_field_matrix,
    GeneratorState,
    lyapunov_vo_series,
)
from .graph import Digraph, build_laplacian
from .plants import Plant

DIVERGENCE_LIMIT = 1e9
LOG_FLOOR = 1e-15

Field = Callable[[NDArray[np.float64]], NDArray[np.float64]]


def rk4_step(f: Field, s: NDArray[np.float64], h: float) -> NDArray[np.float64]:
    """One classical Runge-Kutta step; raises ``DivergenceError`` on a non-finite slope."""
    k1 = _slope(f, s)
    k2 = _slope(f, s + 0.5 * h * k1)
    k3 = _slope(f, s + 0.5 * h * k2)
    k4 = _slope(f, s + h * k3)
    return s + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _slope(f: Field, s: NDArray[np.float64]) -> NDArray[np.float64]:
    try:
        k = f(s)
    except OverflowError as exc:
        # python float powers raise instead of returning inf
        raise DivergenceError(f"overflow while evaluating the vector field ({exc})") from None
    if not np.isfinite(k).all():
        idx = int(np.flatnonzero(~np.isfinite(k))[0])
        raise DivergenceError(f"non-finite derivative in component {idx}", index=idx)
    return k


def integrate(
    f: Field, s0: NDArray[np.float64], h: float, T: float, log_every: int = 1, limit: float = DIVERGENCE_LIMIT
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Fixed-step RK4 over ``[0, T]``; logs every ``log_every`` steps and always the last one."""
    if not h > 0:
        raise ConfigurationError(f"step must be positive, got {h}")
    n_steps = int(round(T / h))
    if n_steps < 1:
        raise ConfigurationError(f"horizon {T} shorter than one step {h}")
    log_every = max(1, int(log_every))
    s = np.array(s0, dtype=np.float64)
    times = [0.0]
    states = [s.copy()]
    for k in range(1, n_steps + 1):
        try:
            s = rk4_step(f, s, h)
        except DivergenceError as exc:
            raise DivergenceError(f"{exc} at t = {(k - 1) * h:.6g}", time=(k - 1) * h, index=exc.index) from None
        peak = np.abs(s).max()
        if not peak <= limit:
            idx = int(np.argmax(~np.isfinite(s) | (np.abs(s) > limit)))
            raise DivergenceError(
                f"state component {idx} reached {s[idx]:.3g} at t = {k * h:.6g}", time=k * h, index=idx
            )
        if k % log_every == 0 or k == n_steps:
            times.append(k * h)
            states.append(s.copy())
    return np.array(times), np.array(states)


# ---------------------------------------------------------------------------
# scenario and closed loop


@dataclass(frozen=True)
class IntegratorConfig:
    h: float = 1e-3
    T: float = 30.0
    log_every: int = 100

    def __post_init__(self) -> None:
        if not self.h > 0:
            raise ConfigurationError(f"integrator step must be positive, got {self.h}")
        if not self.T >= 10 * self.h * (1 - 1e-12):
            raise ConfigurationError(f"horizon T={self.T} must be at least 10 steps of h={self.h}")
        if self.log_every < 1:
            raise ConfigurationError("log_every must be >= 1")


@dataclass(frozen=True)
class AgentInit:
    z: tuple[float, ...]
    x: tuple[float, ...]
    eta: float = 0.0
    theta: float = 0.0
    r: float = 0.0
    v: float = 0.0


@dataclass(frozen=True)
class Scenario:
    digraph: Digraph
    costs: CostEnsemble
    plants: tuple[Plant, ...]
    designs: tuple[DesignFunctions, ...]
    chains: tuple[ChainDesign, ...]
    gains: GeneratorGains
    initial: tuple[AgentInit, ...]
    integrator: IntegratorConfig = IntegratorConfig()
    mode: str = "full"
    tol_out: float = 0.05
    name: str = "scenario"
    seed: int | None = None
    warnings: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        n = self.digraph.n_nodes
        for label, seq in [
            ("costs", self.costs.costs),
            ("plants", self.plants),
            ("designs", self.designs),
            ("chains", self.chains),
            ("initial", self.initial),
        ]:
            if len(seq) != n:
                raise ShapeError(f"{label} has {len(seq)} entries for a {n}-node graph")
        if self.mode not in ("full", "reduced"):
            raise ConfigurationError(f"controller mode must be 'full' or 'reduced', got {self.mode!r}")
        for i, (p, c, ic) in enumerate(zip(self.plants, self.chains, self.initial)):
            if c.n != p.n:
                raise ShapeError(f"agent {i}: chain design for n={c.n} but plant has n={p.n}")
            if len(ic.z) != p.m or len(ic.x) != p.n:
                raise ShapeError(f"agent {i}: initial state does not match plant dimensions")

    @property
    def n_agents(self) -> int:
        return self.digraph.n_nodes


@dataclass(frozen=True)
class Layout:
    """Where each agent's pieces live in the flat closed-loop state."""

    offsets: tuple[int, ...]
    dims: tuple[tuple[int, int], ...]
    size: int

    @classmethod
    def for_plants(cls, plants: Sequence[Plant]) -> "Layout":
        offsets = []
        pos = 0
        for p in plants:
            offsets.append(pos)
            pos += p.m + p.n + 4
        return cls(tuple(offsets), tuple((p.m, p.n) for p in plants), pos)

    def index(self, i: int, part: str) -> int:
        m, n = self.dims[i]
        base = self.offsets[i] + m + n
        return base + ("eta", "theta", "r", "v").index(part) if part != "y" else self.offsets[i] + m

    def indices(self, part: str) -> NDArray[np.intp]:
        return np.array([self.index(i, part) for i in range(len(self.offsets))], dtype=np.intp)


def initial_state(sc: Scenario, layout: Layout) -> NDArray[np.float64]:
    s = np.zeros(layout.size)
    for i, ic in enumerate(sc.initial):
        o = layout.offsets[i]
        m, n = layout.dims[i]
        s[o : o + m] = ic.z
        s[o + m : o + m + n] = ic.x
        s[o + m + n : o + m + n + 4] = (ic.eta, ic.theta, ic.r, ic.v)
    return s


@dataclass(frozen=True)
class ClosedLoop:
    """Vector field of the networked closed loop plus helpers to read off ``u``."""

    scenario: Scenario
    layout: Layout

    def __post_init__(self) -> None:
        sc = self.scenario
        agents = []
        for i, p in enumerate(sc.plants):
            nbrs = sc.digraph.neighbors(i)
            agents.append(
                (
                    p.rhs(),
                    p.m,
                    p.n,
                    self.layout.offsets[i],
                    sc.chains[i].k,
                    sc.designs[i],
                    sc.costs.costs[i],
                    nbrs,
                    [float(sc.digraph.weights[i, j]) for j in nbrs],
                )
            )
        object.__setattr__(self, "_agents", agents)
        object.__setattr__(self, "_r_idx", self.layout.indices("r").tolist())
        object.__setattr__(self, "_v_idx", self.layout.indices("v").tolist())

    def evaluate(self, s: NDArray[np.float64]) -> tuple[list[float], list[float]]:
        """Synchronous evaluation: every agent reads the same snapshot. Returns ``(ds, u)``."""
        vals = s.tolist()
        r_all = [vals[k] for k in self._r_idx]
        v_all = [vals[k] for k in self._v_idx]
        gains = self.scenario.gains
        full = self.scenario.mode == "full"
        out: list[float] = []
        inputs: list[float] = []
        for rhs, m, n, o, k, design, cost, nbrs, wts in self._agents:
            z = vals[o : o + m]
            x = vals[o + m : o + m + n]
            eta, theta, r, v = vals[o + m + n : o + m + n + 4]
            x_bar = list(x)
            x_bar[0] -= r
            zeta = zeta_of(x_bar, k)
            cs = ControllerState(eta, theta, r, v)
            nr = [r_all[j] for j in nbrs]
            nv = [v_all[j] for j in nbrs]
            if full:
                u, eta_dot, theta_dot, r_dot, v_dot = control_full(cs, zeta, design, nr, nv, wts, cost, gains)
            else:
                u, eta_dot, r_dot, v_dot = control_reduced(cs, zeta, design, nr, nv, wts, cost, gains)
                theta_dot = 0.0
            zd, xd = rhs(z, x, u)
            out.extend(zd)
            out.extend(xd)
            out.extend((eta_dot, theta_dot, r_dot, v_dot))
            inputs.append(u)
        return out, inputs

    def __call__(self, s: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.array(self.evaluate(s)[0])

    def inputs(self, s: NDArray[np.float64]) -> list[float]:
        return self.evaluate(s)[1]


@dataclass(frozen=True)
class Trajectory:
    times: NDArray[np.float64]
    states: NDArray[np.float64]
    outputs: NDArray[np.float64]
    inputs: NDArray[np.float64]
    layout: Layout

    def __post_init__(self) -> None:
        if self.times.ndim != 1 or len(self.times) == 0:
            raise ShapeError("trajectory needs a non-empty time vector")
        if np.any(np.diff(self.times) <= 0):
            raise ShapeError("trajectory times must be strictly increasing")
        for label in ("states", "outputs", "inputs"):
            arr = getattr(self, label)
            if len(arr) != len(self.times):
                raise ShapeError(f"{label} has {len(arr)} rows for {len(self.times)} times")
            if not np.isfinite(arr).all():
                raise DivergenceError(f"trajectory {label} contain non-finite entries")

    def part(self, name: str) -> NDArray[np.float64]:
        return self.states[:, self.layout.indices(name)]

    @property
    def r(self) -> NDArray[np.float64]:
        return self.part("r")

    @property
    def v(self) -> NDArray[np.float64]:
        return self.part("v")

    @property
    def theta(self) -> NDArray[np.float64]:
        return self.part("theta")

    @property
    def eta(self) -> NDArray[np.float64]:
        return self.part("eta")


@dataclass(frozen=True)
class ExpFit:
    rate: float
    r_squared: float


@dataclass(frozen=True)
class MetricsConfig:
    tol_out: float = 0.05
    equilibrium: GeneratorEquilibrium | None = None
    alpha: float | None = None
    vo_tol: float = 1e-9


@dataclass(frozen=True)
class RunReport:
    y_star: float
    final_output_errors: tuple[float, ...]
    max_state_norm: float
    theta_final: tuple[float, ...]
    exp_fit: ExpFit
    vo_monotone: bool | None
    v_sum_drift: float
    semistable: bool
    theta_monotone: bool = True
    feedforward_errors: tuple[float, ...] | None = None
    gains: GeneratorGains | None = None
    warnings: tuple[str, ...] = ()
    meta: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "y_star": self.y_star,
            "final_output_errors": list(self.final_output_errors),
            "max_state_norm": self.max_state_norm,
            "theta_final": list(self.theta_final),
            "exp_fit": {"rate": self.exp_fit.rate, "r_squared": self.exp_fit.r_squared},
            "vo_monotone": self.vo_monotone,
            "v_sum_drift": self.v_sum_drift,
            "semistable": self.semistable,
            "theta_monotone": self.theta_monotone,
            "feedforward_errors": None if self.feedforward_errors is None else list(self.feedforward_errors),
            "gains": None if self.gains is None else self.gains.to_json(),
            "warnings": list(self.warnings),
            "meta": dict(self.meta),
        }


def exp_fit(times: NDArray[np.float64], err: NDArray[np.float64], window: float = 0.5) -> ExpFit:
    """Least-squares line through ``log(err + 1e-15)`` over the final ``window`` fraction of time."""
    times = np.asarray(times, dtype=np.float64)
    t0 = times[0] + (1.0 - window) * (times[-1] - times[0])
    sel = times >= t0
    t = times[sel]
    y = np.log(np.asarray(err, dtype=np.float64)[sel] + LOG_FLOOR)
    if len(t) < 2:
        return ExpFit(0.0, 1.0)
    slope, intercept = np.polyfit(t, y, 1)
    resid = y - (slope * t + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    ss_res = float(np.sum(resid**2))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return ExpFit(float(slope), float(r2))


def vo_descent(values: NDArray[np.float64], tol: float = 1e-9) -> bool:
    return bool(np.all(np.diff(values) <= tol))


def compute_metrics(t: Trajectory, y_star: float, cfg: MetricsConfig = MetricsConfig()) -> RunReport:
    err = np.abs(t.outputs - y_star)
    final = tuple(float(e) for e in err[-1])
    norm = float(np.max(np.linalg.norm(t.states, axis=1)))
    theta = t.theta
    v = t.v
    v_sum = v.sum(axis=1)
    vo_ok = None
    if cfg.equilibrium is not None and cfg.alpha is not None and v.shape[1] >= 2:
        vo_ok = vo_descent(lyapunov_vo_series(t.r, v, cfg.equilibrium, cfg.alpha), cfg.vo_tol)
    return RunReport(
        y_star=float(y_star),
        final_output_errors=final,
        max_state_norm=norm,
        theta_final=tuple(float(x) for x in theta[-1]),
        exp_fit=exp_fit(t.times, err.max(axis=1)),
        vo_monotone=vo_ok,
        v_sum_drift=float(np.max(np.abs(v_sum - v_sum[0]))),
        semistable=bool(max(final) <= cfg.tol_out and math.isfinite(norm)),
        theta_monotone=bool(np.all(np.diff(theta, axis=0) >= 0.0)),
    )


def check_assumption(g: Digraph) -> None:
    rep = build_laplacian(g)
    if not rep.weight_balanced or not rep.strongly_connected:
        what = [s for s, ok in (("weight-balanced", rep.weight_balanced), ("strongly connected", rep.strongly_connected)) if not ok]
        raise AssumptionError(f"communication graph must be weight-balanced and strongly connected; it is not {' and not '.join(what)}")


def run_closed_loop(sc: Scenario) -> tuple[Trajectory, RunReport]:
    """Integrate plants, controllers and generators together and summarize the run."""
    check_assumption(sc.digraph)
    eq = generator_equilibrium(sc.costs, sc.digraph, sc.gains.alpha)
    layout = Layout.for_plants(sc.plants)
    loop = ClosedLoop(sc, layout)
    cfg = sc.integrator
    times, states = integrate(loop, initial_state(sc, layout), cfg.h, cfg.T, cfg.log_every)
    y_idx = layout.indices("y")
    inputs = np.array([loop.inputs(s) for s in states])
    traj = Trajectory(times, states, states[:, y_idx], inputs, layout)
    report = compute_metrics(traj, eq.y_star, MetricsConfig(sc.tol_out, eq, sc.gains.alpha))
    ff = []
    for p, u in zip(sc.plants, inputs[-1]):
        try:
            ff.append(abs(float(u) - p.u_star(eq.y_star)))
        except ConfigurationError:
            ff = None
            break
    meta = {"name": sc.name, "seed": sc.seed, "mode": sc.mode, "h": cfg.h, "T": cfg.T, "n_agents": sc.n_agents}
    report = replace(report, feedforward_errors=None if ff is None else tuple(ff), gains=sc.gains, warnings=sc.warnings, meta=meta)
    return traj, report


# ---------------------------------------------------------------------------
# generator on its own


@dataclass(frozen=True)
class GeneratorRun:
    times: NDArray[np.float64]
    r: NDArray[np.float64]
    v: NDArray[np.float64]
    equilibrium: GeneratorEquilibrium
    vo: NDArray[np.float64]


def simulate_generator(
    costs: CostEnsemble,
    g: Digraph,
    gains: GeneratorGains,
    r0: Sequence[float],
    v0: Sequence[float],
    h: float = 1e-3,
    T: float = 20.0,
    log_every: int = 10,
) -> GeneratorRun:
    """Integrate the bare generator and log its Lyapunov function."""
    check_assumption(g)
    lap = build_laplacian(g).laplacian
    n = g.n_nodes

    def f(s: NDArray[np.float64]) -> NDArray[np.float64]:
        r_dot, v_dot = generator_field_matrix(GeneratorState(s[:n], s[n:]), costs, lap, gains)
        return np.concatenate([r_dot, v_dot])

    times, states = integrate(f, np.concatenate([r0, v0]), h, T, log_every)
    eq = generator_equilibrium(costs, g, gains.alpha)
    r, v = states[:, :n], states[:, n:]
    return GeneratorRun(times, r, v, eq, lyapunov_vo_series(r, v, eq, gains.alpha))
