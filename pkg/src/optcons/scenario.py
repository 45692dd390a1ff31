"""Scenario files: one JSON document with graph, costs, plants, controller and integrator.

Randomness (uncertain parameters and initial conditions) is drawn from a single
run seed, so a scenario plus a seed pins down a run bit for bit.
"""

from __future__ import annotations

import copy
import json
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .controller import chain_design, check_design, design_from_json, reduced_design_from_json
from .costs import CostEnsemble, cost_from_json, make_ensemble
from .errors import ConfigurationError, ScenarioParseError
from .generator import check_gains, select_gains
from .graph import Digraph, build_laplacian
from .plants import Plant, manipulator_chain_state, plant_from_json
from .sim import AgentInit, IntegratorConfig, Scenario, check_assumption

DEFAULT_BOX = 2.0
SHIPPED = ("example1", "example2", "generator_only", "example1_reduced")


def load_json(path: str | Path) -> dict:
    """Read a scenario; parse failures carry the line and column."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ScenarioParseError(f"cannot read scenario {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise ScenarioParseError(f"{path}: top level must be a JSON object")
    return data


def shipped_scenario(name: str) -> dict:
    """One of the bundled scenario documents, by name."""
    if name not in SHIPPED:
        raise ScenarioParseError(f"no shipped scenario {name!r}; choose from {', '.join(SHIPPED)}")
    text = resources.files("optcons.scenarios").joinpath(f"{name}.json").read_text()
    return json.loads(text)


def resolve_source(spec: str | Path) -> dict:
    """Accept a path, or the bare name of a shipped scenario."""
    if isinstance(spec, str) and spec in SHIPPED and not Path(spec).exists():
        return shipped_scenario(spec)
    return load_json(spec)


def apply_overrides(doc: Mapping[str, Any], overrides: list[str] | None) -> dict:
    """Apply ``dotted.path=value`` overrides; values parse as JSON, falling back to strings."""
    out = copy.deepcopy(dict(doc))
    for item in overrides or []:
        if "=" not in item:
            raise ScenarioParseError(f"override {item!r} is not of the form key=value")
        key, raw = item.split("=", 1)
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node: Any = out
        parts = key.strip().split(".")
        for part in parts[:-1]:
            if isinstance(node, list):
                node = node[int(part)]
            else:
                if not isinstance(node.get(part), (dict, list)):
                    node[part] = {}
                node = node[part]
        last = parts[-1]
        if isinstance(node, list):
            node[int(last)] = value
        else:
            node[last] = value
    return out


def _per_agent(value: Any, n: int, label: str) -> list:
    if isinstance(value, list):
        if len(value) != n:
            raise ConfigurationError(f"{label} has {len(value)} entries for {n} agents")
        return value
    return [value] * n


def _box(initial: Mapping[str, Any], part: str) -> float:
    boxes = initial.get("boxes", {})
    return float(boxes.get(part, initial.get("box", DEFAULT_BOX)))


def _initial_conditions(doc: Mapping[str, Any], plants: list[Plant], rng: np.random.Generator) -> list[AgentInit]:
    """Draw initial states uniformly from per-component boxes, then apply explicit values.

    ``initial.coordinates = "physical"`` draws manipulators in ``(q1, q1', q2, q2')``
    and maps them to the chain coordinates.
    """
    initial = doc.get("initial", {})
    theta0 = float(doc.get("controller", {}).get("theta0", 0.0))
    coords = initial.get("coordinates", "chain")
    values = initial.get("values") or [{}] * len(plants)
    if len(values) != len(plants):
        raise ConfigurationError(f"initial.values has {len(values)} entries for {len(plants)} agents")
    out = []
    for p, given in zip(plants, values):
        bz, bx, be, br, bv = (_box(initial, k) for k in ("z", "x", "eta", "r", "v"))
        # draw order is fixed so that explicit values never shift the random stream
        z = rng.uniform(-bz, bz, p.m)
        x = rng.uniform(-bx, bx, p.n)
        q = rng.uniform(-bx, bx, 4)
        eta, r, v = rng.uniform(-be, be), rng.uniform(-br, br), rng.uniform(-bv, bv)
        if p.name == "manipulator" and (coords == "physical" or "q" in given):
            x = np.array(manipulator_chain_state(p, given.get("q", q)))
        if "z" in given:
            z = np.asarray(given["z"], dtype=float)
        if "x" in given:
            x = np.asarray(given["x"], dtype=float)
        out.append(
            AgentInit(
                z=tuple(float(c) for c in z),
                x=tuple(float(c) for c in x),
                eta=float(given.get("eta", eta)),
                theta=float(given.get("theta", theta0)),
                r=float(given.get("r", r)),
                v=float(given.get("v", v)),
            )
        )
    return out


def build_agents(doc: Mapping[str, Any], seed: int) -> tuple[Digraph, list[Plant], list[AgentInit], CostEnsemble]:
    """Graph, plants (with their sampled ``w``), initial states and the cost ensemble."""
    try:
        graph = Digraph.from_json(doc["graph"])
        n = graph.n_nodes
        plant_docs = _per_agent(doc["plants"], n, "plants")
        cost_docs = _per_agent(doc["costs"], n, "costs")
    except KeyError as exc:
        raise ConfigurationError(f"scenario is missing required field {exc}") from exc
    root = np.random.SeedSequence(seed)
    plant_seq, ic_seq = root.spawn(2)
    plant_seeds = plant_seq.generate_state(n).tolist()
    plants = [plant_from_json(pd, [int(plant_seeds[i]), i]) for i, pd in enumerate(plant_docs)]
    inits = _initial_conditions(doc, plants, np.random.default_rng(ic_seq))
    costs = make_ensemble([cost_from_json(cd, initial_output=ic.x[0]) for cd, ic in zip(cost_docs, inits)])
    return graph, plants, inits, costs


def build_scenario(doc: Mapping[str, Any], seed: int | None = None) -> Scenario:
    """Instantiate a scenario document for one seed (defaults to the document's ``seed``)."""
    if seed is None:
        seed = int(doc.get("seed", 0))
    graph, plants, inits, costs = build_agents(doc, seed)
    check_assumption(graph)
    n = graph.n_nodes

    ctrl = doc.get("controller", {})
    mode = ctrl.get("mode", "full")
    designs = [design_from_json(d) for d in _per_agent(ctrl.get("design", "example1"), n, "controller.design")]
    if mode == "reduced":
        designs = [reduced_design_from_json(ctrl.get("reduced"), d.kappa) for d in designs]
    for d in designs:
        check_design(d)
    k_doc = ctrl.get("k")
    # a flat list of numbers is one design shared by every agent
    if isinstance(k_doc, list) and all(isinstance(c, (int, float)) for c in k_doc):
        k_doc = [k_doc] * n
    ks = _per_agent(k_doc, n, "controller.k")
    poles = _per_agent(ctrl.get("pole", 1.0), n, "controller.pole")
    chains = [chain_design(p.n, k, float(pole)) for p, k, pole in zip(plants, ks, poles)]

    rep = build_laplacian(graph)
    warnings: list[str] = []
    gains_doc = doc.get("gains", "auto")
    if gains_doc == "auto":
        gains = select_gains(costs.l_lower, costs.l_upper, rep.lambda2, rep.lambdaN)
    elif isinstance(gains_doc, Mapping):
        gains = check_gains(
            float(gains_doc["alpha"]), float(gains_doc["beta"]), costs.l_lower, costs.l_upper, rep.lambda2, rep.lambdaN
        )
        if gains.below_bound:
            auto = select_gains(costs.l_lower, costs.l_upper, rep.lambda2, rep.lambdaN)
            warnings.append(
                f"gains alpha={gains.alpha:g}, beta={gains.beta:g} are below the sufficient bound "
                f"(alpha>={auto.alpha:g}, beta>={auto.beta:g})"
            )
    else:
        raise ConfigurationError(f"gains must be 'auto' or {{'alpha': .., 'beta': ..}}, got {gains_doc!r}")

    integ = doc.get("integrator", {})
    return Scenario(
        digraph=graph,
        costs=costs,
        plants=tuple(plants),
        designs=tuple(designs),
        chains=tuple(chains),
        gains=gains,
        initial=tuple(inits),
        integrator=IntegratorConfig(
            h=float(integ.get("h", 1e-3)), T=float(integ.get("T", 30.0)), log_every=int(integ.get("log_every", 100))
        ),
        mode=mode,
        tol_out=float(doc.get("metrics", {}).get("tol_out", 0.05)),
        name=str(doc.get("name", "scenario")),
        seed=seed,
        warnings=tuple(warnings),
    )
