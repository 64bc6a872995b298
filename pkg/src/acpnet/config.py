"""Scenario files: YAML text validated into a runnable Scenario.

Unknown keys are rejected, and every error names the offending key and the
line it sits on.
"""
from __future__ import annotations

import dataclasses
from pathlib import Path
from typing import Literal

import yaml
from pydantic import (BaseModel, ConfigDict, Field, ValidationError, ValidationInfo, create_model,
                      field_validator, model_validator)

from .params import Params
from .resource import ForwardingTable
from .scenario import Scenario, TrafficPhase
from .topology import BUILTIN, Topology
from .traffic import TrafficMatrix, bottleneck_pairs, four_hop_pairs, sample_pairs


class ConfigError(ValueError):
    pass


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", coerce_numbers_to_str=True)


class TopologyConfig(_Strict):
    builtin: Literal["two_node", "bottleneck20", "as_graph"] | None = None
    options: dict[str, float] = Field(default_factory=dict)
    nodes: list[str] | None = None
    links: list[tuple[str, str, float]] | None = None

    @model_validator(mode="after")
    def _one_source(self):
        explicit = self.nodes is not None or self.links is not None
        if (self.builtin is None) == (not explicit):
            raise ValueError("give either builtin or an explicit nodes/links list")
        if explicit and (self.nodes is None or self.links is None):
            raise ValueError("explicit topologies need both nodes and links")
        if explicit and self.options:
            raise ValueError("options only apply to builtin topologies")
        return self


class TrafficConfig(_Strict):
    active_from_s: float = Field(0.0, ge=0)
    generator: Literal["uniform", "bottleneck", "four_hop"] | None = None
    pairs: list[tuple[str, str] | tuple[str, str, float]] | None = None
    initiators: list[str] | None = None
    responders: list[str] | None = None
    count: int | None = Field(None, ge=1)
    sample_seed: int = 0

    @model_validator(mode="after")
    def _one_source(self):
        if (self.generator is None) == (self.pairs is None):
            raise ValueError("give either generator or pairs")
        if self.generator == "bottleneck" and not (self.initiators and self.responders):
            raise ValueError("the bottleneck generator needs initiators and responders")
        return self


def _params_model() -> type[BaseModel]:
    kinds = {"int": int, "float": float, "list[float]": list[float]}
    fields = {f.name: (kinds[f.type] | None, None) for f in dataclasses.fields(Params)}
    return create_model("ParamsConfig", __base__=_Strict, **fields)


ParamsConfig = _params_model()


class ScenarioConfig(_Strict):
    topology: TopologyConfig
    strategy: Literal["odo", "ucp", "acp"]
    purification: bool = False
    selection_policy: Literal["freshest", "random"] = "freshest"
    seed: int = 0
    duration_s: float = Field(100.0, gt=0)
    arrival_rate_hz: float = Field(10.0, gt=0)
    summary_window_s: float = Field(5.0, gt=0)
    traffic: list[TrafficConfig] = Field(default_factory=lambda: [TrafficConfig(generator="uniform")],
                                         min_length=1)
    params: ParamsConfig = Field(default_factory=ParamsConfig)

    @field_validator("purification")
    @classmethod
    def _odo_has_no_purification(cls, value: bool, info: ValidationInfo) -> bool:
        if value and info.data.get("strategy") == "odo":
            raise ValueError("the odo strategy cannot enable purification")
        return value


def _line_of(node: yaml.Node | None, loc: tuple) -> int | None:
    """Line (1-based) of the deepest YAML node reachable along a pydantic error location."""
    line = node.start_mark.line + 1 if node is not None else None
    for part in loc:
        if isinstance(node, yaml.MappingNode):
            nxt = None
            for k, v in node.value:
                if k.value == part:
                    line, nxt = k.start_mark.line + 1, v
                    break
            if nxt is None:
                break
            node = nxt
        elif isinstance(node, yaml.SequenceNode) and isinstance(part, int) and part < len(node.value):
            node = node.value[part]
            line = node.start_mark.line + 1
        else:
            break
    return line


def _format(path: Path, line: int | None, key: str, msg: str) -> str:
    where = f"{path}:{line}" if line else str(path)
    return f"{where}: {key}: {msg}" if key else f"{where}: {msg}"


def _build_topology(cfg: TopologyConfig, params: Params) -> Topology:
    if cfg.builtin is None:
        return Topology("custom", list(cfg.nodes), [tuple(x) for x in cfg.links])
    opts = {k: int(v) if float(v).is_integer() and k != "km" else v for k, v in cfg.options.items()}
    opts.setdefault("km", params.link_distance_km)
    return BUILTIN[cfg.builtin](**opts)


def _build_matrix(cfg: TrafficConfig, topo: Topology, routing: ForwardingTable) -> TrafficMatrix:
    if cfg.pairs is not None:
        return TrafficMatrix.from_pairs(topo.nodes, cfg.pairs)
    if cfg.generator == "uniform":
        return TrafficMatrix.uniform(topo.nodes)
    if cfg.generator == "bottleneck":
        return TrafficMatrix.from_pairs(topo.nodes, bottleneck_pairs(cfg.initiators, cfg.responders))
    pairs = four_hop_pairs(routing, topo.nodes)
    if not pairs:
        raise ValueError("no node pair is exactly four links apart")
    if cfg.count is not None:
        pairs = sample_pairs(pairs, cfg.count, cfg.sample_seed)
    return TrafficMatrix.from_pairs(topo.nodes, pairs)


def parse_config(text: str, path: Path | str = "<string>", seed: int | None = None) -> Scenario:
    path = Path(path)
    try:
        root = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        raise ConfigError(_format(path, mark.line + 1 if mark else None, "", f"not valid YAML ({exc})")) from None
    if not isinstance(data, dict):
        raise ConfigError(_format(path, None, "", "the scenario file must be a mapping"))
    try:
        cfg = ScenarioConfig.model_validate(data)
    except ValidationError as exc:
        err = exc.errors()[0]
        loc = tuple(x for x in err["loc"] if not (isinstance(x, str) and "[" in x))
        msg = err["msg"].removeprefix("Value error, ")
        key = ".".join(str(x) for x in loc)
        raise ConfigError(_format(path, _line_of(root, loc), key, msg)) from None

    params = Params(**cfg.params.model_dump(exclude_none=True))
    try:
        topo = _build_topology(cfg.topology, params)
    except (TypeError, ValueError) as exc:
        raise ConfigError(_format(path, _line_of(root, ("topology",)), "topology", str(exc))) from None
    adjacency: dict[str, dict[str, float]] = {n: {} for n in topo.nodes}
    for u, v, km in topo.links:
        adjacency[u][v] = adjacency[v][u] = km
    routing = ForwardingTable(adjacency)
    phases = []
    for i, tc in enumerate(cfg.traffic):
        try:
            phases.append(TrafficPhase(_build_matrix(tc, topo, routing), tc.active_from_s))
        except ValueError as exc:
            raise ConfigError(_format(path, _line_of(root, ("traffic", i)), f"traffic.{i}", str(exc))) from None

    return Scenario(topology=topo, traffic=phases, strategy=cfg.strategy, purification=cfg.purification,
                    selection_policy=cfg.selection_policy, duration_s=cfg.duration_s,
                    arrival_rate_hz=cfg.arrival_rate_hz,
                    seed=cfg.seed if seed is None else seed, params=params,
                    summary_window_s=cfg.summary_window_s)


def load_config(path: Path | str, seed: int | None = None) -> Scenario:
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"{path}: no such scenario file")
    return parse_config(path.read_text(), path, seed)


def params_echo(sc: Scenario) -> dict:
    """Everything a run depends on, in a form that can be dumped as JSON."""
    return {
        "topology": {"name": sc.topology.name, "nodes": len(sc.topology.nodes),
                     "links": len(sc.topology.links)},
        "strategy": sc.strategy,
        "purification": sc.purification,
        "selection_policy": sc.selection_policy,
        "seed": sc.seed,
        "duration_s": sc.duration_s,
        "arrival_rate_hz": sc.arrival_rate_hz,
        "summary_window_s": sc.summary_window_s,
        "traffic": [{"active_from_s": ph.active_from_s,
                     "pairs": [[a, b, round(w, 12)] for a, b, w in ph.matrix.pairs()]}
                    for ph in sc.traffic],
        "params": sc.params.to_dict(),
    }
