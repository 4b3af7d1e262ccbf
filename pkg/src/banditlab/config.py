"""Experiment configuration: flat key-value text with dotted sections.

Example::

    # regret sweep on the homogeneous pair
    instance.name = bernoulli
    instance.M = 4
    instance.means = 0.7, 0.5
    graph.name = complete
    policy.name = gossip_ucb
    policy.C = 2
    horizons = 4096, 8192, 16384
    seeds = 20
    master_seed = 7
    out = results/log_regime

A JSON file with the same content (nested sections or flat dotted keys) is
accepted as a mirror of the text format.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from banditlab import envs, graphs, policies

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "load_config",
    "parse_config_text",
    "resolve_instance",
    "resolve_graph",
    "resolve_policy",
    "round_to_multiple_of_4",
]

INSTANCE_ALIASES = {
    "thm4": "isolated_clique",
    "thm5": "latent_coin",
    "thm8": "epoch_adversary",
}


class ConfigError(ValueError):
    """Unresolvable or inconsistent experiment configuration."""


@dataclass
class ExperimentConfig:
    instance: dict
    graph: dict
    policy: dict
    horizons: list[int]
    seeds: list[int]
    master_seed: int = 0
    out: str | None = None
    figures: bool = True
    jobs: int = 1
    extras: dict = field(default_factory=dict)

    def validate(self) -> None:
        if not self.horizons:
            raise ConfigError("config needs at least one horizon")
        if any(b <= a for a, b in zip(self.horizons, self.horizons[1:])):
            raise ConfigError(f"horizons must be strictly increasing: {self.horizons}")
        if not self.seeds:
            raise ConfigError("config needs at least one seed")
        if "name" not in self.instance:
            raise ConfigError("missing instance.name")
        if "name" not in self.policy:
            raise ConfigError("missing policy.name")
        if "name" not in self.graph:
            raise ConfigError("missing graph.name")


def _parse_scalar(text: str):
    s = text.strip()
    low = s.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(s)
    except ValueError:
        pass
    try:
        return float(s)
    except ValueError:
        pass
    return s


def _parse_value(text: str):
    s = text.strip()
    if "," in s:
        return [_parse_scalar(p) for p in s.split(",") if p.strip()]
    return _parse_scalar(s)


def _flatten(obj, prefix: str = "") -> dict:
    out = {}
    for key, value in obj.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            out.update(_flatten(value, prefix=f"{name}."))
        else:
            out[name] = value
    return out


def parse_config_text(text: str) -> dict:
    """Parse the flat key-value format (or its JSON mirror) into dotted keys."""
    stripped = text.lstrip()
    if stripped.startswith("{"):
        try:
            return _flatten(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON config: {exc}") from exc
    out = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = line.split("=", 1)
        out[key.strip()] = _parse_value(value)
    return out


def _as_list(value) -> list:
    return value if isinstance(value, list) else [value]


def config_from_mapping(flat: dict) -> ExperimentConfig:
    instance, graph, policy, extras = {}, {}, {}, {}
    horizons: list[int] = []
    seeds: list[int] = []
    master_seed = 0
    out = None
    figures = True
    jobs = 1
    for key, value in flat.items():
        if key.startswith("instance."):
            instance[key.split(".", 1)[1]] = value
        elif key.startswith("graph."):
            graph[key.split(".", 1)[1]] = value
        elif key.startswith("policy."):
            policy[key.split(".", 1)[1]] = value
        elif key == "horizons":
            horizons = [int(v) for v in _as_list(value)]
        elif key == "seeds":
            v = _as_list(value)
            # A single integer means a seed count; a list means explicit indices.
            seeds = list(range(int(v[0]))) if len(v) == 1 else [int(x) for x in v]
        elif key == "master_seed":
            master_seed = int(value)
        elif key == "out":
            out = str(value)
        elif key == "figures":
            figures = bool(value)
        elif key == "jobs":
            jobs = int(value)
        else:
            extras[key] = value
    cfg = ExperimentConfig(
        instance=instance,
        graph=graph,
        policy=policy,
        horizons=horizons,
        seeds=seeds,
        master_seed=master_seed,
        out=out,
        figures=figures,
        jobs=jobs,
        extras=extras,
    )
    cfg.validate()
    return cfg


def load_config(path) -> ExperimentConfig:
    return config_from_mapping(parse_config_text(Path(path).read_text()))


def round_to_multiple_of_4(x: float) -> int:
    """Nearest positive multiple of 4 (used by the auto client-count rule)."""
    return max(4, 4 * round(x / 4))


def _instance_M(spec: dict, T: int) -> int:
    m = spec.get("M")
    if m in ("auto", None):
        return round_to_multiple_of_4(T ** (1.0 / 3.0))
    return int(m)


def resolve_instance(spec: dict, T: int):
    """Build the instance (or deferred spec) named by the config for horizon T.

    Adversarial instances are rebuilt per horizon because their advantage
    schedule depends on T; `instance.M = auto` applies the
    round-to-multiple-of-4(T^(1/3)) client-count rule.
    """
    name = INSTANCE_ALIASES.get(str(spec.get("name")), str(spec.get("name")))
    try:
        if name == "isolated_clique":
            return envs.make_isolated_clique_instance(
                M=int(spec["M"]),
                Q=int(spec["Q"]),
                delta=float(spec["delta"]),
                K=int(spec.get("K", 2)),
            )
        if name == "latent_coin":
            return envs.latent_coin_spec(M=int(spec["M"]), Q=int(spec["Q"]))
        if name == "epoch_adversary":
            eps = spec.get("epsilon")
            return envs.make_epoch_adversary_instance(
                M=_instance_M(spec, T),
                T=T,
                eta=float(spec.get("eta", 4.0)),
                epsilon=None if eps is None else float(eps),
            )
        if name == "bernoulli":
            return envs.make_bernoulli_instance(
                M=int(spec["M"]), arm_means=[float(v) for v in _as_list(spec["means"])]
            )
        if name == "custom":
            return envs.load_means_instance(
                spec["path"], kind=str(spec.get("kind", "bernoulli"))
            )
    except KeyError as exc:
        raise ConfigError(f"instance {name!r} missing parameter {exc}") from exc
    except envs.InstanceError as exc:
        raise ConfigError(f"instance {name!r}: {exc}") from exc
    raise ConfigError(f"unknown instance preset {spec.get('name')!r}")


def resolve_graph(spec: dict, instance):
    """Build the graph model named by the config, defaulting M to the instance's."""
    name = str(spec.get("name"))
    M = int(spec.get("M", instance.M))
    if M != instance.M:
        raise ConfigError(f"graph M={M} does not match instance M={instance.M}")
    try:
        if name == "auto":
            if isinstance(instance, envs.EpochAdversaryInstance):
                g, _, _ = graphs.make_two_expander_graph(M, float(instance.eta))
                return graphs.StaticGraph(g)
            raise ConfigError("graph.name = auto only applies to epoch_adversary")
        if name == "complete":
            return graphs.StaticGraph(graphs.make_complete_graph(M))
        if name == "path":
            return graphs.StaticGraph(graphs.make_path_graph(M))
        if name == "disconnected_clique":
            return graphs.StaticGraph(
                graphs.make_disconnected_clique_graph(M, int(spec["Q"]))
            )
        if name == "two_expander":
            g, _, _ = graphs.make_two_expander_graph(M, float(spec.get("eta", 4.0)))
            return graphs.StaticGraph(g)
        if name == "er":
            return graphs.ErdosRenyiModel(M, float(spec["c"]))
        if name == "random_connected":
            return graphs.RandomConnectedModel(M, float(spec["c"]))
    except KeyError as exc:
        raise ConfigError(f"graph {name!r} missing parameter {exc}") from exc
    except graphs.GraphError as exc:
        raise ConfigError(f"graph {name!r}: {exc}") from exc
    raise ConfigError(f"unknown graph {spec.get('name')!r}")


def resolve_policy(spec: dict) -> policies.Policy:
    name = str(spec.get("name"))
    params = {k: v for k, v in spec.items() if k != "name"}
    try:
        return policies.make_policy(name, **params)
    except policies.PolicyError as exc:
        raise ConfigError(str(exc)) from exc


def describe_config(cfg: ExperimentConfig) -> dict:
    """JSON-ready echo of the resolved configuration."""
    return {
        "instance": dict(cfg.instance),
        "graph": dict(cfg.graph),
        "policy": dict(cfg.policy),
        "horizons": list(cfg.horizons),
        "seeds": list(cfg.seeds),
        "master_seed": cfg.master_seed,
    }


def check_feasible(cfg: ExperimentConfig) -> None:
    """Eagerly resolve every horizon so constraint violations surface up front."""
    for T in cfg.horizons:
        inst = resolve_instance(cfg.instance, T)
        resolve_graph(cfg.graph, inst)
    resolve_policy(cfg.policy)
    if any(not (isinstance(T, int) and T >= 1 and math.isfinite(T)) for T in cfg.horizons):
        raise ConfigError(f"invalid horizons {cfg.horizons}")
