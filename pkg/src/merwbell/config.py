"""Experiment files (JSON).

Example::

    {
      "label": "mermin-standard",
      "graph": "standard",
      "start": {"site": "101"},
      "mode": "exact",
      "steps": 5,
      "sampler": {"seed": 7, "samples": 100000, "workers": 1},
      "output": {"format": "text", "path": null}
    }

``graph`` is ``"standard"``, ``{"kind": "full_cube", "n": 3}`` or
``{"kind": "explicit", "edges": [["110", "100"], ...], "self_loops": [...],
"ordering": [...]}`` (ordering optional).  ``start`` is ``{"site": "101"}``,
``{"index": 4}`` or ``{"counts": [0, 0, 0, 1, 0, 0, 0, 0]}``.  Unknown keys are
errors.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .measurement import MeasurementError, MeasurementPair
from .montecarlo import SamplerConfig
from .statespace import (
    SiteOrdering,
    StateSpaceError,
    WalkConfig,
    build_full_cube,
    build_graph_from_states,
    build_standard_graph,
    default_ordering,
)

FORMATS = ("text", "json", "csv")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentFile:
    walk: WalkConfig
    mode: str = "exact"
    steps: int = 5
    pairs: tuple | None = None
    sampler: SamplerConfig = field(default_factory=SamplerConfig)
    output_format: str = "text"
    output_path: str | None = None

    @property
    def graph(self):
        return self.walk.graph

    @property
    def label(self) -> str:
        return self.walk.label


def _only(block: dict, allowed: set, where: str):
    if not isinstance(block, dict):
        raise ConfigError(f"{where}: expected an object")
    extra = set(block) - allowed
    if extra:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(sorted(extra))}")


def _graph(spec):
    if spec == "standard":
        return build_standard_graph()
    _only(spec, {"kind", "n", "edges", "self_loops", "ordering"}, "graph")
    kind = spec.get("kind", "explicit")
    ordering = SiteOrdering(tuple(spec["ordering"])) if "ordering" in spec else None
    if kind == "standard":
        return build_standard_graph()
    if kind == "full_cube":
        n = int(spec.get("n", 3))
        return build_full_cube(n, ordering)
    if kind != "explicit":
        raise ConfigError(f"graph: unknown kind {kind!r}")
    edges = spec.get("edges", [])
    loops = spec.get("self_loops", [])
    if ordering is None and "n" in spec:
        ordering = default_ordering(int(spec["n"]))
    if any(len(e) != 2 for e in edges):
        raise ConfigError("graph: each edge is a pair of bit-strings")
    return build_graph_from_states(edges, loops, ordering)


def _start(spec, graph):
    _only(spec, {"site", "index", "counts"}, "start")
    if len(spec) != 1:
        raise ConfigError("start: give exactly one of site, index, counts")
    if "site" in spec:
        return graph.index(spec["site"])
    if "index" in spec:
        return int(spec["index"])
    return tuple(int(c) for c in spec["counts"])


def parse_experiment(data: dict) -> ExperimentFile:
    _only(data, {"label", "graph", "start", "mode", "steps", "pairs", "sampler", "output"}, "experiment")
    try:
        graph = _graph(data.get("graph", "standard"))
        start = _start(data.get("start", {"site": "101"}), graph)
        walk = WalkConfig(graph, start, str(data.get("label", "")))
        mode = data.get("mode", "exact")
        if mode not in ("exact", "float"):
            raise ConfigError(f"mode must be exact or float, not {mode!r}")
        steps = int(data.get("steps", 5))
        if steps < 0:
            raise ConfigError("steps must be >= 0")
        pairs = data.get("pairs")
        if pairs is not None:
            pairs = tuple(MeasurementPair.parse(p) for p in pairs)
            for p in pairs:
                p.check(graph.n)
        sblock = data.get("sampler", {})
        _only(sblock, {"seed", "samples", "workers"}, "sampler")
        sampler = SamplerConfig(**{k: int(v) for k, v in sblock.items()})
        oblock = data.get("output", {})
        _only(oblock, {"format", "path"}, "output")
        fmt = oblock.get("format", "text")
        if fmt not in FORMATS:
            raise ConfigError(f"output.format must be one of {FORMATS}")
    except (StateSpaceError, MeasurementError, KeyError, TypeError) as exc:
        raise ConfigError(str(exc)) from exc
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    return ExperimentFile(walk, mode, steps, pairs, sampler, fmt, oblock.get("path"))


def load_experiment(path) -> ExperimentFile:
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return parse_experiment(data)
