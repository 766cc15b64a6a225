"""Experiment configuration: strict JSON schema with field-path diagnostics.

Unknown keys are rejected anywhere in the document so a silently misspelled
option cannot change an experiment.  Matrices may be given inline (row-major
nested lists) or generated from a named distribution plus seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from .problems import BilinearSaddle, VIProblem, finite_sum_bilinear, saddle_to_vi, \
    strongly_monotone_problem
from .solvers import MethodConfig, QuadraticObjective, QuarticObjective, StochasticObjective


class ConfigError(ValueError):
    """Configuration problem; the message names the offending field."""


def _ctx(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _reject_unknown(block: dict, allowed, path: str):
    for key in block:
        if key not in allowed:
            raise ConfigError(f"unknown key '{_ctx(path, key)}' (allowed: {sorted(allowed)})")


def _need(block: dict, key: str, path: str):
    if key not in block:
        raise ConfigError(f"missing required key '{_ctx(path, key)}'")
    return block[key]


def _num(block: dict, key: str, path: str, default=None, required=False,
         minimum=None, strict_min=None, integer=False):
    if key not in block:
        if required:
            raise ConfigError(f"missing required key '{_ctx(path, key)}'")
        return default
    v = block[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"'{_ctx(path, key)}' must be a number, got {v!r}")
    if integer and int(v) != v:
        raise ConfigError(f"'{_ctx(path, key)}' must be an integer, got {v!r}")
    if minimum is not None and v < minimum:
        raise ConfigError(f"'{_ctx(path, key)}' must be >= {minimum}, got {v}")
    if strict_min is not None and v <= strict_min:
        raise ConfigError(f"'{_ctx(path, key)}' must be > {strict_min}, got {v}")
    return int(v) if integer else float(v)


def _bool(block: dict, key: str, path: str, default=False):
    v = block.get(key, default)
    if not isinstance(v, bool):
        raise ConfigError(f"'{_ctx(path, key)}' must be true or false, got {v!r}")
    return v


PROBLEM_KINDS = ("bilinear", "strongly_monotone_vi", "nonconvex")
METHOD_NAMES = ("seg_same", "seg_independent", "sgda", "momentum_eg", "kstep_eg", "implicit")


@dataclass
class OutputConfig:
    directory: str = "out"
    checkpoint_stride: int = 0  # 0 = automatic policy
    formats: tuple = ("csv", "jsonl")

    def to_dict(self) -> dict:
        return {"directory": self.directory, "checkpoint_stride": self.checkpoint_stride,
                "formats": list(self.formats)}


@dataclass
class ExperimentConfig:
    problem: dict
    methods: list
    seeds: list
    output: OutputConfig = field(default_factory=OutputConfig)

    def to_dict(self) -> dict:
        return {
            "problem": self.problem,
            "methods": [
                {"method": m.method.value, "eta1": m.eta1, "eta2": m.eta2,
                 "beta1": m.beta1, "beta2": m.beta2, "k": m.k, "seed": m.seed,
                 "iterations": m.iterations, "averaging": m.averaging}
                for m in self.methods
            ],
            "seeds": {"list": list(self.seeds)},
            "output": self.output.to_dict(),
        }


def _parse_problem(block, path="problem") -> dict:
    if not isinstance(block, dict):
        raise ConfigError(f"'{path}' must be an object")
    _reject_unknown(block, {"kind", "generator", "matrix"}, path)
    kind = _need(block, "kind", path)
    if kind not in PROBLEM_KINDS:
        raise ConfigError(f"'{path}.kind' must be one of {PROBLEM_KINDS}, got {kind!r}")
    if "matrix" in block:
        if kind != "bilinear":
            raise ConfigError(f"'{path}.matrix' is only valid for kind 'bilinear'")
        mpath = f"{path}.matrix"
        mat = block["matrix"]
        if not isinstance(mat, dict):
            raise ConfigError(f"'{mpath}' must be an object")
        _reject_unknown(mat, {"B", "a", "b"}, mpath)
        B = np.asarray(_need(mat, "B", mpath), dtype=float)
        if B.ndim != 2 or B.shape[0] != B.shape[1]:
            raise ConfigError(f"'{mpath}.B' must be a square row-major matrix")
        return dict(block)
    gen = _need(block, "generator", path)
    gpath = f"{path}.generator"
    if not isinstance(gen, dict):
        raise ConfigError(f"'{gpath}' must be an object")
    if kind == "bilinear":
        _reject_unknown(gen, {"name", "m", "n", "seed", "scale", "noise_at_optimum",
                              "noise_scale"}, gpath)
        if gen.get("name", "gaussian") != "gaussian":
            raise ConfigError(f"'{gpath}.name' must be 'gaussian'")
        _num(gen, "m", gpath, required=True, integer=True, minimum=1)
        _num(gen, "n", gpath, required=True, integer=True, minimum=1)
        _num(gen, "seed", gpath, required=True, integer=True)
        _num(gen, "scale", gpath, default=1.0, strict_min=0.0)
        _bool(gen, "noise_at_optimum", gpath)
        _num(gen, "noise_scale", gpath, default=1.0, minimum=0.0)
    elif kind == "strongly_monotone_vi":
        _reject_unknown(gen, {"name", "d", "n", "mu", "noise", "seed", "psd_scale",
                              "skew_scale"}, gpath)
        if gen.get("name", "gaussian") != "gaussian":
            raise ConfigError(f"'{gpath}.name' must be 'gaussian'")
        _num(gen, "d", gpath, required=True, integer=True, minimum=1)
        _num(gen, "n", gpath, required=True, integer=True, minimum=1)
        _num(gen, "mu", gpath, required=True, minimum=0.0)
        _num(gen, "noise", gpath, default=0.0, minimum=0.0)
        _num(gen, "seed", gpath, required=True, integer=True)
        _num(gen, "psd_scale", gpath, default=1.0, minimum=0.0)
        _num(gen, "skew_scale", gpath, default=1.0, minimum=0.0)
    else:
        _reject_unknown(gen, {"family", "d", "n", "noise", "seed"}, gpath)
        family = _need(gen, "family", gpath)
        if family not in ("quadratic", "quartic"):
            raise ConfigError(f"'{gpath}.family' must be 'quadratic' or 'quartic'")
        _num(gen, "d", gpath, required=True, integer=True, minimum=1)
        _num(gen, "n", gpath, required=True, integer=True, minimum=1)
        _num(gen, "noise", gpath, default=0.0, minimum=0.0)
        _num(gen, "seed", gpath, required=True, integer=True)
    return dict(block)


def _parse_method(block, path) -> MethodConfig:
    if not isinstance(block, dict):
        raise ConfigError(f"'{path}' must be an object")
    _reject_unknown(block, {"method", "eta1", "eta2", "beta1", "beta2", "k", "seed",
                            "iterations", "averaging"}, path)
    name = _need(block, "method", path)
    if name not in METHOD_NAMES:
        raise ConfigError(f"'{path}.method' must be one of {METHOD_NAMES}, got {name!r}")
    eta1 = _num(block, "eta1", path, required=True, strict_min=0.0)
    eta2 = _num(block, "eta2", path, default=None)
    if eta2 is not None and eta2 <= 0:
        raise ConfigError(f"'{path}.eta2' must be > 0, got {eta2}")
    beta1 = _num(block, "beta1", path, default=0.0)
    beta2 = _num(block, "beta2", path, default=0.0)
    for bname, b in (("beta1", beta1), ("beta2", beta2)):
        if not (-1.0 < b < 1.0):
            raise ConfigError(f"'{path}.{bname}' must lie in (-1, 1), got {b}")
    k = _num(block, "k", path, default=1, integer=True, minimum=1)
    seed = _num(block, "seed", path, default=0, integer=True)
    iterations = _num(block, "iterations", path, default=1000, integer=True, minimum=0)
    averaging = _bool(block, "averaging", path)
    return MethodConfig(method=name, eta1=eta1, eta2=eta2, beta1=beta1, beta2=beta2,
                        k=k, seed=seed, iterations=iterations, averaging=averaging)


def _parse_seeds(block, methods, path="seeds") -> list:
    if block is None:
        return sorted({m.seed for m in methods}) or [0]
    if not isinstance(block, dict):
        raise ConfigError(f"'{path}' must be an object")
    _reject_unknown(block, {"list", "base", "count"}, path)
    if "list" in block:
        if "base" in block or "count" in block:
            raise ConfigError(f"'{path}' takes either 'list' or 'base'+'count', not both")
        seeds = block["list"]
        if (not isinstance(seeds, list) or not seeds
                or not all(isinstance(s, int) and not isinstance(s, bool) for s in seeds)):
            raise ConfigError(f"'{path}.list' must be a non-empty list of integers")
        return list(seeds)
    base = _num(block, "base", path, required=True, integer=True)
    count = _num(block, "count", path, required=True, integer=True, minimum=1)
    return [base + i for i in range(count)]


def _parse_output(block, path="output") -> OutputConfig:
    if block is None:
        return OutputConfig()
    if not isinstance(block, dict):
        raise ConfigError(f"'{path}' must be an object")
    _reject_unknown(block, {"directory", "checkpoint_stride", "formats"}, path)
    directory = block.get("directory", "out")
    if not isinstance(directory, str):
        raise ConfigError(f"'{path}.directory' must be a string")
    stride = _num(block, "checkpoint_stride", path, default=0, integer=True, minimum=0)
    formats = block.get("formats", ["csv", "jsonl"])
    if (not isinstance(formats, list) or not formats
            or any(f not in ("csv", "jsonl") for f in formats)):
        raise ConfigError(f"'{path}.formats' entries must be 'csv' or 'jsonl'")
    return OutputConfig(directory=directory, checkpoint_stride=stride,
                        formats=tuple(formats))


def parse_config(doc: Union[str, dict]) -> ExperimentConfig:
    """Parse and validate an experiment config from a JSON string or dict."""
    if isinstance(doc, str):
        try:
            doc = json.loads(doc)
        except json.JSONDecodeError as e:
            raise ConfigError(f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    if not isinstance(doc, dict):
        raise ConfigError("top-level config must be an object")
    _reject_unknown(doc, {"problem", "methods", "seeds", "output"}, "")
    problem = _parse_problem(_need(doc, "problem", ""))
    raw_methods = _need(doc, "methods", "")
    if not isinstance(raw_methods, list) or not raw_methods:
        raise ConfigError("'methods' must be a non-empty list")
    methods = [_parse_method(m, f"methods[{i}]") for i, m in enumerate(raw_methods)]
    seeds = _parse_seeds(doc.get("seeds"), methods)
    output = _parse_output(doc.get("output"))
    return ExperimentConfig(problem=problem, methods=methods, seeds=seeds, output=output)


def load_config(path) -> ExperimentConfig:
    text = Path(path).read_text(encoding="utf-8")
    return parse_config(text)


def build_problem(problem_block: dict) -> Union[VIProblem, StochasticObjective]:
    """Instantiate the problem described by a validated config block."""
    kind = problem_block["kind"]
    if kind == "bilinear":
        if "matrix" in problem_block:
            mat = problem_block["matrix"]
            saddle = BilinearSaddle.from_matrix(np.asarray(mat["B"], dtype=float),
                                                a=mat.get("a"), b=mat.get("b"))
            return saddle_to_vi(saddle)
        gen = problem_block["generator"]
        return finite_sum_bilinear(m=int(gen["m"]), n=int(gen["n"]), seed=int(gen["seed"]),
                                   scale=float(gen.get("scale", 1.0)),
                                   noise_at_optimum=bool(gen.get("noise_at_optimum", False)),
                                   noise_scale=float(gen.get("noise_scale", 1.0)))
    if kind == "strongly_monotone_vi":
        gen = problem_block["generator"]
        return strongly_monotone_problem(d=int(gen["d"]), n=int(gen["n"]),
                                         mu=float(gen["mu"]),
                                         noise=float(gen.get("noise", 0.0)),
                                         seed=int(gen["seed"]),
                                         psd_scale=float(gen.get("psd_scale", 1.0)),
                                         skew_scale=float(gen.get("skew_scale", 1.0)))
    gen = problem_block["generator"]
    cls = QuadraticObjective if gen["family"] == "quadratic" else QuarticObjective
    return cls.random(d=int(gen["d"]), n=int(gen["n"]), noise=float(gen.get("noise", 0.0)),
                      seed=int(gen["seed"]))
