from __future__ import annotations

import os
from dataclasses import dataclass, fields, replace

import tomli

from .errors import InputError
from .penman import DEFAULT_OVERGENERAL

_PATH_FIELDS = ("core_corpus", "common_corpus", "amr_bank", "questions", "params_file")


@dataclass(frozen=True)
class PipelineConfig:
    pool_size: int = 100
    n_core: int = 10
    n_common: int = 90
    active_cap: int = 15
    max_path_nodes: int = 8
    k_layers: int = 2
    heads: int = 16
    dim: int = 64
    seed: int = 0
    init: str = "uniform"  # "uniform" | "zeros"; ignored when params_file is set
    bm25_k1: float = 1.2
    bm25_b: float = 0.75
    query: str = "hypothesis"  # "hypothesis" | "question"
    overgeneral: tuple[str, ...] = tuple(sorted(DEFAULT_OVERGENERAL))
    strip_senses: bool = False
    core_corpus: str | None = None
    common_corpus: str | None = None
    amr_bank: str | None = None
    questions: str | None = None
    params_file: str | None = None

    def validate(self, check_files: bool = True) -> "PipelineConfig":
        if self.n_core < 0 or self.n_common < 0 or self.n_core + self.n_common != self.pool_size:
            raise InputError(f"n_core + n_common must equal pool_size "
                             f"({self.n_core} + {self.n_common} != {self.pool_size})")
        if self.active_cap < 1:
            raise InputError("active_cap must be >= 1")
        if self.max_path_nodes < 2:
            raise InputError("max_path_nodes must be >= 2")
        if self.k_layers < 1 or self.heads < 1 or self.dim % self.heads:
            raise InputError(f"invalid reasoner shape k_layers={self.k_layers}, heads={self.heads}, dim={self.dim}")
        if self.init not in ("uniform", "zeros"):
            raise InputError(f"init must be 'uniform' or 'zeros', got {self.init!r}")
        if self.query not in ("hypothesis", "question"):
            raise InputError(f"query must be 'hypothesis' or 'question', got {self.query!r}")
        if check_files:
            for name in _PATH_FIELDS:
                path = getattr(self, name)
                if path is not None and not os.access(path, os.R_OK):
                    raise InputError(f"{name}: cannot read {path}")
        return self

    def with_overrides(self, **overrides) -> "PipelineConfig":
        """Apply non-None overrides; a new pool_size without n_common keeps n_core fixed."""
        overrides = {k: v for k, v in overrides.items() if v is not None}
        if "pool_size" in overrides and "n_common" not in overrides:
            n_core = overrides.get("n_core", self.n_core)
            overrides["n_common"] = overrides["pool_size"] - n_core
        return replace(self, **overrides)


def load_config(path) -> PipelineConfig:
    """Read a ``key = value`` file (TOML syntax).  Relative paths resolve against the file's directory."""
    try:
        with open(path, "rb") as fh:
            raw = tomli.load(fh)
    except tomli.TOMLDecodeError as exc:
        raise InputError(f"{path}: {exc}") from None
    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(raw) - known
    if unknown:
        raise InputError(f"{path}: unknown config keys {sorted(unknown)}")
    base = os.path.dirname(os.path.abspath(path))
    for name in _PATH_FIELDS:
        if name in raw and not os.path.isabs(raw[name]):
            raw[name] = os.path.join(base, raw[name])
    if "overgeneral" in raw:
        raw["overgeneral"] = tuple(raw["overgeneral"])
    return PipelineConfig(**raw)
