"""Pipeline configuration: JSON file, eagerly validated.

Secrets never live in the file; auth_env names an environment variable that
holds the token at call time.
"""

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

from .backends import HttpChatBackend
from .planner.taxonomy import Taxonomy, default_taxonomy


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class BackendSpec:
    mock: bool = True
    url: str = ""
    model: str = ""
    auth_env: str = ""

    @staticmethod
    def from_dict(raw: dict, name: str, warnings_out: List[str]) -> "BackendSpec":
        spec = BackendSpec(
            mock=bool(raw.get("mock", True)),
            url=raw.get("url", ""),
            model=raw.get("model", ""),
            auth_env=raw.get("auth_env", ""),
        )
        if spec.mock and spec.url:
            warnings_out.append(
                f"backend {name!r}: url {spec.url!r} is ignored because mock=true"
            )
        if not spec.mock and not spec.url:
            raise ConfigError(f"backend {name!r}: mock=false requires a url")
        return spec

    def chat_backend(self, temperature: float = 0.0):
        if self.mock:
            return None
        return HttpChatBackend(self.url, self.model, auth_env=self.auth_env or None,
                               temperature=temperature)


@dataclass(frozen=True)
class GenerationParams:
    frames: int = 32
    seed: int = 0
    iterations: Optional[int] = None  # None: use the checkpoint's schedule
    temperature: float = 0.0


@dataclass(frozen=True)
class PipelineConfig:
    taxonomy_path: str = "default"
    planner: BackendSpec = field(default_factory=BackendSpec)
    caption: BackendSpec = field(default_factory=BackendSpec)
    image: BackendSpec = field(default_factory=BackendSpec)
    mesh: BackendSpec = field(default_factory=BackendSpec)
    rvq_checkpoint: str = ""
    generator_checkpoint: str = ""
    generation: GenerationParams = field(default_factory=GenerationParams)
    output_dir: str = "runs"
    validation_warnings: tuple = ()

    def load_taxonomy(self) -> Taxonomy:
        if self.taxonomy_path in ("", "default"):
            return default_taxonomy()
        return Taxonomy.load(self.taxonomy_path)


def load_config(path: str) -> PipelineConfig:
    """Parse and validate a pipeline config; all problems surface now, not
    mid-run. Non-fatal issues are attached as warnings and also emitted."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None

    warn_list: List[str] = []
    services = raw.get("services", raw.get("backends", {}))
    spec = {
        name: BackendSpec.from_dict(services.get(name, {}), name, warn_list)
        for name in ("planner", "caption", "image", "mesh")
    }

    gen_raw = raw.get("generation", {})
    generation = GenerationParams(
        frames=int(gen_raw.get("frames", 32)),
        seed=int(gen_raw.get("seed", 0)),
        iterations=gen_raw.get("iterations"),
        temperature=float(gen_raw.get("temperature", 0.0)),
    )
    if generation.frames < 1:
        raise ConfigError("generation.frames must be >= 1")
    if generation.iterations is not None and int(generation.iterations) < 1:
        raise ConfigError("generation.iterations must be >= 1 when given")

    taxonomy_path = raw.get("taxonomy", "default")
    if taxonomy_path not in ("", "default") and not Path(taxonomy_path).exists():
        raise ConfigError(f"taxonomy file does not exist: {taxonomy_path}")

    checkpoints = raw.get("checkpoints", {})
    rvq = checkpoints.get("rvq", "")
    gen_ckpt = checkpoints.get("generator", "")
    for label, p in (("rvq", rvq), ("generator", gen_ckpt)):
        if p and not Path(p).exists():
            raise ConfigError(f"{label} checkpoint does not exist: {p}")

    for message in warn_list:
        warnings.warn(message)
    return PipelineConfig(
        taxonomy_path=taxonomy_path,
        planner=spec["planner"],
        caption=spec["caption"],
        image=spec["image"],
        mesh=spec["mesh"],
        rvq_checkpoint=rvq,
        generator_checkpoint=gen_ckpt,
        generation=generation,
        output_dir=raw.get("output_dir", "runs"),
        validation_warnings=tuple(warn_list),
    )
