"""End-to-end run: query -> plan -> (motion || image -> mesh) -> rig ->
retarget -> export. The two middle branches run concurrently and join before
rigging."""

import hashlib
import json
import logging
import shutil
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, Optional

from .avatar.gltf import export_animated
from .avatar.retarget import JointMap, retarget
from .avatar.rig import RiggedMesh, auto_rig
from .avatar.services import (
    HttpImageBackend,
    HttpMeshBackend,
    MockImageBackend,
    MockMeshBackend,
    request_avatar_image,
    request_mesh,
)
from .config import PipelineConfig
from .motion.bvh import write_bvh
from .motion.skeleton import MotionClip
from .motiongen.checkpoint import load_generator_checkpoint, load_rvq_checkpoint
from .motiongen.generate import generate_motion
from .motiongen.schedule import cosine_schedule
from .planner.planner import PlannerDecision, plan

log = logging.getLogger("menagerie.pipeline")


class PipelineStageError(RuntimeError):
    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r} failed: {cause}")
        self.stage = stage
        self.cause = cause


@dataclass
class PipelineResult:
    decision: PlannerDecision
    clip: MotionClip
    rigged: RiggedMesh
    export_paths: Dict[str, str]
    stage_timings: Dict[str, float]
    run_dir: str


class _Stages:
    def __init__(self):
        self.timings: Dict[str, float] = {}

    def run(self, name: str, fn, *args, **kwargs):
        start = time.perf_counter()
        try:
            result = fn(*args, **kwargs)
        except Exception as exc:
            log.error(json.dumps({"stage": name, "outcome": "error", "error": str(exc)}))
            raise PipelineStageError(name, exc) from exc
        duration = time.perf_counter() - start
        self.timings[name] = duration
        log.info(json.dumps({"stage": name, "outcome": "ok", "duration_s": round(duration, 4)}))
        return result


def _run_directory(base: str, query: str) -> Path:
    stamp = datetime.now(timezone.utc).strftime("%Y%m%dT%H%M%S%f")
    digest = hashlib.sha256(query.encode("utf-8")).hexdigest()[:8]
    path = Path(base) / f"{stamp}-{digest}"
    path.mkdir(parents=True, exist_ok=True)
    return path


def run_pipeline(query: str, config: PipelineConfig,
                 keep_partial: bool = False) -> PipelineResult:
    """Execute the full text-to-animated-avatar pipeline.

    Motion generation and mesh acquisition run in parallel; each stage
    failure is labeled with its stage name. Partial artifacts are removed
    unless keep_partial is set.
    """
    stages = _Stages()
    taxonomy = config.load_taxonomy()
    if not config.rvq_checkpoint or not config.generator_checkpoint:
        raise PipelineStageError("load", ValueError("rvq and generator checkpoints are required"))
    rvq = stages.run("load", load_rvq_checkpoint, config.rvq_checkpoint)
    gen = load_generator_checkpoint(config.generator_checkpoint)

    decision = stages.run("plan", plan, query, config.planner.chat_backend(), taxonomy)

    run_dir = _run_directory(config.output_dir, query)
    params = config.generation
    schedule = None
    if params.iterations is not None:
        schedule = cosine_schedule(int(params.iterations))

    image_backend = (
        MockImageBackend() if config.image.mock else HttpImageBackend(config.image.url)
    )
    mesh_backend = (
        MockMeshBackend(taxonomy) if config.mesh.mock else HttpMeshBackend(config.mesh.url)
    )

    def motion_branch() -> MotionClip:
        clip = generate_motion(
            decision.motion_prompt, params.frames, rvq, gen,
            seed=params.seed, temperature=params.temperature, schedule=schedule,
        )
        # persist immediately so a later mesh failure cannot lose it
        (run_dir / "motion.bvh").write_bytes(
            write_bvh(clip.skeleton, clip).encode("utf-8")
        )
        return clip

    def mesh_branch():
        image = request_avatar_image(
            decision.avatar_prompt, image_backend, seed=params.seed
        )
        (run_dir / "avatar.png").write_bytes(image.to_png())
        return request_mesh(image, mesh_backend)

    try:
        with ThreadPoolExecutor(max_workers=2) as pool:
            motion_future = pool.submit(stages.run, "motion", motion_branch)
            mesh_future = pool.submit(stages.run, "mesh", mesh_branch)
            mesh_error: Optional[Exception] = None
            try:
                mesh = mesh_future.result()
            except Exception as exc:
                mesh_error = exc
            clip = motion_future.result()
            if mesh_error is not None:
                raise mesh_error

        rigged = stages.run("rig", auto_rig, mesh, clip.skeleton)
        fitted = stages.run(
            "retarget", retarget, clip, JointMap.identity(clip.skeleton), rigged
        )
        def export():
            paths = {
                "glb": str(run_dir / "avatar.glb"),
                "bvh": str(run_dir / "avatar.bvh"),
            }
            Path(paths["glb"]).write_bytes(export_animated(rigged, fitted, "gltf"))
            Path(paths["bvh"]).write_bytes(export_animated(rigged, fitted, "bvh"))
            return paths
        export_paths = stages.run("export", export)
        export_paths["motion_bvh"] = str(run_dir / "motion.bvh")
        export_paths["image"] = str(run_dir / "avatar.png")
    except PipelineStageError:
        if not keep_partial:
            shutil.rmtree(run_dir, ignore_errors=True)
        raise

    return PipelineResult(
        decision=decision,
        clip=clip,
        rigged=rigged,
        export_paths=export_paths,
        stage_timings=dict(stages.timings),
        run_dir=str(run_dir),
    )
