import json
from dataclasses import dataclass

import numpy as np
import pytest

from menagerie.motion import Joint, MotionClip, SkeletonHierarchy

ROT_ORDERS = ["ZXY", "XYZ", "ZYX", "YXZ", "XZY", "YZX"]


def random_skeleton(rng: np.random.Generator, max_joints: int = 6) -> SkeletonHierarchy:
    """Random tree skeleton: root with 6 channels, descendants with 3 rotations."""
    n = int(rng.integers(2, max_joints + 1))
    joints = [
        Joint(
            name="root",
            parent=-1,
            offset=rng.uniform(-1, 1, 3),
            channels=tuple(
                ["Xposition", "Yposition", "Zposition"]
                + [f"{ax}rotation" for ax in rng.permutation(list("XYZ"))]
            ),
        )
    ]
    for i in range(1, n):
        order = ROT_ORDERS[int(rng.integers(len(ROT_ORDERS)))]
        parent = int(rng.integers(0, i))
        joints.append(
            Joint(
                name=f"joint{i}",
                parent=parent,
                offset=rng.uniform(-2, 2, 3),
                channels=tuple(f"{ax}rotation" for ax in order),
            )
        )
    # attach end sites to leaves so documents are DCC-shaped
    with_children = {j.parent for j in joints}
    fixed = []
    for i, j in enumerate(joints):
        if i not in with_children:
            fixed.append(
                Joint(j.name, j.parent, j.offset, j.channels, end_site=rng.uniform(-1, 1, 3))
            )
        else:
            fixed.append(j)
    return SkeletonHierarchy(tuple(fixed))


def random_clip(
    rng: np.random.Generator,
    skeleton: SkeletonHierarchy = None,
    num_frames: int = None,
    frame_time: float = 1 / 30,
    smooth: bool = False,
    origin_start: bool = False,
) -> MotionClip:
    if skeleton is None:
        skeleton = random_skeleton(rng)
    if num_frames is None:
        num_frames = int(rng.integers(1, 20))
    C = skeleton.channel_count
    if smooth:
        t = np.linspace(0, 1, num_frames)[:, None]
        freq = rng.uniform(0.3, 0.8, C)
        phase = rng.uniform(0, 2 * np.pi, C)
        amp = rng.uniform(3, 10, C)
        frames = amp * np.sin(2 * np.pi * freq * t + phase)
    else:
        frames = rng.uniform(-90, 90, (num_frames, C))
    # keep root translations modest so positions stay in float32-friendly range
    slices = skeleton.channel_slices()
    a, _ = slices[0]
    for ci, label in enumerate(skeleton.joints[0].channels):
        if label.endswith("position"):
            frames[:, a + ci] = rng.uniform(-5, 5, num_frames) if not smooth else frames[:, a + ci] / 20
    if origin_start:
        for ci, label in enumerate(skeleton.joints[0].channels):
            axis = label[0]
            if label.endswith("position") and axis in ("X", "Z"):
                frames[0, a + ci] = -skeleton.joints[0].offset["XYZ".index(axis)]
    return MotionClip(skeleton, frame_time, frames)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def toy_chain_skeleton() -> SkeletonHierarchy:
    return SkeletonHierarchy(
        (
            Joint(
                "root",
                -1,
                np.array([0.0, 1.0, 0.0]),
                ("Xposition", "Yposition", "Zposition", "Zrotation", "Xrotation", "Yrotation"),
            ),
            Joint("mid", 0, np.array([0.0, 0.8, 0.0]), ("Zrotation", "Xrotation", "Yrotation")),
            Joint(
                "tip",
                1,
                np.array([0.0, 0.6, 0.0]),
                ("Zrotation", "Xrotation", "Yrotation"),
                end_site=np.array([0.0, 0.3, 0.0]),
            ),
        )
    )


def toy_chain_clip(seed: int = 0, frames: int = 24) -> MotionClip:
    sk = toy_chain_skeleton()
    rng = np.random.default_rng(seed)
    t = np.linspace(0, 2 * np.pi, frames)
    data = np.zeros((frames, sk.channel_count))
    data[:, 0] = 0.02 * np.sin(t + rng.uniform(0, 6))
    data[:, 0] -= data[0, 0]
    data[:, 1] = 1.0 + 0.05 * np.sin(2 * t)
    data[:, 2] = np.linspace(0, 0.3, frames)
    data[:, 2] -= data[0, 2]
    for col in (3, 6, 9):
        data[:, col] = rng.uniform(15, 35) * np.sin(t + rng.uniform(0, 6))
    return MotionClip(sk, 1 / 30, data)


@dataclass
class ToySetup:
    rvq_path: str
    generator_path: str
    config_path: str
    output_dir: str


@pytest.fixture(scope="session")
def toy_models(tmp_path_factory) -> ToySetup:
    """Small trained checkpoints plus an all-mock pipeline config."""
    from menagerie.motion import FeatureSpec, to_features
    from menagerie.motiongen import (
        GeneratorConfig,
        RvqConfig,
        new_generator,
        save_generator_checkpoint,
        save_rvq_checkpoint,
        train_masked,
        train_rvq,
        train_residual,
    )

    root = tmp_path_factory.mktemp("toy_models")
    clips = [toy_chain_clip(seed=s) for s in (0, 1)]
    prompts = ["a Coyote performs Run", "a Fox performs Walk"]
    feats = [to_features(c, FeatureSpec(c.skeleton, c.frame_time)) for c in clips]

    rvq = train_rvq(
        feats,
        RvqConfig(
            num_codes=32, residual_depth=1, latent_dim=16, downsample=4, width=32,
            epochs=300, batch_size=4, window=24, lr=2e-3, seed=0,
        ),
    )
    rvq_path = root / "rvq.magm"
    save_rvq_checkpoint(str(rvq_path), rvq)

    gen_config = GeneratorConfig(
        num_codes=32, residual_depth=1, d_model=64, heads=4, layers=2, ff=128,
        text_dim=32, max_len=8, epochs=300, batch_size=2, lr=3e-3, seed=0, iterations=4,
    )
    gen = new_generator(gen_config)
    grids = [rvq.tokenize(f.data) for f in feats]
    texts = [gen.text_encoder.encode(p) for p in prompts]
    train_masked(grids, texts, gen)
    train_residual(grids, texts, gen)
    gen_path = root / "generator.magm"
    save_generator_checkpoint(str(gen_path), gen)

    output_dir = root / "runs"
    config = {
        "taxonomy": "default",
        "services": {
            "planner": {"mock": True},
            "caption": {"mock": True},
            "image": {"mock": True},
            "mesh": {"mock": True},
        },
        "checkpoints": {"rvq": str(rvq_path), "generator": str(gen_path)},
        "generation": {"frames": 24, "seed": 11, "temperature": 0.0},
        "output_dir": str(output_dir),
    }
    config_path = root / "config.json"
    config_path.write_text(json.dumps(config, indent=2))
    return ToySetup(
        rvq_path=str(rvq_path),
        generator_path=str(gen_path),
        config_path=str(config_path),
        output_dir=str(output_dir),
    )
