from .skeleton import (
    Joint,
    MotionClip,
    SkeletonError,
    SkeletonHierarchy,
    forward_kinematics,
    forward_kinematics_clip,
    world_rotations,
)
from .bvh import BvhError, parse_bvh, write_bvh
from .features import (
    FeatureError,
    FeatureMatrix,
    FeatureSpec,
    from_features,
    read_feature_file,
    to_features,
    write_feature_file,
)
from .ops import ClipOpError, crop, resample

__all__ = [
    "Joint",
    "MotionClip",
    "SkeletonError",
    "SkeletonHierarchy",
    "forward_kinematics",
    "forward_kinematics_clip",
    "world_rotations",
    "BvhError",
    "parse_bvh",
    "write_bvh",
    "FeatureError",
    "FeatureMatrix",
    "FeatureSpec",
    "from_features",
    "read_feature_file",
    "to_features",
    "write_feature_file",
    "ClipOpError",
    "crop",
    "resample",
]
