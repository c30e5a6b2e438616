from .rvq import (
    RvqConfig,
    RvqModel,
    TokenGrid,
    TrainingDiverged,
    decode_tokens,
    quantization_mse,
    quantize_residual,
    train_rvq,
)
from .schedule import MaskSchedule, cosine_schedule, linear_schedule
from .textenc import HashedTrigramEncoder, HttpTextEncoder
from .training import GeneratorConfig, GeneratorModel, new_generator, train_masked, train_residual
from .generate import DecodeTrace, generate_base, generate_motion, generate_residuals
from .checkpoint import (
    CheckpointError,
    load_generator_checkpoint,
    load_rvq_checkpoint,
    load_token_file,
    save_generator_checkpoint,
    save_rvq_checkpoint,
    save_token_file,
)

__all__ = [
    "RvqConfig",
    "RvqModel",
    "TokenGrid",
    "TrainingDiverged",
    "decode_tokens",
    "quantization_mse",
    "quantize_residual",
    "train_rvq",
    "MaskSchedule",
    "cosine_schedule",
    "linear_schedule",
    "HashedTrigramEncoder",
    "HttpTextEncoder",
    "GeneratorConfig",
    "GeneratorModel",
    "new_generator",
    "train_masked",
    "train_residual",
    "DecodeTrace",
    "generate_base",
    "generate_motion",
    "generate_residuals",
    "CheckpointError",
    "load_generator_checkpoint",
    "load_rvq_checkpoint",
    "load_token_file",
    "save_generator_checkpoint",
    "save_rvq_checkpoint",
    "save_token_file",
]
