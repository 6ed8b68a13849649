from .loop import RunResult, TrainConfig, train_cross_lingual, train_task
from .metrics import f1_score
from .optim import AdamState, adamw_step, cosine_lr

__all__ = [
    "RunResult",
    "TrainConfig",
    "train_cross_lingual",
    "train_task",
    "f1_score",
    "AdamState",
    "adamw_step",
    "cosine_lr",
]
