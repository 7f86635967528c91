"""Continual learning with dynamic gradient guidance."""
from .estimator import GradientGuidanceClassifier
from .guidance import Checkpoint, GuidanceConfig, apply_guidance, direction, scaled_guidance
from .metrics import AccuracyMatrix, faa, forgetting
from .model import Batch, ModelConfig, ParameterSet
from .replay import ReplayBuffer
from .tasks import SequenceSpec, Task, generate
from .trainer import TrainConfig, run_sequence, train_task

__version__ = "0.1.0"
