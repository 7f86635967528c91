"""scikit-learn compatible front end.

``GradientGuidanceClassifier`` treats each ``partial_fit`` call as the next
task in a sequence, so it drops into code that streams data to an estimator::

    clf = GradientGuidanceClassifier(n_classes=10, random_state=0)
    for X_t, y_t in stream:
        clf.partial_fit(X_t, y_t)
    clf.score(X_test, y_test)
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import model as mdl
from .guidance import GuidanceConfig
from .model import Batch, ModelConfig
from .tasks import Task
from .trainer import TrainConfig, TrainState, pool_tasks, train_task


class GradientGuidanceClassifier(ClassifierMixin, BaseEstimator):
    """MLP classifier trained task by task with replay and gated guidance.

    Parameters mirror :class:`~gradguide.model.ModelConfig`,
    :class:`~gradguide.trainer.TrainConfig` and
    :class:`~gradguide.guidance.GuidanceConfig`. ``n_classes`` must cover
    every label of every future task; if omitted it is taken from the
    ``classes`` argument of the first ``partial_fit`` call.
    """

    def __init__(self, hidden_dims=(64,), adapter_rank=0, init_std=0.1, variant="full",
                 lr=0.05, batch_size=32, epochs_per_task=5, alpha=0.2,
                 scaling_enabled=True, gate_enabled=True, replay_capacity=10,
                 n_classes=None, random_state=0):
        self.hidden_dims = hidden_dims
        self.adapter_rank = adapter_rank
        self.init_std = init_std
        self.variant = variant
        self.lr = lr
        self.batch_size = batch_size
        self.epochs_per_task = epochs_per_task
        self.alpha = alpha
        self.scaling_enabled = scaling_enabled
        self.gate_enabled = gate_enabled
        self.replay_capacity = replay_capacity
        self.n_classes = n_classes
        self.random_state = random_state

    def _configs(self, n_features: int, n_classes: int):
        seed = 0 if self.random_state is None else int(self.random_state)
        model_cfg = ModelConfig(n_features, tuple(self.hidden_dims), n_classes,
                                self.adapter_rank, self.init_std, seed)
        train_cfg = TrainConfig(
            variant=self.variant, lr=self.lr, batch_size=self.batch_size,
            epochs_per_task=self.epochs_per_task,
            guidance=GuidanceConfig(self.alpha, self.scaling_enabled, self.gate_enabled),
            replay_capacity=self.replay_capacity, seed=seed,
        )
        return model_cfg, train_cfg

    def _start(self, n_features: int, classes=None, y=None):
        if self.n_classes is not None:
            n_classes = int(self.n_classes)
        elif classes is not None:
            n_classes = int(np.max(classes)) + 1
        else:
            n_classes = int(np.max(y)) + 1
        model_cfg, self.train_config_ = self._configs(n_features, n_classes)
        self.model_config_ = model_cfg
        self.state_ = TrainState.start(mdl.init(model_cfg), self.train_config_)
        self.classes_ = np.arange(n_classes)
        self.n_features_in_ = n_features

    def _check_labels(self, y):
        if not np.issubdtype(np.asarray(y).dtype, np.integer):
            if not np.all(np.equal(np.mod(y, 1), 0)):
                raise ValueError("labels must be integer class indices")
        y = np.asarray(y, dtype=np.int64)
        if y.min() < 0 or y.max() >= len(self.classes_):
            raise ValueError(f"labels must lie in [0, {len(self.classes_)})")
        return y

    def partial_fit(self, X, y, classes=None):
        """Train on ``(X, y)`` as the next task of the sequence."""
        X, y = check_X_y(X, y, dtype=np.float64)
        if not hasattr(self, "state_"):
            self._start(X.shape[1], classes, y)
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        y = self._check_labels(y)
        t = self.state_.completed_tasks
        batch = Batch(X, y, t)
        self.state_ = train_task(self.state_, Task(t, batch, batch, f"task{t}"), self.train_config_)
        return self

    def fit(self, X, y, task_ids=None):
        """Fit from scratch; ``task_ids`` splits the data into ordered tasks.

        With the ``multitask`` variant all tasks are pooled into one phase.
        """
        X, y = check_X_y(X, y, dtype=np.float64)
        for attr in ("state_", "classes_", "n_features_in_"):
            self.__dict__.pop(attr, None)
        self._start(X.shape[1], None, y)
        y = self._check_labels(y)
        if task_ids is None:
            task_ids = np.zeros(len(y), dtype=np.int64)
        task_ids = np.asarray(task_ids)
        tasks = []
        for t, tid in enumerate(np.unique(task_ids)):
            mask = task_ids == tid
            b = Batch(X[mask], y[mask], t)
            tasks.append(Task(t, b, b, f"task{t}"))
        if self.variant == "multitask":
            tasks = [pool_tasks(tasks)]
        for task in tasks:
            self.state_ = train_task(self.state_, task, self.train_config_)
        return self

    @property
    def params_(self):
        check_is_fitted(self, "state_")
        return self.state_.params

    def decision_function(self, X):
        check_is_fitted(self, "state_")
        X = check_array(X, dtype=np.float64)
        return mdl.logits(self.state_.params, X)

    def predict_proba(self, X):
        check_is_fitted(self, "state_")
        return mdl.predict_proba(self.state_.params, check_array(X, dtype=np.float64))

    def predict(self, X):
        check_is_fitted(self, "state_")
        return self.classes_[np.argmax(self.decision_function(X), axis=1)]
