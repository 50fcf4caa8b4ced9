"""scikit-learn style regressors wrapping the from-scratch networks.

Both estimators scale inputs and targets to [0, 1] with scalers fitted on the
training rows, train on mean squared error with Adam, and predict in physical
units.  Scalers travel inside the saved model file.
"""
from __future__ import annotations

import csv
import hashlib
import json
import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ..dataset import MinMaxScaler
from .network import CNN_DENSE, CNN_FILTERS, CNN_KERNEL, CNN_POOL, MLP_HIDDEN, Network, build_network
from .optim import Adam

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
PREDICT_CHUNK = 65536
DIVERGENCE_FACTOR = 1e6  # loss growth over the first epoch treated as divergence


class DivergenceError(FloatingPointError):
    """Training loss became NaN or infinite."""


@dataclass
class TrainConfig:
    epochs: int = 20000
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    batch_size: int | None = None  # None: full batch
    seed: int = 0
    eval_every: int = 1

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning rate must be positive")
        if self.batch_size is not None and self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.eval_every < 1:
            raise ValueError("eval_every must be >= 1")


@dataclass
class LearningCurve:
    """Per-epoch mean squared error on scaled targets."""

    epochs: list[int] = field(default_factory=list)
    train_mse: list[float] = field(default_factory=list)
    val_epochs: list[int] = field(default_factory=list)
    val_mse: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"epochs": self.epochs, "train_mse": self.train_mse, "val_epochs": self.val_epochs, "val_mse": self.val_mse}

    @classmethod
    def from_dict(cls, data) -> "LearningCurve":
        return cls(list(data["epochs"]), list(data["train_mse"]), list(data["val_epochs"]), list(data["val_mse"]))

    def to_csv(self, path) -> None:
        val = dict(zip(self.val_epochs, self.val_mse))
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(("epoch", "train_mse", "val_mse"))
            for e, loss in zip(self.epochs, self.train_mse):
                v = val.get(e)
                w.writerow((e, repr(loss), "" if v is None else repr(v)))


def start_at_mean(net: Network, Y) -> None:
    """Zero the output layer and set its bias to the target mean.

    The deep stacks narrow to a handful of ReLU units before the head; random
    head weights produce large early gradients that switch those units off
    for good.  Starting from the mean predictor avoids that.
    """
    head = net.layers[-1]
    head.W[...] = 0
    head.b[...] = np.mean(np.sort(Y, axis=0), axis=0)  # sorted: independent of row order


def canonical_order(X, Y) -> np.ndarray:
    """Row order that depends only on row contents, not on arrival order."""
    keys = np.column_stack([X, Y])
    return np.lexsort(keys.T[::-1])


def scaled_mse(net: Network, X, Y, chunk: int = PREDICT_CHUNK) -> float:
    total = 0.0
    for i in range(0, len(X), chunk):
        d = net.forward(X[i : i + chunk]).astype(np.float64) - Y[i : i + chunk]
        total += float(np.sum(d * d))
    return total / Y.size


def train_network(net: Network, config: TrainConfig, X, Y, X_val=None, Y_val=None) -> LearningCurve:
    """Adam on mean squared error; ``X``/``Y`` are already scaled.

    Rows are put in canonical order first, so the result is independent of the
    order in which they were supplied.  Mini-batches are drawn from a schedule
    seeded by ``config.seed``.
    """
    order = canonical_order(X, Y)
    X = np.ascontiguousarray(X[order], dtype=net.dtype)
    Y = np.ascontiguousarray(Y[order], dtype=net.dtype)
    has_val = X_val is not None and len(X_val) > 0
    if has_val:
        X_val = np.asarray(X_val, dtype=net.dtype)
        Y_val = np.asarray(Y_val, dtype=np.float64)
    n = len(X)
    if n == 0:
        raise ValueError("no training rows")
    batch = n if config.batch_size is None else min(config.batch_size, n)
    schedule = np.random.default_rng([config.seed, 1])
    opt = Adam(config.learning_rate, config.beta1, config.beta2, config.eps)
    curve = LearningCurve()
    with np.errstate(over="ignore", invalid="ignore"):  # divergence is detected below
        _run_epochs(net, config, X, Y, X_val, Y_val, has_val, batch, schedule, opt, curve)
    return curve


def _run_epochs(net, config, X, Y, X_val, Y_val, has_val, batch, schedule, opt, curve):
    n = len(X)
    params, grads = net.params(), net.grads()
    for epoch in range(1, config.epochs + 1):
        if batch == n:
            loss = net.loss_and_grads(X, Y)
            opt.step(params, grads)
        else:
            perm = schedule.permutation(n)
            loss = 0.0
            for i in range(0, n, batch):
                idx = perm[i : i + batch]
                loss += net.loss_and_grads(X[idx], Y[idx]) * len(idx)
                opt.step(params, grads)
            loss /= n
        if not np.isfinite(loss) or (curve.train_mse and loss > DIVERGENCE_FACTOR * curve.train_mse[0]):
            raise DivergenceError(
                f"training loss became {loss:.3g} at epoch {epoch}; lower the learning rate or check the inputs for extreme values"
            )
        curve.epochs.append(epoch)
        curve.train_mse.append(loss)
        if has_val and (epoch % config.eval_every == 0 or epoch == config.epochs):
            curve.val_epochs.append(epoch)
            curve.val_mse.append(scaled_mse(net, X_val, Y_val))
        if epoch % 500 == 0:
            log.info("epoch %d train mse %.3e", epoch, loss)


class _Surrogate(RegressorMixin, BaseEstimator):
    kind = ""

    def _network_config(self, input_len: int) -> dict:
        raise NotImplementedError

    def _train_config(self) -> TrainConfig:
        return TrainConfig(
            epochs=self.epochs,
            learning_rate=self.learning_rate,
            beta1=self.beta1,
            beta2=self.beta2,
            eps=self.eps,
            batch_size=self.batch_size,
            seed=self.seed,
            eval_every=self.eval_every,
        )

    def fit(self, X, y, X_val=None, y_val=None, feature_names=None, target_names=None):
        X, y = check_X_y(X, y, multi_output=True, dtype=np.float64)
        if y.ndim == 1:
            y = y[:, None]
        config = self._train_config()
        if self.dtype not in ("float32", "float64"):
            raise ValueError("dtype must be 'float32' or 'float64'")
        self.x_scaler_ = MinMaxScaler(feature_names).fit(X)
        self.y_scaler_ = MinMaxScaler(target_names).fit(y)
        Xs, ys = self.x_scaler_.transform(X), self.y_scaler_.transform(y)
        Xv = yv = None
        if X_val is not None:
            Xv = self.x_scaler_.transform(X_val)
            yv = self.y_scaler_.transform(np.asarray(y_val, dtype=float).reshape(len(Xv), -1))
        cfg = dict(self._network_config(X.shape[1]), n_out=y.shape[1])
        self.network_ = build_network(self.kind, X.shape[1], cfg, seed=self.seed, dtype=np.dtype(self.dtype))
        start_at_mean(self.network_, ys)
        self.curve_ = train_network(self.network_, config, Xs, ys, Xv, yv)
        self.n_features_in_ = X.shape[1]
        self.n_outputs_ = y.shape[1]
        return self

    def predict_scaled(self, X_scaled, chunk_size: int = PREDICT_CHUNK) -> np.ndarray:
        check_is_fitted(self, "network_")
        X_scaled = np.asarray(X_scaled)
        out = np.empty((len(X_scaled), self.n_outputs_))
        for i in range(0, len(X_scaled), chunk_size):
            out[i : i + chunk_size] = self.network_.forward(X_scaled[i : i + chunk_size])
        return out

    def predict(self, X, chunk_size: int = PREDICT_CHUNK, feature_names=None) -> np.ndarray:
        """Physical-unit predictions, computed chunk by chunk to bound memory."""
        check_is_fitted(self, "network_")
        X = check_array(X, dtype=np.float64)
        out = np.empty((len(X), self.n_outputs_))
        for i in range(0, len(X), chunk_size):
            xs = self.x_scaler_.transform(X[i : i + chunk_size], feature_names)
            out[i : i + chunk_size] = self.y_scaler_.inverse_transform(self.network_.forward(xs))
        return out

    @property
    def loss_curve_(self) -> list[float]:
        return self.curve_.train_mse

    # ------------------------------------------------------------ persistence
    def to_dict(self) -> dict:
        check_is_fitted(self, "network_")
        net = self.network_
        return {
            "format_version": FORMAT_VERSION,
            "kind": self.kind,
            "params": self.get_params(),
            "input_len": net.input_len,
            "n_outputs": self.n_outputs_,
            "network": net.config,
            "weights": [{"shape": list(w.shape), "values": w.ravel().tolist()} for w in net.params()],
            "x_scaler": self.x_scaler_.to_dict(),
            "y_scaler": self.y_scaler_.to_dict(),
            "curve": self.curve_.to_dict(),
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh)

    def fingerprint(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()

    @classmethod
    def from_dict(cls, data: dict) -> "_Surrogate":
        if data.get("format_version") != FORMAT_VERSION:
            raise ValueError(f"unsupported model format version {data.get('format_version')!r}")
        if data.get("kind") != cls.kind:
            raise ValueError(f"model file holds a {data.get('kind')!r} network, not {cls.kind!r}")
        params = dict(data["params"])
        for key in ("hidden_layers", "filters"):
            if key in params:
                params[key] = tuple(params[key])
        est = cls(**params)
        net = build_network(cls.kind, data["input_len"], data["network"], dtype=np.dtype(est.dtype))
        shapes = [tuple(w["shape"]) for w in data["weights"]]
        if shapes != [p.shape for p in net.params()]:
            raise ValueError("weight shapes in model file do not match the network description")
        net.set_weights([np.asarray(w["values"], dtype=est.dtype).reshape(w["shape"]) for w in data["weights"]])
        est.network_ = net
        est.x_scaler_ = MinMaxScaler.from_dict(data["x_scaler"])
        est.y_scaler_ = MinMaxScaler.from_dict(data["y_scaler"])
        est.curve_ = LearningCurve.from_dict(data["curve"])
        est.n_features_in_ = data["input_len"]
        est.n_outputs_ = data["n_outputs"]
        return est

    @classmethod
    def load(cls, path) -> "_Surrogate":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


class MLPSurrogate(_Surrogate):
    """Fully connected ReLU network, 256/256/256/128/64/32/16/8 hidden units by default."""

    kind = "mlp"

    def __init__(
        self,
        hidden_layers=MLP_HIDDEN,
        epochs: int = 20000,
        learning_rate: float = 1e-3,
        batch_size: int | None = None,
        seed: int = 0,
        dtype: str = "float64",
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        eval_every: int = 1,
    ):
        self.hidden_layers = hidden_layers
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.seed = seed
        self.dtype = dtype
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.eval_every = eval_every

    def _network_config(self, input_len):
        return {"hidden": list(self.hidden_layers)}


class CNNSurrogate(_Surrogate):
    """Two valid 1-D convolutions over the feature row, max pooling, then a dense head."""

    kind = "cnn"

    def __init__(
        self,
        filters=CNN_FILTERS,
        kernel_size: int = CNN_KERNEL,
        pool: int = CNN_POOL,
        dense_units: int = CNN_DENSE,
        time_first: bool = True,
        epochs: int = 20000,
        learning_rate: float = 1e-3,
        batch_size: int | None = None,
        seed: int = 0,
        dtype: str = "float64",
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        eval_every: int = 1,
    ):
        self.filters = filters
        self.kernel_size = kernel_size
        self.pool = pool
        self.dense_units = dense_units
        self.time_first = time_first
        self.epochs = epochs
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.seed = seed
        self.dtype = dtype
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.eval_every = eval_every

    def _network_config(self, input_len):
        # time (last feature) goes first: floor pooling only drops inputs near
        # the end of the row, which is then the constant tile count
        order = [input_len - 1] + list(range(input_len - 1)) if self.time_first else None
        return {"filters": list(self.filters), "kernel_size": self.kernel_size, "pool": self.pool,
                "dense_units": self.dense_units, "input_order": order}


SURROGATES = {"mlp": MLPSurrogate, "cnn": CNNSurrogate}


def load_surrogate(path) -> _Surrogate:
    """Load either kind of saved surrogate."""
    with open(path) as fh:
        data = json.load(fh)
    kind = data.get("kind")
    if kind not in SURROGATES:
        raise ValueError(f"{path}: unknown model kind {kind!r}")
    return SURROGATES[kind].from_dict(data)
