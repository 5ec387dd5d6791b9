"""
Linear-softmax and one-hidden-layer ReLU predictors with analytic backpropagation.

Parameters are stored per layer as ``(out, in)`` weight matrices and ``(out,)``
bias vectors; logits are ``x @ W.T + b``.
"""

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from robust_grasp_loss.losses.prob_core import InvalidInputError, softmax


@dataclass(frozen=True)
class PredictorParams:
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    activation: str = "relu"

    def __post_init__(self):
        weights = tuple(np.asarray(w, dtype=np.float64) for w in self.weights)
        biases = tuple(np.asarray(b, dtype=np.float64) for b in self.biases)
        if len(weights) not in (1, 2) or len(weights) != len(biases):
            raise InvalidInputError("A predictor has one or two layers of weights and biases.")
        for index, (w, b) in enumerate(zip(weights, biases)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise InvalidInputError(
                    f"Layer {index}: weight shape {w.shape} and bias shape {b.shape} disagree."
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise InvalidInputError(f"Layer {index} has non-finite parameters.")
        if len(weights) == 2 and weights[1].shape[1] != weights[0].shape[0]:
            raise InvalidInputError("Hidden layer output and output layer input disagree.")
        if self.activation != "relu":
            raise InvalidInputError(f"Unsupported activation '{self.activation}'.")
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "biases", biases)

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def num_classes(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def hidden_width(self) -> int:
        return self.weights[0].shape[0] if len(self.weights) == 2 else 0

    def flatten(self) -> np.ndarray:
        """All parameters as one vector, layer by layer, weights before biases."""
        return np.concatenate(
            [part.ravel() for w, b in zip(self.weights, self.biases) for part in (w, b)]
        )

    def with_vector(self, vector) -> "PredictorParams":
        """Parameters of the same shapes filled from a :meth:`flatten` vector."""
        values = np.asarray(vector, dtype=np.float64)
        weights, biases, offset = [], [], 0
        for w, b in zip(self.weights, self.biases):
            weights.append(values[offset : offset + w.size].reshape(w.shape))
            offset += w.size
            biases.append(values[offset : offset + b.size].copy())
            offset += b.size
        if offset != values.size:
            raise InvalidInputError(f"Expected {offset} parameters, got {values.size}.")
        return PredictorParams(tuple(weights), tuple(biases), self.activation)

    def step(self, grads: "PredictorParams", learning_rate: float) -> "PredictorParams":
        """Plain SGD update ``theta - learning_rate * grad``."""
        return PredictorParams(
            tuple(w - learning_rate * g for w, g in zip(self.weights, grads.weights)),
            tuple(b - learning_rate * g for b, g in zip(self.biases, grads.biases)),
            self.activation,
        )

    def to_dict(self) -> dict:
        return {
            "activation": self.activation,
            "hidden_width": self.hidden_width,
            "layers": [
                {
                    "shape": list(w.shape),
                    "weights": [float(value) for value in w.ravel()],
                    "biases": [float(value) for value in b],
                }
                for w, b in zip(self.weights, self.biases)
            ],
        }

    @classmethod
    def from_dict(cls, record: dict) -> "PredictorParams":
        weights, biases = [], []
        for layer in record["layers"]:
            shape = tuple(layer["shape"])
            weights.append(np.asarray(layer["weights"], dtype=np.float64).reshape(shape))
            biases.append(np.asarray(layer["biases"], dtype=np.float64))
        return cls(tuple(weights), tuple(biases), record.get("activation", "relu"))


def init_params(
    input_dim: int, num_classes: int, hidden_width: int = 0, seed: int = 0
) -> PredictorParams:
    """
    Seeded uniform initialisation with zero biases.

    Each weight is drawn from ``U(-sqrt(3 / fan_in), sqrt(3 / fan_in))``, whose
    standard deviation is ``1 / sqrt(fan_in)``.

    Raises:
        InvalidInputError: If any dimension is zero or negative.
    """
    if input_dim < 1 or num_classes < 1 or hidden_width < 0:
        raise InvalidInputError(
            f"Invalid predictor dimensions: input_dim={input_dim}, "
            f"num_classes={num_classes}, hidden_width={hidden_width}."
        )
    rng = np.random.default_rng(seed)
    layer_dims = [input_dim, num_classes]
    if hidden_width > 0:
        layer_dims = [input_dim, hidden_width, num_classes]
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        limit = math.sqrt(3.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return PredictorParams(tuple(weights), tuple(biases))


def _check_features(params: PredictorParams, features) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != params.input_dim:
        raise InvalidInputError(
            f"Features must have shape (N, {params.input_dim}), got {x.shape}."
        )
    return x


def forward(params: PredictorParams, features) -> np.ndarray:
    x = _check_features(params, features)
    if params.hidden_width == 0:
        return x @ params.weights[0].T + params.biases[0]
    hidden = np.maximum(x @ params.weights[0].T + params.biases[0], 0.0)
    return hidden @ params.weights[1].T + params.biases[1]


def backward(params: PredictorParams, features, grad_logits) -> PredictorParams:
    """
    Parameter gradients given the loss gradient with respect to the logits.

    The result has the shapes of ``params``.

    Raises:
        InvalidInputError: If the shapes do not match a forward pass.
    """
    x = _check_features(params, features)
    g = np.asarray(grad_logits, dtype=np.float64)
    if g.shape != (x.shape[0], params.num_classes):
        raise InvalidInputError(
            f"grad_logits must have shape ({x.shape[0]}, {params.num_classes}), got {g.shape}."
        )
    if params.hidden_width == 0:
        return PredictorParams((g.T @ x,), (g.sum(axis=0),))
    pre_activation = x @ params.weights[0].T + params.biases[0]
    hidden = np.maximum(pre_activation, 0.0)
    grad_hidden = (g @ params.weights[1]) * (pre_activation > 0.0)
    return PredictorParams(
        (grad_hidden.T @ x, g.T @ hidden),
        (grad_hidden.sum(axis=0), g.sum(axis=0)),
    )


def predict_proba(params: PredictorParams, features) -> np.ndarray:
    return softmax(forward(params, features))


def predict(params: PredictorParams, features) -> np.ndarray:
    return np.argmax(forward(params, features), axis=1)


def save_params(params: PredictorParams, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(json.dumps(params.to_dict()) + "\n", encoding="utf-8")
    return path


def load_params(path: str | Path) -> PredictorParams:
    return PredictorParams.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
