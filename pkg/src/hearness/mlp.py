"""Shallow downstream probe: MLP with batch norm, dropout, and Adam.

Implemented directly on numpy so the harness carries no ML-runtime
dependency and training is bitwise deterministic for a fixed seed.  Layer
stack per hidden layer: linear -> batch norm -> ReLU -> dropout(p, training
only); the output layer is linear, and the head is a softmax (multiclass)
or elementwise sigmoid (multilabel).

The hyperparameter lattice is 2 layer counts x 4 learning rates x 2 weight
initializations = 16 points; a seeded Fisher-Yates shuffle picks the 8
deterministic grid points actually searched.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import HearnessError

HIDDEN_LAYER_CHOICES = (1, 2)
LEARNING_RATE_CHOICES = (3.2e-3, 1e-3, 3.2e-4, 1e-4)
INIT_CHOICES = ("xavier_uniform", "xavier_normal")

HIDDEN_DIM = 1024
DROPOUT = 0.1
BATCH_SIZE = 1024

BN_EPS = 1e-5
BN_MOMENTUM = 0.1
ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


class NonFiniteActivation(HearnessError):
    """A forward pass produced NaN or infinity (training has diverged)."""


@dataclass(frozen=True)
class GridPoint:
    """One concrete combination of downstream hyperparameters."""

    hidden_layers: int
    learning_rate: float
    init: str
    hidden_dim: int = HIDDEN_DIM
    dropout: float = DROPOUT
    batch_size: int = BATCH_SIZE
    optimizer: str = "adam"

    def __post_init__(self):
        if self.hidden_layers not in HIDDEN_LAYER_CHOICES:
            raise ValueError(f"hidden_layers must be one of {HIDDEN_LAYER_CHOICES}")
        if self.learning_rate not in LEARNING_RATE_CHOICES:
            raise ValueError(f"learning_rate must be one of {LEARNING_RATE_CHOICES}")
        if self.init not in INIT_CHOICES:
            raise ValueError(f"init must be one of {INIT_CHOICES}")
        if self.optimizer != "adam":
            raise ValueError("only adam is supported")

    def to_json(self) -> dict:
        return {
            "hidden_layers": self.hidden_layers,
            "hidden_dim": self.hidden_dim,
            "dropout": self.dropout,
            "learning_rate": self.learning_rate,
            "batch_size": self.batch_size,
            "init": self.init,
            "optimizer": self.optimizer,
        }


def grid_lattice() -> list[GridPoint]:
    """The full 16-point lattice in fixed lexicographic order (layers, lr, init)."""
    return [
        GridPoint(hidden_layers=layers, learning_rate=lr, init=init)
        for layers in HIDDEN_LAYER_CHOICES
        for lr in LEARNING_RATE_CHOICES
        for init in INIT_CHOICES
    ]


def make_grid(seed: int) -> list[GridPoint]:
    """8 deterministic random grid points out of the 16 possible.

    A seeded Fisher-Yates shuffle of the lattice, taking the first 8; the
    same seed always yields the same ordered list.
    """
    lattice = grid_lattice()
    rng = np.random.default_rng(seed)
    for i in range(len(lattice) - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        lattice[i], lattice[j] = lattice[j], lattice[i]
    return lattice[:8]


# --- the predictor --------------------------------------------------------


def _xavier(rng, fan_in: int, fan_out: int, init: str, dtype) -> np.ndarray:
    if init == "xavier_uniform":
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-bound, bound, size=(fan_in, fan_out))
    else:
        w = rng.normal(0.0, np.sqrt(2.0 / (fan_in + fan_out)), size=(fan_in, fan_out))
    return w.astype(dtype)


class Mlp:
    """Feed-forward probe over frozen embeddings.

    head: "multiclass" (softmax) or "multilabel" (sigmoid).  Parameters live
    in ``self.params`` (name -> array); batch-norm running statistics in
    ``self.running_mean`` / ``self.running_var``.
    """

    def __init__(
        self,
        in_dim: int,
        out_dim: int,
        hidden_dims: list[int],
        head: str,
        init: str = "xavier_uniform",
        dropout: float = DROPOUT,
        seed: int = 0,
        dtype=np.float32,
    ):
        if head not in ("multiclass", "multilabel"):
            raise ValueError("head must be multiclass or multilabel")
        if init not in INIT_CHOICES:
            raise ValueError(f"init must be one of {INIT_CHOICES}")
        self.in_dim = in_dim
        self.out_dim = out_dim
        self.hidden_dims = list(hidden_dims)
        self.head = head
        self.dropout = dropout
        self.dtype = np.dtype(dtype)

        rng = np.random.default_rng(seed)
        self.params: dict[str, np.ndarray] = {}
        self.running_mean: list[np.ndarray] = []
        self.running_var: list[np.ndarray] = []
        fan_in = in_dim
        for i, width in enumerate(self.hidden_dims):
            self.params[f"W{i}"] = _xavier(rng, fan_in, width, init, self.dtype)
            self.params[f"b{i}"] = np.zeros(width, dtype=self.dtype)
            self.params[f"gamma{i}"] = np.ones(width, dtype=self.dtype)
            self.params[f"beta{i}"] = np.zeros(width, dtype=self.dtype)
            self.running_mean.append(np.zeros(width, dtype=self.dtype))
            self.running_var.append(np.ones(width, dtype=self.dtype))
            fan_in = width
        self.params["W_out"] = _xavier(rng, fan_in, out_dim, init, self.dtype)
        self.params["b_out"] = np.zeros(out_dim, dtype=self.dtype)
        self._default_dropout_rng = np.random.default_rng(seed + 1)

    @classmethod
    def from_grid_point(
        cls, gp: GridPoint, in_dim: int, out_dim: int, head: str, seed: int,
        dtype=np.float32,
    ) -> "Mlp":
        return cls(
            in_dim=in_dim,
            out_dim=out_dim,
            hidden_dims=[gp.hidden_dim] * gp.hidden_layers,
            head=head,
            init=gp.init,
            dropout=gp.dropout,
            seed=seed,
            dtype=dtype,
        )

    @property
    def n_trainable_params(self) -> int:
        return sum(p.size for p in self.params.values())

    def state_copy(self) -> dict:
        return {
            "params": {k: v.copy() for k, v in self.params.items()},
            "running_mean": [m.copy() for m in self.running_mean],
            "running_var": [v.copy() for v in self.running_var],
        }

    def load_state(self, state: dict) -> None:
        for key, value in state["params"].items():
            self.params[key][...] = value
        for mine, saved in zip(self.running_mean, state["running_mean"]):
            mine[...] = saved
        for mine, saved in zip(self.running_var, state["running_var"]):
            mine[...] = saved

    # -- forward ----------------------------------------------------------

    def _forward(self, x: np.ndarray, training: bool, dropout_rng=None):
        """Logits plus per-layer caches for the backward pass."""
        x = np.asarray(x, dtype=self.dtype)
        caches = []
        act = x
        for i in range(len(self.hidden_dims)):
            z = act @ self.params[f"W{i}"] + self.params[f"b{i}"]
            if training:
                mu = z.mean(axis=0)
                var = z.var(axis=0)
                self.running_mean[i][...] = (
                    (1 - BN_MOMENTUM) * self.running_mean[i] + BN_MOMENTUM * mu
                )
                self.running_var[i][...] = (
                    (1 - BN_MOMENTUM) * self.running_var[i] + BN_MOMENTUM * var
                )
            else:
                mu = self.running_mean[i]
                var = self.running_var[i]
            inv_std = 1.0 / np.sqrt(var + self.dtype.type(BN_EPS))
            z_hat = (z - mu) * inv_std
            y = self.params[f"gamma{i}"] * z_hat + self.params[f"beta{i}"]
            r = np.maximum(y, 0)
            if training and self.dropout > 0:
                rng = dropout_rng or self._default_dropout_rng
                keep = 1.0 - self.dropout
                mask = (rng.random(r.shape) < keep).astype(self.dtype) / self.dtype.type(keep)
                a = r * mask
            else:
                mask = None
                a = r
            caches.append(
                {"x": act, "z": z, "z_hat": z_hat, "inv_std": inv_std, "y": y,
                 "mask": mask, "training": training}
            )
            act = a
        logits = act @ self.params["W_out"] + self.params["b_out"]
        caches.append({"x": act})
        if not np.all(np.isfinite(logits)):
            raise NonFiniteActivation("non-finite activations in forward pass")
        return logits, caches

    def forward(self, x: np.ndarray, training: bool = False, dropout_rng=None) -> np.ndarray:
        """Class probabilities: softmax rows (multiclass) or sigmoids (multilabel)."""
        logits, _ = self._forward(x, training, dropout_rng)
        return self.probabilities(logits)

    def probabilities(self, logits: np.ndarray) -> np.ndarray:
        if self.head == "multiclass":
            shifted = logits - logits.max(axis=1, keepdims=True)
            exp = np.exp(shifted)
            return exp / exp.sum(axis=1, keepdims=True)
        return 1.0 / (1.0 + np.exp(-logits))

    # -- loss and gradients -------------------------------------------------

    def loss_and_grad(self, x: np.ndarray, targets: np.ndarray,
                      training: bool = True, dropout_rng=None):
        """Cross-entropy loss and gradients for every parameter.

        Multiclass: ``targets`` are integer class ids; softmax cross-entropy
        averaged over the batch.  Multilabel: ``targets`` is a binary (B, C)
        matrix; per-class binary cross-entropy summed over classes, averaged
        over the batch.
        """
        logits, caches = self._forward(x, training, dropout_rng)
        batch = logits.shape[0]
        if self.head == "multiclass":
            shifted = logits - logits.max(axis=1, keepdims=True)
            log_z = np.log(np.exp(shifted).sum(axis=1)) + logits.max(axis=1)
            loss = float(np.mean(log_z - logits[np.arange(batch), targets]))
            probs = self.probabilities(logits)
            d_logits = probs
            d_logits[np.arange(batch), targets] -= 1.0
            d_logits /= batch
        else:
            t = np.asarray(targets, dtype=self.dtype)
            softplus = np.logaddexp(0.0, logits)
            loss = float(np.sum(softplus - t * logits) / batch)
            d_logits = (self.probabilities(logits) - t) / batch
        d_logits = d_logits.astype(self.dtype)
        grads = self._backward(d_logits, caches)
        return loss, grads

    def _backward(self, d_logits: np.ndarray, caches) -> dict[str, np.ndarray]:
        grads: dict[str, np.ndarray] = {}
        out_cache = caches[-1]
        grads["W_out"] = out_cache["x"].T @ d_logits
        grads["b_out"] = d_logits.sum(axis=0)
        d_act = d_logits @ self.params["W_out"].T

        for i in reversed(range(len(self.hidden_dims))):
            cache = caches[i]
            if cache["mask"] is not None:
                d_act = d_act * cache["mask"]
            d_y = d_act * (cache["y"] > 0)
            grads[f"gamma{i}"] = (d_y * cache["z_hat"]).sum(axis=0)
            grads[f"beta{i}"] = d_y.sum(axis=0)
            d_zhat = d_y * self.params[f"gamma{i}"]
            if cache["training"]:
                # backprop through the batch statistics
                inv_std = cache["inv_std"]
                z_hat = cache["z_hat"]
                d_z = (
                    d_zhat
                    - d_zhat.mean(axis=0)
                    - z_hat * (d_zhat * z_hat).mean(axis=0)
                ) * inv_std
            else:
                d_z = d_zhat * cache["inv_std"]
            grads[f"W{i}"] = cache["x"].T @ d_z
            grads[f"b{i}"] = d_z.sum(axis=0)
            d_act = d_z @ self.params[f"W{i}"].T
        return grads


def init_predictor(gp: GridPoint, in_dim: int, out_dim: int, seed: int,
                   head: str = "multiclass", dtype=np.float32) -> Mlp:
    """Build the probe for one grid point; same seed gives identical weights."""
    return Mlp.from_grid_point(gp, in_dim, out_dim, head=head, seed=seed, dtype=dtype)


class Adam:
    """Adam with bias correction; no weight decay, no gradient clipping."""

    def __init__(self, params: dict[str, np.ndarray], learning_rate: float):
        self.learning_rate = learning_rate
        self.t = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray], grads: dict[str, np.ndarray]) -> None:
        self.t += 1
        b1_corr = 1.0 - ADAM_BETA1**self.t
        b2_corr = 1.0 - ADAM_BETA2**self.t
        for key, grad in grads.items():
            m = self.m[key]
            v = self.v[key]
            m[...] = ADAM_BETA1 * m + (1.0 - ADAM_BETA1) * grad
            v[...] = ADAM_BETA2 * v + (1.0 - ADAM_BETA2) * grad * grad
            m_hat = m / b1_corr
            v_hat = v / b2_corr
            params[key] -= self.learning_rate * m_hat / (np.sqrt(v_hat) + ADAM_EPS)
