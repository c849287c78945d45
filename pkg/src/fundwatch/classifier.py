"""Feedforward scoring network: 2 inputs (delta1, delta2), one sigmoid output.

A three-layer network (input, one hidden layer, output) trained by plain
per-example stochastic gradient descent on squared error, sigmoid activations
throughout. The hot loop is a numba kernel so the default 5000 training
cycles over a few thousand examples finish in about a second; everything is
deterministic under the configured seed, including the per-cycle shuffle
(own xorshift64* Fisher-Yates, independent of library RNG internals).

The batch forward pass replays the kernel's accumulation order exactly, so a
point scored one-at-a-time and in bulk yields bit-identical degrees.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from numba import njit

from .errors import ConfigurationError, RequestError, TrainingError
from .features import DeltaPoint, PeriodGranularity


@dataclass(frozen=True)
class NetworkConfig:
    layer_sizes: tuple[int, int, int] = (2, 5, 1)
    training_cycles: int = 5000
    learning_rate: float = 0.25
    rng_seed: int = 0

    def __post_init__(self) -> None:
        sizes = tuple(self.layer_sizes)
        object.__setattr__(self, "layer_sizes", sizes)
        if len(sizes) != 3:
            raise ConfigurationError("exactly 3 layers required (input, hidden, output)")
        if sizes[0] != 2:
            raise ConfigurationError("input width must be 2 (delta1, delta2)")
        if sizes[2] != 1:
            raise ConfigurationError("output width must be 1")
        if sizes[1] < 1:
            raise ConfigurationError("hidden width must be >= 1")
        if self.training_cycles < 0:
            raise ConfigurationError("training_cycles must be >= 0")
        if self.learning_rate <= 0:
            raise ConfigurationError("learning_rate must be > 0")


@dataclass
class TrainedModel:
    config: NetworkConfig
    granularity: PeriodGranularity | None
    w1: np.ndarray  # (hidden, 2)
    b1: np.ndarray  # (hidden,)
    w2: np.ndarray  # (hidden,)
    b2: np.ndarray  # (1,)
    final_loss: float
    loss_history: list[float]
    training_set_fingerprint: str = ""
    created_at: str = ""


@dataclass
class TrainingSet:
    """Labeled points: the accepted cluster as positives, sampled rest as negatives."""

    positives: list[DeltaPoint]
    negatives: list[DeltaPoint]
    negative_sampling_rate: float

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        for label, group in (("1", self.positives), ("0", self.negatives)):
            for p in group:
                h.update(f"{label},{p.delta1!r},{p.delta2!r}\n".encode())
        return h.hexdigest()


def build_training_set(
    points: Sequence[DeltaPoint],
    clustering,
    suspicious_cluster_index: int,
    rate: float,
    rng_seed: int,
    *,
    population: Sequence[DeltaPoint] | None = None,
    exclude_customer_funds: frozenset[tuple[str, str]] = frozenset(),
    rate_bounds: tuple[float, float] = (0.05, 0.10),
) -> TrainingSet:
    """Assemble positives from the suspicious cluster and sample negatives.

    `points` are the points the clustering ran over (assignments align with
    them). Negatives are drawn uniformly without replacement from
    `population` (defaults to `points`) minus the suspicious members, at
    ceil(rate x pool size), deterministic under rng_seed. Customer/fund pairs
    in `exclude_customer_funds` (analyst-confirmed benign exchanges) never
    become positives.
    """
    lo, hi = rate_bounds
    if not lo <= rate <= hi:
        raise ConfigurationError(f"sampling rate {rate} outside [{lo}, {hi}]")
    if not 0 <= suspicious_cluster_index < len(clustering.centroids):
        raise RequestError(f"no such cluster: {suspicious_cluster_index}")
    if len(clustering.assignments) != len(points):
        raise ConfigurationError("clustering does not align with the given points")

    suspicious = [
        p
        for p, a in zip(points, clustering.assignments)
        if a == suspicious_cluster_index
    ]
    suspicious_ids = {p.point_id for p in suspicious}
    positives = [
        p
        for p in suspicious
        if (p.aggregate.customer_id, p.aggregate.fund_id) not in exclude_customer_funds
    ]
    if not positives:
        raise TrainingError("suspicious cluster is empty; nothing to learn from")

    pool = [p for p in (population if population is not None else points) if p.point_id not in suspicious_ids]
    want = math.ceil(rate * len(pool))
    if want >= len(pool):
        negatives = list(pool)
    else:
        rng = np.random.default_rng(rng_seed)
        chosen = rng.choice(len(pool), size=want, replace=False)
        chosen.sort()
        negatives = [pool[i] for i in chosen]
    return TrainingSet(positives=positives, negatives=negatives, negative_sampling_rate=rate)


@njit(cache=True)
def _forward1(w1, b1, w2, b2, x0, x1):  # pragma: no cover - jitted
    h = w1.shape[0]
    z2 = b2[0]
    for j in range(h):
        z1 = w1[j, 0] * x0 + w1[j, 1] * x1 + b1[j]
        a1 = 1.0 / (1.0 + np.exp(-z1))
        z2 += w2[j] * a1
    return 1.0 / (1.0 + np.exp(-z2))


@njit(cache=True)
def _grad1(w1, b1, w2, b2, x0, x1, t, gw1, gb1, gw2, gb2):  # pragma: no cover - jitted
    """Per-example loss 0.5*(o-t)^2 and its gradients, written into g* arrays."""
    h = w1.shape[0]
    a1 = np.empty(h)
    z2 = b2[0]
    for j in range(h):
        z1 = w1[j, 0] * x0 + w1[j, 1] * x1 + b1[j]
        a1[j] = 1.0 / (1.0 + np.exp(-z1))
        z2 += w2[j] * a1[j]
    o = 1.0 / (1.0 + np.exp(-z2))
    err = o - t
    d2 = err * o * (1.0 - o)
    gb2[0] = d2
    for j in range(h):
        gw2[j] = d2 * a1[j]
        d1 = w2[j] * d2 * a1[j] * (1.0 - a1[j])
        gw1[j, 0] = d1 * x0
        gw1[j, 1] = d1 * x1
        gb1[j] = d1
    return 0.5 * err * err


@njit(cache=True)
def _sgd(w1, b1, w2, b2, xs, ts, cycles, lr, shuffle_seed, losses):  # pragma: no cover - jitted
    """In-place SGD; returns (status, cycle, example) with status 1 on non-finite loss."""
    n = xs.shape[0]
    h = w1.shape[0]
    gw1 = np.empty((h, 2))
    gb1 = np.empty(h)
    gw2 = np.empty(h)
    gb2 = np.empty(1)
    order = np.arange(n)
    state = np.uint64(shuffle_seed) ^ np.uint64(0x9E3779B97F4A7C15)
    if state == np.uint64(0):
        state = np.uint64(0x9E3779B97F4A7C15)
    for c in range(cycles):
        for i in range(n - 1, 0, -1):
            state ^= state >> np.uint64(12)
            state ^= state << np.uint64(25)
            state ^= state >> np.uint64(27)
            r = state * np.uint64(0x2545F4914F6CDD1D)
            j = int(r % np.uint64(i + 1))
            tmp = order[i]
            order[i] = order[j]
            order[j] = tmp
        total = 0.0
        for ii in range(n):
            idx = order[ii]
            loss = _grad1(w1, b1, w2, b2, xs[idx, 0], xs[idx, 1], ts[idx], gw1, gb1, gw2, gb2)
            if not np.isfinite(loss):
                return 1, c, int(idx)
            total += loss
            for j in range(h):
                w1[j, 0] -= lr * gw1[j, 0]
                w1[j, 1] -= lr * gw1[j, 1]
                b1[j] -= lr * gb1[j]
                w2[j] -= lr * gw2[j]
            b2[0] -= lr * gb2[0]
        losses[c] = total / n
    return 0, -1, -1


def _init_weights(config: NetworkConfig) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    hidden = config.layer_sizes[1]
    rng = np.random.default_rng(config.rng_seed)
    w1 = rng.uniform(-0.5, 0.5, size=(hidden, 2))
    b1 = rng.uniform(-0.5, 0.5, size=hidden)
    w2 = rng.uniform(-0.5, 0.5, size=hidden)
    b2 = rng.uniform(-0.5, 0.5, size=1)
    return w1, b1, w2, b2


def _examples(training_set: TrainingSet) -> tuple[np.ndarray, np.ndarray]:
    xs = np.array(
        [(p.delta1, p.delta2) for p in training_set.positives]
        + [(p.delta1, p.delta2) for p in training_set.negatives],
        dtype=np.float64,
    ).reshape(-1, 2)
    ts = np.array(
        [1.0] * len(training_set.positives) + [0.0] * len(training_set.negatives)
    )
    return xs, ts


def train(
    training_set: TrainingSet,
    config: NetworkConfig,
    granularity: PeriodGranularity | None = None,
    created_at: str = "",
) -> TrainedModel:
    """Train the network; fully determined by (training set, config)."""
    if not training_set.positives or not training_set.negatives:
        raise TrainingError("training requires non-empty positives and negatives")
    xs, ts = _examples(training_set)
    w1, b1, w2, b2 = _init_weights(config)
    losses = np.zeros(config.training_cycles)
    status, cycle, example = _sgd(
        w1, b1, w2, b2, xs, ts, config.training_cycles, config.learning_rate, config.rng_seed, losses
    )
    if status != 0:
        raise TrainingError(f"non-finite loss at cycle {cycle}, example {example}")
    if config.training_cycles > 0:
        final_loss = float(losses[-1])
        history = [float(v) for v in losses]
    else:
        per = [
            0.5 * (float(_forward1(w1, b1, w2, b2, x[0], x[1])) - t) ** 2
            for x, t in zip(xs, ts)
        ]
        final_loss = float(np.mean(per))
        history = []
    return TrainedModel(
        config=config,
        granularity=granularity,
        w1=w1,
        b1=b1,
        w2=w2,
        b2=b2,
        final_loss=final_loss,
        loss_history=history,
        training_set_fingerprint=training_set.fingerprint(),
        created_at=created_at,
    )


def predict(model: TrainedModel, point: DeltaPoint | tuple[float, float]) -> float:
    """Suspicious degree in (0, 1) for one point; a single forward pass.

    Delegates to predict_batch so one-at-a-time and bulk scoring share the
    exact numeric path (numpy's vectorized exp differs from libm's by an ulp
    or two, which would otherwise leak into stored degrees).
    """
    if isinstance(point, DeltaPoint):
        if model.granularity is not None and point.aggregate.granularity is not model.granularity:
            raise RequestError(
                f"model trained for {model.granularity.value}, "
                f"point is {point.aggregate.granularity.value}"
            )
        x0, x1 = point.delta1, point.delta2
    else:
        x0, x1 = point
    return float(predict_batch(model, np.array([[x0, x1]], dtype=np.float64))[0])


def predict_batch(model: TrainedModel, xy: np.ndarray) -> np.ndarray:
    """Vectorized degrees for an (n, 2) array."""
    xy = np.asarray(xy, dtype=np.float64)
    # accumulation order mirrors _forward1 per hidden unit
    z2 = np.full(len(xy), model.b2[0])
    for j in range(model.w1.shape[0]):
        z1 = model.w1[j, 0] * xy[:, 0] + model.w1[j, 1] * xy[:, 1] + model.b1[j]
        z2 = z2 + model.w2[j] * (1.0 / (1.0 + np.exp(-z1)))
    return 1.0 / (1.0 + np.exp(-z2))


def gradient_check(
    config: NetworkConfig, sample: tuple[tuple[float, float], float], step: float = 1e-5
) -> float:
    """Max relative error between analytic gradients and central differences.

    Checks every weight and bias of a network initialized from config.rng_seed
    on the single labeled sample. The finite-difference side only ever calls
    the forward pass, so it is independent of the backprop under test.
    """
    (x0, x1), target = sample
    w1, b1, w2, b2 = _init_weights(config)
    h = config.layer_sizes[1]
    gw1 = np.empty((h, 2))
    gb1 = np.empty(h)
    gw2 = np.empty(h)
    gb2 = np.empty(1)
    _grad1(w1, b1, w2, b2, x0, x1, target, gw1, gb1, gw2, gb2)

    def loss() -> float:
        o = _forward1(w1, b1, w2, b2, x0, x1)
        return 0.5 * (o - target) ** 2

    worst = 0.0
    for arr, grad in ((w1, gw1), (b1, gb1), (w2, gw2), (b2, gb2)):
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            keep = flat[i]
            flat[i] = keep + step
            up = loss()
            flat[i] = keep - step
            down = loss()
            flat[i] = keep
            fd = (up - down) / (2.0 * step)
            denom = max(abs(gflat[i]), abs(fd), 1e-6)
            rel = abs(gflat[i] - fd) / denom
            if rel > worst:
                worst = rel
    return worst


def model_fingerprint(model: TrainedModel) -> str:
    """Stable identity of the learned function; excludes created_at."""
    doc = _model_doc(model)
    doc.pop("created_at", None)
    return hashlib.sha256(
        json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    ).hexdigest()


def _model_doc(model: TrainedModel) -> dict:
    return {
        "config": {
            "layer_sizes": list(model.config.layer_sizes),
            "training_cycles": model.config.training_cycles,
            "learning_rate": model.config.learning_rate,
            "rng_seed": model.config.rng_seed,
        },
        "granularity": model.granularity.value if model.granularity else None,
        "weights": [
            [[float(v) for v in row] for row in model.w1],
            [[float(v) for v in model.w2]],
        ],
        "biases": [[float(v) for v in model.b1], [float(model.b2[0])]],
        "final_loss": model.final_loss,
        "created_at": model.created_at,
        "training_set_fingerprint": model.training_set_fingerprint,
    }


def model_to_json(model: TrainedModel) -> str:
    """Serialize with full round-trip float precision (shortest exact repr)."""
    return json.dumps(_model_doc(model), indent=2) + "\n"


def model_from_json(text: str) -> TrainedModel:
    doc = json.loads(text)
    cfg = doc["config"]
    config = NetworkConfig(
        layer_sizes=tuple(cfg["layer_sizes"]),
        training_cycles=cfg["training_cycles"],
        learning_rate=cfg["learning_rate"],
        rng_seed=cfg["rng_seed"],
    )
    hidden = config.layer_sizes[1]
    w1 = np.array(doc["weights"][0], dtype=np.float64).reshape(hidden, 2)
    w2 = np.array(doc["weights"][1], dtype=np.float64).reshape(hidden)
    b1 = np.array(doc["biases"][0], dtype=np.float64).reshape(hidden)
    b2 = np.array(doc["biases"][1], dtype=np.float64).reshape(1)
    if not (np.isfinite(w1).all() and np.isfinite(w2).all() and np.isfinite(b1).all() and np.isfinite(b2).all()):
        raise ConfigurationError("model contains non-finite weights")
    gran = doc.get("granularity")
    return TrainedModel(
        config=config,
        granularity=PeriodGranularity(gran) if gran else None,
        w1=w1,
        b1=b1,
        w2=w2,
        b2=b2,
        final_loss=doc["final_loss"],
        loss_history=[],
        training_set_fingerprint=doc.get("training_set_fingerprint", ""),
        created_at=doc.get("created_at", ""),
    )


def save_model(model: TrainedModel, path: str | Path) -> None:
    Path(path).write_text(model_to_json(model))


def load_model(path: str | Path) -> TrainedModel:
    return model_from_json(Path(path).read_text())
