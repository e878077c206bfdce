"""Behavior-cloning trainer, checkpoint container, and policy evaluation.

Training is plain supervised learning on expert traces: shuffled
instance batches, one Adam step per batch, learning rate decayed by a
constant factor each epoch. After every epoch the greedy policy is
rolled out on a validation set and its mean makespan gap against the
expert is logged (newline-delimited JSON records).

Checkpoints are a single file: one JSON manifest line (format version,
architecture, epoch, metrics, per-tensor offsets) followed by packed
little-endian float32 tensors, parameters and batch-norm buffers alike.
"""

from __future__ import annotations

import json
import time
from dataclasses import asdict, dataclass

import numpy as np

from .autograd import Tensor
from .core import Instance, gap_percent, makespan
from .env import ExpertTrace
from .errors import DataError, ValidationError
from .heuristics import neh
from .policy import PolicyConfig, PolicyParams, TraceBatch, bc_loss, rollout_greedy

__all__ = [
    "TrainConfig",
    "Adam",
    "train",
    "evaluate",
    "save_checkpoint",
    "load_checkpoint",
]

_FORMAT = "flowshop-checkpoint"
_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    """Optimization schedule plus the architecture to train.

    The *_path fields record where the run's data came from (the CLI
    fills them); train() itself consumes already-loaded traces.
    """

    policy: PolicyConfig
    epochs: int
    batch_size: int = 128
    learning_rate: float = 1e-4
    lr_decay: float = 0.96
    seed: int = 0
    checkpoint_path: str | None = None
    checkpoint_every: int = 0  # epochs between intermediate checkpoints, 0 = final only
    log_path: str | None = None
    traces_path: str | None = None
    dataset_path: str | None = None
    val_dataset_path: str | None = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ValidationError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if not 0 < self.lr_decay <= 1:
            raise ValidationError("lr_decay must be in (0, 1]")
        if self.checkpoint_every < 0:
            raise ValidationError("checkpoint_every must be >= 0")


class Adam:
    """Adaptive-moment optimizer with the standard defaults."""

    def __init__(self, tensors: dict[str, Tensor], beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.tensors = tensors
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.steps = 0
        self._m = {k: np.zeros_like(t.data) for k, t in tensors.items()}
        self._v = {k: np.zeros_like(t.data) for k, t in tensors.items()}

    def step(self, grads: dict[str, np.ndarray], lr: float) -> None:
        self.steps += 1
        b1, b2 = self.beta1, self.beta2
        correction1 = 1.0 - b1**self.steps
        correction2 = 1.0 - b2**self.steps
        for name, g in grads.items():
            m = self._m[name]
            v = self._v[name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * g * g
            update = (m / correction1) / (np.sqrt(v / correction2) + self.eps)
            self.tensors[name].data -= lr * update


def train(
    config: TrainConfig,
    traces: list[ExpertTrace],
    val_instances: list[Instance] | None = None,
    expert_makespans: np.ndarray | None = None,
) -> tuple[PolicyParams, list[dict]]:
    """Clone the expert from traces; returns trained params and epoch history.

    Deterministic for a fixed seed: initialization and batch shuffling
    draw from one PCG64 stream. When a validation set is given (optionally
    with precomputed expert makespans), each epoch records the greedy
    rollout gap; history rows mirror the JSONL training log.
    """
    if not traces:
        raise ValidationError("cannot train on an empty trace set")
    for tr in traces:
        if tr.instance.m != config.policy.machines:
            raise ValidationError(
                f"trace instance {tr.instance.name!r} has {tr.instance.m} machines, "
                f"config expects {config.policy.machines}"
            )
    if val_instances and expert_makespans is None:
        expert_makespans = np.array([neh(inst)[1] for inst in val_instances])

    rng = np.random.Generator(np.random.PCG64(config.seed))
    params = PolicyParams.init(config.policy, seed=config.seed)
    optimizer = Adam(params.tensors)

    # graphs never change, so batch assembly is done once per trace
    prepared = [TraceBatch.from_traces([tr], config.policy) for tr in traces]

    def stack(batch_members: list[TraceBatch]) -> TraceBatch:
        return TraceBatch(
            features=np.concatenate([b.features for b in batch_members]),
            neighbors=np.concatenate([b.neighbors for b in batch_members]),
            distances=np.concatenate([b.distances for b in batch_members]),
            actions=np.concatenate([b.actions for b in batch_members]),
        )

    log_fh = open(config.log_path, "w", encoding="utf-8") if config.log_path else None
    history: list[dict] = []
    started = time.perf_counter()
    try:
        for epoch in range(config.epochs):
            lr = config.learning_rate * config.lr_decay**epoch
            order = rng.permutation(len(prepared))
            total, seen = 0.0, 0
            for lo in range(0, len(order), config.batch_size):
                members = [prepared[i] for i in order[lo : lo + config.batch_size]]
                batch = stack(members)
                loss, grads = bc_loss(params, batch, mode="train")
                optimizer.step(grads, lr)
                total += loss * batch.size
                seen += batch.size
            record = {
                "epoch": epoch,
                "train_loss": total / seen,
                "val_gap": None,
                "elapsed_s": time.perf_counter() - started,
            }
            if val_instances:
                result = evaluate(params, val_instances, expert_makespans)
                record["val_gap"] = result["mean_gap_pct"]
            history.append(record)
            if log_fh:
                log_fh.write(json.dumps(record) + "\n")
                log_fh.flush()
            if (
                config.checkpoint_path
                and config.checkpoint_every
                and (epoch + 1) % config.checkpoint_every == 0
                and epoch + 1 < config.epochs
            ):
                save_checkpoint(f"{config.checkpoint_path}.epoch{epoch + 1}", params, epoch + 1, record)
        if config.checkpoint_path:
            save_checkpoint(config.checkpoint_path, params, config.epochs, history[-1])
    finally:
        if log_fh:
            log_fh.close()
    return params, history


def evaluate(
    params: PolicyParams,
    instances: list[Instance],
    expert_makespans: np.ndarray | None = None,
) -> dict:
    """Greedy-rollout report: per-instance makespans and gaps vs the expert."""
    for inst in instances:
        if inst.m != params.config.machines:
            raise ValidationError(
                f"instance {inst.name!r} has {inst.m} machines, model expects {params.config.machines}"
            )
    if expert_makespans is None:
        expert_makespans = np.array([neh(inst)[1] for inst in instances])
    expert_makespans = np.asarray(expert_makespans, dtype=np.float64)
    if expert_makespans.shape != (len(instances),):
        raise ValidationError("expert_makespans must align with the instance list")

    started = time.perf_counter()
    makespans = np.empty(len(instances))
    for idx, inst in enumerate(instances):
        perm = rollout_greedy(params, inst)
        makespans[idx] = makespan(inst, perm)
    elapsed = time.perf_counter() - started
    gaps = np.array([gap_percent(v, e) for v, e in zip(makespans, expert_makespans)])
    return {
        "makespans": makespans,
        "gaps": gaps,
        "mean_makespan": float(makespans.mean()),
        "mean_gap_pct": float(gaps.mean()),
        "time_s": elapsed,
    }


def save_checkpoint(path, params: PolicyParams, epoch: int | None = None, metrics: dict | None = None) -> None:
    """One JSON manifest line plus packed float32 tensors (params then buffers)."""
    entries = []
    blobs = []
    offset = 0
    for kind, table in (("param", params.tensors), ("buffer", params.buffers)):
        for name, value in table.items():
            data = value.data if kind == "param" else value
            raw = np.ascontiguousarray(data, dtype="<f4").tobytes()
            entries.append({"name": name, "kind": kind, "shape": list(data.shape), "offset": offset, "nbytes": len(raw)})
            blobs.append(raw)
            offset += len(raw)
    manifest = {
        "format": _FORMAT,
        "version": _VERSION,
        "policy": asdict(params.config),
        "epoch": epoch,
        "metrics": metrics,
        "tensors": entries,
    }
    with open(path, "wb") as fh:
        fh.write(json.dumps(manifest).encode("utf-8") + b"\n")
        for raw in blobs:
            fh.write(raw)


def load_checkpoint(path) -> tuple[PolicyParams, dict]:
    """Inverse of :func:`save_checkpoint`; returns params and the manifest."""
    with open(path, "rb") as fh:
        line = fh.readline()
        body = fh.read()
    try:
        manifest = json.loads(line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"unreadable checkpoint manifest: {exc}") from exc
    if manifest.get("format") != _FORMAT:
        raise DataError(f"not a {_FORMAT} file")
    if manifest.get("version") != _VERSION:
        raise DataError(f"unsupported checkpoint version {manifest.get('version')!r}")
    config = PolicyConfig(**manifest["policy"])
    tensors: dict[str, Tensor] = {}
    buffers: dict[str, np.ndarray] = {}
    for entry in manifest["tensors"]:
        lo, hi = entry["offset"], entry["offset"] + entry["nbytes"]
        if hi > len(body):
            raise DataError("checkpoint body is shorter than the manifest claims")
        data = np.frombuffer(body[lo:hi], dtype="<f4").astype(np.float64).reshape(entry["shape"])
        if entry["kind"] == "param":
            tensors[entry["name"]] = Tensor(data, requires_grad=True)
        else:
            buffers[entry["name"]] = data
    return PolicyParams(config, tensors, buffers), manifest
