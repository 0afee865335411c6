"""Training orchestration: rounds, epochs, batches, schedules, optimizer.

Every round rebuilds the neighbor lists and curriculum selection from the
memory bank, then runs a fixed number of epochs. Per batch: both branches
are encoded, the three losses and their gradients are combined, weights
take a Nesterov momentum step, and the memory rows of the batch instances
are EMA-updated with the plain-branch embeddings.

At each round boundary the live state (weights, memory, momentum) is
rounded through the checkpoint storage precision (float32) whether or not
a checkpoint file is written, so resuming from a round checkpoint
reproduces the uninterrupted run exactly.
"""

import json
import os
from dataclasses import dataclass

import numpy as np

from .augmentation import augment
from .checkpoint import Checkpoint, load_checkpoint, round_f32, save_checkpoint
from .config import TrainConfig
from .data_io import Dataset
from .encoder import (
    EncoderParams,
    EncoderShape,
    encode_backward_batch,
    encode_batch,
    init_encoder,
)
from .errors import NumericFailure, ParameterError
from .losses import BatchMembership, and_loss, aug_loss, total_loss, ue_loss
from .memory_bank import MemoryBank
from .neighborhood import build_state


@dataclass
class OptimizerState:
    """Per-parameter momentum buffers, zero-initialized."""

    buffers: EncoderParams

    @classmethod
    def for_params(cls, params: EncoderParams) -> "OptimizerState":
        return cls(EncoderParams.zeros_like(params))


@dataclass
class TrainResult:
    params: EncoderParams
    bank: MemoryBank
    metrics: list
    config: TrainConfig


def schedules(epoch_in_round: int, cfg: TrainConfig):
    """(learning rate, entropy-loss weight) for a 0-based epoch in a round.

    The rate holds at base_lr until lr_decay_start, then shrinks by
    lr_decay_factor per completed lr_decay_every block; the entropy weight
    steps up by ue_weight_step every ue_weight_every epochs from zero.
    """
    if epoch_in_round < cfg.lr_decay_start:
        lr = cfg.base_lr
    else:
        blocks = (epoch_in_round - cfg.lr_decay_start) // cfg.lr_decay_every + 1
        lr = cfg.base_lr * cfg.lr_decay_factor**blocks
    w = cfg.ue_weight_step * (epoch_in_round // cfg.ue_weight_every)
    return lr, w


def nesterov_step(
    params: EncoderParams, grads: EncoderParams, state: OptimizerState, lr: float, mu: float
) -> None:
    """buf <- mu*buf + g; p <- p - lr*(g + mu*buf), per scalar parameter."""
    for name in EncoderParams.FIELDS:
        p = getattr(params, name)
        g = getattr(grads, name)
        buf = getattr(state.buffers, name)
        if p.shape != g.shape:
            raise ParameterError(f"gradient shape {g.shape} mismatches parameter {name} {p.shape}")
        buf *= mu
        buf += g
        p -= lr * (g + mu * buf)
    params.version += 1


def _add_grads(a: EncoderParams, b: EncoderParams) -> EncoderParams:
    return EncoderParams(a.shape, *(ga + gb for (_, ga), (_, gb) in zip(a.arrays(), b.arrays())))


def _derived_seeds(seed: int):
    """Independent integer seeds for bank, encoder, shuffling, augmentation."""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(4)]


def _rng_state(rng: np.random.Generator) -> dict:
    return rng.bit_generator.state


def _rng_from_state(state: dict) -> np.random.Generator:
    rng = np.random.default_rng()
    rng.bit_generator.state = state
    return rng


def _to_storage_precision(params: EncoderParams, bank: MemoryBank, opt: OptimizerState) -> None:
    for name in EncoderParams.FIELDS:
        arr = getattr(params, name)
        arr[...] = round_f32(arr)
        buf = getattr(opt.buffers, name)
        buf[...] = round_f32(buf)
    bank.rows[...] = round_f32(bank.rows)
    params.version += 1


def train(dataset: Dataset, cfg: TrainConfig, out_dir=None, resume=None) -> TrainResult:
    """Run the full curriculum training loop over a dataset.

    ``resume`` takes a checkpoint path and continues from its round cursor;
    the checkpoint's embedded config is authoritative. The dataset must be
    the one the checkpoint was trained on.
    """
    n = len(dataset)
    height, width, _ = dataset.image_shape
    if resume is not None:
        ckpt = load_checkpoint(resume)
        cfg = ckpt.config.validate()
        if ckpt.bank.count != n:
            raise ParameterError(
                f"checkpoint was trained on {ckpt.bank.count} instances, dataset has {n}"
            )
        if (ckpt.params.shape.height, ckpt.params.shape.width) != (height, width):
            raise ParameterError("checkpoint image shape does not match the dataset")
        params = ckpt.params
        bank = ckpt.bank
        opt = OptimizerState(ckpt.momentum)
        shuffle_rng = _rng_from_state(ckpt.rng_states["shuffle"])
        aug_rng = _rng_from_state(ckpt.rng_states["augment"])
        start_round = ckpt.next_round
    else:
        cfg.validate()
        bank_seed, enc_seed, shuffle_seed, aug_seed = _derived_seeds(cfg.seed)
        shape = EncoderShape(height, width, cfg.hidden_dim, cfg.embed_dim)
        params = init_encoder(shape, enc_seed)
        bank = MemoryBank.initialize(n, cfg.embed_dim, bank_seed)
        opt = OptimizerState.for_params(params)
        shuffle_rng = np.random.default_rng(shuffle_seed)
        aug_rng = np.random.default_rng(aug_seed)
        start_round = 1
    if cfg.batch_size > n:
        raise ParameterError(f"batch_size {cfg.batch_size} exceeds dataset size {n}")

    policy = cfg.policy()
    metrics: list = []
    ckpt = None
    log_fh = None
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        log_fh = open(os.path.join(out_dir, "metrics.jsonl"), "a", encoding="utf-8")
    try:
        for round_index in range(start_round, cfg.rounds + 1):
            state = build_state(bank, cfg.k, round_index, cfg.rounds, cfg.tau)
            for epoch in range(cfg.epochs_per_round):
                lr, w = schedules(epoch, cfg)
                if cfg.disable_ue:
                    w = 0.0
                perm = shuffle_rng.permutation(n)
                totals = np.zeros(4)
                for begin in range(0, n, cfg.batch_size):
                    batch_idx = perm[begin : begin + cfg.batch_size]
                    images = dataset.images[batch_idx]
                    augmented = np.stack([augment(im, aug_rng, policy) for im in images])
                    v, cache_v = encode_batch(params, images)
                    v_hat, cache_h = encode_batch(params, augmented)
                    membership = BatchMembership.from_state(state, batch_idx)
                    bundle = total_loss(
                        and_loss(bank, v, batch_idx, membership, cfg.tau),
                        ue_loss(bank, v, batch_idx, cfg.tau),
                        aug_loss(bank, v, v_hat, cfg.tau),
                        w,
                    )
                    if not np.isfinite(bundle.total_value):
                        raise NumericFailure(
                            f"non-finite loss at round {round_index} epoch {epoch} "
                            f"batch start {begin}: and={bundle.and_value} "
                            f"ue={bundle.ue_value} aug={bundle.aug_value}"
                        )
                    grads = _add_grads(
                        encode_backward_batch(cache_v, bundle.grad_v),
                        encode_backward_batch(cache_h, bundle.grad_v_hat),
                    )
                    nesterov_step(params, grads, opt, lr, cfg.momentum)
                    for pos, instance in enumerate(batch_idx):
                        bank.ema_update(int(instance), v[pos], cfg.eta)
                    totals += (
                        bundle.and_value,
                        bundle.ue_value,
                        bundle.aug_value,
                        bundle.total_value,
                    )
                record = {
                    "round": round_index,
                    "epoch": epoch,
                    "l_and": float(totals[0]) / n,
                    "l_ue": float(totals[1]) / n,
                    "l_aug": float(totals[2]) / n,
                    "l_total": float(totals[3]) / n,
                    "lr": lr,
                    "w": w,
                }
                metrics.append(record)
                if log_fh is not None:
                    log_fh.write(json.dumps(record) + "\n")
                    log_fh.flush()
            _to_storage_precision(params, bank, opt)
            ckpt = Checkpoint(
                config=cfg,
                params=params,
                bank=bank,
                momentum=opt.buffers,
                next_round=round_index + 1,
                epoch_cursor=0,
                rng_states={"shuffle": _rng_state(shuffle_rng), "augment": _rng_state(aug_rng)},
            )
            if out_dir is not None:
                save_checkpoint(ckpt, os.path.join(out_dir, f"ckpt_round_{round_index}.ckpt"))
        if out_dir is not None and ckpt is not None:
            save_checkpoint(ckpt, os.path.join(out_dir, "ckpt_final.ckpt"))
    finally:
        if log_fh is not None:
            log_fh.close()
    return TrainResult(params=params, bank=bank, metrics=metrics, config=cfg)
