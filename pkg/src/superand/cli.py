"""Command-line surface: train, eval, discover, export, consistency.

Exit codes: 0 success, 2 configuration error, 3 data/format error,
4 numeric failure. The SUPERAND_SEED environment variable overrides the
config seed for fresh training runs.
"""

import argparse
import os
import sys

import numpy as np

from .checkpoint import load_checkpoint
from .config import TrainConfig
from .data_io import export_embeddings, gen_synthetic_blobs, hold_out_split, load_cifar10
from .encoder import encode_batch
from .errors import (
    DataFormatError,
    DegenerateInputError,
    NumericFailure,
    ParameterError,
    StateError,
)
from .evaluator import consistency_curve, top1_accuracy, weighted_knn_predict_batch
from .neighborhood import build_state, select_curriculum
from .trainer import train


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="superand", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train an embedding model")
    p_train.add_argument("--config", required=True, help="key=value config file")
    _add_data_args(p_train)
    p_train.add_argument("--out", default="superand_out", help="output directory")
    p_train.add_argument("--resume", default=None, help="checkpoint to resume from")
    p_train.set_defaults(func=_cmd_train)

    p_eval = sub.add_parser("eval", help="weighted k-NN evaluation of a checkpoint")
    p_eval.add_argument("--ckpt", required=True)
    _add_data_args(p_eval)
    p_eval.add_argument("--knn-k", type=int, default=200)
    p_eval.add_argument("--tau", type=float, default=0.07)
    p_eval.add_argument("--out", default="predictions.csv", help="per-query prediction file")
    p_eval.set_defaults(func=_cmd_eval)

    p_disc = sub.add_parser("discover", help="dump neighbor lists and entropies")
    p_disc.add_argument("--ckpt", required=True)
    p_disc.add_argument("--k", type=int, default=1)
    p_disc.add_argument("--ratio", type=float, default=1.0)
    p_disc.set_defaults(func=_cmd_discover)

    p_exp = sub.add_parser("export", help="export memory-bank embeddings")
    p_exp.add_argument("--ckpt", required=True)
    p_exp.add_argument("--format", choices=("csv", "raw"), required=True)
    p_exp.add_argument("--out", required=True)
    p_exp.set_defaults(func=_cmd_export)

    p_cons = sub.add_parser("consistency", help="neighborhood consistency per round")
    p_cons.add_argument("--ckpt", required=True)
    _add_data_args(p_cons)
    p_cons.set_defaults(func=_cmd_consistency)
    return parser


def _add_data_args(parser):
    group = parser.add_mutually_exclusive_group(required=True)
    group.add_argument("--data", default=None, help="CIFAR-10 binary batch directory")
    group.add_argument(
        "--synthetic", action="store_true", help="use the config's synthetic blob dataset"
    )


def _synthetic_splits(cfg: TrainConfig):
    full = gen_synthetic_blobs(
        cfg.synthetic_classes,
        cfg.synthetic_per_class,
        cfg.synthetic_image_size,
        cfg.synthetic_noise_sigma,
        cfg.seed,
    )
    return hold_out_split(full, cfg.synthetic_test_per_class)


def _load_splits(args, cfg: TrainConfig):
    if args.synthetic:
        return _synthetic_splits(cfg)
    return load_cifar10(args.data, "train"), load_cifar10(args.data, "test")


def _cmd_train(args) -> int:
    if args.resume is not None:
        cfg = load_checkpoint(args.resume).config
    else:
        cfg = TrainConfig.from_file(args.config)
        env_seed = os.environ.get("SUPERAND_SEED")
        if env_seed is not None:
            try:
                cfg.seed = int(env_seed)
            except ValueError:
                raise ParameterError(f"SUPERAND_SEED must be an integer, got {env_seed!r}")
        cfg.validate()
    train_ds, _ = _load_splits(args, cfg)
    result = train(train_ds, cfg, out_dir=args.out, resume=args.resume)
    last = result.metrics[-1] if result.metrics else {}
    print(
        f"trained {cfg.rounds} rounds x {cfg.epochs_per_round} epochs on "
        f"{len(train_ds)} instances; final l_total="
        + (f"{last['l_total']:.6f}" if last else "n/a")
    )
    print(f"checkpoints and metrics.jsonl written to {args.out}")
    return 0


def _encode_all(params, images, batch: int = 256) -> np.ndarray:
    chunks = []
    for i in range(0, len(images), batch):
        v, _ = encode_batch(params, images[i : i + batch])
        chunks.append(v)
    return np.concatenate(chunks)


def _cmd_eval(args) -> int:
    ckpt = load_checkpoint(args.ckpt)
    train_ds, test_ds = _load_splits(args, ckpt.config)
    if ckpt.bank.count != len(train_ds):
        raise ParameterError(
            f"checkpoint bank covers {ckpt.bank.count} instances, train split has {len(train_ds)}"
        )
    queries = _encode_all(ckpt.params, test_ds.images)
    predictions = weighted_knn_predict_batch(
        ckpt.bank.rows, train_ds.labels_for_evaluation(), queries, args.knn_k, args.tau
    )
    accuracy = top1_accuracy(predictions, test_ds.labels_for_evaluation())
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write("index,predicted,label\n")
        labels = test_ds.labels_for_evaluation()
        for i, pred in enumerate(predictions):
            fh.write(f"{i},{int(pred)},{int(labels[i])}\n")
    print(f"top1_accuracy={accuracy:.4f} over {len(predictions)} queries (k={args.knn_k})")
    print(f"per-query predictions written to {args.out}")
    return 0


def _cmd_discover(args) -> int:
    ckpt = load_checkpoint(args.ckpt)
    state = build_state(ckpt.bank, args.k, 1, 1, ckpt.config.tau)
    selected, _ = select_curriculum(state.entropies, args.ratio)
    mask = np.zeros(ckpt.bank.count, dtype=bool)
    mask[selected] = True
    for i in range(ckpt.bank.count):
        neigh = ",".join(str(int(j)) for j in state.neighbors[i])
        print(f"{i}\t{neigh}\t{state.entropies[i]:.6f}\t{int(mask[i])}")
    return 0


def _cmd_export(args) -> int:
    ckpt = load_checkpoint(args.ckpt)
    export_embeddings(ckpt.bank.rows, args.out, args.format)
    print(f"exported {ckpt.bank.count}x{ckpt.bank.dim} embeddings to {args.out} ({args.format})")
    return 0


def _cmd_consistency(args) -> int:
    ckpt = load_checkpoint(args.ckpt)
    train_ds, _ = _load_splits(args, ckpt.config)
    if ckpt.bank.count != len(train_ds):
        raise ParameterError(
            f"checkpoint bank covers {ckpt.bank.count} instances, train split has {len(train_ds)}"
        )
    rows = consistency_curve(
        ckpt.bank,
        train_ds.labels_for_evaluation(),
        ckpt.config.k,
        ckpt.config.tau,
        ckpt.config.rounds,
    )
    print("round\tratio\tconsistency")
    for round_index, ratio, value in rows:
        print(f"{round_index}\t{ratio:.4f}\t{value:.4f}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (DataFormatError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3
    except (NumericFailure, DegenerateInputError, StateError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 4


if __name__ == "__main__":
    sys.exit(main())
