"""Training command for the matinfo CLI."""

import argparse
from typing import Tuple

from matinfo.cli_helpers import fail
from matinfo.common.constants import DEFAULT_HIDDEN_WIDTH
from matinfo.common.errors import ConfigurationError, MatinfoError
from matinfo.core.matrix_io import MetricsLog
from matinfo.core.train_config import (
    DATASET_KINDS,
    HEAD_KINDS,
    LOSS_KINDS,
    OPTIMIZER_KINDS,
    DatasetConfig,
    LossConfig,
    OptimizerConfig,
    TrainConfig,
)
from matinfo.core.trainer import train

_DEFAULT_WEIGHT_DECAY = {"sgd": 5e-4, "adamw": 1.0}


def parse_widths(text: str) -> Tuple[int, ...]:
    """Comma-separated hidden widths, e.g. ``128,128``."""
    try:
        widths = tuple(int(part) for part in text.split(",") if part.strip())
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"invalid hidden widths {text!r}") from exc
    if not widths:
        raise argparse.ArgumentTypeError("at least one hidden width is required")
    return widths


class TrainCommand:
    """Trains an MLP on a synthetic dataset and logs matrix-information metrics."""

    @staticmethod
    def add_parser(subparsers) -> None:
        parser = subparsers.add_parser('train', help='Train a model and log MetricRecords as JSONL')
        data = parser.add_argument_group('dataset')
        data.add_argument('--dataset', choices=DATASET_KINDS, default='blobs')
        data.add_argument('--classes', type=int, default=3, help='Blob classes (default: 3)')
        data.add_argument('--input-dim', type=int, default=16, help='Blob input dimension (default: 16)')
        data.add_argument('--n-per-class', type=int, default=100, help='Blob samples per class and split')
        data.add_argument('--separation', type=float, default=4.0, help='Distance of blob centers from 0')
        data.add_argument('--noise', type=float, default=1.0, help='Blob noise standard deviation')
        data.add_argument('--modulus', type=int, default=113, help='Modular addition modulus p')
        data.add_argument('--train-fraction', type=float, default=0.3, help='Modular addition train share')

        objective = parser.add_argument_group('objective')
        objective.add_argument('--loss', choices=LOSS_KINDS, default='ce')
        objective.add_argument('--lambda', dest='loss_weight', type=float, default=0.0,
                               help='Weight of the information term (ce+cma: convex weight in [0, 1])')
        objective.add_argument('--temperature', type=float, default=1.0, help='Softmax temperature')
        objective.add_argument('--unlabeled-batch', type=int, default=0,
                               help='Unlabeled samples per step for ce+mi / ce+hd (blobs only)')
        objective.add_argument('--pseudo-threshold', type=float, default=0.95,
                               help='Confidence threshold for pseudo-labels')
        objective.add_argument('--features-only', action='store_true',
                               help='Do not propagate information-loss gradients into the classifier')

        optim = parser.add_argument_group('optimization')
        optim.add_argument('--optimizer', choices=OPTIMIZER_KINDS, default='sgd')
        optim.add_argument('--lr', type=float, default=0.03, help='Initial learning rate (cosine annealed)')
        optim.add_argument('--weight-decay', type=float, default=None,
                           help='Weight decay (default: 5e-4 for sgd, 1.0 for adamw)')
        optim.add_argument('--batch-size', type=int, default=64, help='Batch size; 0 means full batch')
        optim.add_argument('--steps', type=int, default=1000)
        optim.add_argument('--eval-interval', type=int, default=100)
        optim.add_argument('--hidden', type=parse_widths, default=(DEFAULT_HIDDEN_WIDTH, DEFAULT_HIDDEN_WIDTH),
                           help='Comma-separated hidden widths (default: 128,128)')
        optim.add_argument('--head', choices=HEAD_KINDS, default='linear')
        optim.add_argument('--bias-std', type=float, default=0.0,
                           help='Std of the random hidden-layer bias initialization (default: 0, zero biases)')
        optim.add_argument('--seed', type=int, default=0, help='Initialization and dataset seed')
        optim.add_argument('--data-seed', type=int, default=None, help='Data order seed (default: --seed)')

        parser.add_argument('--log', default=None, help='MetricsLog JSONL output path')
        parser.add_argument('--ckpt-out', default=None, help='Checkpoint output path')
        parser.set_defaults(func=TrainCommand.execute)

    @staticmethod
    def build_config(args) -> TrainConfig:
        weight_decay = args.weight_decay
        if weight_decay is None:
            weight_decay = _DEFAULT_WEIGHT_DECAY[args.optimizer]
        return TrainConfig(
            dataset=DatasetConfig(
                kind=args.dataset,
                num_classes=args.classes,
                input_dim=args.input_dim,
                n_per_class=args.n_per_class,
                separation=args.separation,
                noise=args.noise,
                modulus=args.modulus,
                train_fraction=args.train_fraction,
            ),
            loss=LossConfig(kind=args.loss, weight=args.loss_weight),
            optimizer=OptimizerConfig(kind=args.optimizer, lr=args.lr, weight_decay=weight_decay),
            temperature=args.temperature,
            batch_size=args.batch_size,
            steps=args.steps,
            eval_interval=args.eval_interval,
            hidden=args.hidden,
            head=args.head,
            bias_std=args.bias_std,
            seed=args.seed,
            data_seed=args.data_seed,
            unlabeled_batch=args.unlabeled_batch,
            pseudo_label_threshold=args.pseudo_threshold,
            info_grad_to_head=not args.features_only,
        )

    @staticmethod
    def execute(args) -> None:
        try:
            config = TrainCommand.build_config(args)
        except ConfigurationError as exc:
            fail(exc, "invalid training configuration")

        try:
            log = MetricsLog.open(args.log) if args.log else MetricsLog()
            with log:
                checkpoint = train(config, log, settings=getattr(args, 'settings', None))
            if args.ckpt_out:
                checkpoint.save(args.ckpt_out)
        except MatinfoError as exc:
            fail(exc, "training failed")

        final = [record for record in log.records if record.step == config.steps]
        for record in final:
            mir = "null" if record.mir is None else f"{record.mir:.6f}"
            print(
                f"step {record.step} {record.split}: accuracy {record.accuracy:.4f} "
                f"loss {record.loss:.6f} mir {mir} hdr {record.hdr:.6f}"
            )
