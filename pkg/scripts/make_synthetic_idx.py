#!/usr/bin/env python3
"""Generate the synthetic MNIST-shaped IDX dataset used by experiments and tests.

The build environment has no copy of the real corpora, so runs use this
deterministic stand-in: standard-named IDX files that the normal loaders read.

    python scripts/make_synthetic_idx.py --out data/synth --train 2000 --test 1000
"""

import argparse

from fedpoison.datasets import write_synthetic_idx


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--train", type=int, default=2000)
    parser.add_argument("--test", type=int, default=1000)
    parser.add_argument("--seed", type=int, default=1234)
    parser.add_argument("--classes", type=int, default=10)
    parser.add_argument("--side", type=int, default=28)
    parser.add_argument("--noise", type=float, default=0.32)
    parser.add_argument("--label-noise", type=float, default=0.03)
    parser.add_argument("--shared-weight", type=float, default=0.55,
                        help="background mixed into every class prototype (class overlap)")
    args = parser.parse_args()
    paths = write_synthetic_idx(
        args.out,
        n_train=args.train,
        n_test=args.test,
        seed=args.seed,
        n_classes=args.classes,
        side=args.side,
        noise=args.noise,
        label_noise=args.label_noise,
        shared_weight=args.shared_weight,
    )
    for name, path in paths.items():
        print(f"{name}: {path}")


if __name__ == "__main__":
    main()
