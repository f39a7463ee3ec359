"""Distribution of generated training targets, per quality column.

Draws samples the same way the dataset generator does (augmentation, then one
or several random artifacts) on a phantom and summarises the targets as
mean +- population SD. Only the affected samples of each kind are included in
the "affected" columns.

    python3 scripts/target_distribution.py --n 300 --size 32 --mix-prob 0.5
"""
import argparse
import time

import numpy as np

from mriq import phantoms
from mriq.metrics import KIND_NAMES, aggregate_quality
from mriq.pipeline import derive_seed, generate_sample


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=300)
    ap.add_argument("--size", type=int, default=32)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--mix-prob", type=float, default=0.5)
    ap.add_argument("--no-augment", action="store_true")
    args = ap.parse_args()

    ref = phantoms.smooth_phantom(args.size)
    targets, affected = [], {k: [] for k in KIND_NAMES}
    n_kinds = []
    t0 = time.perf_counter()
    for i in range(args.n):
        _, rec = generate_sample(ref, derive_seed(args.seed, i), args.mix_prob, size=args.size,
                                 do_augment=not args.no_augment)
        targets.append(np.append(rec.target.as_array(), aggregate_quality(rec.target)))
        n_kinds.append(len(rec.distortions))
        for d in rec.distortions:
            affected[d.kind.value].append(d.score)
    elapsed = time.perf_counter() - t0
    t = np.array(targets)

    print(f"{'column':<10} {'all mean':>9} {'sd':>7}   {'affected mean':>13} {'sd':>7} {'n':>5}")
    for j, name in enumerate(KIND_NAMES + ("aggregate",)):
        line = f"{name:<10} {t[:, j].mean():9.3f} {t[:, j].std():7.3f}"
        if name in affected and affected[name]:
            a = np.array(affected[name])
            line += f"   {a.mean():13.3f} {a.std():7.3f} {a.size:5d}"
        print(line)
    counts = np.bincount(n_kinds, minlength=7)[1:]
    print(f"\nartifacts per sample (1..6): {counts.tolist()}; {args.n} samples in {elapsed:.1f}s")


if __name__ == "__main__":
    main()
