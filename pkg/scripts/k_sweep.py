"""Train the reasoner on the synthetic separable set for each number of GCN layers.

    python scripts/k_sweep.py --epochs 500 --ks 1 2 3 4
"""
import argparse
import time

from amrsg.training import TrainConfig, make_separable_toy, train_toy


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ks", type=int, nargs="+", default=[1, 2, 3, 4])
    ap.add_argument("--epochs", type=int, default=500)
    ap.add_argument("--lr", type=float, default=0.05)
    ap.add_argument("--heads", type=int, default=4)
    ap.add_argument("--dim", type=int, default=32)
    ap.add_argument("--questions", type=int, default=10)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    data = make_separable_toy(n_questions=args.questions, d=args.dim, seed=args.seed)
    print("K\tinitial_acc\tfinal_acc\tfirst_epoch_at_1.0\tseconds")
    for K in args.ks:
        start = time.perf_counter()
        config = TrainConfig(K=K, h=args.heads, d=args.dim, lr=args.lr, epochs=args.epochs, seed=args.seed)
        _, curve = train_toy(data, config)
        first = next((e for e, acc in enumerate(curve) if acc == 1.0), None)
        print(f"{K}\t{curve[0]:.2f}\t{curve[-1]:.2f}\t{first if first is not None else '-'}\t"
              f"{time.perf_counter() - start:.1f}")


if __name__ == "__main__":
    main()
