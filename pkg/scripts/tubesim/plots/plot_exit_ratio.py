import argparse
from pathlib import Path

import matplotlib.pyplot as plt
import pandas as pd

# Companion table written by `experiment_dispatcher exit-stats`
TSV_NAME = "exit_ratio.tsv"

# Band the mean-exit-time ratio has to reach at the coarsest epsilon
RATIO_BAND = (0.75, 1.25)


def load_ratios(run_dir: Path) -> pd.DataFrame:
    frame = pd.read_csv(run_dir / TSV_NAME, sep="\t")
    return frame.sort_values("epsilon")


def plot(frame: pd.DataFrame, title: str, out: Path | None = None):
    fig, (ax_ratio, ax_ks) = plt.subplots(2, 1, sharex=True, figsize=(6, 6))

    ax_ratio.errorbar(frame["epsilon"], frame["ratio"], yerr=frame["ratio_se"], marker="o", capsize=3)
    ax_ratio.axhline(1.0, color="black", linewidth=0.8)
    ax_ratio.axhspan(*RATIO_BAND, color="grey", alpha=0.15)
    ax_ratio.set_ylabel("mean exit time / limit scale")

    ax_ks.plot(frame["epsilon"], frame["ks_d"], marker="s")
    ax_ks.set_ylabel("KS distance D_N")
    ax_ks.set_xlabel("epsilon")
    ax_ks.set_xscale("log")

    n = int(frame["n"].sum())
    fig.suptitle(f"{title} (n={n})")
    fig.tight_layout()
    if out is not None:
        fig.savefig(out, dpi=150)
    else:
        plt.show()
    return fig


def main(argv=None):
    parser = argparse.ArgumentParser(description="Plot exit-time ratio and KS distance against epsilon.")
    parser.add_argument("run_dir", type=Path)
    parser.add_argument("--save", type=Path, default=None, help="write a PNG instead of showing")
    args = parser.parse_args(argv)

    frame = load_ratios(args.run_dir)
    if frame.empty:
        print("No rows in", args.run_dir / TSV_NAME)
        return

    plot(frame, args.run_dir.name, args.save)


if __name__ == "__main__":
    main()
