from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import pandas as pd  # noqa: E402

import plot_exit_ratio  # noqa: E402


def test_plot_from_run_dir(tmp_path):
    pd.DataFrame(
        {
            "epsilon": [0.01, 0.04, 0.02],
            "ratio": [1.01, 1.1, 1.04],
            "ratio_se": [0.02, 0.03, 0.02],
            "ks_d": [0.01, 0.03, 0.02],
            "n": [2000, 2000, 2000],
        }
    ).to_csv(tmp_path / plot_exit_ratio.TSV_NAME, sep="\t", index=False)

    frame = plot_exit_ratio.load_ratios(tmp_path)
    assert list(frame["epsilon"]) == [0.01, 0.02, 0.04]

    png = tmp_path / "ratio.png"
    plot_exit_ratio.main([str(tmp_path), "--save", str(png)])
    assert png.stat().st_size > 0
