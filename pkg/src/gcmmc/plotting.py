"""Two-panel completion-time / communication-load figure."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

RC = {
    "font.size": 10,
    "axes.labelsize": 10,
    "axes.titlesize": 10,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "savefig.dpi": 150,
}


def figure1(names, mean_time, se_time, mean_load, se_load, path):
    """Bar charts of mean completion time and mean communication load, 3-sigma error bars."""
    with plt.rc_context(RC):
        fig, (ax_t, ax_c) = plt.subplots(1, 2, figsize=(8, 3.2))
        x = range(len(names))
        ax_t.bar(x, mean_time, yerr=[3 * s for s in se_time], color="#4477aa", capsize=3)
        ax_t.set_ylabel("time per iteration")
        ax_t.set_title("(a) Average completion time")
        ax_c.bar(x, mean_load, yerr=[3 * s for s in se_load], color="#cc6677", capsize=3)
        ax_c.set_ylabel("messages per iteration")
        ax_c.set_title("(b) Communication load")
        for ax in (ax_t, ax_c):
            ax.set_xticks(list(x))
            ax.set_xticklabels(names, rotation=30, ha="right")
        fig.tight_layout()
        fig.savefig(path)
        plt.close(fig)
    return path
