"""Figures for benchmark sweeps."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_STYLE = {"dense": ("tab:blue", "o"), "sparse": ("tab:orange", "s")}


def plot_bench(rows, path) -> None:
    """Communication cost and wall time against database size (ell * r bits).

    Left panel: quantum qubits from the transcripts next to the classical
    download cost.  Right panel: wall time per backend.  Skipped rows are
    left out.
    """
    done = [row for row in rows if not row.skipped]
    fig, (ax_comm, ax_time) = plt.subplots(1, 2, figsize=(10, 4))

    by_size = {}
    for row in done:
        by_size.setdefault(row.ell * row.r, (row.quantum_qubits, row.classical_bits))
    sizes = sorted(by_size)
    ax_comm.plot(sizes, [by_size[n][0] for n in sizes], "o-", label="quantum (qubits)")
    ax_comm.plot(sizes, [by_size[n][1] for n in sizes], "s--", label="classical (bits)")
    ax_comm.set_xlabel(r"database size $\ell r$ (bits)")
    ax_comm.set_ylabel("communication")
    ax_comm.legend()

    for backend in sorted({row.backend for row in done}):
        pts = sorted((row.ell * row.r, row.wall_ms) for row in done if row.backend == backend)
        color, marker = _STYLE.get(backend, ("k", "x"))
        ax_time.plot([p[0] for p in pts], [p[1] for p in pts], marker=marker,
                     color=color, label=backend)
    ax_time.set_xlabel(r"database size $\ell r$ (bits)")
    ax_time.set_ylabel("wall time (ms)")
    if done:
        ax_time.legend()

    for ax in (ax_comm, ax_time):
        if sizes:
            ax.set_xscale("log")
            ax.set_yscale("log")
        ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
