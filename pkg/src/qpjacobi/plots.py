"""Deterministic SVG figures: IDS staircases and log-log modulus plots."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_RC = {"svg.hashsalt": "qpjacobi", "svg.fonttype": "none", "font.size": 9}


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    plt.close(fig)


def ids_staircase_svg(curves, path) -> None:
    """One step curve per :class:`IDSCurve` (or ``(N, energies, values)`` triple)."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        for c in curves:
            N, E, v = (c.N, c.energies, c.values) if hasattr(c, "energies") else c
            ax.step(E, v, where="post", lw=0.8, label=f"N = {N}")
        ax.set_xlabel("E")
        ax.set_ylabel("IDS")
        ax.set_ylim(-0.02, 1.02)
        ax.legend(loc="upper left", frameon=False)
        fig.tight_layout()
        _save(fig, path)


def loglog_moduli_svg(fits, path) -> None:
    """Moduli ``N(E+eta) - N(E-eta)`` against ``eta`` with the fitted slope for each fit."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        for f in fits:
            eta = np.asarray(f.eta_grid)
            mod = np.asarray(f.moduli)
            keep = mod > 0
            line = ax.loglog(eta[keep], mod[keep], "o", ms=3, label=f"E = {f.E:.4f}, slope {f.exponent:.3f}")[0]
            if keep.sum() >= 2:
                ref = mod[keep][-1] * (eta / eta[keep][-1]) ** f.exponent
                ax.loglog(eta, ref, "-", lw=0.6, color=line.get_color())
        ax.set_xlabel("eta")
        ax.set_ylabel("IDS modulus")
        ax.legend(loc="lower right", frameon=False, fontsize=7)
        fig.tight_layout()
        _save(fig, path)
