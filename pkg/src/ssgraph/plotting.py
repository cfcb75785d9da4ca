"""Figures written next to the CSV outputs (non-interactive Agg backend)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# no timestamps or version strings, so reruns are byte-identical
_META = {"Software": None}


def _save(fig, path: Path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=120, metadata=_META)
    plt.close(fig)
    return path


def _lam(points: np.ndarray, has_inf: bool) -> np.ndarray:
    lam = 1 / points[points != 0]
    if has_inf:
        lam = np.append(lam, 0.0)
    return np.sort(lam)


def plot_spectrum(report, path, title: str = "") -> Path:
    """Inner and outer bounds in the reciprocal (as 1/z) and Laplacian coordinates."""
    fig, axes = plt.subplots(2, 1, figsize=(8, 4.5), constrained_layout=True)
    inner_lam = _lam(report.reciprocal_inner, report.inner.has_infinity)
    extra_lam = _lam(report.outer_extra, False)
    ax = axes[0]
    ax.eventplot([inner_lam], lineoffsets=1, linelengths=0.6, linewidths=0.4, colors="tab:blue")
    ax.plot(extra_lam, np.zeros_like(extra_lam), "|", color="tab:red", ms=10)
    ax.set_yticks([0, 1], ["D extra", "J"])
    ax.set_xlim(-1.05, 1.05)
    ax.set_xlabel("1/z for z in the reciprocal spectrum bounds")
    ax = axes[1]
    ax.eventplot([report.laplacian_inner], lineoffsets=1, linelengths=0.6, linewidths=0.4, colors="tab:blue")
    lap_extra = np.sort(1 - 1 / report.outer_extra[report.outer_extra != 0])
    ax.plot(lap_extra, np.zeros_like(lap_extra), "|", color="tab:red", ms=10)
    ax.set_yticks([0, 1], ["D extra", "J"])
    ax.set_xlim(-0.05, 2.05)
    ax.set_xlabel("Laplacian eigenvalue bounds")
    fig.suptitle(title or f"spectrum bounds ({report.classification})")
    return _save(fig, path)


def plot_orbit(tree, path, title: str = "") -> Path:
    """Backward-orbit points by depth, positioned at 1/z."""
    fig, ax = plt.subplots(figsize=(8, 4), constrained_layout=True)
    pts = tree.points
    mask = pts != 0
    ax.scatter(1 / pts[mask], tree.point_depth[mask], s=2, color="tab:blue")
    if tree.has_infinity and tree.infinity_depth is not None:
        ax.scatter([0.0], [tree.infinity_depth], s=12, color="tab:red", label="z = ∞")
        ax.legend(loc="upper right")
    ax.set_xlim(-1.05, 1.05)
    ax.set_xlabel("1/z")
    ax.set_ylabel("depth")
    ax.set_title(title or "backward orbit")
    return _save(fig, path)


def plot_growth(probe, path, title: str = "") -> Path:
    """log G(o,o|r) against log(1 - r) with the fitted slope."""
    fig, ax = plt.subplots(figsize=(6, 4), constrained_layout=True)
    x = np.array([1 - r for r in probe.radii])
    ax.loglog(x, probe.values, "o-", ms=3)
    ax.invert_xaxis()
    ax.set_xlabel("1 - r")
    ax.set_ylabel("G(o,o|r)")
    ax.set_title(title or f"growth exponent {probe.growth_exponent:.4f}")
    return _save(fig, path)
