"""Figure rendering for degradation outputs.

Panels are written as PNG files next to the array outputs; 3D grids are
shown as their central slice along the first axis.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

from .grid import Grid  # noqa: E402


def _plane(grid: Grid):
    vals = grid.values
    if vals.ndim == 3:
        vals = vals[vals.shape[0] // 2]
    return vals


def render_panels(path, panels: dict, dpi: int = 100) -> Path:
    """One row of grayscale panels, titled by role name."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = max(1, len(panels))
    fig, axes = plt.subplots(1, n, figsize=(3 * n, 3.2), squeeze=False)
    for ax, (name, grid) in zip(axes[0], panels.items()):
        ax.imshow(_plane(grid), cmap="gray", interpolation="nearest")
        ax.set_title(name, fontsize=9)
        ax.set_axis_off()
    fig.tight_layout()
    fig.savefig(path, dpi=dpi)
    plt.close(fig)
    return path
