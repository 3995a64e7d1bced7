"""
Vector plots of a run directory: profile overlay and derivative sup-norms vs time
"""

import logging
from pathlib import Path
from typing import List, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

from errors import RunIOError
from runner_io import DIAGNOSTICS_FILE, SNAPSHOT_DIR, SNAPSHOT_INDEX

logger = logging.getLogger(__name__)

PLOT_DIR = "plots"
MAX_PROFILES = 6
# fixed ids and no timestamp so identical runs give identical files
matplotlib.rcParams["svg.hashsalt"] = "odd-waves"
SVG_METADATA = {"Date": None}


def _read_csv(path: Path) -> pd.DataFrame:
    if not path.is_file():
        raise RunIOError(f"missing series file: {path}")
    try:
        return pd.read_csv(path)
    except (pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        raise RunIOError(f"unreadable series file {path}: {e}") from None


def _save(fig, path: Path) -> Path:
    fig.savefig(path, format="svg", metadata=SVG_METADATA)
    plt.close(fig)
    return path


def _series_plot(diag: pd.DataFrame, column: str, label: str, path: Path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(diag["time"], diag[column], color="tab:blue")
    ax.set_xlabel("t")
    ax.set_ylabel(label)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    return _save(fig, path)


def emit_plots(run_dir: Union[str, Path]) -> List[Path]:
    """Write profile_evolution.svg, sup_ux.svg and sup_uxx.svg under run_dir/plots"""
    run_dir = Path(run_dir)
    diag = _read_csv(run_dir / DIAGNOSTICS_FILE)
    index = _read_csv(run_dir / SNAPSHOT_DIR / SNAPSHOT_INDEX)
    out = run_dir / PLOT_DIR
    out.mkdir(exist_ok=True)

    picks = np.unique(np.linspace(0, len(index) - 1, min(MAX_PROFILES, len(index))).round().astype(int))
    fig, ax = plt.subplots(figsize=(7, 4))
    cmap = plt.get_cmap("viridis")
    for n, row in enumerate(index.iloc[picks].itertuples()):
        snap = _read_csv(run_dir / SNAPSHOT_DIR / f"snap_{int(row.snapshot):04d}.csv")
        field = snap.columns[1]
        ax.plot(snap["x"], snap[field], color=cmap(n / max(len(picks) - 1, 1)), label=f"t = {row.t:.3g}")
    ax.set_xlabel("x")
    ax.set_ylabel(field)
    ax.legend(fontsize="small")
    fig.tight_layout()
    logger.info("Profile overlay times: %s", ", ".join(f"{t:.4g}" for t in index["t"].iloc[picks]))

    paths = [
        _save(fig, out / "profile_evolution.svg"),
        _series_plot(diag, "sup_ux", r"$\|u_x\|_\infty$", out / "sup_ux.svg"),
        _series_plot(diag, "sup_uxx", r"$\|u_{xx}\|_\infty$", out / "sup_uxx.svg"),
    ]
    logger.info("Wrote %d plots to %s", len(paths), out)
    return paths
