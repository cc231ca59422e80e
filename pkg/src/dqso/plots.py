"""PNG renderings of orbit series for the report commands."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _coordinate_lines(ax, points):
    points = np.asarray(points)
    for i in range(points.shape[1]):
        ax.plot(points[:, i], lw=1.2, label=f"x{i + 1}")
    ax.set_xlabel("step")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="best", fontsize=8)


def plot_trajectory(points, path, phi=None):
    """Coordinate traces of one orbit; adds the recurrent-mass curve if given."""
    fig, ax = plt.subplots(figsize=(7, 4))
    _coordinate_lines(ax, points)
    if phi is not None:
        ax.plot(phi, lw=1.8, ls="--", color="black", label="recurrent mass")
        ax.legend(loc="best", fontsize=8)
    ax.set_ylabel("coordinate")
    ax.set_title("orbit")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_cesaro(means, path):
    fig, ax = plt.subplots(figsize=(7, 4))
    _coordinate_lines(ax, means)
    ax.set_ylabel("running average")
    ax.set_title("orbit averages")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def plot_omega(distances, path, burn_in=None):
    fig, ax = plt.subplots(figsize=(7, 4))
    d = np.asarray(distances, dtype=float)
    ax.plot(d, lw=1.2, color="tab:blue")
    if burn_in:
        ax.axvline(burn_in, color="gray", ls=":", lw=1, label="tail start")
        ax.legend(loc="best", fontsize=8)
    ax.set_xlabel("step")
    ax.set_ylabel("distance to fixed set")
    if d.size and d.min() > 0:
        ax.set_yscale("log")
    ax.set_title("approach to the fixed set")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
