"""
SVG figures for a run: attitude error, covariance envelope and rotation
detection. Output is byte-reproducible (fixed SVG id salt, no timestamp).
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .dataset import wrap_deg  # noqa: E402
from .evaluation import rotation_truth, tilt_errors  # noqa: E402

_RC = {"svg.hashsalt": "smimu", "svg.fonttype": "path", "figure.figsize": (8.0, 5.0)}
_META = {"Date": None, "Creator": None}


def _save(fig, path: Path) -> Path:
    # must run inside the rc context: the id salt is read at save time
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def plot_errors(res, path) -> Path:
    """Roll, pitch and yaw error against time."""
    data = res.input
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(3, 1, sharex=True)
        if data is not None and data.truth is not None:
            n = min(len(res), len(data.truth))
            err = wrap_deg(res.euler_deg[:n] - data.truth.angles[:n])
            for ax, name, e in zip(axes, ("roll", "pitch", "yaw"), err.T):
                ax.plot(res.t[:n], e, lw=0.8)
                ax.set_ylabel(f"{name} err [deg]")
        axes[-1].set_xlabel("t [s]")
        axes[0].set_title(f"{res.mode}: attitude error")
        fig.tight_layout()
        return _save(fig, Path(path))


def plot_envelope(res, path) -> Path:
    """Roll/pitch error with the filter's 1-sigma envelope."""
    data = res.input
    with plt.rc_context(_RC):
        fig, axes = plt.subplots(2, 1, sharex=True)
        if data is not None and data.truth_dcm is not None:
            err, sig = tilt_errors(res.dcm, data.truth_dcm, res.p)
            for k, (ax, name) in enumerate(zip(axes, ("roll", "pitch"))):
                s = np.rad2deg(sig[:, k])
                ax.fill_between(res.t, -s, s, color="0.85", lw=0, label="±1σ")
                ax.plot(res.t, np.rad2deg(err[:, k]), lw=0.8, label="error")
                ax.set_ylabel(f"{name} [deg]")
            axes[0].legend(loc="upper right")
        axes[-1].set_xlabel("t [s]")
        axes[0].set_title(f"{res.mode}: covariance envelope")
        fig.tight_layout()
        return _save(fig, Path(path))


def plot_detection(res, path, threshold: float = 0.02) -> Path:
    """Yaw rate with epochs where the gate found no rotation shaded."""
    data = res.input
    with plt.rc_context(_RC):
        fig, ax = plt.subplots()
        if data is not None and data.truth_omega is not None:
            ax.plot(res.t, data.truth_omega[:, 2], lw=0.8, label="true yaw rate")
        if res.gate_passed is not None:
            ax.plot(res.t, res.omega[:, 2], lw=0.6, alpha=0.7, label="propagated yaw rate")
            rejected = ~res.gate_passed.any(axis=1)
            ax.fill_between(
                res.t, 0, 1, where=rejected, transform=ax.get_xaxis_transform(),
                color="red", alpha=0.15, lw=0, label="not significant",
            )
        if data is not None and data.truth_omega is not None:
            truth = rotation_truth(data.truth_omega, threshold)
            ax.fill_between(
                res.t, 0, 0.04, where=truth, transform=ax.get_xaxis_transform(),
                color="green", alpha=0.5, lw=0, label="truth: rotating",
            )
        ax.set_xlabel("t [s]")
        ax.set_ylabel("rate [rad/s]")
        ax.set_title(f"{res.mode}: rotation detection")
        ax.legend(loc="upper right")
        fig.tight_layout()
        return _save(fig, Path(path))


def plot_run(res, out_dir) -> list[Path]:
    out = Path(out_dir)
    paths = [plot_errors(res, out / "error.svg"), plot_envelope(res, out / "envelope.svg")]
    if res.gate_passed is not None:
        paths.append(plot_detection(res, out / "detection.svg"))
    return paths
