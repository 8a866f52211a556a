"""CSV, JSON and figure emission shared by the command-line front end.

Every report path writes delimited data first and, unless figures are
disabled, renders a matplotlib PNG next to it with the same stem.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def ensure_dir(path: str | Path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_csv(path: str | Path, header: list[str], rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _fmt(value):
    if isinstance(value, float):
        return repr(value)
    return value


def write_json(path: str | Path, obj) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def save_current_figure(path, t, i, title, ji=None):
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(np.asarray(t) * 1e3, i, lw=1.0, label="current")
    ax.set_xlabel("time (ms)")
    ax.set_ylabel("current (A)")
    if ji is not None:
        ax2 = ax.twinx()
        ax2.plot(np.asarray(t) * 1e3, ji, lw=1.0, color="tab:red", label="Joules integral")
        ax2.set_ylabel("Joules integral (A$^2$s)")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_fuse_figure(path, trace):
    fig, axes = plt.subplots(2, 1, sharex=True, figsize=(7, 5))
    t_ms = trace.t * 1e3
    axes[0].plot(t_ms, trace.temperature, lw=1.0)
    axes[0].set_ylabel("temperature (degC)")
    axes[0].grid(alpha=0.3)
    axes[1].plot(t_ms, trace.joules_integral, lw=1.0, label="Joules integral")
    axes[1].plot(t_ms, trace.energy, lw=1.0, label="energy (J)")
    axes[1].set_xlabel("time (ms)")
    axes[1].legend()
    axes[1].grid(alpha=0.3)
    if trace.melted_at is not None:
        for ax in axes:
            ax.axvline(trace.melted_at * 1e3, color="tab:red", ls="--", lw=0.8)
        axes[0].set_title(f"wire melts at {trace.melted_at * 1e3:.1f} ms")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_kc_figure(path, samples, fit):
    fig, ax = plt.subplots(figsize=(7, 4))
    x = np.array([s.x_r_system for s in samples])
    y = np.array([s.k_c_solved for s in samples])
    ax.semilogx(x, y, "o", ms=4, alpha=0.7, label="solved")
    if fit is not None:
        xs = np.geomspace(max(x.min(), 1e-3), x.max(), 300)
        ax.semilogx(xs, [fit(v) for v in xs], "-", lw=1.2, label=f"quartic fit (R$^2$={fit.r_squared:.4f})")
    ax.set_xlabel("system X/R ratio")
    ax.set_ylabel("correction factor")
    ax.grid(alpha=0.3, which="both")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_error_band_figure(path, rows, title):
    """Scatter of Joules-integral errors vs system X/R with the 5% band."""
    fig, ax = plt.subplots(figsize=(7, 4))
    markers = {"parallel": "o", "series": "s"}
    by_topo: dict[str, list] = {}
    for topo, _xr, _rl, ratio, err in rows:
        by_topo.setdefault(topo.value, []).append((ratio, err))
    for name, pts in by_topo.items():
        xs, ys = zip(*pts)
        ax.semilogx(xs, ys, markers.get(name, "o"), ms=4, alpha=0.7, label=name)
    ax.axhline(5.0, color="tab:red", ls="--", lw=0.8)
    ax.axhline(-5.0, color="tab:red", ls="--", lw=0.8)
    ax.set_xlabel("system X/R ratio")
    ax.set_ylabel("Joules integral error (%)")
    ax.set_title(title)
    ax.grid(alpha=0.3, which="both")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_tp_figure(path, rows):
    fig, ax = plt.subplots(figsize=(7, 4))
    by_xr: dict[float, list] = {}
    for xr, t_p, err in rows:
        by_xr.setdefault(xr, []).append((t_p, err))
    for xr, pts in sorted(by_xr.items()):
        pts.sort()
        ts, es = zip(*pts)
        ax.plot(np.asarray(ts) * 1e3, es, "o-", ms=4, lw=1.0, label=f"X/R = {xr:g}")
    ax.set_xlabel("time to peak (ms)")
    ax.set_ylabel("Joules integral error (%)")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def save_validation_figure(path, rows):
    """Horizontal bar chart of per-row validation errors with the 5% band."""
    fig, ax = plt.subplots(figsize=(7, 0.5 * len(rows) + 1.5))
    names = [r.name for r in rows]
    errors = [r.error_percent for r in rows]
    colors = ["tab:green" if abs(e) <= 5.0 else "tab:red" for e in errors]
    ax.barh(range(len(rows)), errors, color=colors, alpha=0.8)
    ax.set_yticks(range(len(rows)))
    ax.set_yticklabels(names, fontsize=8)
    ax.axvline(5.0, color="tab:red", ls="--", lw=0.8)
    ax.axvline(-5.0, color="tab:red", ls="--", lw=0.8)
    ax.set_xlabel("error vs measurement (%)")
    ax.grid(alpha=0.3, axis="x")
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def write_model_trace_csv(path, model, until: float, sample_period: float = 50e-6) -> None:
    """Model current trace `t_s,i_A,ji_A2s`; empty below one sample period."""
    if until < sample_period:
        write_csv(path, ["t_s", "i_A", "ji_A2s"], [])
        return
    n = int(round(until / sample_period))
    ts = sample_period * np.arange(n + 1)
    currents = model.current(ts)
    ji = np.concatenate([[0.0], np.cumsum(0.5 * sample_period * (currents[1:] ** 2 + currents[:-1] ** 2))])
    write_csv(path, ["t_s", "i_A", "ji_A2s"], zip(ts, currents, ji))


def write_sim_trace_csv(path, trace) -> None:
    write_csv(
        path,
        ["t_s", "i_dc_A", "v_dc_V", "ji_A2s"],
        zip(trace.t, trace.i_dc, trace.v_dc, trace.ji),
    )
