"""Render campaign curves to image files next to the CSV output."""

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_STYLE = {
    "pima": dict(color="#d9531e", marker="*"),
    "tdma": dict(color="#7e2f8e", marker="o"),
    "saloha": dict(color="#77ac30", marker="s"),
}


def _style(label: str) -> dict:
    base = _STYLE.get(label.split(":")[0], dict(color="#0072bd", marker="x"))
    if label.split(":")[0] == "cra2":
        style = dict(base)
        style["linestyle"] = "--" if label.endswith(("25", "1000")) else "-"
        return style
    return base


def _read_rows(path):
    with open(path, "r", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _series(rows, ycol):
    out = {}
    for row in rows:
        if row.get(ycol) in (None, ""):
            continue
        out.setdefault(row["protocol"], []).append(
            (float(row["load"]), float(row[ycol])))
    return {k: sorted(v) for k, v in out.items()}


def _plot(series, xlabel, ylabel, path, logx=False, logy=False):
    fig, ax = plt.subplots(figsize=(6.0, 4.2))
    for label, pts in sorted(series.items()):
        xs, ys = zip(*pts)
        ax.plot(xs, ys, label=label, linewidth=1.8, markersize=5, **_style(label))
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, which="both", alpha=0.4)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return Path(path)


def render_campaign_figures(results_csv, out_dir, eccdf_csv=None) -> list:
    """One figure per populated metric column; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = _read_rows(results_csv)
    if not rows:
        return []
    scenario = rows[0]["scenario"]
    load_label = ("burst size [pkt/burst]" if scenario == "bursty"
                  else "offered load [pkt/slot]")
    written = []

    eta = _series(rows, "eta_bar")
    if eta:
        written.append(_plot(eta, load_label, "average frame efficiency",
                             out_dir / "efficiency.png"))
    lat = _series(rows, "d_bar_usd")
    if lat:
        written.append(_plot(lat, load_label, "average packet latency [usd]",
                             out_dir / "latency.png"))
    drop = _series(rows, "p_drop")
    if drop and any(y > 0 for pts in drop.values() for _, y in pts):
        written.append(_plot(drop, load_label, "packet drop probability",
                             out_dir / "drop_probability.png", logy=True))
    burst = _series(rows, "mean_burst_usd")
    if burst:
        written.append(_plot(burst, load_label, "mean burst clearance [usd]",
                             out_dir / "burst_time.png", logx=True, logy=True))

    if eccdf_csv and Path(eccdf_csv).exists():
        tail_rows = _read_rows(eccdf_csv)
        if tail_rows:
            fig, ax = plt.subplots(figsize=(6.0, 4.2))
            series = {}
            for row in tail_rows:
                key = f'{row["protocol"]} @ {float(row["load"]):g}'
                series.setdefault(key, []).append(
                    (float(row["burst_usd"]), float(row["tail_prob"])))
            for key, pts in sorted(series.items()):
                pts.sort()
                xs, ys = zip(*pts)
                ax.step(xs, ys, where="post", label=key, linewidth=1.5)
            ax.set_yscale("log")
            ax.set_ylim(bottom=max(1e-4, min(y for _, y in pts if y > 0) / 2))
            ax.set_xlabel("burst clearance time [usd]")
            ax.set_ylabel("tail probability")
            ax.grid(True, which="both", alpha=0.4)
            ax.legend(fontsize=8)
            fig.tight_layout()
            path = out_dir / "burst_eccdf.png"
            fig.savefig(path, dpi=150)
            plt.close(fig)
            written.append(path)
    return written
