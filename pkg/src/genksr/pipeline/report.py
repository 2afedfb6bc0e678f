"""Render figures from a finished run directory.

Reads the delimited outputs that `eval` produced (curves, summary, quantile
tables) and writes PNG figures next to them: mean energy-vs-D curves per
source, and box-style error distributions at the training and evaluation
dimensions.
"""
from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

_SOURCE_STYLE = {
    "exact_sim": ("black", "exact simulation"),
    "device_sim": ("black", "direct sampling"),
    "classical_shadow": ("tab:green", "classical shadow"),
    "model_attention": ("tab:red", "attention model"),
    "model_ssm": ("tab:blue", "state-space model"),
}


def _read_csv(path: Path) -> list[dict]:
    with open(path, "r", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _curve_files(out_dir: Path) -> dict[str, Path]:
    return {p.stem.removeprefix("curves_"): p
            for p in sorted(out_dir.glob("curves_*.csv"))}


def render_report(out_dir: Path) -> list[Path]:
    """Write report_energy_curves.png and report_error_boxes.png."""
    out_dir = Path(out_dir)
    curve_files = _curve_files(out_dir)
    if not curve_files:
        raise FileNotFoundError(f"no curves_*.csv in {out_dir}; run eval first")
    written = []

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for source, path in curve_files.items():
        rows = _read_csv(path)
        by_d: dict[int, list[float]] = {}
        for row in rows:
            by_d.setdefault(int(row["D"]), []).append(float(row["E_est"]))
        ds = sorted(by_d)
        means = [sum(by_d[d]) / len(by_d[d]) for d in ds]
        color, label = _SOURCE_STYLE.get(source, (None, source))
        ax.plot(ds, means, marker="o", ms=3, color=color, label=label)
    ax.set_xlabel("Krylov dimension D")
    ax.set_ylabel("estimated ground energy (mean over instances)")
    ax.legend(frameon=False)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    energy_png = out_dir / "report_energy_curves.png"
    fig.savefig(energy_png, dpi=150)
    plt.close(fig)
    written.append(energy_png)

    quant_path = out_dir / "quantiles.csv"
    if quant_path.exists():
        rows = _read_csv(quant_path)
        d_values = sorted({int(r["D"]) for r in rows})
        picks = sorted({d_values[0] if len(d_values) == 1 else d_values[len(d_values) // 2 - 1],
                        d_values[-1]})
        sources = list(dict.fromkeys(r["source"] for r in rows))
        fig, ax = plt.subplots(figsize=(7, 4.5))
        boxes = []
        positions = []
        colors = []
        pos = 0
        ticklabels = []
        for d in picks:
            for source in sources:
                match = [r for r in rows if int(r["D"]) == d and r["source"] == source]
                if not match:
                    continue
                r = match[0]
                boxes.append({
                    "med": float(r["median"]), "q1": float(r["q1"]),
                    "q3": float(r["q3"]), "whislo": float(r["lo"]),
                    "whishi": float(r["hi"]), "fliers": [],
                })
                positions.append(pos)
                colors.append(_SOURCE_STYLE.get(source, ("tab:gray", source))[0])
                ticklabels.append(f"{source}\nD={d}")
                pos += 1
            pos += 1
        result = ax.bxp(boxes, positions=positions, showfliers=False,
                        patch_artist=True, medianprops={"color": "red"})
        for patch, color in zip(result["boxes"], colors):
            patch.set_facecolor(color or "tab:gray")
            patch.set_alpha(0.5)
        ax.set_xticks(positions)
        ax.set_xticklabels(ticklabels, fontsize=7)
        ax.set_ylabel("|E_est - E_exact|")
        ax.set_yscale("log")
        ax.grid(alpha=0.3, axis="y")
        fig.tight_layout()
        boxes_png = out_dir / "report_error_boxes.png"
        fig.savefig(boxes_png, dpi=150)
        plt.close(fig)
        written.append(boxes_png)
    return written
