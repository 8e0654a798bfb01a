"""Run reporting: a per-API summary table plus comparison figures.

Reads the stage dumps a pipeline run leaves behind (``manifest.json``,
``prune.json``) and writes ``report.csv`` alongside PNG figures: the
instantiations-kept-vs-pruned comparison per generic API, and the bounds
checker's outcome counters.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def load_run(run_dir) -> tuple[dict, dict]:
    run_dir = Path(run_dir)
    manifest = json.loads((run_dir / "manifest.json").read_text(encoding="utf-8"))
    prune = json.loads((run_dir / "prune.json").read_text(encoding="utf-8"))
    return manifest, prune


def per_api_rows(prune: dict) -> list[dict]:
    rows = []
    for api_id, entry in sorted(prune.get("per_api", {}).items()):
        kept = len(entry.get("kept", []))
        dropped = len(entry.get("dropped", []))
        total = kept + dropped
        # "reserved" counts the final state, cover picks plus instances the
        # producer closure pulled back in.
        reserved = entry.get("reserved", kept)
        rows.append(
            {
                "api": api_id,
                "mono_solutions": total,
                "reserved": reserved,
                "pruned": total - reserved,
                "retention": round(reserved / total, 4) if total else 1.0,
                "covered_impls": len(entry.get("covered_impls", [])),
            }
        )
    return rows


def write_summary_csv(manifest: dict, prune: dict, path: Path) -> None:
    rows = per_api_rows(prune)
    stats = manifest.get("statistics", {})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(
            fh,
            fieldnames=["api", "mono_solutions", "reserved", "pruned", "retention", "covered_impls"],
        )
        writer.writeheader()
        writer.writerows(rows)
        writer.writerow(
            {
                "api": "TOTAL",
                "mono_solutions": stats.get("mono_apis", 0),
                "reserved": stats.get("reserved_mono_apis", 0),
                "pruned": stats.get("mono_apis", 0) - stats.get("reserved_mono_apis", 0),
                "retention": round(stats.get("reduction_ratio", 1.0), 4),
                "covered_impls": "",
            }
        )


def plot_mono_vs_reserved(prune: dict, path: Path) -> None:
    rows = per_api_rows(prune)
    rows.sort(key=lambda r: r["mono_solutions"], reverse=True)
    labels = [r["api"] for r in rows]
    mono = [r["mono_solutions"] for r in rows]
    reserved = [r["reserved"] for r in rows]
    fig, ax = plt.subplots(figsize=(max(6, 0.6 * len(rows) + 2), 4))
    x = range(len(rows))
    ax.bar([i - 0.2 for i in x], mono, width=0.4, label="instantiations", color="#4878a8")
    ax.bar([i + 0.2 for i in x], reserved, width=0.4, label="reserved", color="#e08214")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels, rotation=45, ha="right", fontsize=8)
    ax.set_ylabel("count")
    ax.set_title("Monomorphic instantiations vs. reserved, per generic API")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_bounds_outcomes(manifest: dict, path: Path) -> None:
    bounds = manifest.get("statistics", {}).get("bounds", {})
    labels = ["valid", "invalid", "assumed"]
    values = [bounds.get(k, 0) for k in labels]
    fig, ax = plt.subplots(figsize=(5, 4))
    ax.bar(labels, values, color=["#2e7d32", "#c62828", "#f9a825"])
    ax.set_ylabel("bound checks")
    ax.set_title("Trait-bound check outcomes")
    for i, v in enumerate(values):
        ax.text(i, v, str(v), ha="center", va="bottom", fontsize=9)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_report(run_dir, out_dir) -> list[Path]:
    """Write report.csv and the PNG figures; returns the written paths."""
    manifest, prune = load_run(run_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    csv_path = out / "report.csv"
    write_summary_csv(manifest, prune, csv_path)
    written.append(csv_path)
    fig1 = out / "mono_vs_reserved.png"
    plot_mono_vs_reserved(prune, fig1)
    written.append(fig1)
    fig2 = out / "bounds_outcomes.png"
    plot_bounds_outcomes(manifest, fig2)
    written.append(fig2)
    return written
