"""Report rendering: aligned text tables, delimited files, and figures.

Every report path emits machine-readable output first (JSON + TSV); when a
report is written to a directory the matching matplotlib figure lands next
to it as a PNG.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402 - backend must be pinned first

from .evaluate import CaBenchmarkResult, FaultDistribution, SweepResult


def render_table(headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    """Aligned-column text table."""
    cells = [[str(h) for h in headers]] + [[str(c) for c in row] for row in rows]
    widths = [max(len(row[i]) for row in cells) for i in range(len(headers))]
    lines = []
    for r, row in enumerate(cells):
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
        if r == 0:
            lines.append("  ".join("-" * widths[i] for i in range(len(headers))))
    return "\n".join(lines)


def write_tsv(path: Path, headers: Sequence[str], rows: Sequence[Sequence[Any]]) -> None:
    lines = ["\t".join(str(h) for h in headers)]
    lines.extend("\t".join(str(c) for c in row) for row in rows)
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _pct(value: float) -> str:
    return f"{100.0 * value:.1f}%"


# --- CA benchmark report -----------------------------------------------------

def ca_table(result: CaBenchmarkResult) -> str:
    rows = []
    for direction, ca in sorted(result.directions.items()):
        summary = result.summaries[direction]
        rows.append(
            [
                direction,
                _pct(ca),
                summary.by_stage.get("initial_pass", 0),
                summary.by_stage.get("augmented_pass", 0),
                summary.by_stage.get("failed", 0),
                len(summary.errors),
            ]
        )
    return render_table(
        ["direction", "CA", "initial_pass", "augmented_pass", "failed", "errors"], rows
    )


def write_ca_report(result: CaBenchmarkResult, out_dir: str | Path) -> Path:
    """JSON + TSV + bar figure for one benchmark run."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "ca_report.json").write_text(
        json.dumps(result.to_json_dict(), indent=2) + "\n", encoding="utf-8"
    )
    rows = [
        [
            direction,
            f"{ca:.6f}",
            result.summaries[direction].by_stage.get("initial_pass", 0),
            result.summaries[direction].by_stage.get("augmented_pass", 0),
            result.summaries[direction].by_stage.get("failed", 0),
        ]
        for direction, ca in sorted(result.directions.items())
    ]
    write_tsv(
        out_dir / "ca_report.tsv",
        ["direction", "ca", "initial_pass", "augmented_pass", "failed"],
        rows,
    )
    fig, ax = plt.subplots(figsize=(6, 4))
    directions = sorted(result.directions)
    values = [100.0 * result.directions[d] for d in directions]
    ax.bar(directions, values, color="#4878b0")
    ax.set_ylabel("Computational Accuracy (%)")
    ax.set_ylim(0, 100)
    ax.set_title("CA by translation direction")
    for i, v in enumerate(values):
        ax.text(i, v + 1, f"{v:.1f}", ha="center", fontsize=9)
    fig.tight_layout()
    fig.savefig(out_dir / "ca_report.png", dpi=150)
    plt.close(fig)
    return out_dir


# --- sweep report --------------------------------------------------------------

def sweep_table(results: Sequence[SweepResult]) -> str:
    rows = []
    for result in results:
        for value, ca in result.points:
            rows.append([result.direction, result.axis, value, _pct(ca)])
    return render_table(["direction", "axis", "value", "CA"], rows)


def write_sweep_report(results: Sequence[SweepResult], out_dir: str | Path) -> Path:
    """JSON + TSV + line figure (CA against the swept parameter)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "sweep.json").write_text(
        json.dumps([r.to_json_dict() for r in results], indent=2) + "\n", encoding="utf-8"
    )
    rows = []
    for result in results:
        for value, ca in result.points:
            rows.append([result.direction, result.axis, value, f"{ca:.6f}"])
    write_tsv(out_dir / "sweep.tsv", ["direction", "axis", "value", "ca"], rows)
    fig, ax = plt.subplots(figsize=(6, 4))
    for result in results:
        xs = [v for v, _ in result.points]
        ys = [100.0 * ca for _, ca in result.points]
        ax.plot(xs, ys, marker="o", label=result.direction)
    axis = results[0].axis if results else "k"
    ax.set_xlabel(f"number of retrieved {'API sequences (k)' if axis == 'k' else 'API mappings (n)'}")
    ax.set_ylabel("Computational Accuracy (%)")
    ax.set_title(f"CA across {axis}")
    ax.legend()
    fig.tight_layout()
    fig.savefig(out_dir / "sweep.png", dpi=150)
    plt.close(fig)
    return out_dir


# --- retrieval report -----------------------------------------------------------

def write_retrieval_report(
    precision: float,
    pair_count: int,
    universe: str,
    out_dir: str | Path | None,
) -> dict[str, Any]:
    doc = {"precision_at_1": precision, "pairs": pair_count, "universe": universe}
    if out_dir is not None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "retrieval.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")
        write_tsv(
            out_dir / "retrieval.tsv",
            ["precision_at_1", "pairs", "universe"],
            [[f"{precision:.6f}", pair_count, universe]],
        )
    return doc


# --- fault distribution -----------------------------------------------------------

def fault_table(dist: FaultDistribution) -> str:
    rows = []
    fractions = dist.pattern_fractions()
    for pattern, count in sorted(dist.pattern_counts.items(), key=lambda it: -it[1]):
        rows.append([pattern.pattern_id, pattern.category.value, count, _pct(fractions[pattern])])
    return render_table(["pattern", "category", "count", "fraction"], rows)


def write_fault_report(dist: FaultDistribution, out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "faults.json").write_text(
        json.dumps(dist.to_json_dict(), indent=2) + "\n", encoding="utf-8"
    )
    rows = [
        [p.pattern_id, p.category.value, c]
        for p, c in sorted(dist.pattern_counts.items(), key=lambda it: it[0].pattern_id)
    ]
    write_tsv(out_dir / "faults.tsv", ["pattern", "category", "count"], rows)
    if dist.pattern_counts:
        fig, ax = plt.subplots(figsize=(7, 4))
        items = sorted(dist.pattern_counts.items(), key=lambda it: -it[1])
        names = [p.pattern_id for p, _ in items]
        counts = [c for _, c in items]
        colors = ["#b04848" if p.category.value == "SingleApi" else "#48b070" for p, _ in items]
        ax.barh(names[::-1], counts[::-1], color=colors[::-1])
        ax.set_xlabel("labeled failures")
        ax.set_title("Fault pattern distribution")
        fig.tight_layout()
        fig.savefig(out_dir / "faults.png", dpi=150)
        plt.close(fig)
    return out_dir
