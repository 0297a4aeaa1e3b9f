"""CSV tables, manifest and the output bundle written by ``opsim scan``."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from pathlib import Path
from typing import Any, Dict, List, Sequence

from . import __version__
from .config import serialize_config
from .scan import ScanResult, ScanSpec
from .svg import render_facet

CSV_SCHEMA_VERSION = 1

RUNS_COLUMNS = (
    "fa",
    "nd",
    "adjust_error",
    "cutoff",
    "sample_id",
    "pq",
    "mean_events",
    "std_events",
    "mean_ticks",
    "mean_final_se",
    "frac_reached_te",
    "replications",
)

SUMMARY_COLUMNS = (
    "fa",
    "nd",
    "adjust_error",
    "cutoff",
    "replications",
    "mean_total_events",
    "mean_total_ticks",
    "mean_samples_with_data",
    "frac_all_samples_with_data",
)


def _num(x: float) -> str:
    if isinstance(x, bool):
        return "true" if x else "false"
    if isinstance(x, int):
        return str(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(float(x))


def _write_csv(columns: Sequence[str], rows: Sequence[Dict[str, Any]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_num(row[c]) if not isinstance(row[c], str) else row[c] for c in columns])
    return buf.getvalue()


def runs_rows(result: ScanResult) -> List[Dict[str, Any]]:
    rows = []
    for (fa, nd, adj, cut, sample_id), agg in result.cells.items():
        rows.append(
            {
                "fa": fa,
                "nd": nd,
                "adjust_error": adj,
                "cutoff": cut,
                "sample_id": sample_id,
                "pq": agg.pq,
                "mean_events": agg.events.mean,
                "std_events": agg.events.std,
                "mean_ticks": agg.ticks.mean,
                "mean_final_se": agg.final_se.mean if agg.final_se.n else math.inf,
                "frac_reached_te": agg.reached_te.mean,
                "replications": agg.count,
            }
        )
    rows.sort(key=lambda r: (r["fa"], r["nd"], r["adjust_error"], r["cutoff"], -r["pq"]))
    return rows


def emit_runs_csv(result: ScanResult) -> str:
    return _write_csv(RUNS_COLUMNS, runs_rows(result))


def summary_rows(result: ScanResult) -> List[Dict[str, Any]]:
    rows = []
    for cell in result.spec.cells():
        logs = result.cell_logs(cell)
        n = len(logs)
        n_samples = len(logs[0].records) if logs else 0
        rows.append(
            {
                "fa": cell.fa,
                "nd": cell.nd,
                "adjust_error": cell.adjust_error,
                "cutoff": cell.cutoff_time,
                "replications": n,
                "mean_total_events": sum(sum(r.events for r in lg.records) for lg in logs) / n,
                "mean_total_ticks": sum(lg.total_ticks for lg in logs) / n,
                "mean_samples_with_data": sum(lg.samples_with_data for lg in logs) / n,
                "frac_all_samples_with_data": sum(lg.samples_with_data == n_samples for lg in logs) / n,
            }
        )
    rows.sort(key=lambda r: (r["fa"], r["nd"], r["adjust_error"], r["cutoff"]))
    return rows


def emit_summary_csv(result: ScanResult) -> str:
    return _write_csv(SUMMARY_COLUMNS, summary_rows(result))


_PARSERS = {
    "fa": float,
    "nd": int,
    "adjust_error": lambda s: s.strip().lower() == "true",
    "cutoff": lambda s: s.strip().lower() == "true",
    "sample_id": str,
    "pq": float,
    "mean_events": float,
    "std_events": float,
    "mean_ticks": float,
    "mean_final_se": float,
    "frac_reached_te": float,
    "replications": int,
}


def read_runs_csv(text: str) -> List[Dict[str, Any]]:
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != RUNS_COLUMNS:
        raise ValueError(f"runs CSV header must be exactly {','.join(RUNS_COLUMNS)}")
    return [{k: _PARSERS[k](v) for k, v in row.items()} for row in reader]


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


def build_manifest(spec: ScanSpec, files: Dict[str, str]) -> Dict[str, Any]:
    return {
        "tool": "opsim",
        "version": __version__,
        "csv_schema_version": CSV_SCHEMA_VERSION,
        "preset": spec.name,
        "base_seed": spec.base_seed,
        "scan": spec.to_dict(),
        "config_text": serialize_config(spec.config),
        "files": {name: _sha256(body) for name, body in sorted(files.items())},
    }


def render_bundle(result: ScanResult) -> Dict[str, str]:
    """All bundle files as ``name -> text``, manifest last."""
    files = {
        "runs.csv": emit_runs_csv(result),
        "summary.csv": emit_summary_csv(result),
    }
    rows = runs_rows(result)
    for facet in result.spec.facets:
        files[f"{facet.name}.svg"] = render_facet(rows, facet)
    manifest = build_manifest(result.spec, files)
    files["manifest.json"] = json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    return files


def write_bundle(result: ScanResult, out_dir: Path) -> List[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, body in render_bundle(result).items():
        path = out_dir / name
        path.write_text(body, encoding="utf-8")
        written.append(path)
    return written


def load_manifest(path: Path) -> ScanSpec:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("csv_schema_version") != CSV_SCHEMA_VERSION:
        raise ValueError(f"unsupported csv_schema_version {data.get('csv_schema_version')!r}")
    return ScanSpec.from_dict(data["scan"])



def emit_plot(result: ScanResult, facet) -> str:
    return render_facet(runs_rows(result), facet)
