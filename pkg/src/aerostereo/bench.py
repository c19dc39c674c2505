"""Dataset manifests, benchmark sweeps, and report emission.

A manifest is a JSON document listing stereo pairs with ground truth:

    {
      "dataset": "whu-sample",
      "categories": ["building", "trees", "mix"],
      "entries": [
        {"left": "l.png", "right": "r.png", "gt": "gt.pfm",
         "gt_format": "pfm", "category": "building"},
        {"left": "...", "right": "...", "gt": "gt.png",
         "gt_format": {"png16": 256}, "category": "trees"}
      ]
    }

Relative paths resolve against the manifest's directory. run_benchmark
evaluates every (entry, method) pair, writes the estimated disparities as
PFM files, and emits a JSON report plus three plot-ready CSV tables (the
per-category MSE table, the BMP-versus-threshold curves and the mean
runtimes). Everything except the recorded runtimes is deterministic for
fixed seeds.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .costs import CostParams
from .image import (
    as_disparity_map,
    load_disparity,
    load_gray_image,
    normalize_disparity,
    valid_mask,
    write_disparity,
)
from .metrics import (
    DEFAULT_BMP_THRESHOLDS,
    MetricReport,
    SsimParams,
    compute_report,
    time_method,
)
from .patchmatch import PatchMatchConfig, patchmatch_match
from .postproc import PostprocConfig
from .sgbm import SgbmConfig, sgbm_match

METHODS = ("sgbm-sad", "sgbm-bt", "sgbm-adc", "patchmatch")

_METHOD_COST_FUNCTION = {"sgbm-sad": "sad", "sgbm-bt": "bt", "sgbm-adc": "ad-census"}


class ManifestError(ValueError):
    """Raised when a manifest document violates the schema."""


@dataclass
class ManifestEntry:
    entry_id: str
    left_path: str
    right_path: str
    gt_path: str
    gt_format: str  # "pfm" or "png16"
    png16_divisor: float | None
    category: str


@dataclass
class Manifest:
    dataset: str
    categories: list[str]
    entries: list[ManifestEntry]
    warnings: list[str] = field(default_factory=list)

    def category_counts(self) -> dict[str, int]:
        counts = {c: 0 for c in self.categories}
        for entry in self.entries:
            counts[entry.category] += 1
        return counts


def _require(doc: dict, key: str, expected, where: str):
    if key not in doc:
        raise ManifestError(f"{where}: missing required field {key!r}")
    value = doc[key]
    if not isinstance(value, expected):
        raise ManifestError(f"{where}: field {key!r} has the wrong type")
    return value


def parse_manifest(path) -> Manifest:
    """Load and validate a manifest, resolving relative paths.

    Schema violations raise ManifestError naming the offending field;
    entries whose files are missing are skipped with a warning recorded on
    the returned Manifest.
    """
    path = os.fspath(path)
    base = os.path.dirname(os.path.abspath(path))
    with open(path, "r", encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"manifest: invalid JSON ({exc})") from exc
    if not isinstance(doc, dict):
        raise ManifestError("manifest: top level must be an object")
    dataset = _require(doc, "dataset", str, "manifest")
    categories = _require(doc, "categories", list, "manifest")
    if not categories or not all(isinstance(c, str) for c in categories):
        raise ManifestError("manifest: field 'categories' must be a non-empty list of strings")
    raw_entries = _require(doc, "entries", list, "manifest")

    entries: list[ManifestEntry] = []
    warnings: list[str] = []
    for i, raw in enumerate(raw_entries):
        where = f"entries[{i}]"
        if not isinstance(raw, dict):
            raise ManifestError(f"{where}: must be an object")
        left = _require(raw, "left", str, where)
        right = _require(raw, "right", str, where)
        gt = _require(raw, "gt", str, where)
        category = _require(raw, "category", str, where)
        if category not in categories:
            raise ManifestError(f"{where}: field 'category' value {category!r} is not declared")
        gt_format = _require(raw, "gt_format", (str, dict), where)
        divisor = None
        if isinstance(gt_format, str):
            if gt_format != "pfm":
                raise ManifestError(f"{where}: field 'gt_format' must be 'pfm' or {{'png16': divisor}}")
            fmt = "pfm"
        else:
            if set(gt_format) != {"png16"} or not isinstance(gt_format["png16"], (int, float)):
                raise ManifestError(f"{where}: field 'gt_format' must be 'pfm' or {{'png16': divisor}}")
            fmt = "png16"
            divisor = float(gt_format["png16"])

        paths = [os.path.normpath(os.path.join(base, p)) for p in (left, right, gt)]
        missing = [p for p in paths if not os.path.isfile(p)]
        if missing:
            warnings.append(f"{where}: skipped, missing file(s): {', '.join(missing)}")
            continue
        stem = os.path.splitext(os.path.basename(paths[0]))[0]
        entries.append(
            ManifestEntry(
                entry_id=f"{i:03d}_{stem}",
                left_path=paths[0],
                right_path=paths[1],
                gt_path=paths[2],
                gt_format=fmt,
                png16_divisor=divisor,
                category=category,
            )
        )
    return Manifest(dataset=dataset, categories=list(categories), entries=entries, warnings=warnings)


@dataclass
class RunConfig:
    """Everything one benchmark run of a single method needs."""

    method: str
    cost: CostParams = field(default_factory=CostParams)
    sgbm: SgbmConfig = field(default_factory=SgbmConfig)
    post: PostprocConfig = field(default_factory=PostprocConfig)
    patchmatch: PatchMatchConfig | None = None
    target_max: float = 75.0
    bmp_thresholds: tuple[float, ...] = DEFAULT_BMP_THRESHOLDS
    ssim_window: int = 8

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.method in _METHOD_COST_FUNCTION:
            wanted = _METHOD_COST_FUNCTION[self.method]
            if self.sgbm.cost_function != wanted:
                self.sgbm = replace(self.sgbm, cost_function=wanted)
        elif self.patchmatch is None:
            self.patchmatch = PatchMatchConfig(d_max=float(self.cost.num_disparities))

    def matcher(self):
        if self.method == "patchmatch":
            return lambda left, right: patchmatch_match(left, right, self.patchmatch, self.post)
        return lambda left, right: sgbm_match(left, right, self.cost, self.sgbm, self.post)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    return obj


def _load_gt(entry: ManifestEntry) -> np.ndarray:
    if entry.gt_format == "pfm":
        return load_disparity(entry.gt_path)
    return load_disparity(entry.gt_path, png16_divisor=entry.png16_divisor)


def _raw_dynamic_range(estimate: np.ndarray, truth: np.ndarray) -> float:
    """Dynamic range for SSIM on unnormalized maps: the actual value span."""
    peak = 1.0
    for arr in (estimate, truth):
        mask = valid_mask(arr)
        if np.any(mask):
            peak = max(peak, float(arr[mask].max()))
    return peak


def evaluate_pair(
    estimate: np.ndarray,
    truth: np.ndarray,
    target_max: float = 75.0,
    thresholds=DEFAULT_BMP_THRESHOLDS,
    ssim_window: int = 8,
    runtime_ms: float = 0.0,
) -> dict[str, MetricReport]:
    """Raw and min-max-normalized metric reports for one pair of maps."""
    raw = compute_report(
        estimate,
        truth,
        thresholds=thresholds,
        ssim_params=SsimParams(window=ssim_window, dynamic_range=_raw_dynamic_range(estimate, truth)),
        runtime_ms=runtime_ms,
        normalized=False,
    )
    est_n = normalize_disparity(estimate, target_max)
    gt_n = normalize_disparity(truth, target_max)
    norm = compute_report(
        est_n,
        gt_n,
        thresholds=thresholds,
        ssim_params=SsimParams(window=ssim_window, dynamic_range=target_max),
        runtime_ms=runtime_ms,
        normalized=True,
    )
    return {"raw": raw, "normalized": norm}


def _run_one(entry: ManifestEntry, config: RunConfig, out_dir: str) -> dict:
    left = load_gray_image(entry.left_path)
    right = load_gray_image(entry.right_path)
    truth = _load_gt(entry)
    matcher = config.matcher()
    disp, runtime_ms = time_method(lambda: matcher(left, right))
    disp = as_disparity_map(disp)
    pfm_name = f"{entry.entry_id}__{config.method}.pfm"
    write_disparity(disp, os.path.join(out_dir, pfm_name))
    reports = evaluate_pair(
        disp,
        truth,
        target_max=config.target_max,
        thresholds=config.bmp_thresholds,
        ssim_window=config.ssim_window,
        runtime_ms=runtime_ms,
    )
    return {
        "id": entry.entry_id,
        "category": entry.category,
        "method": config.method,
        "disparity_file": pfm_name,
        "raw": reports["raw"].to_dict(),
        "normalized": reports["normalized"].to_dict(),
    }


def _mean_report(reports: list[dict]) -> dict:
    """Arithmetic mean of MetricReport dicts (bmp curves averaged per threshold)."""
    n = len(reports)
    thresholds = [pair[0] for pair in reports[0]["bmp_curve"]]
    return {
        "mse": sum(r["mse"] for r in reports) / n,
        "bmp_curve": [
            [t, sum(r["bmp_curve"][k][1] for r in reports) / n]
            for k, t in enumerate(thresholds)
        ],
        "ssim": sum(r["ssim"] for r in reports) / n,
        "runtime_ms": sum(r["runtime_ms"] for r in reports) / n,
        "valid_pixel_count": sum(r["valid_pixel_count"] for r in reports) / n,
        "normalized": reports[0]["normalized"],
        "count": n,
    }


def run_benchmark(
    manifest: Manifest,
    configs: list[RunConfig],
    out_dir,
    workers: int = 1,
    strict_timing: bool = False,
) -> dict:
    """Run every config over every manifest entry and write the reports.

    Produces one PFM per (entry, config), `report.json`, and the CSV tables
    `mse_table.csv`, `bmp_curves.csv` and `runtimes.csv` in out_dir. Entry
    failures are recorded in the report and do not abort the sweep. Returns
    the report dictionary.
    """
    out_dir = os.fspath(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    if strict_timing:
        workers = 1

    jobs = [(entry, config) for entry in manifest.entries for config in configs]
    results: dict[int, dict] = {}
    failures: list[dict] = []

    def work(job_idx: int):
        entry, config = jobs[job_idx]
        try:
            results[job_idx] = _run_one(entry, config, out_dir)
        except Exception as exc:  # per-entry isolation
            failures.append(
                {"id": entry.entry_id, "method": config.method, "error": f"{type(exc).__name__}: {exc}"}
            )

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, range(len(jobs))))
    else:
        for idx in range(len(jobs)):
            work(idx)

    entries = [results[i] for i in sorted(results)]
    failures.sort(key=lambda f: (f["id"], f["method"]))

    categories = list(manifest.categories) + ["overall"]
    aggregates: dict[str, dict] = {}
    for category in categories:
        per_method: dict[str, dict] = {}
        for config in configs:
            rows = [
                e
                for e in entries
                if e["method"] == config.method
                and (category == "overall" or e["category"] == category)
            ]
            if not rows:
                continue
            per_method[config.method] = {
                "raw": _mean_report([e["raw"] for e in rows]),
                "normalized": _mean_report([e["normalized"] for e in rows]),
            }
        if per_method:
            aggregates[category] = per_method

    report = {
        "dataset": manifest.dataset,
        "categories": manifest.categories,
        "category_counts": manifest.category_counts(),
        "config": [_jsonable(asdict(c)) for c in configs],
        "manifest_warnings": manifest.warnings,
        "entries": entries,
        "failures": failures,
        "aggregates": aggregates,
    }
    with open(os.path.join(out_dir, "report.json"), "w", encoding="utf-8") as fh:
        json.dump(report, fh, indent=2)
        fh.write("\n")

    _write_mse_table(report, configs, os.path.join(out_dir, "mse_table.csv"))
    _write_bmp_curves(report, configs, os.path.join(out_dir, "bmp_curves.csv"))
    _write_runtimes(report, configs, os.path.join(out_dir, "runtimes.csv"))
    return report


def _write_mse_table(report: dict, configs: list[RunConfig], path: str) -> None:
    categories = list(report["categories"]) + ["overall"]
    header = ["method"]
    header += [f"{c} non-normalised" for c in categories]
    header += [f"{c} normalised" for c in categories]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for config in configs:
            row = [config.method]
            for variant in ("raw", "normalized"):
                for category in categories:
                    cell = report["aggregates"].get(category, {}).get(config.method)
                    row.append("" if cell is None else f"{cell[variant]['mse']:.6g}")
            writer.writerow(row)


def _write_bmp_curves(report: dict, configs: list[RunConfig], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "threshold", "bmp_percent"])
        for config in configs:
            cell = report["aggregates"].get("overall", {}).get(config.method)
            if cell is None:
                continue
            for threshold, pct in cell["normalized"]["bmp_curve"]:
                writer.writerow([config.method, f"{threshold:g}", f"{pct:.6g}"])


def _write_runtimes(report: dict, configs: list[RunConfig], path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["method", "mean_runtime_ms"])
        for config in configs:
            cell = report["aggregates"].get("overall", {}).get(config.method)
            if cell is None:
                continue
            writer.writerow([config.method, f"{cell['raw']['runtime_ms']:.3f}"])


def eval_single(
    estimate_path,
    gt_path,
    normalize_to: float | None = None,
    thresholds=DEFAULT_BMP_THRESHOLDS,
    ssim_window: int = 8,
    estimate_divisor: float | None = None,
    gt_divisor: float | None = None,
) -> dict:
    """Standalone evaluation of one estimate file against one ground truth.

    Returns a JSON-ready dict with the raw report and, when normalize_to is
    set, the min-max-normalized report as well.
    """
    estimate = load_disparity(estimate_path, png16_divisor=estimate_divisor)
    truth = load_disparity(gt_path, png16_divisor=gt_divisor)
    raw = compute_report(
        estimate,
        truth,
        thresholds=thresholds,
        ssim_params=SsimParams(window=ssim_window, dynamic_range=_raw_dynamic_range(estimate, truth)),
        normalized=False,
    )
    out = {"estimate": os.fspath(estimate_path), "gt": os.fspath(gt_path), "raw": raw.to_dict()}
    if normalize_to is not None:
        est_n = normalize_disparity(estimate, normalize_to)
        gt_n = normalize_disparity(truth, normalize_to)
        norm = compute_report(
            est_n,
            gt_n,
            thresholds=thresholds,
            ssim_params=SsimParams(window=ssim_window, dynamic_range=normalize_to),
            normalized=True,
        )
        out["normalized"] = norm.to_dict()
    return out
