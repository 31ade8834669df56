"""Batch orchestration behind the CLI: sample, degrade, pipeline, verify.

Each patch's work is seeded from (master_seed, label, patch ordinal), so
patches can be processed on any number of workers in any order and the
output bytes never change.
"""

from __future__ import annotations

import json
import logging
import os
import shutil
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import rng as rng_mod
from .config import DegradationConfig
from .corpus_io import (MANIFEST_VERSION, array_bytes, read_array,
                        read_manifest, load_source, write_array,
                        write_manifest)
from .deformation import deformation_field, grid_image, warp
from .errors import ConfigError, DomainError, TjpError
from .grid import Grid
from .lowres import degrade_lowres
from .masking import dual_mask
from .noising import degrade_noise
from .rng import rng_substream
from .sampler import SamplePlan, build_corpus

log = logging.getLogger("tjp")

TASKS = ("mask", "deform", "lowres", "noise")


def load_config_file(path):
    """Parse the JSON config into (DegradationConfig, sample plan dict).

    Top-level keys are "degradation" and "sample"; anything unknown at
    either level is rejected so typos cannot silently fall back to
    defaults.
    """
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not valid JSON") from exc
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    unknown = set(doc) - {"degradation", "sample"}
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    cfg = DegradationConfig.from_dict(doc.get("degradation", {}))
    sample = doc.get("sample")
    if sample is not None:
        unknown = set(sample) - {"scales", "counts", "window"}
        if unknown:
            raise ConfigError(f"{path}: unknown sample keys {sorted(unknown)}")
        for key in ("counts", "window"):
            if key not in sample:
                raise ConfigError(f"{path}: sample section needs {key!r}")
    return cfg, sample


def make_plan(sample: dict, master_seed: int) -> SamplePlan:
    return SamplePlan(window=tuple(sample["window"]),
                      counts=tuple(sample["counts"]),
                      scales=tuple(sample.get("scales", (1.0, 0.5, 0.25))),
                      master_seed=master_seed)


def apply_task(task: str, patch: Grid, cfg: DegradationConfig, stream):
    """Run one degradation; returns (outputs dict name->Grid, params)."""
    if task == "mask":
        x_a, x_b, pair = dual_mask(patch, cfg, stream)
        outputs = {"masked_a": x_a, "masked_b": x_b,
                   "mask_a": pair.m_a, "mask_b": pair.m_b}
        params = {"tau_keep": pair.tau_keep, "mask_cell": pair.cell}
    elif task == "deform":
        field = deformation_field(patch.shape, cfg, stream)
        outputs = {"deformed": warp(patch, field)}
        for axis, comp in enumerate(field.comp):
            outputs[f"flow{axis}"] = comp
        reference = grid_image(patch.shape, cfg.grid_spacing, cfg.grid_line_width)
        outputs["grid_warp"] = warp(reference, field)
        params = {"alpha": field.alpha}
    elif task == "lowres":
        degraded, params = degrade_lowres(patch, cfg, stream)
        outputs = {"degraded": degraded}
    elif task == "noise":
        degraded, params = degrade_noise(patch, cfg, stream)
        outputs = {"degraded": degraded}
    else:
        raise DomainError(f"unknown task {task!r}")
    return outputs, params


def _patch_stem(patch_id: int) -> str:
    return f"p{patch_id:05d}"


def _file_entry(rel_path: str, grid: Grid) -> dict:
    return {"path": rel_path, "shape": [int(e) for e in grid.shape]}


def _record_to_manifest(record, files: dict, task=None, params=None) -> dict:
    seed = {"master_seed": int(record.seed_lineage[0]),
            "label": record.seed_lineage[1],
            "index": int(record.seed_lineage[2])}
    entry = {"patch_id": int(record.patch_id),
             "source_uri": record.source_uri,
             "scale": float(record.scale),
             "origin": [int(o) for o in record.origin],
             "window": [int(w) for w in record.window],
             "seed": seed,
             "files": files}
    if task is not None:
        entry["task"] = task
        entry["params"] = params or {}
    return entry


def _write_outputs(out_dir: Path, stem: str, outputs: dict) -> dict:
    files = {}
    for name, grid in outputs.items():
        rel = f"patches/{stem}_{name}.npy"
        write_array(grid, out_dir / rel)
        files[name] = _file_entry(rel, grid)
    return files


def _process_patch(args):
    """Worker: degrade one patch with every task and write its files."""
    out_dir, master_seed, cfg, record, patch_values, spacing, tasks, preview = args
    patch = Grid(patch_values, spacing)
    out_dir = Path(out_dir)
    stem = _patch_stem(record.patch_id)
    entries = []
    files = _write_outputs(out_dir, stem, {"clean": patch})
    entries.append(_record_to_manifest(record, files))
    previews = {"clean": patch}
    for task in tasks:
        stream = rng_substream(master_seed, task, record.patch_id)
        outputs, params = apply_task(task, patch, cfg, stream)
        files = _write_outputs(out_dir, stem, outputs)
        entries.append(_record_to_manifest(record, files, task, params))
        for name in ("masked_a", "deformed", "degraded"):
            if name in outputs:
                key = task if name == "degraded" else name
                previews[key] = outputs[name]
    if preview:
        from .preview import render_panels

        render_panels(out_dir / f"preview/{stem}.png", previews)
    return entries


def _ingest_source(source_path, out_dir: Path):
    """Copy the source (and sidecar, if any) into the corpus directory.

    Output directories are self-contained: ``verify`` regenerates from
    the copy, so moving the corpus never breaks it.
    """
    source_path = Path(source_path)
    sources_dir = out_dir / "sources"
    sources_dir.mkdir(parents=True, exist_ok=True)
    local = sources_dir / source_path.name
    if local.resolve() != source_path.resolve():
        shutil.copyfile(source_path, local)
        sidecar = source_path.with_name(source_path.name + ".json")
        if sidecar.exists():
            shutil.copyfile(sidecar, local.with_name(local.name + ".json"))
    grid, meta = load_source(local)
    meta["uri"] = f"sources/{local.name}"
    return grid, meta


def run_sample(source_path, config_path, out_dir, seed: int) -> Path:
    """``sample`` subcommand: windows plus manifest, no degradation."""
    cfg, sample = load_config_file(config_path)
    if sample is None:
        raise ConfigError(f"{config_path}: sample section required")
    out_dir = Path(out_dir)
    source, source_meta = _ingest_source(source_path, out_dir)
    plan = make_plan(sample, seed)
    result = build_corpus(source, plan, source_meta["uri"])
    (out_dir / "patches").mkdir(parents=True, exist_ok=True)
    patches_entries = []
    for patch, record in zip(result.patches, result.records):
        stem = _patch_stem(record.patch_id)
        files = _write_outputs(out_dir, stem, {"clean": patch})
        patches_entries.append(_record_to_manifest(record, files))
    manifest = _manifest_doc(seed, cfg, [source_meta], patches_entries,
                             result.skips)
    manifest_path = out_dir / "manifest.json"
    write_manifest(manifest, manifest_path)
    return manifest_path


def run_pipeline(source_path, config_path, out_dir, seed: int,
                 jobs=None, preview: bool = False) -> Path:
    """``pipeline`` subcommand: sample, then all four tasks per patch."""
    cfg, sample = load_config_file(config_path)
    if sample is None:
        raise ConfigError(f"{config_path}: sample section required")
    out_dir = Path(out_dir)
    source, source_meta = _ingest_source(source_path, out_dir)
    plan = make_plan(sample, seed)
    result = build_corpus(source, plan, source_meta["uri"])
    (out_dir / "patches").mkdir(parents=True, exist_ok=True)
    if preview:
        (out_dir / "preview").mkdir(exist_ok=True)
    jobs = jobs or os.cpu_count() or 1
    work = [(str(out_dir), seed, cfg, record, patch.values, patch.spacing,
             TASKS, preview)
            for patch, record in zip(result.patches, result.records)]
    log.info("pipeline: %d patches on %d workers", len(work), jobs)
    if jobs > 1 and len(work) > 1:
        rng_mod.warmup()  # compile kernels once; forked workers inherit them
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            all_entries = list(pool.map(_process_patch, work, chunksize=4))
    else:
        all_entries = [_process_patch(item) for item in work]
    patches_entries = [entry for entries in all_entries for entry in entries]
    patches_entries.sort(key=lambda e: (e["patch_id"], e.get("task", "")))
    manifest = _manifest_doc(seed, cfg, [source_meta], patches_entries,
                             result.skips)
    manifest_path = out_dir / "manifest.json"
    write_manifest(manifest, manifest_path)
    return manifest_path


def run_degrade(task: str, in_path, config_path, out_dir, seed: int,
                preview: bool = True) -> Path:
    """``degrade`` subcommand: one task on one array file."""
    if task not in TASKS:
        raise DomainError(f"unknown task {task!r}")
    cfg = DegradationConfig()
    if config_path is not None:
        cfg, _ = load_config_file(config_path)
    patch = read_array(in_path)
    stream = rng_substream(seed, task, 0)
    outputs, params = apply_task(task, patch, cfg, stream)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_array(patch, out_dir / "clean.npy")
    for name, grid in outputs.items():
        write_array(grid, out_dir / f"{name}.npy")
    record = {"task": task, "seed": {"master_seed": seed, "label": task, "index": 0},
              "input": Path(in_path).name, "params": params}
    params_path = out_dir / "params.json"
    params_path.write_bytes(
        (json.dumps(record, sort_keys=True, separators=(",", ":")) + "\n").encode())
    if preview:
        from .preview import render_panels

        panels = {"clean": patch}
        panels.update(outputs)
        render_panels(out_dir / "preview.png", panels)
    return params_path


def run_verify(manifest_path) -> list:
    """``verify`` subcommand: regenerate every entry, compare bytes.

    Returns [(entry description, ok, detail)] in manifest order.
    """
    manifest_path = Path(manifest_path)
    doc = read_manifest(manifest_path)
    base = manifest_path.parent
    cfg = DegradationConfig.from_dict(doc["config"])
    sources = {}
    for meta in doc["sources"]:
        grid, _ = load_source(base / meta["uri"])
        sources[meta["uri"]] = grid
    pyramid_cache = {}
    results = []
    for entry in doc["patches"]:
        desc = f"patch {entry['patch_id']} {entry.get('task', 'clean')}"
        try:
            ok, detail = _verify_entry(entry, sources, pyramid_cache, cfg, base)
        except TjpError as exc:
            ok, detail = False, str(exc)
        results.append((desc, ok, detail))
    return results


def _verify_entry(entry, sources, pyramid_cache, cfg, base: Path):
    from .sampler import multiscale_resize

    source = sources.get(entry["source_uri"])
    if source is None:
        return False, f"source {entry['source_uri']} not in manifest"
    cache_key = (entry["source_uri"], entry["scale"])
    if cache_key not in pyramid_cache:
        pyramid_cache[cache_key] = multiscale_resize(source, [entry["scale"]])[0]
    image_s = pyramid_cache[cache_key]
    region = tuple(slice(o, o + w)
                   for o, w in zip(entry["origin"], entry["window"]))
    patch = Grid(image_s.values[region].copy(), image_s.spacing)
    task = entry.get("task")
    if task is None:
        expected = {"clean": patch}
    else:
        stream = rng_substream(entry["seed"]["master_seed"], task,
                               entry["patch_id"])
        expected, _ = apply_task(task, patch, cfg, stream)
    for name, file_info in entry["files"].items():
        target = base / file_info["path"]
        if not target.exists():
            return False, f"missing file {file_info['path']}"
        if name not in expected:
            return False, f"unknown file role {name!r}"
        if tuple(file_info["shape"]) != expected[name].shape:
            return False, f"recorded shape mismatch for {name}"
        if target.read_bytes() != array_bytes(expected[name]):
            return False, f"bytes differ for {name}"
    return True, ""


def _manifest_doc(seed, cfg, sources, patches_entries, skips) -> dict:
    return {
        "version": MANIFEST_VERSION,
        "master_seed": int(seed),
        "config": cfg.to_dict(),
        "sources": sources,
        "patches": patches_entries,
        "skips": [{"source": s.source_uri, "scale": float(s.scale),
                   "reason": s.reason} for s in skips],
    }
