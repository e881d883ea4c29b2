"""End-to-end run: ingest, mask, detect, post-process, report."""
from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Optional

from . import changedet, ingest, postprocess, report
from .changedet import REMOVED_CANDIDATE, NEW_CANDIDATE, Thresholds
from .evalmetrics import MATCHING_MODES, RULES_AS_STATED
from .ingest import NEW, OLD, InputError

log = logging.getLogger("xwalk")

PATH_KEYS = ("old", "new", "roads", "tiles", "review", "intersections", "changes",
             "gt", "model", "scenario")


@dataclass
class RunConfig:
    old: Optional[str] = None
    new: Optional[str] = None
    roads: Optional[str] = None
    tiles: Optional[str] = None
    review: Optional[str] = None
    intersections: Optional[str] = None
    changes: Optional[str] = None
    gt: Optional[str] = None
    model: Optional[str] = None
    scenario: Optional[str] = None
    out: str = "out"
    thresholds: Thresholds = field(default_factory=Thresholds)
    confidence_scale: str = "fraction"
    matching_mode: str = RULES_AS_STATED
    crs_label: Optional[str] = None
    old_label: str = OLD
    new_label: str = NEW
    snap_tol: float = 1.0
    seed: Optional[int] = None
    jobs: int = 1

    def validate(self, required=()):
        missing = [k for k in required if getattr(self, k) in (None, "")]
        if missing:
            raise InputError(f"missing required input(s): {', '.join('--' + m for m in missing)}",
                             "config")
        if self.confidence_scale not in ingest.CONFIDENCE_SCALES:
            raise InputError(f"confidence_scale must be one of {ingest.CONFIDENCE_SCALES}",
                             "config")
        if self.matching_mode not in MATCHING_MODES:
            raise InputError(f"matching_mode must be one of {MATCHING_MODES}", "config")
        if self.jobs < 1:
            raise InputError("jobs must be >= 1", "config")
        if self.snap_tol <= 0:
            raise InputError("snap_tol must be positive", "config")

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        th = dict(d.pop("thresholds", None) or {})
        for f in fields(Thresholds):
            if f.name in d:
                th[f.name] = d.pop(f.name)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise InputError(f"unknown config key(s): {', '.join(sorted(unknown))}", "config")
        try:
            thresholds = Thresholds(**th)
        except (TypeError, ValueError) as exc:
            raise InputError(str(exc), "config") from None
        return cls(thresholds=thresholds, **d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            d = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config: {exc}", str(path)) from None
        if not isinstance(d, dict):
            raise InputError("config must be a JSON object", str(path))
        return cls.from_dict(d)


@contextmanager
def stage(name, timings):
    t0 = time.perf_counter()
    yield
    dt = time.perf_counter() - t0
    timings[name] = dt
    log.info("stage %-14s %8.3f s", name, dt)


def _read(path) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise InputError(f"cannot read: {exc.strerror}", str(path)) from None
    except UnicodeDecodeError:
        raise InputError("not valid UTF-8", str(path)) from None


@dataclass
class Inputs:
    old: list
    new: list
    roads: Optional[ingest.RoadNetwork]
    tiles: Optional[list]
    review: Optional[list]
    intersections: Optional[list]
    crs: Optional[str]


def load_inputs(cfg: RunConfig) -> Inputs:
    """Parse every configured file and check that CRS labels agree."""
    texts = {k: _read(getattr(cfg, k)) for k in ("old", "new", "roads", "tiles", "review",
                                                  "intersections") if getattr(cfg, k)}
    crs = ingest.check_crs({getattr(cfg, k): ingest.crs_label(t) for k, t in texts.items()},
                           cfg.crs_label)
    tiles = ingest.parse_tiles(texts["tiles"], cfg.tiles) if "tiles" in texts else None
    tile_map = {t.tile_id: t for t in tiles} if tiles else None

    def dets(key, epoch):
        if key not in texts:
            return []
        return ingest.parse_detections(texts[key], epoch, cfg.confidence_scale, tile_map,
                                       source=getattr(cfg, key))

    return Inputs(
        old=dets("old", OLD), new=dets("new", NEW),
        roads=ingest.parse_roads(texts["roads"], cfg.roads) if "roads" in texts else None,
        tiles=tiles,
        review=ingest.parse_review(texts["review"], cfg.review) if "review" in texts else None,
        intersections=(ingest.parse_intersections(texts["intersections"], cfg.intersections)
                       if "intersections" in texts else None),
        crs=crs)


def restrict_to_tiles(records, tiles):
    """Keep detections belonging to (or lying inside) the given tiles."""
    ids = {t.tile_id for t in tiles}
    rects = [t.rect for t in tiles]
    return [r for r in records
            if (r.tile_id in ids if r.tile_id is not None
                else any(rc.contains(r.pos) for rc in rects))]


def mask_epochs(old, new, roads, th: Thresholds, executor=None):
    if not len(roads):
        raise InputError("road network is empty", "roads")
    from .spatial_index import SegmentIndex
    index = SegmentIndex(roads.polylines)
    if executor is not None:
        fo = executor.submit(changedet.mask_filter, old, roads, th.mask_radius, index)
        fn = executor.submit(changedet.mask_filter, new, roads, th.mask_radius, index)
        return fo.result(), fn.result()
    return (changedet.mask_filter(old, roads, th.mask_radius, index),
            changedet.mask_filter(new, roads, th.mask_radius, index))


def dedup_changes(changes, radius):
    """Deduplicate each change kind separately; result sorted by id."""
    kept = []
    for kind in (NEW_CANDIDATE, REMOVED_CANDIDATE):
        kept.extend(postprocess.dedup([c for c in changes if c.kind == kind], radius))
    return changedet.sort_changes(kept)


@dataclass
class PostResult:
    retained: list
    discarded: list
    intersections: list
    overlaps: list


def post_process(candidates, roads, th: Thresholds, intersections=None, review=None,
                 snap_tol=1.0, timings=None) -> PostResult:
    timings = {} if timings is None else timings
    with stage("dedup", timings):
        deduped = dedup_changes(candidates, th.dedup_radius)
    overlaps: list = []
    with stage("intersections", timings):
        if intersections is None:
            intersections = postprocess.derive_intersections(roads, snap_tol, overlaps)
    with stage("fp_filter", timings):
        retained, discarded = postprocess.fp_filter(deduped, intersections,
                                                    th.confidence_floor, th.intersection_radius)
    with stage("split_system", timings):
        retained = changedet.split_by_system(retained, roads, th.mask_radius)
        discarded = changedet.split_by_system(discarded, roads, th.mask_radius)
    if review:
        with stage("review", timings):
            everything = postprocess.apply_review(retained + discarded, review)
            n = len(retained)
            retained, discarded = everything[:n], everything[n:]
    return PostResult(retained, discarded, intersections, overlaps)


@dataclass
class PipelineResult:
    changes: list
    discarded: list
    summary: report.ChangeSummary
    manifest: dict
    timings: dict
    outputs: dict


def _write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def write_outputs(out_dir, changes, discarded, summary, manifest, crs=None) -> dict:
    out = Path(out_dir)
    paths = {
        "changes_geojson": out / "changes.geojson",
        "changes_csv": out / "changes.csv",
        "discarded_fp": out / "discarded_fp.csv",
        "summary": out / "summary.json",
    }
    _write(paths["changes_geojson"], report.export_geojson(changes, crs))
    _write(paths["changes_csv"], report.export_csv(changes))
    _write(paths["discarded_fp"], report.export_csv(discarded, with_reason=True))
    _write(paths["summary"], report.export_summary(summary, manifest))
    return {k: str(v) for k, v in paths.items()}


def run_pipeline(cfg: RunConfig) -> PipelineResult:
    cfg.validate(required=("old", "new", "roads"))
    th = cfg.thresholds
    timings: dict = {}
    labels = (cfg.old_label, cfg.new_label)
    executor = ThreadPoolExecutor(max_workers=cfg.jobs) if cfg.jobs > 1 else None
    try:
        with stage("ingest", timings):
            inp = load_inputs(cfg)
        counts = {"detections_old": len(inp.old), "detections_new": len(inp.new)}
        old, new = inp.old, inp.new
        if inp.tiles is not None:
            with stage("select_tiles", timings):
                selected = ingest.select_tiles(inp.tiles, inp.roads)
                old = restrict_to_tiles(old, selected)
                new = restrict_to_tiles(new, selected)
            counts["tiles_selected"] = len(selected)
        with stage("mask", timings):
            old, new = mask_epochs(old, new, inp.roads, th, executor)
        counts.update(masked_old=len(old), masked_new=len(new))
        with stage("detect", timings):
            candidates = changedet.detect_changes(old, new, th.change_radius, labels, executor)
        counts["candidates"] = len(candidates)
        post = post_process(candidates, inp.roads, th, inp.intersections, inp.review,
                            cfg.snap_tol, timings)
    finally:
        if executor is not None:
            executor.shutdown()
    counts.update(after_dedup=len(post.retained) + len(post.discarded),
                  discarded_fp=len(post.discarded), retained=len(post.retained),
                  intersections=len(post.intersections),
                  collinear_overlaps=len(post.overlaps))
    with stage("report", timings):
        everything = changedet.sort_changes(post.retained + post.discarded)
        summary = report.summarize(everything, th, labels)
        manifest = report.build_manifest(
            {k: getattr(cfg, k) for k in ("old", "new", "roads", "tiles", "review",
                                          "intersections")},
            th, cfg.seed,
            {"crs": inp.crs, "confidence_scale": cfg.confidence_scale, "counts": counts})
        outputs = write_outputs(cfg.out, post.retained, post.discarded, summary, manifest,
                                inp.crs)
    return PipelineResult(post.retained, post.discarded, summary, manifest, timings, outputs)


def with_overrides(cfg: RunConfig, **kw) -> RunConfig:
    th_over = {k: kw.pop(k) for k in list(kw) if k in {f.name for f in fields(Thresholds)}}
    th_over = {k: v for k, v in th_over.items() if v is not None}
    kw = {k: v for k, v in kw.items() if v is not None}
    th = cfg.thresholds
    if th_over:
        try:
            th = replace(th, **th_over)
        except ValueError as exc:
            raise InputError(str(exc), "flags") from None
    return replace(cfg, thresholds=th, **kw)
