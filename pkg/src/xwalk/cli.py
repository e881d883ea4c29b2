"""Command-line entry point.

Exit status: 0 on success, 1 on invalid input (message names the file and
row or feature), 2 on an internal error.
"""
from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import __version__, changedet, ingest, report
from .evalmetrics import MATCHING_MODES, evaluate
from .ingest import InputError
from .pipeline import (RunConfig, load_inputs, mask_epochs, post_process, restrict_to_tiles,
                       run_pipeline, with_overrides, write_outputs, _read, _write)

log = logging.getLogger("xwalk")

LOG_LEVELS = {"debug": logging.DEBUG, "info": logging.INFO, "warn": logging.WARNING,
              "warning": logging.WARNING}


def _setup_logging():
    level = LOG_LEVELS.get(os.environ.get("XWALK_LOG", "warn").lower(), logging.WARNING)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    logging.getLogger("xwalk").setLevel(level)


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", metavar="PATH", help="JSON run configuration")
    p.add_argument("--out", metavar="DIR", help="output directory")
    p.add_argument("--jobs", type=int, metavar="N", help="worker cap")
    p.add_argument("--crs", dest="crs_label", metavar="LABEL",
                   help="expected CRS label for every input")


def _inputs(p, *names):
    for n in names:
        p.add_argument(f"--{n}", metavar="PATH")


def _thresholds(p):
    p.add_argument("--mask-radius", type=float, metavar="FT")
    p.add_argument("--change-radius", type=float, metavar="FT")
    p.add_argument("--dedup-radius", type=float, metavar="FT")
    p.add_argument("--eval-radius", type=float, metavar="FT")
    p.add_argument("--intersection-radius", type=float, metavar="FT")
    p.add_argument("--confidence-floor", type=float, metavar="F")
    p.add_argument("--confidence-scale", choices=ingest.CONFIDENCE_SCALES)
    p.add_argument("--old-label", metavar="LABEL")
    p.add_argument("--new-label", metavar="LABEL")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xwalk",
                                     description="Crosswalk change detection between two epochs.")
    parser.add_argument("--version", action="version", version=f"xwalk {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic scenario")
    _common(p)
    _inputs(p, "scenario")
    p.add_argument("--seed", type=int)
    p.add_argument("--preset", choices=("default", "county"), default="default")

    p = sub.add_parser("mask", help="keep detections near the road network")
    _common(p)
    _inputs(p, "old", "new", "roads", "tiles")
    _thresholds(p)

    p = sub.add_parser("changes", help="inverse-selection change candidates")
    _common(p)
    _inputs(p, "old", "new")
    _thresholds(p)

    p = sub.add_parser("post", help="dedup, false-positive filter, system split, review")
    _common(p)
    _inputs(p, "changes", "roads", "review", "intersections")
    _thresholds(p)

    p = sub.add_parser("eval", help="score detections against ground truth")
    _common(p)
    _inputs(p, "gt", "model")
    _thresholds(p)
    p.add_argument("--matching-mode", choices=MATCHING_MODES)

    p = sub.add_parser("report", help="summarize a change inventory")
    _common(p)
    _inputs(p, "changes")

    p = sub.add_parser("pipeline", help="run every stage end to end")
    _common(p)
    _inputs(p, "old", "new", "roads", "tiles", "review", "intersections")
    _thresholds(p)
    p.add_argument("--seed", type=int, help="recorded in the manifest")
    return parser


def _config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    over = {k: v for k, v in vars(args).items() if k not in ("command", "config", "preset")}
    try:
        return with_overrides(cfg, **over)
    except TypeError as exc:
        raise InputError(str(exc), "flags") from None


def cmd_synth(cfg: RunConfig, args) -> int:
    from .synth import ScenarioSpec, county_scale_spec, demo_spec, write_scenario
    from dataclasses import replace
    if cfg.scenario:
        try:
            spec = ScenarioSpec.from_json(_read(cfg.scenario))
        except (ValueError, TypeError) as exc:
            raise InputError(str(exc), cfg.scenario) from None
    elif args.preset == "county":
        spec = county_scale_spec()
    else:
        spec = demo_spec()
    if cfg.seed is not None:
        spec = replace(spec, seed=cfg.seed)
    paths = write_scenario(cfg.out, spec, cfg.crs_label)
    for k, v in sorted(paths.items()):
        print(f"{k}\t{v}")
    return 0


def cmd_mask(cfg: RunConfig, args) -> int:
    cfg.validate(required=("old", "new", "roads"))
    inp = load_inputs(cfg)
    old, new = inp.old, inp.new
    if inp.tiles is not None:
        selected = ingest.select_tiles(inp.tiles, inp.roads)
        old, new = restrict_to_tiles(old, selected), restrict_to_tiles(new, selected)
    old, new = mask_epochs(old, new, inp.roads, cfg.thresholds)
    out = Path(cfg.out)
    _write(out / "old_masked.csv", ingest.detections_to_text(old, inp.crs))
    _write(out / "new_masked.csv", ingest.detections_to_text(new, inp.crs))
    print(f"old\t{len(inp.old)} -> {len(old)}\nnew\t{len(inp.new)} -> {len(new)}")
    return 0


def cmd_changes(cfg: RunConfig, args) -> int:
    cfg.validate(required=("old", "new"))
    inp = load_inputs(cfg)
    cands = changedet.detect_changes(inp.old, inp.new, cfg.thresholds.change_radius,
                                     (cfg.old_label, cfg.new_label))
    _write(Path(cfg.out) / "candidates.geojson", report.export_geojson(cands, inp.crs))
    kinds = report.summarize(cands).by_kind
    print("\n".join(f"{k}\t{v}" for k, v in kinds.items()))
    return 0


def cmd_post(cfg: RunConfig, args) -> int:
    cfg.validate(required=("changes", "roads"))
    text = _read(cfg.changes)
    inp = load_inputs(cfg)
    ingest.check_crs({cfg.changes: ingest.crs_label(text)}, inp.crs)
    cands = report.parse_changes_geojson(text, cfg.changes)
    post = post_process(cands, inp.roads, cfg.thresholds, inp.intersections, inp.review,
                        cfg.snap_tol)
    everything = changedet.sort_changes(post.retained + post.discarded)
    summary = report.summarize(everything, cfg.thresholds, (cfg.old_label, cfg.new_label))
    manifest = report.build_manifest({"changes": cfg.changes, "roads": cfg.roads,
                                      "review": cfg.review,
                                      "intersections": cfg.intersections},
                                     cfg.thresholds, cfg.seed, {"crs": inp.crs})
    write_outputs(cfg.out, post.retained, post.discarded, summary, manifest, inp.crs)
    print(f"retained\t{len(post.retained)}\ndiscarded_fp\t{len(post.discarded)}")
    return 0


def cmd_eval(cfg: RunConfig, args) -> int:
    cfg.validate(required=("gt", "model"))
    texts = {p: _read(p) for p in (cfg.gt, cfg.model)}
    ingest.check_crs({p: ingest.crs_label(t) for p, t in texts.items()}, cfg.crs_label)
    gt = ingest.parse_points(texts[cfg.gt], cfg.gt)
    model = ingest.parse_points(texts[cfg.model], cfg.model)
    try:
        rep = evaluate(gt, model, cfg.thresholds.eval_radius, cfg.matching_mode)
    except ValueError as exc:
        raise InputError(str(exc), "eval") from None
    doc = rep.to_json()
    if args.out:
        _write(Path(cfg.out) / "eval.json", doc)
    sys.stdout.write(doc)
    return 0


def cmd_report(cfg: RunConfig, args) -> int:
    cfg.validate(required=("changes",))
    changes = report.parse_changes_geojson(_read(cfg.changes), cfg.changes)
    summary = report.summarize(changes)
    manifest = report.build_manifest({"changes": cfg.changes}, None, None)
    doc = report.export_summary(summary, manifest)
    if args.out:
        _write(Path(cfg.out) / "summary.json", doc)
    sys.stdout.write(doc)
    return 0


def cmd_pipeline(cfg: RunConfig, args) -> int:
    res = run_pipeline(cfg)
    s = res.summary
    print(f"changes\t{s.total_changes}\non_system\t{s.on_system}\noff_system\t{s.off_system}")
    print(f"retained\t{len(res.changes)}\ndiscarded_fp\t{len(res.discarded)}")
    for k, v in res.outputs.items():
        print(f"{k}\t{v}")
    return 0


COMMANDS = {"synth": cmd_synth, "mask": cmd_mask, "changes": cmd_changes, "post": cmd_post,
            "eval": cmd_eval, "report": cmd_report, "pipeline": cmd_pipeline}


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _config(args)
        return COMMANDS[args.command](cfg, args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
