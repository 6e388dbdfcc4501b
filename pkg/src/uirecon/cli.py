"""``uirecon`` command line: one subcommand per stage plus the full pipeline.

Exit codes: 0 success, 1 domain error (invalid scaffold, wrong phase,
calibration or asset failure), 2 input or config error, 3 backend failure.
Diagnostics go to stderr as ``<severity> <code> <element_id>: <message>``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .calibration import CalibrationParams, calibrate
from .config import PipelineConfig, load_backend_config, load_pipeline_config
from .diagnostics import (
    AssetError,
    BackendError,
    CalibrationError,
    ConfigError,
    ContractError,
    Diagnostic,
    GraphError,
    ParseError,
    SchemaError,
    UIReconError,
)
from .evaluation import DESIGN_JSON, UXML_PAIR, evaluate, load_ground_truth, measure_serialization_efficiency
from .fsutil import atomic_write
from .perception import build_backends
from .pipeline import StageFailure, detect_all, extract_all, run_pipeline
from .raster import Image
from .schema import LENIENT, STRICT, BBox, parse_scaffold, serialize_scaffold, validate
from .synthesis import compile as compile_ui
from .synthesis import default_document_name

EXIT_OK, EXIT_DOMAIN, EXIT_INPUT, EXIT_BACKEND = 0, 1, 2, 3


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _err(line: str) -> None:
    print(line, file=sys.stderr, flush=True)


def _report(diags) -> None:
    for d in diags:
        _err(d.format_line())


def _emit_json(obj) -> None:
    sys.stdout.write(json.dumps(obj, indent=2, ensure_ascii=False, sort_keys=True) + "\n")


def _read_text(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror or exc}", EXIT_INPUT) from exc


def _parse_canvas(value: str | None) -> tuple[int, int] | None:
    if value is None:
        return None
    try:
        w, h = value.lower().split("x")
        return int(w), int(h)
    except ValueError:
        raise argparse.ArgumentTypeError(f"canvas must look like 1920x1080, got {value!r}") from None


def _load_scaffold(path: str, canvas=None, image: Image | None = None):
    text = _read_text(path)
    if canvas is None and image is not None:
        canvas = (image.width, image.height)
    return parse_scaffold(text, canvas=canvas, source_image=Path(image.name).name if image and image.name else None)


def _load_image(path: str | None) -> Image | None:
    if path is None:
        return None
    try:
        return Image.load(path)
    except OSError as exc:
        raise CliError(f"cannot read image {path}: {exc}", EXIT_INPUT) from exc


def _backends(config_path: str | None):
    cfg = load_backend_config(config_path) if config_path else PipelineConfig().backend
    return build_backends(cfg)


# --------------------------------------------------------------------------
# subcommands

def cmd_validate(args) -> int:
    s = _load_scaffold(args.scaffold, canvas=args.canvas)
    mode = LENIENT if args.lenient else STRICT
    diags = validate(s, mode)
    _report(diags)
    errors = [d for d in diags if d.is_error]
    if args.json:
        _emit_json({"path": args.scaffold, "mode": mode, "valid": not errors,
                    "diagnostics": [d.to_dict() for d in diags]})
    return EXIT_DOMAIN if errors else EXIT_OK


def cmd_compile(args) -> int:
    s = _load_scaffold(args.scaffold)
    if s.phase != "calibrated":
        raise CliError(f"{args.scaffold} is in phase {s.phase!r}; run `uirecon calibrate` first "
                       "to produce a calibrated scaffold", EXIT_DOMAIN)
    name = args.name or default_document_name(s)
    ui = compile_ui(s, name)
    out = Path(args.output)
    written = [
        atomic_write(out / f"{name}.uxml", ui.uxml_text),
        atomic_write(out / f"{name}.uss", ui.uss_text),
        atomic_write(out / "manifest.json", ui.manifest_json() + "\n"),
    ]
    if args.json:
        _emit_json({"name": name, "files": [str(p) for p in written], "elements": len(s.elements)})
    else:
        for p in written:
            print(p)
    return EXIT_OK


def _load_detections(path: str) -> dict[str, BBox | None]:
    try:
        data = json.loads(_read_text(path))
    except json.JSONDecodeError as exc:
        raise CliError(f"malformed detections file {path}: {exc}", EXIT_INPUT) from exc
    if not isinstance(data, dict):
        raise CliError(f"{path}: expected an object mapping element id to [x_min, y_min, x_max, y_max]",
                       EXIT_INPUT)
    try:
        return {k: None if v is None else BBox.from_seq(v) for k, v in data.items()}
    except (TypeError, ValueError) as exc:
        raise CliError(f"{path}: bad box: {exc}", EXIT_INPUT) from exc


def _calibration_params(config_path: str | None) -> CalibrationParams:
    return load_pipeline_config(config_path).calibration if config_path else CalibrationParams()


def cmd_calibrate(args) -> int:
    img = _load_image(args.image)
    s = _load_scaffold(args.scaffold, image=img)
    params = _calibration_params(args.config)
    if args.detections:
        detections = _load_detections(args.detections)
    elif img is not None:
        detections = detect_all(s, img, _backends(args.config).detector)
    else:
        detections = None
    notes: list[Diagnostic] = []
    out = calibrate(s, detections, params, diagnostics=notes)
    _report(notes)
    text = serialize_scaffold(out, "canonical_json" if args.format == "json" else "yaml")
    if args.output:
        atomic_write(args.output, text)
    else:
        sys.stdout.write(text)
    if args.json and args.output:
        _emit_json({"output": args.output, "elements": len(out.elements),
                    "diagnostics": [d.to_dict() for d in notes]})
    return EXIT_OK


def cmd_extract(args) -> int:
    img = _load_image(args.image)
    s = _load_scaffold(args.scaffold, image=img)
    if (s.canvas_width, s.canvas_height) != (img.width, img.height):
        raise CliError(f"scaffold canvas {s.canvas_width}x{s.canvas_height} does not match image "
                       f"{img.width}x{img.height}", EXIT_DOMAIN)
    out = Path(args.out)
    entries, background = extract_all(s, img, _backends(args.config), out)
    atomic_write(out / "background.png", background.to_png_bytes())
    atomic_write(out / "assets" / "sprites.json", json.dumps(entries, separators=(",", ":")) + "\n")
    if args.json:
        _emit_json({"sprites": entries, "background": str(out / "background.png")})
    else:
        print(f"{'element':<24} {'x':>5} {'y':>5} {'w':>5} {'h':>5}  path")
        for e in entries:
            (x, y), (w, h) = e["origin"], e["size"]
            print(f"{e['element_id']:<24} {x:>5} {y:>5} {w:>5} {h:>5}  {e['asset_path']}")
    return EXIT_OK


def cmd_pipeline(args) -> int:
    config = load_pipeline_config(args.config)
    out = Path(args.output or config.output_dir or "out")
    _load_image(args.image)  # report unreadable input as exit 2 before any backend call

    def log(stage: str, msg: str) -> None:
        _err(f"[{stage}] {msg}")

    try:
        report = run_pipeline(args.image, config, out, log=log)
    except StageFailure as failure:
        _err(f"[{failure.stage}] failed: {failure.cause}")
        _err(f"partial artifacts kept in {out}; see {out / 'run_report.json'}")
        if isinstance(failure.cause, BackendError):
            return EXIT_BACKEND
        raise failure.cause from None
    for d in report.diagnostics:
        _err(Diagnostic(d["code"], d["message"], d["element_id"]).format_line())
    if args.json:
        _emit_json(json.loads(report.to_json()))
    else:
        for st in report.stages:
            print(f"{st['name']:<20} {st['status']:<6} {st['seconds']:.3f}s")
        print("backend calls: " + ", ".join(f"{k}={v}" for k, v in sorted(report.backend_calls.items())))
        print(f"artifacts in {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    pred = _load_scaffold(args.pred)
    try:
        truth = load_ground_truth(args.truth, args.kind)
    except OSError as exc:
        raise CliError(f"cannot read ground truth {args.truth}: {exc}", EXIT_INPUT) from exc
    _report(truth.diagnostics)
    report = evaluate(pred, truth, args.min_iou)
    if args.report_dir:
        from .report import write_eval_report

        write_eval_report(report, args.report_dir, pred, truth.scaffold, _load_image(args.image))
    if args.json:
        _emit_json(report.to_dict())
    else:
        print(report.format_table())
    return EXIT_OK


def cmd_tokens(args) -> int:
    rows = []
    for path in args.scaffolds:
        s = _load_scaffold(path)
        rows.append((Path(path).name, len(s.elements), measure_serialization_efficiency(s)))
    if args.figure or args.csv:
        from .report import plot_serialization, serialization_csv

        if args.figure:
            plot_serialization(rows, args.figure)
        if args.csv:
            atomic_write(args.csv, serialization_csv(rows))
    mean_reduction = sum(1 - r[2].ratio for r in rows) / len(rows)
    if args.json:
        _emit_json({"fixtures": [dict(name=n, elements=k, **st.to_dict()) for n, k, st in rows],
                    "mean_reduction": mean_reduction})
    else:
        print(f"{'fixture':<32} {'elems':>5} {'yaml':>7} {'json':>7} {'ratio':>7} {'vs indented':>12}")
        for name, n, st in rows:
            print(f"{name:<32} {n:>5} {st.yaml_bytes:>7} {st.json_bytes:>7} {st.ratio:>7.3f} "
                  f"{st.ratio_vs_indented:>12.3f}")
        print(f"mean reduction vs compact json: {mean_reduction:.1%}")
    return EXIT_OK


def cmd_render_fixture(args) -> int:
    from .synthetic import write_fixture

    for role, path in write_fixture(args.directory).items():
        print(f"{role:<9} {path}")
    return EXIT_OK


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="uirecon", description=__doc__.split("\n")[0].replace("``", ""))
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, handler, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--json", action="store_true", help="machine-readable JSON on stdout")
        p.set_defaults(handler=handler)
        return p

    p = command("validate", cmd_validate, "check a scaffold against the schema and tree invariants")
    p.add_argument("scaffold")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--strict", action="store_true", help="every problem is an error (default)")
    mode.add_argument("--lenient", action="store_true", help="repairable problems are warnings")
    p.add_argument("--canvas", type=_parse_canvas, help="WxH for documents without canvas fields")

    p = command("compile", cmd_compile, "emit UXML, USS and the asset manifest for a calibrated scaffold")
    p.add_argument("scaffold")
    p.add_argument("-o", "--output", required=True, help="output directory")
    p.add_argument("--name", help="document name (default: source image stem)")

    p = command("calibrate", cmd_calibrate, "clamp, fuse detections and repair containment")
    p.add_argument("scaffold")
    p.add_argument("--image", help="screenshot; runs the configured detector when --detections is absent")
    p.add_argument("--detections", help="JSON object mapping element id to a box")
    p.add_argument("--config", help="pipeline/backend config (calibration params, detector)")
    p.add_argument("-o", "--output", help="output file (default: stdout)")
    p.add_argument("--format", choices=("yaml", "json"), default="yaml")

    p = command("extract", cmd_extract, "segment sprites and recover the background")
    p.add_argument("scaffold")
    p.add_argument("--image", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--config", help="backend config (default: mock backends)")

    p = command("pipeline", cmd_pipeline, "run all three stages on a screenshot")
    p.add_argument("--image", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("-o", "--output", help="output directory (default: [pipeline] output_dir)")

    p = command("eval", cmd_eval, "score a predicted scaffold against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--kind", choices=(DESIGN_JSON, UXML_PAIR), default=DESIGN_JSON)
    p.add_argument("--min-iou", type=float, default=0.5)
    p.add_argument("--report-dir", help="write report.json, matches.csv and figures here")
    p.add_argument("--image", help="screenshot drawn under the overlay figure")

    p = command("tokens", cmd_tokens, "compare YAML and JSON serialization sizes")
    p.add_argument("scaffolds", nargs="+")
    p.add_argument("--figure", help="write a bar chart PNG")
    p.add_argument("--csv", help="write the per-fixture table as CSV")

    p = command("render-fixture", cmd_render_fixture, "write the synthetic_hud fixture set")
    p.add_argument("directory")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except CliError as exc:
        _err(f"error: {exc}")
        return exc.code
    except (SchemaError, GraphError) as exc:
        _err(exc.diagnostic.format_line())
        return EXIT_DOMAIN
    except (ContractError, CalibrationError, AssetError) as exc:
        _err(f"error: {exc}")
        return EXIT_DOMAIN
    except BackendError as exc:
        _err(f"error: backend: {exc}")
        return EXIT_BACKEND
    except (ParseError, ConfigError) as exc:
        _err(f"error: {exc}")
        return EXIT_INPUT
    except OSError as exc:
        _err(f"error: {exc}")
        return EXIT_INPUT
    except UIReconError as exc:
        _err(f"error: {exc}")
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
