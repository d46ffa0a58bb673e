"""Command line front end: the onsets, beats, tempo, and evaluate
programs, each with single, batch, and save-config modes.

Usage::

    tactus <program> single <input> [-o OUTPUT] [--config FILE] [flags]
    tactus <program> batch <inputs...> -d OUTDIR [-j WORKERS] [flags]
    tactus <program> save-config <path> [flags]

Results go to the output file or stdout; diagnostics go to stderr.
Exit codes: 0 success, 1 usage, 2 I/O, 3 decode, 4 model/pipeline.

A config file captures the program, the complete pipeline (every
effective parameter, no hidden defaults) and the I/O settings, so a run
can be repeated later with the exact same analysis.
"""

import argparse
import glob
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .errors import (DecodeError, InvalidParameter, NoInputs, ParseError,
                     TactusError, UnknownFormatVersion, UnsupportedFormat,
                     UsageError, ValidationError)
from .evaluation import EvaluatorProcessor, read_events
from .features.beats import beat_pipeline
from .features.onsets import onset_pipeline
from .features.tempo import tempo_pipeline
from .pipeline import Pipeline, canonical_document, pipeline_from_document

CONFIG_FORMAT_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_DECODE = 3
EXIT_MODEL = 4

_OUTPUT_SUFFIX = {"onsets": ".onsets.txt", "beats": ".beats.txt",
                  "tempo": ".bpm.txt", "evaluate": ".eval.txt"}
_TASK_SUFFIXES = {".onsets.txt": "onsets", ".beats.txt": "beats",
                  ".bpm.txt": "tempo"}

# flag name, builder kwarg, type, default, help
_FRONT_END_FLAGS = [
    ("--fps", "fps", float, 100.0, "frames per second of the analysis"),
    ("--frame-size", "frame_size", int, 2048, "frame length in samples"),
    ("--window", "window", str, "hann",
     "analysis window: hann, hamming, or rectangular"),
    ("--num-bands", "num_bands", int, 40, "mel bands of the front end"),
    ("--fmin", "fmin", float, 20.0, "lowest filterbank frequency in Hz"),
    ("--fmax", "fmax", float, 17000.0, "highest filterbank frequency in Hz"),
    ("--mul", "mul", float, 1.0, "log compression multiplier"),
    ("--add", "add", float, 1.0, "log compression additive constant"),
    ("--max-filter-radius", "max_filter_radius", int, 0,
     "maximum-filter radius (bands) for the spectral flux"),
    ("--sample-rate", "sample_rate", int, None,
     "resample the input; requires --decoder-cmd"),
    ("--decoder-cmd", "decoder_cmd", str, None,
     "external decoder command template ({input} {output} {sample_rate} "
     "{channels})"),
    ("--model", "model_path", str, None,
     "network model file producing the activation instead of the flux"),
]

_FRONT_END_TARGETS = {
    "fps": ("framer", "fps"),
    "frame_size": ("framer", "frame_size"),
    "window": ("stft", "window"),
    "num_bands": ("filterbank", "num_bands"),
    "fmin": ("filterbank", "fmin"),
    "fmax": ("filterbank", "fmax"),
    "mul": ("log_compress", "mul"),
    "add": ("log_compress", "add"),
    "max_filter_radius": ("spectral_flux", "max_filter_radius"),
    "sample_rate": ("signal_loader", "sample_rate"),
    "decoder_cmd": ("signal_loader", "decoder_cmd"),
    "model_path": ("neural_network", "model_path"),
}

_PROGRAMS = {
    "onsets": {
        "builder": onset_pipeline,
        "flags": _FRONT_END_FLAGS + [
            ("--threshold", "threshold", float, 0.3,
             "activation threshold for peak picking"),
            ("--pre-max", "pre_max", float, 0.03,
             "seconds before a peak that must be lower"),
            ("--post-max", "post_max", float, 0.03,
             "seconds after a peak that must be lower"),
            ("--combine", "combine", float, 0.03,
             "minimum gap between reported onsets in seconds"),
            ("--smooth", "smooth", float, 0.0,
             "moving-average smoothing in seconds"),
        ],
        "targets": dict(_FRONT_END_TARGETS, **{
            "threshold": ("pick_peaks", "threshold"),
            "pre_max": ("pick_peaks", "pre_max"),
            "post_max": ("pick_peaks", "post_max"),
            "combine": ("pick_peaks", "combine"),
            "smooth": ("pick_peaks", "smooth"),
        }),
    },
    "beats": {
        "builder": beat_pipeline,
        "flags": _FRONT_END_FLAGS + [
            ("--min-bpm", "min_bpm", float, 55.0, "slowest tempo modeled"),
            ("--max-bpm", "max_bpm", float, 215.0, "fastest tempo modeled"),
            ("--transition-lambda", "transition_lambda", float, 100.0,
             "tempo-change penalty at beat boundaries"),
            ("--observation-lambda", "observation_lambda", float, 16.0,
             "fraction of the beat interval forming the beat window"),
        ],
        "targets": dict(_FRONT_END_TARGETS, **{
            "min_bpm": ("beat_tracker", "min_bpm"),
            "max_bpm": ("beat_tracker", "max_bpm"),
            "transition_lambda": ("beat_tracker", "transition_lambda"),
            "observation_lambda": ("beat_tracker", "observation_lambda"),
        }),
    },
    "tempo": {
        "builder": tempo_pipeline,
        "flags": _FRONT_END_FLAGS + [
            ("--min-bpm", "min_bpm", float, 40.0, "slowest tempo modeled"),
            ("--max-bpm", "max_bpm", float, 250.0, "fastest tempo modeled"),
            ("--alpha", "alpha", float, 0.79, "comb filter feedback gain"),
            ("--max-tempi", "max_tempi", int, 3, "number of tempi reported"),
        ],
        "targets": dict(_FRONT_END_TARGETS, **{
            "min_bpm": ("tempo_histogram", "min_bpm"),
            "max_bpm": ("tempo_histogram", "max_bpm"),
            "alpha": ("tempo_histogram", "alpha"),
            "max_tempi": ("detect_tempo", "max_tempi"),
        }),
    },
    "evaluate": {
        "builder": lambda **kwargs: Pipeline(EvaluatorProcessor(**kwargs)),
        "flags": [
            ("--task", "task", str, "auto",
             "evaluation task: auto, onsets, beats, or tempo"),
            ("--window", "window", float, 0.025,
             "onset matching window in seconds"),
            ("--beat-window", "beat_window", float, 0.07,
             "beat matching window in seconds"),
            ("--cemgil-sigma", "cemgil_sigma", float, 0.04,
             "sigma of the beat accuracy Gaussian in seconds"),
            ("--tolerance", "tolerance", float, 0.04,
             "relative tempo tolerance"),
        ],
        "targets": {
            "task": ("evaluator", "task"),
            "window": ("evaluator", "window"),
            "beat_window": ("evaluator", "beat_window"),
            "cemgil_sigma": ("evaluator", "cemgil_sigma"),
            "tolerance": ("evaluator", "tolerance"),
        },
    },
}


class ProgramConfig:
    """A program name, its pipeline, and the I/O settings of a run."""

    def __init__(self, program, pipeline, io=None):
        if program not in _PROGRAMS:
            raise ValidationError("unknown program %r" % (program,))
        if not isinstance(pipeline, Pipeline):
            raise ValidationError("config needs a Pipeline")
        self.program = program
        self.pipeline = pipeline
        self.io = {"inputs": [], "output": None, "output_dir": None,
                   "format": "text"}
        if io:
            self.io.update(io)

    def document(self):
        return {"format_version": CONFIG_FORMAT_VERSION,
                "program": self.program,
                "pipeline": self.pipeline.spec(),
                "io": self.io}


def save_config(config, destination):
    """Write a config document; returns the byte count written."""
    data = canonical_document(config.document()).encode("utf-8")
    if hasattr(destination, "write"):
        destination.write(data)
        return len(data)
    with open(destination, "wb") as fh:
        fh.write(data)
    return len(data)


def load_config(source):
    """Read and validate a config document."""
    if hasattr(source, "read"):
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    else:
        with open(source, "rb") as fh:
            text = fh.read().decode("utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError("invalid config document: %s" % exc) from exc
    return config_from_document(doc)


def config_from_document(doc):
    if not isinstance(doc, dict):
        raise ParseError("config document must be a mapping")
    version = doc.get("format_version")
    if version is None:
        raise ParseError("config document lacks 'format_version'")
    if version != CONFIG_FORMAT_VERSION:
        raise UnknownFormatVersion("unsupported config format version %r"
                                   % (version,))
    program = doc.get("program")
    if program not in _PROGRAMS:
        raise ValidationError("unknown program %r" % (program,))
    if "pipeline" not in doc:
        raise ParseError("config document lacks 'pipeline'")
    try:
        pipeline = pipeline_from_document(doc["pipeline"])
    except InvalidParameter as exc:
        raise ValidationError(str(exc)) from exc
    io = doc.get("io", {})
    if not isinstance(io, dict):
        raise ParseError("config 'io' must be a mapping")
    return ProgramConfig(program, pipeline, io)


# ---------------------------------------------------------------------------
# output formatting

def _format_times(times):
    return "".join("%.3f\n" % t for t in times)


def _format_tempi(tempi):
    return "".join("%.2f %.2f\n" % (bpm, strength) for bpm, strength in tempi)


def _format_table(columns, rows):
    """Tab-separated table with a trailing mean row."""
    lines = ["\t".join(["file"] + list(columns))]
    sums = [0.0] * len(columns)
    for name, values in rows:
        cells = [name]
        for i, value in enumerate(values):
            sums[i] += float(value)
            cells.append("%d" % value if isinstance(value, int)
                         else "%.4f" % value)
        lines.append("\t".join(cells))
    count = max(len(rows), 1)
    mean_cells = ["mean"] + ["%.4f" % (total / count) for total in sums]
    lines.append("\t".join(mean_cells))
    return "\n".join(lines) + "\n"


def _infer_task(path):
    name = os.path.basename(path)
    for suffix, task in _TASK_SUFFIXES.items():
        if name.endswith(suffix):
            return task
    raise ValidationError(
        "cannot infer the evaluation task from %r; expected a "
        "*.onsets.txt, *.beats.txt or *.bpm.txt detection file" % path)


def _read_tempo_detections(path):
    pairs = []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            try:
                bpm = float(parts[0])
                strength = float(parts[1]) if len(parts) > 1 else 1.0
            except ValueError as exc:
                raise ParseError("%s: bad tempo line %r" % (path, line.strip())) \
                    from exc
            pairs.append((bpm, strength))
    return pairs


def _evaluate_file(config, path):
    """Metric row for one detection file; annotations live next to it."""
    evaluator = config.pipeline.root
    task = _infer_task(path)
    if not path.endswith(".txt"):
        raise ValidationError("detection file %r must end in .txt" % path)
    annotation_path = path[:-len(".txt")] + ".ann"
    if not os.path.exists(annotation_path):
        raise FileNotFoundError("no annotation file: %s" % annotation_path)
    if task == "tempo":
        detections = _read_tempo_detections(path)
        annotations = float(read_events(annotation_path)[0])
    else:
        detections = read_events(path)
        annotations = read_events(annotation_path)
    row = evaluator.process({"task": task, "detections": detections,
                             "annotations": annotations})
    return task, [name for name, _ in row], [value for _, value in row]


def _run_program(config, input_path):
    """Produce the output text of one input file."""
    if config.program == "evaluate":
        _, columns, values = _evaluate_file(config, input_path)
        stem = os.path.basename(input_path)
        return _format_table(columns, [(stem, values)])
    if not os.path.exists(input_path):
        raise FileNotFoundError("no such input file: %s" % input_path)
    result = config.pipeline.process(input_path)
    if config.program == "tempo":
        return _format_tempi(result)
    return _format_times(result)


def run_single(config, input_path, output=None):
    """Run one input through the program; returns the exit status."""
    text = _run_program(config, input_path)
    if output is None:
        sys.stdout.write(text)
    else:
        with open(output, "w") as fh:
            fh.write(text)
    return EXIT_OK


def _exit_code_for(exc):
    if isinstance(exc, (UsageError, NoInputs, InvalidParameter)):
        return EXIT_USAGE
    if isinstance(exc, (FileNotFoundError, IsADirectoryError,
                        PermissionError)):
        return EXIT_IO
    if isinstance(exc, (UnsupportedFormat, DecodeError)):
        return EXIT_DECODE
    if isinstance(exc, (TactusError, OSError)):
        return EXIT_MODEL
    raise exc


def _output_path(input_path, output_dir, program):
    stem = os.path.basename(input_path)
    if "." in stem:
        stem = stem[:stem.rindex(".")]
    return os.path.join(output_dir, stem + _OUTPUT_SUFFIX[program])


def resolve_inputs(inputs, program):
    """Expand directories and glob patterns into a sorted file list."""
    if program == "evaluate":
        patterns = ["*.onsets.txt", "*.beats.txt", "*.bpm.txt"]
    else:
        patterns = ["*.wav"]
    resolved = set()
    for item in inputs:
        if os.path.isdir(item):
            for pattern in patterns:
                resolved.update(glob.glob(os.path.join(item, pattern)))
        elif any(ch in item for ch in "*?["):
            resolved.update(glob.glob(item))
        else:
            resolved.add(item)
    files = sorted(resolved)
    if not files:
        raise NoInputs("no input files resolved")
    return files


def _process_one(config_doc, input_path, output_path):
    """Batch worker: each worker owns one file end to end."""
    try:
        config = config_from_document(config_doc)
        text = _run_program(config, input_path)
        with open(output_path, "w") as fh:
            fh.write(text)
        return input_path, EXIT_OK, ""
    except Exception as exc:  # noqa: BLE001 - reported per file
        try:
            code = _exit_code_for(exc)
        except Exception:
            code = EXIT_MODEL
        return input_path, code, "%s: %s" % (type(exc).__name__, exc)


def run_batch(config, inputs, output_dir, workers=None):
    """Process many inputs, one output file per input.

    Results are identical for any worker count; failures are reported on
    stderr and processing continues. The exit status is 0 only if every
    file succeeded, otherwise the code of the first failure.
    """
    files = resolve_inputs(inputs, config.program)
    if workers is None:
        workers = os.cpu_count() or 1
    os.makedirs(output_dir, exist_ok=True)
    jobs = [(f, _output_path(f, output_dir, config.program)) for f in files]
    config_doc = config.document()

    if workers <= 1 or len(jobs) == 1:
        results = [_process_one(config_doc, f, out) for f, out in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_process_one,
                                    [config_doc] * len(jobs),
                                    [f for f, _ in jobs],
                                    [out for _, out in jobs]))

    status = EXIT_OK
    failures = [(path, code, message) for path, code, message in results
                if code != EXIT_OK]
    for path, code, message in failures:
        print("error: %s: %s" % (path, message), file=sys.stderr)
        if status == EXIT_OK:
            status = code

    if config.program == "evaluate" and len(jobs) > 1:
        _write_evaluation_summary(config, [f for f, _ in jobs], output_dir)
    return status


def _write_evaluation_summary(config, files, output_dir):
    """Corpus report: one row per evaluated file plus the mean row."""
    rows = []
    columns = None
    for path in files:
        try:
            _, cols, values = _evaluate_file(config, path)
        except Exception:  # the per-file error was already reported
            continue
        if columns is None:
            columns = cols
        if cols == columns:
            rows.append((os.path.basename(path), values))
    if columns is None:
        return
    with open(os.path.join(output_dir, "summary.eval.txt"), "w") as fh:
        fh.write(_format_table(columns, rows))


# ---------------------------------------------------------------------------
# argument parsing

class _ArgumentParser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, for exit-code control."""

    def error(self, message):
        raise UsageError(message)


def _add_flags(parser, program):
    for flag, dest, typ, default, help_text in _PROGRAMS[program]["flags"]:
        shown = "none" if default is None else default
        parser.add_argument(flag, dest=dest, type=typ, default=None,
                            help="%s (default: %s)" % (help_text, shown))


def build_parser():
    parser = _ArgumentParser(
        prog="tactus",
        description="Music analysis programs: onset detection, beat "
                    "tracking, tempo estimation, and evaluation.")
    subparsers = parser.add_subparsers(dest="program", required=True)
    descriptions = {
        "onsets": "Detect note onsets in audio files.",
        "beats": "Track beats in audio files.",
        "tempo": "Estimate the tempo of audio files.",
        "evaluate": "Score detection files against annotation files.",
    }
    for program in _PROGRAMS:
        prog_parser = subparsers.add_parser(
            program, help=descriptions[program],
            description=descriptions[program])
        modes = prog_parser.add_subparsers(dest="mode", required=True)

        single = modes.add_parser("single", help="process one input file")
        single.add_argument("input", help="input file")
        single.add_argument("-o", "--output", default=None,
                            help="output file (default: stdout)")
        single.add_argument("--config", default=None,
                            help="run with a saved configuration")
        _add_flags(single, program)

        batch = modes.add_parser(
            "batch", help="process many files, one output file per input")
        batch.add_argument("inputs", nargs="+",
                           help="input files, directories, or glob patterns")
        batch.add_argument("-d", "--output-dir", required=True,
                           help="directory for the per-file outputs")
        batch.add_argument("-j", "--workers", type=int, default=None,
                           help="worker processes (default: CPU count)")
        batch.add_argument("--config", default=None,
                           help="run with a saved configuration")
        _add_flags(batch, program)

        save = modes.add_parser(
            "save-config", help="write the effective configuration to a file")
        save.add_argument("path", help="config file to write")
        _add_flags(save, program)
    return parser


def _build_config(args):
    """Pipeline from a config file and/or flags; flags win."""
    program = args.program
    info = _PROGRAMS[program]
    overrides = {dest: getattr(args, dest)
                 for _, dest, _, _, _ in info["flags"]
                 if getattr(args, dest) is not None}

    if getattr(args, "config", None):
        config = load_config(args.config)
        if config.program != program:
            raise ValidationError("config is for program %r, not %r"
                                  % (config.program, program))
        if overrides:
            doc = config.pipeline.spec()
            _apply_overrides(doc["root"], program, overrides)
            config = ProgramConfig(program, pipeline_from_document(doc),
                                   config.io)
        return config

    kwargs = {dest: (overrides[dest] if dest in overrides else default)
              for _, dest, _, default, _ in info["flags"]}
    try:
        pipeline = info["builder"](**kwargs)
    except InvalidParameter:
        raise
    return ProgramConfig(program, pipeline)


def _apply_overrides(root_node, program, overrides):
    targets = {}
    for dest, value in overrides.items():
        kind, param = _PROGRAMS[program]["targets"][dest]
        targets.setdefault(kind, {})[dest] = (param, value)
    applied = set()

    def walk(node):
        kind = node.get("kind")
        if kind in targets:
            for dest, (param, value) in targets[kind].items():
                node.setdefault("params", {})[param] = value
                applied.add(dest)
        for child in node.get("children", []) or []:
            walk(child)

    walk(root_node)
    missing = set(overrides) - applied
    if missing:
        raise UsageError(
            "flag(s) %s do not apply to the configured pipeline"
            % ", ".join("--" + dest.replace("_", "-") for dest in sorted(missing)))


def _dispatch(args):
    config = _build_config(args)
    if args.mode == "single":
        config.io["inputs"] = [args.input]
        config.io["output"] = args.output
        return run_single(config, args.input, args.output)
    if args.mode == "batch":
        config.io["inputs"] = list(args.inputs)
        config.io["output_dir"] = args.output_dir
        return run_batch(config, args.inputs, args.output_dir,
                         workers=args.workers)
    if args.mode == "save-config":
        save_config(config, args.path)
        return EXIT_OK
    raise UsageError("unknown mode %r" % (args.mode,))


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return _dispatch(args)
    except SystemExit:
        raise
    except Exception as exc:  # noqa: BLE001 - single reporting point
        try:
            code = _exit_code_for(exc)
        except Exception:
            raise exc
        print("error: %s" % exc, file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
