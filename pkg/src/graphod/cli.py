"""Batch command line: ``inject``, ``fit``, ``eval`` and ``pipeline``.

Exit codes: 0 success, 1 I/O or unreadable input, 2 invalid configuration
or parameters, 3 training diverged. Every command computes all of its
outputs before writing any of them, and each file is written to a
temporary name and renamed into place.
"""

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .api import fit, read_scores_csv, save_weights, score_report
from .config import DetectorConfig
from .detectors import traces_to_csv
from .exceptions import (ConfigError, ContractError, GraphFormatError,
                         TrainingDivergedError)
from .generators import (community_graph, gen_attribute_outliers,
                         gen_structural_outliers)
from .graph import labels_to_text, load_graph, load_labels, to_json_dict
from .metrics import metric_report

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2, 3


class CommandError(Exception):
    def __init__(self, code, message):
        self.code = code
        super().__init__(message)


def _fail(code, message):
    raise CommandError(code, message)


def _read_json(path, what):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot read {what} {path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        _fail(EXIT_CONFIG, f"{what} {path} is not valid JSON: {exc}")


def _load_graph(path, feature_path=None, label_path=None):
    try:
        return load_graph(path, feature_path, label_path)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot read graph {path}: {exc.strerror}")
    except (GraphFormatError, ValueError) as exc:
        _fail(EXIT_IO, f"cannot parse graph {path}: {exc}")


def _write_all(outputs):
    """Write ``{path: str | bytes | callable(path)}`` atomically; on any
    failure remove what was already written."""
    done = []
    try:
        for path, payload in outputs.items():
            path = os.fspath(path)
            parent = os.path.dirname(path)
            if parent:
                os.makedirs(parent, exist_ok=True)
            if callable(payload):
                payload(path)
            else:
                tmp = f"{path}.tmp{os.getpid()}"
                mode = "wb" if isinstance(payload, bytes) else "w"
                with open(tmp, mode) as fh:
                    fh.write(payload)
                os.replace(tmp, path)
            done.append(path)
    except OSError as exc:
        for path in done:
            try:
                os.remove(path)
            except OSError:
                pass
        _fail(EXIT_IO, f"cannot write output: {exc}")


def _graph_json(g):
    return json.dumps(to_json_dict(g))


def _run_guarded(fn, *args, **kwargs):
    try:
        fn(*args, **kwargs)
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    return EXIT_OK


# -- inject -----------------------------------------------------------------

def _inject(g, kind, params, seed):
    params = dict(params or {})
    try:
        if kind == "structural":
            allowed = {"m", "n"}
            fn = gen_structural_outliers
        elif kind == "attribute":
            allowed = {"n", "k"}
            fn = gen_attribute_outliers
        else:
            _fail(EXIT_CONFIG, f"unknown injection kind {kind!r}; valid kinds: "
                  "structural, attribute")
        unknown = sorted(set(params) - allowed)
        if unknown:
            _fail(EXIT_CONFIG, f"unknown {kind} injection parameters: {unknown}")
        if kind == "structural" and not {"m", "n"} <= set(params):
            _fail(EXIT_CONFIG, "structural injection needs m and n")
        if kind == "attribute" and "n" not in params:
            _fail(EXIT_CONFIG, "attribute injection needs n")
        return fn(g, seed=seed, **{k: int(v) for k, v in params.items()})
    except (ContractError, TypeError, ValueError) as exc:
        _fail(EXIT_CONFIG, str(exc))


def _cmd_inject(graph_in, kind, params, seed, graph_out, labels_out,
                feature_path=None, label_path=None):
    g = _load_graph(graph_in, feature_path, label_path)
    result = _inject(g, kind, params, seed)
    _write_all({graph_out: _graph_json(result.graph),
                labels_out: labels_to_text(result.y)})


def cmd_inject(graph_in, kind, params, seed, graph_out, labels_out, **kw):
    """Inject outliers and write the graph (JSON) and the label file."""
    return _run_guarded(_cmd_inject, graph_in, kind, params, seed, graph_out,
                        labels_out, **kw)


# -- fit --------------------------------------------------------------------

def _detector_config(doc, seed=None):
    if seed is not None:
        doc = dict(doc, seed=seed)
    try:
        return DetectorConfig.from_dict(doc)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, str(exc))


def _fit_outputs(g, config, verbose=False):
    try:
        fitted = fit(config, g, verbose=verbose)
    except TrainingDivergedError as exc:
        _fail(EXIT_DIVERGED, str(exc))
    except ContractError as exc:
        _fail(EXIT_CONFIG, str(exc))
    return fitted, score_report(fitted, g)


def _cmd_fit_score(graph_in, config_json, scores_out, model_out, trace_out=None,
                   seed=None, verbose=False):
    doc = _read_json(config_json, "config") if isinstance(config_json, (str, os.PathLike)) \
        else config_json
    config = _detector_config(doc, seed)
    g = _load_graph(graph_in)
    fitted, report = _fit_outputs(g, config, verbose)
    outputs = {scores_out: report.to_csv(),
               model_out: lambda path: save_weights(fitted, path)}
    if trace_out is not None:
        outputs[trace_out] = traces_to_csv(fitted.trace)
    _write_all(outputs)


def cmd_fit_score(graph_in, config_json, scores_out, model_out, **kw):
    """Train a detector and write the score table and a weight dump."""
    return _run_guarded(_cmd_fit_score, graph_in, config_json, scores_out,
                        model_out, **kw)


# -- eval -------------------------------------------------------------------

def _report(y, scores, k=None):
    if len(y) != len(scores):
        _fail(EXIT_CONFIG, f"{len(y)} labels but {len(scores)} scores")
    try:
        return metric_report(y, scores, k)
    except ContractError as exc:
        _fail(EXIT_CONFIG, str(exc))


def _cmd_eval(scores_csv, labels_file, k=None, stdout=None):
    try:
        scores = read_scores_csv(scores_csv)
        y = load_labels(labels_file)
    except OSError as exc:
        _fail(EXIT_IO, f"cannot read input: {exc}")
    except (GraphFormatError, ContractError, KeyError, ValueError) as exc:
        _fail(EXIT_IO, f"cannot parse input: {exc}")
    report = _report(y, scores, k)
    print(json.dumps(report, sort_keys=True), file=stdout or sys.stdout)


def cmd_eval(scores_csv, labels_file, k=None, stdout=None):
    """Print the metric report JSON for a score table and a label file."""
    return _run_guarded(_cmd_eval, scores_csv, labels_file, k, stdout)


# -- pipeline ---------------------------------------------------------------

PIPELINE_KEYS = {"seed", "seeds", "dataset", "injection", "detector",
                 "output_dir", "k"}


def config_hash(doc):
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def _pipeline_dataset(spec):
    if not isinstance(spec, dict):
        _fail(EXIT_CONFIG, "'dataset' must be an object")
    if "synthetic" in spec:
        params = spec["synthetic"] or {}
        try:
            return community_graph(**params)
        except TypeError as exc:
            _fail(EXIT_CONFIG, f"bad synthetic dataset parameters: {exc}")
    if "path" not in spec:
        _fail(EXIT_CONFIG, "'dataset' needs 'path' or 'synthetic'")
    return _load_graph(spec["path"], spec.get("features"), spec.get("labels"))


def _run_pipeline(doc, out_dir, verbose=False):
    """One seeded pipeline run; returns nothing, writes five artifacts."""
    seed = doc["seed"]
    g = _pipeline_dataset(doc.get("dataset"))
    injection = doc.get("injection") or {}
    unknown = sorted(set(injection) - {"structural", "attribute"})
    if unknown:
        _fail(EXIT_CONFIG, f"unknown injection kinds: {unknown}")
    y = np.zeros(g.num_nodes, dtype=np.int64)
    per_kind = {}
    seeds = {"pipeline": seed}
    for offset, kind in enumerate(("structural", "attribute")):
        if kind in injection:
            s = seed + offset
            result = _inject(g, kind, injection[kind], s)
            g = result.graph
            y = np.maximum(y, result.y)
            per_kind[kind] = result.y
            seeds[f"{kind}_injection"] = s
    det_doc = dict(doc.get("detector") or {})
    det_doc.setdefault("seed", seed)
    config = _detector_config(det_doc)
    seeds["detector"] = config.seed
    fitted, report = _fit_outputs(g, config, verbose)
    metrics = _report(y, report.scores, doc.get("k"))

    outputs = {
        os.path.join(out_dir, "graph.json"): _graph_json(g),
        os.path.join(out_dir, "labels.txt"): labels_to_text(y),
        os.path.join(out_dir, "scores.csv"): report.to_csv(),
        os.path.join(out_dir, "metrics.json"):
            json.dumps(metrics, sort_keys=True, indent=2) + "\n",
    }
    for kind, yk in per_kind.items():
        outputs[os.path.join(out_dir, f"labels_{kind}.txt")] = labels_to_text(yk)
    outputs[os.path.join(out_dir, "trace.csv")] = traces_to_csv(fitted.trace)
    outputs[os.path.join(out_dir, "model.npz")] = \
        lambda path: save_weights(fitted, path)
    manifest = {
        "graphod_version": __version__,
        "config": doc,
        "config_sha256": config_hash(doc),
        "detector": config.to_dict(),
        "seeds": seeds,
        "num_predicted_outliers": int(report.labels.sum()),
        "artifacts": sorted(os.path.basename(p) for p in outputs)
        + ["manifest.json"],
        "created": datetime.now(timezone.utc).isoformat(),
    }
    outputs[os.path.join(out_dir, "manifest.json")] = \
        json.dumps(manifest, sort_keys=True, indent=2) + "\n"
    _write_all(outputs)


def _pipeline_worker(args):
    doc, out_dir, verbose = args
    return _run_guarded(_run_pipeline, doc, out_dir, verbose)


def _cmd_pipeline(config_json, out=None, jobs=1, verbose=False):
    doc = _read_json(config_json, "pipeline config") \
        if isinstance(config_json, (str, os.PathLike)) else dict(config_json)
    if not isinstance(doc, dict):
        _fail(EXIT_CONFIG, "pipeline config must be a JSON object")
    unknown = sorted(set(doc) - PIPELINE_KEYS)
    if unknown:
        _fail(EXIT_CONFIG, f"unknown pipeline config keys: {unknown}")
    out_dir = out or doc.get("output_dir")
    if not out_dir:
        _fail(EXIT_CONFIG, "no output directory: pass --out or set 'output_dir'")
    if "seeds" in doc:
        seeds = doc["seeds"]
        if not isinstance(seeds, list) or not seeds or \
                not all(isinstance(s, int) for s in seeds):
            _fail(EXIT_CONFIG, "'seeds' must be a non-empty list of integers")
        base = {k: v for k, v in doc.items() if k != "seeds"}
        runs = [(dict(base, seed=s), os.path.join(out_dir, f"seed_{s}"), verbose)
                for s in seeds]
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                codes = list(pool.map(_pipeline_worker, runs))
        else:
            codes = [_pipeline_worker(r) for r in runs]
        worst = max(codes)
        if worst:
            _fail(worst, f"{sum(1 for c in codes if c)} of {len(codes)} runs failed")
        return
    if not isinstance(doc.get("seed"), int) or isinstance(doc.get("seed"), bool):
        _fail(EXIT_CONFIG, "pipeline config needs an integer 'seed' (or 'seeds')")
    _run_pipeline(doc, out_dir, verbose)


def cmd_pipeline(config_json, out=None, jobs=1, verbose=False):
    """Load, inject, fit, score and evaluate as one reproducible run."""
    return _run_guarded(_cmd_pipeline, config_json, out, jobs, verbose)


# -- argument parsing -------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(
        prog="graphod", description="Graph outlier detection toolkit.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("inject", help="plant structural or attribute outliers")
    p.add_argument("graph", help="input graph (.json container or edge list)")
    p.add_argument("--kind", required=True, choices=["structural", "attribute"])
    p.add_argument("--n", type=int, help="number of cliques / attribute targets")
    p.add_argument("--m", type=int, help="clique size (structural)")
    p.add_argument("--k", type=int, help="candidate pool size (attribute)")
    p.add_argument("--config", help="JSON object of injection parameters")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--features", help="feature file for edge-list input")
    p.add_argument("--labels", help="label file for edge-list input")

    p = sub.add_parser("fit", help="train a detector and write scores")
    p.add_argument("graph")
    p.add_argument("--config", required=True, help="detector config JSON")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--verbose", action="store_true", help="print epoch losses")

    p = sub.add_parser("eval", help="evaluate scores against labels")
    p.add_argument("scores", help="score CSV written by 'fit'")
    p.add_argument("labels", help="label file (one 0/1 per line)")
    p.add_argument("--k", type=int)

    p = sub.add_parser("pipeline", help="load, inject, fit and evaluate")
    p.add_argument("--config", required=True)
    p.add_argument("--out", help="output directory (overrides output_dir)")
    p.add_argument("--jobs", type=int, default=1,
                   help="parallel processes for multi-seed configs")
    p.add_argument("--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    if args.command == "inject":
        params = {}
        if args.config:
            code = _run_guarded(lambda: params.update(
                _read_json(args.config, "injection config")))
            if code:
                return code
        for name in ("n", "m", "k"):
            if getattr(args, name) is not None:
                params[name] = getattr(args, name)
        return cmd_inject(args.graph, args.kind, params, args.seed,
                          os.path.join(args.out, "graph.json"),
                          os.path.join(args.out, "labels.txt"),
                          feature_path=args.features, label_path=args.labels)
    if args.command == "fit":
        return cmd_fit_score(args.graph, args.config,
                             os.path.join(args.out, "scores.csv"),
                             os.path.join(args.out, "model.npz"),
                             trace_out=os.path.join(args.out, "trace.csv"),
                             seed=args.seed, verbose=args.verbose)
    if args.command == "eval":
        return cmd_eval(args.scores, args.labels, args.k)
    return cmd_pipeline(args.config, args.out, args.jobs, args.verbose)


if __name__ == "__main__":
    sys.exit(main())
