"""Command line entry point: ``softmapper gen | run | metrics``.

Exit codes: 0 on success, 1 when the pipeline itself fails, 2 for usage
and configuration errors (including an unwritable output location).
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import traceback
from pathlib import Path

import numpy as np

from .assignment import sample_assignment
from .config import RUN_PRESETS, ConfigError, RunConfig
from .dataset import (CIRCLE_PRESETS, PointCloud, filter_coordinate, filter_mean_distance,
                      generate_circles, generate_cross, load_csv, save_csv, substream)
from .gmm import em_fit, responsibilities
from .mapper import MapperGraph, StandardCoverSpec, graph_stats, mapper_function, sample_statistics, standard_mapper
from .metrics import GroundTruthTopology, MetricReport, sc_norm, silhouette, subgroup_test, tsr
from .optimize import LossConfig, TrainConfig, evaluate, sgd_fit
from .persistence import extended_persistence, node_filtration_mean

PACKAGE = __name__.rsplit(".", 1)[0]
log = logging.getLogger(PACKAGE)


class UsageError(Exception):
    pass


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _writable_dir(path: Path) -> Path:
    try:
        path.mkdir(parents=True, exist_ok=True)
    except OSError as err:
        raise UsageError(f"cannot create output directory {path}: {err.strerror}") from None
    if not os.access(path, os.W_OK):
        raise UsageError(f"output directory {path} is not writable")
    return path


def _write(path: Path, text: str):
    with open(path, "w", newline="\n") as fh:
        fh.write(text)


def load_points(cfg: RunConfig) -> PointCloud:
    ds = cfg.dataset
    if "csv" in ds:
        return load_csv(ds["csv"], has_labels=bool(ds.get("has_labels", False)), header=bool(ds.get("header", False)))
    rng = substream(cfg.seed, "dataset")
    if "cross" in ds:
        return generate_cross(seed=rng, **ds["cross"])
    return generate_circles(cfg.circle_spec(), rng)


def filter_values(cfg: RunConfig, pc: PointCloud) -> np.ndarray:
    if cfg.filter == "x":
        return filter_coordinate(pc, 0)
    if cfg.filter == "y":
        return filter_coordinate(pc, 1)
    if cfg.filter == "mean_distance":
        return filter_mean_distance(pc)
    return filter_coordinate(pc, int(cfg.filter.split(":", 1)[1]))


def _truth(cfg: RunConfig):
    t = {k: v for k, v in cfg.truth.items() if v is not None}
    return GroundTruthTopology(**t) if t else None


def _metric_dict(pc, g: MapperGraph, truth) -> dict:
    out = {"graph": graph_stats(g), "n_nodes": g.n_nodes, "n_edges": g.n_edges}
    sc = silhouette(pc, g) if g.n_nodes >= 2 else None
    out["sc"] = sc
    out["sc_norm"] = None if sc is None else sc_norm(sc)
    if truth is not None:
        t = tsr(g, truth)
        out["truth"] = {"components": truth.components, "loops": truth.loops}
        out["tsr"] = t
        if sc is not None:
            out.update(MetricReport.build(sc, t).to_dict())
    return out


def _trace_csv(trace) -> str:
    lines = ["step,total_loss,nll_term,topo_term"]
    lines += [f"{r.step},{r.total_loss:.17g},{r.nll_term:.17g},{r.topo_term:.17g}" for r in trace]
    return "\n".join(lines) + "\n"


def run_pipeline(cfg: RunConfig, out: Path) -> dict:
    """Execute one configured run and write its artifacts into ``out``."""
    pc = load_points(cfg)
    f = filter_values(cfg, pc)
    clustering = cfg.clustering_config()
    truth = _truth(cfg)
    files = {}

    if cfg.mode == "standard":
        g, intervals = standard_mapper(pc, f, StandardCoverSpec(int(cfg.K), float(cfg.overlap)), clustering)
        diagram = extended_persistence(node_filtration_mean(g, f))
        metrics = _metric_dict(pc, g, truth)
        metrics["intervals"] = intervals.tolist()
    else:
        weights = LossConfig(cfg.lambda1, cfg.lambda2)
        train = TrainConfig(cfg.learning_rate, int(cfg.steps), cfg.gradient_mode)
        theta0 = cfg.initial_params() or em_fit(f, int(cfg.K))
        every = int(cfg.checkpoint_every)
        ckpt = _writable_dir(out / "checkpoints") if every else None

        def checkpoint(step, theta):
            if every and step % every == 0:
                _write(ckpt / f"params_step{step:06d}.json", theta.dumps() + "\n")

        theta, trace = sgd_fit(pc, f, theta0, train, weights, clustering, callback=checkpoint)
        final = evaluate(theta, pc, f, clustering, weights)
        g, diagram = final.structure.graph, final.structure.diagram
        metrics = _metric_dict(pc, g, truth)
        metrics["loss"] = {"initial": trace[0].total_loss, "final": final.total,
                           "final_nll_term": final.nll_term, "final_topo_term": final.topo_term}
        files["trace.csv"] = _trace_csv(trace)
        files["params.json"] = theta.dumps() + "\n"
        files["initial_params.json"] = theta0.dumps() + "\n"
        files["assignment.csv"] = "\n".join(",".join(str(int(v)) for v in row)
                                             for row in final.structure.H) + "\n"
        if cfg.mode == "soft-sample":
            Q = responsibilities(f, theta)
            graphs = []
            for k in range(int(cfg.samples)):
                H = sample_assignment(Q, substream(cfg.seed, f"sampling:{k}"))
                graphs.append(mapper_function(pc, H, clustering))
            files["sample_stats.json"] = _dump_json(sample_statistics(graphs))

    files["graph.json"] = g.dumps() + "\n"
    files["graph.dot"] = g.to_dot(labels=pc.labels)
    files["diagram.csv"] = diagram.to_csv()
    files["metrics.json"] = _dump_json(metrics)
    for name, text in files.items():
        _write(out / name, text)
    return metrics


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    for name in ("mode", "seed", "samples", "steps", "learning_rate", "checkpoint_every", "out"):
        value = getattr(args, name, None)
        if value is not None:
            setattr(cfg, name, value)
    if args.truth_components is not None:
        cfg.truth = {**cfg.truth, "components": args.truth_components}
    if args.truth_loops is not None:
        cfg.truth = {**cfg.truth, "loops": args.truth_loops}
    return cfg


def _base_config(args) -> RunConfig:
    data = {}
    if getattr(args, "preset", None):
        data.update(json.loads(json.dumps(RUN_PRESETS[args.preset])))
    if args.config:
        data.update(RunConfig.load(args.config).explicit)
    return RunConfig.from_dict(data)


def cmd_gen(args) -> int:
    if args.dataset:
        cfg = RunConfig(dataset={"preset": args.dataset})
    else:
        cfg = _base_config(args)
    if args.seed is not None:
        cfg.seed = args.seed
    cfg.validate()
    if not args.out:
        raise UsageError("gen needs --out PATH")
    target = Path(args.out)
    _writable_dir(target.parent if str(target.parent) else Path("."))
    pc = load_points(cfg)
    save_csv(pc, target, with_labels=pc.labels is not None)
    print(f"n={pc.n} d={pc.d}")
    return 0


def cmd_run(args) -> int:
    cfg = _apply_overrides(_base_config(args), args).validate()
    if not cfg.out:
        raise UsageError("run needs --out DIR (or 'out' in the config)")
    out = _writable_dir(Path(cfg.out))
    _write(out / "config.json", _dump_json({k: v for k, v in cfg.to_dict().items() if k != "out"}))
    metrics = run_pipeline(cfg, out)
    stats = metrics["graph"]
    print(f"nodes={metrics['n_nodes']} edges={metrics['n_edges']} "
          f"components={stats['connected_components']} loops={stats['loops']}")
    if "sc_adj" in metrics:
        print(MetricReport(metrics["sc"], metrics["sc_norm"], metrics["tsr"], metrics["sc_adj"]).row(
            cfg.dataset.get("preset", ""), cfg.mode))
    return 0


def _parse_ids(text: str) -> list:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise UsageError(f"--subgroup expects comma-separated node ids, got {text!r}") from None


def cmd_metrics(args) -> int:
    try:
        g = MapperGraph.loads(Path(args.graph).read_text())
    except OSError as err:
        raise UsageError(f"cannot read graph {args.graph}: {err.strerror}") from None
    except (ValueError, KeyError) as err:
        raise UsageError(f"{args.graph} is not a valid graph file: {err}") from None
    truth = None
    if args.truth_components is not None or args.truth_loops is not None:
        try:
            truth = GroundTruthTopology(args.truth_components, args.truth_loops)
        except ValueError as err:
            raise UsageError(str(err)) from None
    elif args.tsr_dims:
        raise UsageError("TSR requested without --truth-components/--truth-loops")
    pc = None
    if args.data:
        pc = load_csv(args.data, has_labels=args.labels, header=args.header)
        if pc.n <= max((int(nd.members.max()) for nd in g.nodes), default=-1):
            raise UsageError("graph refers to points beyond the data file")
    elif args.subgroup:
        raise UsageError("--subgroup needs --data with a label column (--labels)")
    report = {"graph": graph_stats(g), "n_nodes": g.n_nodes, "n_edges": g.n_edges}
    sc = silhouette(pc, g) if pc is not None and g.n_nodes >= 2 else None
    if sc is not None:
        report["sc"] = sc
        report["sc_norm"] = sc_norm(sc)
    if truth is not None:
        dims = args.tsr_dims.split(",") if args.tsr_dims else None
        report["tsr"] = tsr(g, truth, dims)
        if sc is not None:
            report.update(MetricReport.build(sc, report["tsr"]).to_dict())
    if args.subgroup:
        if pc.labels is None:
            raise UsageError("--subgroup needs a label column (--labels)")
        report["subgroup"] = subgroup_test(g, pc.labels, _parse_ids(args.subgroup))
    text = _dump_json(report)
    if args.out:
        target = Path(args.out)
        _writable_dir(target.parent if str(target.parent) else Path("."))
        _write(target, text)
    sys.stdout.write(text)
    if "sc_adj" in report:
        print(MetricReport(report["sc"], report["sc_norm"], report["tsr"], report["sc_adj"]).row(
            Path(args.graph).stem, ""))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="softmapper", description="Mixture-model soft Mapper graphs.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate a synthetic point cloud as CSV")
    gen.add_argument("--config")
    gen.add_argument("--preset", choices=sorted(RUN_PRESETS), help="take the dataset of a run preset")
    gen.add_argument("--dataset", choices=sorted(CIRCLE_PRESETS), help="circle layout to sample")
    gen.add_argument("--seed", type=int)
    gen.add_argument("--out", help="CSV file to write")
    gen.set_defaults(func=cmd_gen)

    run = sub.add_parser("run", help="build a Mapper graph and write all artifacts")
    run.add_argument("--config")
    run.add_argument("--preset", choices=sorted(RUN_PRESETS), help="start from a built-in parameter setting")
    run.add_argument("--mode", choices=["standard", "soft-mode", "soft-sample"])
    run.add_argument("--seed", type=int)
    run.add_argument("--out")
    run.add_argument("--samples", type=int)
    run.add_argument("--steps", type=int)
    run.add_argument("--learning-rate", type=float)
    run.add_argument("--checkpoint-every", type=int)
    run.add_argument("--truth-components", type=int)
    run.add_argument("--truth-loops", type=int)
    run.set_defaults(func=cmd_run)

    met = sub.add_parser("metrics", help="score an existing graph.json")
    met.add_argument("graph")
    met.add_argument("--data", help="point CSV the graph was built from (enables the silhouette)")
    met.add_argument("--labels", action="store_true", help="last CSV column holds integer labels")
    met.add_argument("--header", action="store_true", help="CSV has a header row")
    met.add_argument("--truth-components", type=int)
    met.add_argument("--truth-loops", type=int)
    met.add_argument("--tsr-dims", help="comma-separated subset of components,loops")
    met.add_argument("--subgroup", help="comma-separated node ids for the chi-square test")
    met.add_argument("--out")
    met.set_defaults(func=cmd_metrics)
    return parser


def _origin(err: BaseException) -> str:
    """Dotted module of the innermost package frame that raised ``err``."""
    root = Path(__file__).resolve().parent
    name = PACKAGE
    for frame in traceback.extract_tb(err.__traceback__):
        path = Path(frame.filename).resolve()
        if root in path.parents:
            name = f"{PACKAGE}.{path.stem}"
    return name


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as err:
        print(f"softmapper: error: {err}", file=sys.stderr)
        return 2
    except Exception as err:  # noqa: BLE001 - any pipeline failure maps to exit code 1
        print(f"{_origin(err)}: {type(err).__name__}: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
