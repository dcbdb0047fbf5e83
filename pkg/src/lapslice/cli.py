"""Command-line interface.

Subcommands: gen, metrics, restructure, oracle-compare, expressive.
Logs go to stderr; machine-readable JSON goes to stdout or files. Exit
codes: 0 success, 1 usage/config, 2 data, 3 numeric failure.

A flat key=value config file (# comments) can seed any restructure run;
explicit flags override file values, and every artifact embeds the resolved
configuration for exact replay.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import logging
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .dictionary import build_dictionary, load_dictionary, save_dictionary
from .eigen import eigendecompose
from .embedding import (
    TrainConfig,
    forward,
    save_checkpoint,
    save_history_csv,
    train,
)
from .errors import ConfigError, DataError, LapsliceError, NumericError
from .expressive import (
    FrequencyFilter,
    ImageSignal,
    baseline_features,
    baseline_regress,
    load_pgm,
    make_target,
    regress,
    regression_config,
    save_pgm,
    synthetic_image,
)
from .graph import (
    Graph,
    generate_class_features,
    generate_er,
    generate_grid,
    generate_sbm,
    normalized_laplacian,
)
from .homophily import density_homophily
from .io import load_graph, save_edge_list
from .restructure import (
    export_restructured,
    greedy_restructure,
    pairwise_distances,
    restructured_graph,
)
from .slicers import (
    DEFAULT_ETA,
    SlicerBank,
    apply_slicer,
    exact_slicer,
    sample_random_signals,
)

log = logging.getLogger("lapslice")


@dataclass
class PipelineConfig:
    """Single source of truth for the restructure workflow."""

    edge_path: str = ""
    feature_path: str | None = None
    label_path: str | None = None
    split_path: str | None = None
    out_dir: str = "out"
    # slicer bank
    bank_size: int = 20
    s: float = 40.0
    m: int = 4
    eps_hat: float = 0.01
    kind: str = "rational"
    p: int = 4
    eta: int = DEFAULT_ETA
    seed: int = 0
    # trainer
    margin: float = 1.0
    negatives: int = 8
    learning_rate: float = 1e-3
    epochs: int = 200
    patience: int = 20
    embed_dim: int = 32
    architecture: str = "linear"
    # restructuring
    metric: str = "density"
    step: int = 0  # 0 = auto (1% of candidate budget)
    candidates: int = 0  # 0 = auto (50 * N)
    mask_policy: str = "train+val"  # labels used for loop scoring
    batch_size: int = 256

    _FIELD_TYPES = None  # populated below

    def validate(self) -> None:
        problems = []
        if not self.edge_path:
            problems.append("edge_path is required")
        if self.bank_size < 1:
            problems.append("bank_size must be >= 1")
        if self.s < 2:
            problems.append("s must be >= 2")
        if self.m < 1:
            problems.append("m must be >= 1")
        if self.p < 1:
            problems.append("p must be >= 1")
        if self.eta < 1:
            problems.append("eta must be >= 1")
        if self.kind not in ("rational", "quadratic"):
            problems.append("kind must be rational or quadratic")
        if self.margin <= 0:
            problems.append("margin must be > 0")
        if self.negatives < 1:
            problems.append("negatives must be >= 1")
        if self.learning_rate < 0:
            problems.append("learning_rate must be >= 0")
        if self.epochs < 1:
            problems.append("epochs must be >= 1")
        if self.patience < 1:
            problems.append("patience must be >= 1")
        if self.embed_dim < 1:
            problems.append("embed_dim must be >= 1")
        if self.architecture not in ("linear", "hidden"):
            problems.append("architecture must be linear or hidden")
        if self.metric not in ("density", "edge", "node", "norm"):
            problems.append("metric must be density/edge/node/norm")
        if self.step < 0:
            problems.append("step must be >= 0 (0 = auto)")
        if self.candidates < 0:
            problems.append("candidates must be >= 0 (0 = auto)")
        if self.mask_policy not in ("train", "train+val", "all"):
            problems.append("mask_policy must be train, train+val or all")
        if self.batch_size < 1:
            problems.append("batch_size must be >= 1")
        if problems:
            raise ConfigError(problems)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _parse_config_file(path) -> dict:
    """Flat key=value lines; '#' starts a comment."""
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ConfigError([f"{path}:{line_no}: expected key=value"])
            key, value = (part.strip() for part in body.split("=", 1))
            out[key] = value
    return out


def _coerce(config: PipelineConfig, updates: dict) -> PipelineConfig:
    fields = {f.name: f.type for f in dataclasses.fields(PipelineConfig)}
    problems = []
    values = dataclasses.asdict(config)
    for key, raw in updates.items():
        if key not in fields or key.startswith("_"):
            problems.append(f"unknown config key {key!r}")
            continue
        current = getattr(config, key)
        try:
            if isinstance(current, bool):
                values[key] = raw in ("1", "true", "True", "yes")
            elif isinstance(current, int):
                values[key] = int(raw)
            elif isinstance(current, float):
                values[key] = float(raw)
            else:
                values[key] = raw
        except ValueError:
            problems.append(f"bad value for {key}: {raw!r}")
    if problems:
        raise ConfigError(problems)
    return PipelineConfig(**values)


def _bank(config: PipelineConfig) -> SlicerBank:
    return SlicerBank.default(
        count=config.bank_size,
        s=config.s,
        m=config.m,
        eps_hat=config.eps_hat,
        p=config.p,
        kind=config.kind,
    )


def _write_json(path, doc) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, sort_keys=True, indent=2)
        fh.write("\n")


def _file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _dictionary_cache_key(config: PipelineConfig) -> str:
    parts = [
        _file_digest(config.edge_path),
        _file_digest(config.feature_path) if config.feature_path else "nofeat",
        repr(
            (
                config.bank_size,
                config.s,
                config.m,
                config.eps_hat,
                config.kind,
                config.p,
                config.eta,
                config.seed,
            )
        ),
    ]
    return hashlib.sha256("|".join(parts).encode()).hexdigest()[:24]


def _scoring_mask(g: Graph, policy: str):
    if policy == "all" or g.train_mask is None:
        return None
    mask = g.train_mask.copy()
    if policy == "train+val" and g.val_mask is not None:
        mask = mask | g.val_mask
    return mask


# -- subcommands -------------------------------------------------------------


def cmd_restructure(args) -> int:
    config = PipelineConfig()
    if args.config:
        config = _coerce(config, _parse_config_file(args.config))
    overrides = {
        key: str(value)
        for key, value in vars(args).items()
        if key in {f.name for f in dataclasses.fields(PipelineConfig)}
        and value is not None
    }
    config = _coerce(config, overrides)
    config.validate()
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)

    stage = "ingest"
    try:
        g = load_graph(
            config.edge_path,
            feature_path=config.feature_path,
            label_path=config.label_path,
            split_path=config.split_path,
        )
        if g.labels is None:
            raise DataError("restructuring needs labels")
        log.info(
            "loaded graph: N=%d E=%d F=%d", g.num_nodes, g.num_edges, g.num_features
        )
        stage = "metrics-before"
        _, _, before = density_homophily(g)
        _write_json(out / "metrics_before.json", {
            "report": before.to_dict(), "config": config.to_dict(),
        })

        stage = "dictionary"
        cache_dir = out / "cache"
        cache_dir.mkdir(exist_ok=True)
        cache_file = cache_dir / f"{_dictionary_cache_key(config)}.dict"
        signals = sample_random_signals(g.num_nodes, config.eta, seed=config.seed)
        if cache_file.exists():
            log.info("dictionary cache hit: %s", cache_file)
            gamma = load_dictionary(cache_file)
        else:
            gamma = build_dictionary(g, _bank(config), signals)
            save_dictionary(cache_file, gamma)

        stage = "train"
        tc = TrainConfig(
            margin=config.margin,
            negatives_per_anchor=config.negatives,
            batch_size=config.batch_size,
            learning_rate=config.learning_rate,
            max_epochs=config.epochs,
            early_stop_patience=config.patience,
            seed=config.seed,
            embed_dim=config.embed_dim,
            architecture=config.architecture,
        )
        model, history = train(gamma, g.labels, g.masks_dict(), tc)
        save_checkpoint(out / "model.ckpt", model)
        save_history_csv(out / "history.csv", history)

        stage = "distances"
        h = forward(model, gamma)
        budget = config.candidates or 50 * g.num_nodes
        idx = pairwise_distances(h, truncate_to=budget)

        stage = "restructure"
        step = config.step or max(1, round(0.01 * idx.retained))
        result = greedy_restructure(
            idx,
            g.labels,
            subset=_scoring_mask(g, config.mask_policy),
            metric=config.metric,
            n=step,
        )
        new_g = restructured_graph(g, result)
        export_restructured(
            new_g, result, out / "restructured.edges", config_echo=config.to_dict()
        )

        stage = "metrics-after"
        _, _, after = density_homophily(new_g)
        _write_json(out / "metrics_after.json", {
            "report": after.to_dict(), "config": config.to_dict(),
        })
        print(json.dumps({
            "out_dir": str(out),
            "edges": result.num_edges,
            "stop_step": result.stop_step,
            "h_den_before": before.h_den,
            "h_den_after": after.h_den,
        }, sort_keys=True))
        return 0
    except LapsliceError as exc:
        log.error("stage %r failed: %s", stage, exc)
        raise


def cmd_metrics(args) -> int:
    g = load_graph(
        args.edges,
        feature_path=args.features,
        label_path=args.labels,
        split_path=args.splits,
    )
    if g.labels is None or not np.any(g.labels >= 0):
        raise DataError("no labeled nodes")
    subset = None
    if args.mask != "all":
        m = g.masks_dict()[args.mask]
        if m is None:
            raise DataError(f"graph has no {args.mask} mask")
        subset = m
    _, _, report = density_homophily(g, subset=subset)
    doc = report.to_dict()
    doc["num_nodes"] = g.num_nodes
    doc["num_edges"] = g.num_edges
    if g.ingest is not None:
        doc["ingest"] = g.ingest.to_dict()
    print(json.dumps(doc, sort_keys=True))
    return 0


def cmd_gen(args) -> int:
    if args.family == "er":
        g = generate_er(
            args.n, args.p, labels=args.classes, seed=args.seed,
            self_loops=not args.no_self_loops,
        )
    elif args.family == "sbm":
        sizes = [int(s) for s in args.sizes.split(",")]
        g = generate_sbm(
            sizes, args.p_intra, args.p_inter, seed=args.seed,
            self_loops=not args.no_self_loops,
        )
    else:
        g = generate_grid(args.width, args.height)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_edge_list(out / "edges.txt", g.num_nodes, g.edges)
    written = [str(out / "edges.txt")]
    if g.labels is not None:
        with open(out / "labels.txt", "w", encoding="utf-8") as fh:
            for i, y in enumerate(g.labels):
                if y >= 0:
                    fh.write(f"{i} {y}\n")
        written.append(str(out / "labels.txt"))
    if args.features and g.labels is not None:
        x = generate_class_features(
            g.labels, args.features, shift=args.feature_shift, seed=args.seed
        )
        with open(out / "features.csv", "w", encoding="utf-8") as fh:
            for row in x:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
        written.append(str(out / "features.csv"))
    if args.split and g.labels is not None:
        rng = np.random.default_rng(args.seed)
        order = rng.permutation(g.num_nodes)
        n_train = int(0.4 * g.num_nodes)
        n_val = int(0.2 * g.num_nodes)
        names = {}
        for i, node in enumerate(order):
            names[int(node)] = (
                "train" if i < n_train else "val" if i < n_train + n_val else "test"
            )
        with open(out / "splits.txt", "w", encoding="utf-8") as fh:
            for node in range(g.num_nodes):
                fh.write(f"{node} {names[node]}\n")
        written.append(str(out / "splits.txt"))
    print(json.dumps({
        "num_nodes": g.num_nodes, "num_edges": g.num_edges, "files": written,
    }, sort_keys=True))
    return 0


def cmd_oracle_compare(args) -> int:
    if args.edges:
        g = load_graph(args.edges)
    else:
        g = generate_er(args.n, args.prob, seed=args.seed, self_loops=False)
    lap = normalized_laplacian(g)
    es = eigendecompose(lap)
    signals = sample_random_signals(g.num_nodes, args.columns, seed=args.seed)
    bank = SlicerBank.default(count=args.bands)
    errors = []
    for params in bank:
        approx = apply_slicer(lap, params, signals.matrix, p=args.level)
        exact = exact_slicer(es, params, signals.matrix)
        denom = np.linalg.norm(exact)
        rel = float(np.linalg.norm(approx - exact) / denom) if denom > 0 else 0.0
        errors.append(rel)
    doc = {
        "num_nodes": g.num_nodes,
        "p": args.level,
        "per_band_relative_error": errors,
        "max_relative_error": max(errors),
    }
    print(json.dumps(doc, sort_keys=True))
    return 0


def cmd_expressive(args) -> int:
    if args.image:
        img = load_pgm(args.image)
    else:
        img = synthetic_image(args.size, args.size)
    g = generate_grid(img.width, img.height)
    g = Graph(
        num_nodes=g.num_nodes,
        edges=g.edges,
        features=img.values[:, None],
    )
    target = make_target(img, FrequencyFilter(kind=args.filter))
    signals = sample_random_signals(g.num_nodes, args.eta, seed=args.seed)
    gamma = build_dictionary(g, SlicerBank.default(), signals)
    config = regression_config(seed=args.seed)
    model, sse = regress(g, gamma, target, config)
    baseline_sse = baseline_regress(baseline_features(img), target, config)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    predicted = forward(model, gamma)[:, 0]
    save_pgm(out / "predicted.pgm", ImageSignal(img.width, img.height, predicted))
    save_pgm(out / "target.pgm", ImageSignal(img.width, img.height, target.values))
    doc = {
        "filter": args.filter,
        "size": [img.width, img.height],
        "slicer_sse": sse,
        "baseline_sse": baseline_sse,
        "ratio": sse / baseline_sse if baseline_sse > 0 else None,
        "predicted_pgm": str(out / "predicted.pgm"),
    }
    _write_json(out / "expressive.json", doc)
    print(json.dumps(doc, sort_keys=True))
    return 0


# -- entry point ---------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 1, not argparse's 2
        self.print_usage(sys.stderr)
        raise ConfigError([message])


def _build_parser() -> _Parser:
    parser = _Parser(prog="lapslice", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("restructure", help="run the full restructuring pipeline")
    p.add_argument("--config", help="flat key=value config file")
    for name in (
        "edge_path", "feature_path", "label_path", "split_path", "out_dir",
        "kind", "architecture", "metric", "mask_policy",
    ):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name)
    for name in (
        "bank_size", "m", "p", "eta", "seed", "negatives", "epochs",
        "patience", "embed_dim", "step", "candidates", "batch_size",
    ):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=int)
    for name in ("s", "eps_hat", "margin", "learning_rate"):
        p.add_argument(f"--{name.replace('_', '-')}", dest=name, type=float)
    p.set_defaults(func=cmd_restructure)

    p = sub.add_parser("metrics", help="print the homophily report as JSON")
    p.add_argument("edges")
    p.add_argument("--features")
    p.add_argument("--labels", required=True)
    p.add_argument("--splits")
    p.add_argument("--mask", choices=("all", "train", "val", "test"), default="all")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("gen", help="generate synthetic graphs")
    fam = p.add_subparsers(dest="family", required=True)
    er = fam.add_parser("er")
    er.add_argument("--n", type=int, required=True)
    er.add_argument("--p", type=float, required=True)
    er.add_argument("--classes", type=int)
    sbm = fam.add_parser("sbm")
    sbm.add_argument("--sizes", required=True, help="comma-separated class sizes")
    sbm.add_argument("--p-intra", dest="p_intra", type=float, required=True)
    sbm.add_argument("--p-inter", dest="p_inter", type=float, required=True)
    grid = fam.add_parser("grid")
    grid.add_argument("--width", type=int, required=True)
    grid.add_argument("--height", type=int, required=True)
    for sp in (er, sbm, grid):
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--out", required=True)
        sp.add_argument("--no-self-loops", action="store_true")
        sp.add_argument("--features", type=int, default=0)
        sp.add_argument("--feature-shift", dest="feature_shift", type=float, default=1.0)
        sp.add_argument("--split", action="store_true")
        sp.set_defaults(func=cmd_gen)

    p = sub.add_parser(
        "oracle-compare",
        help="max relative error of matvec filtering vs the dense oracle, per band",
    )
    p.add_argument("--edges")
    p.add_argument("--n", type=int, default=100)
    p.add_argument("--p", dest="prob", type=float, default=0.1,
                   help="edge probability for the generated test graph")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--bands", type=int, default=20)
    p.add_argument("--columns", type=int, default=4)
    p.add_argument("--level", type=int, default=4, help="filter effort level")
    p.set_defaults(func=cmd_oracle_compare)

    p = sub.add_parser("expressive", help="frequency-pattern regression benchmark")
    p.add_argument("--image", help="PGM image path (default: bundled synthetic)")
    p.add_argument("--filter", choices=("low", "band", "high"), required=True)
    p.add_argument("--size", type=int, default=32)
    p.add_argument("--eta", type=int, default=DEFAULT_ETA)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="out")
    p.set_defaults(func=cmd_expressive)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(
        stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s"
    )
    try:
        parser = _build_parser()
        args = parser.parse_args(argv)
        log.setLevel(logging.DEBUG if args.verbose else logging.INFO)
        return args.func(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 1
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
