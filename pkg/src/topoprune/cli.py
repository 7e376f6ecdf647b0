"""Command-line interface.

Exit codes: 0 success, 2 input validation, 3 degenerate pipeline state, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
import tempfile
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__
from .evaluation import VARIANTS, SplitSpec, evaluate
from .exceptions import DatasetError, DegenerateStateError, OutputError
from .mts import MtsDataset, dumps_long_csv, load_dataset
from .persistence import build_filtration, reduce, summarize
from .pruner import PruneConfig, PruneResult, distance_matrix, run_pipeline
from .sheaf import SheafComplex, sheaf_features
from .simplicial import default_max_dim, flag_complex

logger = logging.getLogger("topoprune")

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE, EXIT_IO = 0, 2, 3, 4


@dataclass(frozen=True)
class RunConfig:
    input: str
    format: str = "long"
    max_dim: int = 3
    epsilon: float | None = None
    normalize_sheaf: bool = True
    include_degenerate: bool = False
    folds: int = 5
    seed: int = 42
    out: str = "."
    require_edges: bool = False
    prune_result: str | None = None

    def __post_init__(self):
        if self.max_dim < 0:
            raise DatasetError("--max-dim must be >= 0")
        if self.folds < 2:
            raise DatasetError("--folds must be >= 2")
        if self.epsilon is not None and self.epsilon < 0:
            raise DatasetError("--epsilon must be >= 0")

    def prune_config(self) -> PruneConfig:
        return PruneConfig(self.max_dim, self.epsilon, self.include_degenerate)


def config_digest(config: RunConfig) -> str:
    """Hash of every setting that affects outputs, plus the bytes of the input files."""
    doc = {k: v for k, v in asdict(config).items() if k not in ("out", "input", "prune_result")}
    for key in ("input", "prune_result"):
        path = getattr(config, key)
        if path is not None:
            try:
                with open(path, "rb") as fh:
                    doc[key + "_sha256"] = hashlib.sha256(fh.read()).hexdigest()
            except OSError as exc:
                raise DatasetError(f"cannot read {path!r}: {exc}") from exc
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()


def dumps_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def _write_text(fh, text: str) -> None:
    fh.write(text)


def write_outputs(out_dir: str, files: dict[str, str]) -> None:
    """Write every file or none: stage to temp files in ``out_dir``, then rename."""
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise OutputError(f"cannot create output directory {out_dir!r}: {exc}") from exc
    staged: list[tuple[str, str]] = []
    try:
        for name, text in files.items():
            fd, tmp = tempfile.mkstemp(dir=out_dir, prefix=f".{name}.", suffix=".tmp")
            staged.append((tmp, name))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                _write_text(fh, text)
        for tmp, name in staged:
            os.replace(tmp, os.path.join(out_dir, name))
    except OSError as exc:
        for tmp, _ in staged:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise OutputError(f"failed writing to {out_dir!r}: {exc}") from exc


def _clamped_max_dim(config: RunConfig, n_vars: int) -> int:
    return min(config.max_dim, max(n_vars - 1, 0))


# --- stages -------------------------------------------------------------------


def persistence_outputs(config: RunConfig, dataset: MtsDataset, digest: str) -> dict[str, str]:
    dist = distance_matrix(dataset)
    filtration = build_filtration(dist, _clamped_max_dim(config, dataset.n_vars))
    barcode = reduce(filtration)
    final = filtration.complex_at(max(filtration.appearances))
    summary = summarize(barcode, final)
    summary.update(config_digest=digest, variables=list(dataset.variable_names))
    return {"barcode.csv": barcode.to_csv(), "persistence_summary.json": dumps_json(summary)}


def prune_outputs(config: RunConfig, dataset: MtsDataset, digest: str) -> tuple[PruneResult, dict[str, str]]:
    result = run_pipeline(dataset, config.prune_config())
    files = {
        "prune_result.json": result.to_json(config_digest=digest),
        "pruned.csv": dumps_long_csv(result.dataset),
    }
    return result, files


def _radius_summary(radius: np.ndarray) -> dict:
    if radius.size == 0:
        return {}
    q = np.quantile(radius, [0.0, 0.25, 0.5, 0.75, 1.0])
    return {"min": float(q[0]), "q25": float(q[1]), "median": float(q[2]), "q75": float(q[3]),
            "max": float(q[4]), "mean": float(radius.mean())}


def sheaf_outputs(config: RunConfig, pruned: MtsDataset, sheaf: SheafComplex, digest: str) -> dict[str, str]:
    faces = sheaf.higher_faces()
    if not faces:
        if config.require_edges:
            raise DegenerateStateError("pruned complex has no faces of dimension >= 1")
        logger.warning("pruned complex has no edges; no consistency channels added")
    augmented = sheaf_features(pruned, sheaf, config.normalize_sheaf)
    channels = augmented.values[:, pruned.n_vars:, :]
    # consistency radius per (instance, timestep) is the largest face delta
    radius = channels.max(axis=1) if faces else np.zeros((pruned.n_instances, pruned.n_timesteps))
    doc = {
        "config_digest": digest,
        "channels": list(augmented.variable_names[pruned.n_vars:]),
        "normalized": config.normalize_sheaf,
        "radius": _radius_summary(radius),
        "per_instance": {
            inst: {"max": float(radius[i].max()), "mean": float(radius[i].mean())}
            for i, inst in enumerate(pruned.instance_ids)
        },
    }
    return {"augmented.csv": dumps_long_csv(augmented), "consistency.json": dumps_json(doc)}


def evaluate_outputs(config: RunConfig, dataset: MtsDataset, digest: str) -> tuple[dict[str, str], str]:
    if not dataset.is_labeled:
        raise DatasetError("evaluate needs a labeled dataset (label column)")
    split = SplitSpec(folds=config.folds, seed=config.seed)
    files, rows = {}, []
    for variant in VARIANTS:
        res = evaluate(dataset, split, variant, config.prune_config(), normalize_sheaf=config.normalize_sheaf)
        files[f"metrics_{variant}.json"] = res.to_json(config_digest=digest)
        m = res.metrics
        rows.append(f"{variant:<18} {m.accuracy:>8.4f} {m.precision:>9.4f} {m.recall:>8.4f} {m.f1:>8.4f}")
    table = "\n".join([f"{'variant':<18} {'accuracy':>8} {'precision':>9} {'recall':>8} {'f1':>8}"] + rows) + "\n"
    return files, table


def _sheaf_from_prune_file(config: RunConfig, dataset: MtsDataset) -> tuple[MtsDataset, SheafComplex]:
    try:
        with open(config.prune_result, encoding="utf-8") as fh:
            doc = json.load(fh)
        kept = list(doc["kept"])
        edges = doc["edges"]
        max_dim = int(doc.get("max_dim", default_max_dim(len(kept))))
    except (OSError, ValueError, KeyError, TypeError) as exc:
        raise DatasetError(f"cannot read prune result {config.prune_result!r}: {exc}") from exc
    missing = [k for k in kept if k not in dataset.variable_names]
    if missing:
        raise DatasetError(f"input lacks kept variables {missing}")
    pruned = dataset.select_variables([dataset.variable_names.index(k) for k in kept])
    pos = {name: k for k, name in enumerate(kept)}
    try:
        pairs = [(pos[a], pos[b]) for a, b in edges]
        base = flag_complex(len(kept), pairs, max_dim)
    except KeyError as exc:
        raise DatasetError(f"edge refers to a variable that was not kept: {exc}") from exc
    except (ValueError, TypeError) as exc:
        raise DatasetError(f"malformed edge list in {config.prune_result!r}: {exc}") from exc
    return pruned, SheafComplex(base)


# --- commands -------------------------------------------------------------------


def cmd_persistence(config: RunConfig) -> int:
    dataset = load_dataset(config.input, config.format)
    write_outputs(config.out, persistence_outputs(config, dataset, config_digest(config)))
    return EXIT_OK


def cmd_prune(config: RunConfig) -> int:
    dataset = load_dataset(config.input, config.format)
    _, files = prune_outputs(config, dataset, config_digest(config))
    write_outputs(config.out, files)
    return EXIT_OK


def cmd_sheaf(config: RunConfig) -> int:
    dataset = load_dataset(config.input, config.format)
    digest = config_digest(config)
    if config.prune_result:
        pruned, sheaf = _sheaf_from_prune_file(config, dataset)
    else:
        result = run_pipeline(dataset, config.prune_config())
        pruned, sheaf = result.dataset, SheafComplex(result.kept_complex())
    write_outputs(config.out, sheaf_outputs(config, pruned, sheaf, digest))
    return EXIT_OK


def cmd_evaluate(config: RunConfig) -> int:
    dataset = load_dataset(config.input, config.format)
    files, table = evaluate_outputs(config, dataset, config_digest(config))
    write_outputs(config.out, files)
    sys.stdout.write(table)
    return EXIT_OK


def cmd_pipeline(config: RunConfig) -> int:
    dataset = load_dataset(config.input, config.format)
    digest = config_digest(config)
    files = persistence_outputs(config, dataset, digest)
    result, prune_files = prune_outputs(config, dataset, digest)
    files.update(prune_files)
    files.update(sheaf_outputs(config, result.dataset, SheafComplex(result.kept_complex()), digest))
    table = None
    if dataset.is_labeled:
        eval_files, table = evaluate_outputs(config, dataset, digest)
        files.update(eval_files)
    write_outputs(config.out, files)
    if table:
        sys.stdout.write(table)
    return EXIT_OK


COMMANDS = {
    "persistence": cmd_persistence,
    "prune": cmd_prune,
    "sheaf": cmd_sheaf,
    "evaluate": cmd_evaluate,
    "pipeline": cmd_pipeline,
}


def cmd_synth(args) -> int:
    from . import synthetic

    if args.kind == "block":
        ds = synthetic.make_block_dataset(n_instances=args.instances, n_noise=args.noise, seed=args.seed)
    elif args.kind == "mastitis":
        ds = synthetic.make_mastitis_like(n_instances=args.instances, seed=args.seed)
    else:
        ds = synthetic.make_square_fixture()
    directory, name = os.path.split(os.path.abspath(args.output))
    write_outputs(directory, {name: dumps_long_csv(ds)})
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="topoprune",
        description="Topological variable pruning and sheaf consistency features for multivariate time series.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", required=True, help="input CSV")
    common.add_argument("--format", choices=("long", "wide"), default="long")
    common.add_argument("--max-dim", type=int, default=3, help="highest simplex dimension (default 3)")
    common.add_argument("--epsilon", type=float, default=None, help="skip the median-death search and use this scale")
    common.add_argument("--no-normalize-sheaf", dest="normalize_sheaf", action="store_false",
                        help="compute consistency channels on raw readings")
    common.add_argument("--include-degenerate", action="store_true",
                        help="let zero-length bars contribute death times")
    common.add_argument("--folds", type=int, default=5)
    common.add_argument("--seed", type=int, default=42)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--require-edges", action="store_true",
                        help="fail (exit 3) if the pruned complex has no edges")
    common.add_argument("-q", "--quiet", action="store_true")

    for name, helptext in [
        ("persistence", "barcode of the correlation-distance filtration"),
        ("prune", "median-death-time variable pruning"),
        ("sheaf", "append consistency channels to the pruned dataset"),
        ("evaluate", "cross-validated 1-NN on full / pruned / pruned+sheaf data"),
        ("pipeline", "run every stage"),
    ]:
        p = sub.add_parser(name, parents=[common], help=helptext)
        if name == "sheaf":
            p.add_argument("--prune-result", help="prune_result.json from an earlier prune run")

    synth = sub.add_parser("synth", help="write a synthetic dataset")
    synth.add_argument("kind", choices=("block", "mastitis", "square"))
    synth.add_argument("--output", required=True)
    synth.add_argument("--instances", type=int, default=40)
    synth.add_argument("--noise", type=int, default=1)
    synth.add_argument("--seed", type=int, default=0)
    synth.add_argument("-q", "--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    logging.captureWarnings(True)
    try:
        if args.command == "synth":
            return cmd_synth(args)
        fields = {k: v for k, v in vars(args).items() if k in RunConfig.__dataclass_fields__}
        return COMMANDS[args.command](RunConfig(**fields))
    except DatasetError as exc:
        logger.error("%s", exc)
        return EXIT_INPUT
    except DegenerateStateError as exc:
        logger.error("%s", exc)
        return EXIT_DEGENERATE
    except OSError as exc:
        logger.error("%s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
