"""Command-line entry point: ``ltm-texture {dump-kernels,extract,run,compare,synth}``."""

from __future__ import annotations

import argparse
import io
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ._validation import ValidationError
from .dataset import DEFAULT_SEED, DatasetError, GrayImage, load_image, resolve_dataset, save_image, write_split
from .forest import EvalReport, ForestParams, cross_validate, evaluate_split, train
from .lbp import DISPLAY_NAMES, KINDS, LbpVariant, extract_lbp, lbp_image
from .ltm import LtmConfig, extract_ltm, ltm_image
from .tchebichef import all_kernels, format_order, format_sig

SPEC_VERSION = 1
WEIGHT_CANDIDATES = (0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 15.0, 20.0)
DESCRIPTORS = ("ltm",) + KINDS


# -- experiment description ---------------------------------------------

@dataclass(frozen=True)
class ExperimentSpec:
    dataset: str
    descriptor: str = "ltm"
    ltm: LtmConfig | None = None
    eval: str = "cv:10"
    forest: ForestParams = field(default_factory=ForestParams)
    sweep: tuple = ()
    cslbp_threshold: float = 0.0

    def __post_init__(self):
        if self.descriptor not in DESCRIPTORS:
            raise ValidationError(f"descriptor: expected one of {DESCRIPTORS}, got {self.descriptor!r}")
        if (self.ltm is not None) != (self.descriptor == "ltm"):
            raise ValidationError("ltm: required for descriptor 'ltm' and forbidden otherwise")
        if self.sweep and self.descriptor != "ltm":
            raise ValidationError("sweep: only allowed with descriptor 'ltm'")
        parse_eval(self.eval)


def parse_eval(text: str):
    if text == "split":
        return ("split", None)
    if text.startswith("cv:"):
        try:
            folds = int(text[3:])
        except ValueError:
            folds = 0
        if folds >= 2:
            return ("cv", folds)
    raise ValidationError(f"eval: expected 'cv:<folds>' (folds >= 2) or 'split', got {text!r}")


def parse_list(text) -> list:
    if isinstance(text, (list, tuple)):
        return list(text)
    return [tok for tok in str(text).replace(",", " ").split() if tok]


def random_sweep(count: int, seed: int, base: LtmConfig) -> list:
    """``count`` weight vectors drawn from the candidate set; orders stay fixed."""
    rng = np.random.default_rng(seed)
    rows = []
    for _ in range(count):
        weights = rng.choice(WEIGHT_CANDIDATES, size=base.k)
        rows.append(LtmConfig(base.kernel_size, base.orders, tuple(float(w) for w in weights), base.value_mode))
    return rows


def _ltm_from_mapping(data: dict, base: LtmConfig | None = None) -> LtmConfig:
    base = base or LtmConfig()
    try:
        return LtmConfig(
            kernel_size=int(data.get("kernel_size", base.kernel_size)),
            orders=tuple(parse_list(data.get("orders", base.orders))),
            weights=tuple(float(w) for w in parse_list(data.get("weights", base.weights))),
            value_mode=data.get("value_mode", base.value_mode),
        )
    except ValidationError as exc:
        raise ValidationError(f"ltm: {exc}") from None
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"ltm: {exc}") from None


def _forest_from_mapping(data: dict) -> ForestParams:
    try:
        return ForestParams(
            n_trees=int(data.get("n_trees", 10)),
            min_samples_split=int(data.get("min_samples_split", 2)),
            max_depth=None if data.get("max_depth") is None else int(data["max_depth"]),
            seed=int(data.get("seed", 0)),
        )
    except (ValidationError, TypeError, ValueError) as exc:
        raise ValidationError(f"forest: {exc}") from None


def load_spec(path) -> ExperimentSpec:
    """Read a JSON experiment file; see README for the schema."""
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ValidationError(f"spec: invalid JSON ({exc})") from None
    if not isinstance(data, dict):
        raise ValidationError("spec: top level must be an object")
    version = data.get("version", SPEC_VERSION)
    if version != SPEC_VERSION:
        raise ValidationError(f"version: unsupported spec version {version!r}")
    if "dataset" not in data:
        raise ValidationError("dataset: missing")
    descriptor = str(data.get("descriptor", "ltm")).lower()
    ltm = None
    if descriptor == "ltm":
        ltm = _ltm_from_mapping(data.get("ltm", {}))
    elif "ltm" in data:
        raise ValidationError("ltm: forbidden for LBP descriptors")
    sweep = data.get("sweep") or ()
    if isinstance(sweep, str):
        parts = sweep.split(":")
        if len(parts) != 3 or parts[0] != "random" or not all(p.isdigit() for p in parts[1:]):
            raise ValidationError(f"sweep: expected 'random:<count>:<seed>', got {sweep!r}")
        if ltm is None:
            raise ValidationError("sweep: only allowed with descriptor 'ltm'")
        sweep = random_sweep(int(parts[1]), int(parts[2]), ltm)
    else:
        if not isinstance(sweep, (list, tuple)):
            raise ValidationError("sweep: expected a list of rows or 'random:<count>:<seed>'")
        rows = []
        for i, row in enumerate(sweep):
            try:
                rows.append(_ltm_from_mapping(row, ltm))
            except ValidationError as exc:
                # Keep the row so the run can report its failure in place.
                rows.append(f"sweep[{i}]: {exc}")
            except AttributeError:
                raise ValidationError(f"sweep[{i}]: expected an object") from None
        sweep = rows
    return ExperimentSpec(
        dataset=str(data["dataset"]),
        descriptor=descriptor,
        ltm=ltm,
        eval=str(data.get("eval", "cv:10")),
        forest=_forest_from_mapping(data.get("forest", {})),
        sweep=tuple(sweep),
        cslbp_threshold=float(data.get("cslbp_threshold", 0.0)),
    )


# -- evaluation ---------------------------------------------------------

def featurize(images, descriptor: str, ltm: LtmConfig | None = None, threshold: float = 0.0) -> list:
    if descriptor == "ltm":
        kernels = ltm.kernels()
        return [extract_ltm(img.pixels, ltm, kernels).bins for img in images]
    variant = LbpVariant(descriptor, threshold)
    return [extract_lbp(img.pixels, variant).bins for img in images]


def evaluate(split, descriptor: str, ltm, eval_mode: str, forest: ForestParams, threshold: float = 0.0) -> EvalReport:
    mode, folds = parse_eval(eval_mode)
    if mode == "cv":
        samples = split.all_samples()
        feats = featurize([img for img, _ in samples], descriptor, ltm, threshold)
        return cross_validate(list(zip(feats, [y for _, y in samples])), forest, folds)
    tr = featurize([img for img, _ in split.train], descriptor, ltm, threshold)
    te = featurize([img for img, _ in split.test], descriptor, ltm, threshold)
    return evaluate_split(
        list(zip(tr, [y for _, y in split.train])), list(zip(te, [y for _, y in split.test])), forest
    )


def _orders_text(cfg: LtmConfig) -> str:
    return " ".join(format_order(o, cfg.kernel_size) for o in cfg.orders)


def _weights_text(cfg: LtmConfig) -> str:
    return " ".join(f"{w:g}" for w in cfg.weights)


@dataclass
class ResultRow:
    experiment: int
    descriptor: str
    config: LtmConfig | None
    report: EvalReport | None = None
    error: str = ""

    @property
    def mean(self) -> float:
        return self.report.mean if self.report else float("nan")

    @property
    def std(self) -> float:
        return self.report.std if self.report else float("nan")


def _run_row(split, spec: ExperimentSpec, index: int, cfg) -> ResultRow:
    if isinstance(cfg, str):
        return ResultRow(index, spec.descriptor, None, error=cfg)
    try:
        report = evaluate(split, spec.descriptor, cfg, spec.eval, spec.forest, spec.cslbp_threshold)
    except (ValidationError, DatasetError) as exc:
        return ResultRow(index, spec.descriptor, cfg, error=str(exc))
    return ResultRow(index, spec.descriptor, cfg, report)


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> list:
    split = resolve_dataset(spec.dataset)
    configs = list(spec.sweep) if spec.sweep else [spec.ltm]
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        rows = list(pool.map(lambda ic: _run_row(split, spec, ic[0] + 1, ic[1]), enumerate(configs)))
    ok = sorted((r for r in rows if r.report), key=lambda r: (-r.mean, r.experiment))
    return ok + [r for r in rows if not r.report]


def rows_to_csv(rows) -> str:
    out = io.StringIO()
    out.write("rank,experiment,descriptor,kernel_size,orders,weights,mean,std,folds,error\n")
    for rank, r in enumerate(rows, start=1):
        cfg = r.config
        ks = cfg.kernel_size if cfg else ""
        orders = _orders_text(cfg) if cfg else ""
        weights = _weights_text(cfg) if cfg else ""
        if r.report:
            stats = f"{r.mean:.6f},{r.std:.6f},{len(r.report.fold_accuracies)}"
        else:
            stats = ",,"
        err = r.error.replace('"', "'")
        out.write(f'{rank},{r.experiment},{r.descriptor},{ks},{orders},{weights},{stats},"{err}"\n')
    return out.getvalue()


def rows_to_markdown(rows, dataset: str) -> str:
    lines = [
        f"| Experiment | $M_{{pq}}$ used | Weights | Best accuracy {dataset} |",
        "|---|---|---|---|",
    ]
    for r in rows:
        orders = _orders_text(r.config) if r.config else "-"
        weights = _weights_text(r.config) if r.config else "-"
        acc = r.report.summary() if r.report else f"failed: {r.error}"
        lines.append(f"| {r.experiment} | {orders} | {weights} | {acc} |")
    best = next((r for r in rows if r.report), None)
    lines.append("")
    if best:
        desc = _orders_text(best.config) if best.config else DISPLAY_NAMES.get(best.descriptor, best.descriptor)
        lines.append(f"best: experiment {best.experiment} ({desc}) {best.report.summary()}")
    else:
        lines.append("best: none (all rows failed)")
    return "\n".join(lines) + "\n"


def compare(split, ltm: LtmConfig, eval_mode: str, forest: ForestParams, threshold: float = 0.0) -> list:
    """LTM plus the four LBP baselines under one evaluation protocol."""
    results = [("LTM", evaluate(split, "ltm", ltm, eval_mode, forest))]
    for kind in KINDS:
        results.append((DISPLAY_NAMES[kind], evaluate(split, kind, None, eval_mode, forest, threshold)))
    return results


def compare_to_csv(results) -> str:
    out = io.StringIO()
    out.write("descriptor,mean,std,folds\n")
    for name, rep in results:
        out.write(f"{name},{rep.mean:.6f},{rep.std:.6f},{len(rep.fold_accuracies)}\n")
    return out.getvalue()


def compare_to_markdown(results, dataset: str) -> str:
    lines = [f"| Method | {dataset} |", "|---|---|"]
    lines += [f"| {name} | {rep.summary()} |" for name, rep in results]
    return "\n".join(lines) + "\n"


# -- commands -------------------------------------------------------------

def _write(path, text: str) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text, encoding="utf-8", newline="\n")


def cmd_dump_kernels(args) -> int:
    kernels = all_kernels(args.size)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    index = ["index,m,n,degree,file"]
    rendering = []
    for i, kn in enumerate(kernels):
        name = f"{kn.name}.csv"
        rows = [",".join(f"{round(v, 6) + 0.0:.6f}" for v in row) for row in kn.w]
        (out / name).write_text("\n".join(rows) + "\n", encoding="utf-8")
        index.append(f"{i},{kn.m},{kn.n},{kn.degree},{name}")
        rendering.append(kn.name)
        rendering += ["  " + " ".join(f"{format_sig(v):>7}" for v in row) for row in kn.w]
        rendering.append("")
    (out / "index.csv").write_text("\n".join(index) + "\n", encoding="utf-8")
    (out / "kernels_3sig.txt").write_text("\n".join(rendering), encoding="utf-8")
    print(f"wrote {len(kernels)} masks to {out}")
    return 0


def _ltm_from_args(args) -> LtmConfig:
    data = {"kernel_size": args.kernel_size, "value_mode": args.value_mode}
    if args.orders:
        data["orders"] = args.orders
    if args.weights:
        data["weights"] = args.weights
    return _ltm_from_mapping(data)


def _forest_from_args(args) -> ForestParams:
    return _forest_from_mapping(
        {
            "n_trees": args.n_trees,
            "min_samples_split": args.min_samples_split,
            "max_depth": args.max_depth,
            "seed": args.seed,
        }
    )


def cmd_extract(args) -> int:
    image = load_image(args.image)
    if args.descriptor == "ltm":
        cfg = _ltm_from_args(args)
        codes = ltm_image(image.pixels, cfg).codes
        bins = np.bincount(codes.ravel(), minlength=cfg.bin_count)
        stretch = 2 if cfg.k == 5 else 1
        if args.render and cfg.k > 5:
            raise ValidationError(f"cannot render {cfg.bin_count} codes as an 8-bit image (k={cfg.k})")
    else:
        variant = LbpVariant(args.descriptor, args.cslbp_threshold)
        codes = lbp_image(image.pixels, variant)
        bins = extract_lbp(image.pixels, variant).bins
        stretch = 1
    if args.render:
        save_image(GrayImage((codes * stretch).astype(np.uint8)), args.render)
    text = "bin,count\n" + "".join(f"{i},{int(c)}\n" for i, c in enumerate(bins))
    _write(args.out, text)
    return 0


def cmd_run(args) -> int:
    spec = load_spec(args.spec)
    rows = run_experiment(spec, jobs=args.jobs)
    out = Path(args.out_dir)
    _write(out / "results.csv", rows_to_csv(rows))
    md = rows_to_markdown(rows, spec.dataset)
    _write(out / "results.md", md)
    if args.save_model:
        best = next((r for r in rows if r.report), None)
        if best is None:
            raise ValidationError("save-model: no successful row to train")
        split = resolve_dataset(spec.dataset)
        feats = featurize([img for img, _ in split.train], spec.descriptor, best.config, spec.cslbp_threshold)
        model = train(list(zip(feats, [y for _, y in split.train])), spec.forest)
        model.save(args.save_model)
    sys.stdout.write(md)
    return 0 if any(r.report for r in rows) else 1


def cmd_compare(args) -> int:
    split = resolve_dataset(args.dataset)
    results = compare(split, _ltm_from_args(args), args.eval, _forest_from_args(args), args.cslbp_threshold)
    out = Path(args.out_dir)
    _write(out / "compare.csv", compare_to_csv(results))
    md = compare_to_markdown(results, args.dataset)
    _write(out / "compare.md", md)
    sys.stdout.write(md)
    return 0


def cmd_synth(args) -> int:
    split = resolve_dataset(f"synthetic:{args.classes}:{args.per_class}:{args.seed}:{args.size}")
    write_split(split, args.out)
    print(f"wrote {len(split.train)} train and {len(split.test)} test images to {args.out}")
    return 0


def _add_ltm_flags(p) -> None:
    p.add_argument("--kernel-size", type=int, default=5)
    p.add_argument("--orders", help="comma-separated, e.g. M00,M01,M10,M11,M20")
    p.add_argument("--weights", help="comma-separated, e.g. 0.1,5,5,5,5")
    p.add_argument("--value-mode", choices=("raw", "absolute"), default="raw")
    p.add_argument("--cslbp-threshold", type=float, default=0.0)


def _add_forest_flags(p) -> None:
    p.add_argument("--n-trees", type=int, default=10)
    p.add_argument("--min-samples-split", type=int, default=2)
    p.add_argument("--max-depth", type=int, default=None)
    p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ltm-texture", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dump-kernels", help="write the N*N Tchebichef moment masks as CSV")
    p.add_argument("--size", type=int, required=True)
    p.add_argument("--out", default="kernels")
    p.set_defaults(func=cmd_dump_kernels)

    p = sub.add_parser("extract", help="histogram (and optional code image) for one PGM image")
    p.add_argument("image")
    p.add_argument("--descriptor", choices=DESCRIPTORS, default="ltm")
    _add_ltm_flags(p)
    p.add_argument("--out", help="histogram CSV path (default: stdout)")
    p.add_argument("--render", help="write the code image as PGM")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("run", help="run an experiment / sweep described by a JSON file")
    p.add_argument("spec")
    p.add_argument("--out-dir", default="results")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--save-model", help="train the best row on the training split and save it here")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="LTM against OLBP, CS-LBP, CS-LDP and XCS-LBP")
    p.add_argument("--dataset", default=f"synthetic:4:20:{DEFAULT_SEED}")
    _add_ltm_flags(p)
    p.add_argument("--eval", default="cv:10")
    _add_forest_flags(p)
    p.add_argument("--out-dir", default="results")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("synth", help="write a synthetic texture dataset with manifests")
    p.add_argument("--classes", type=int, default=4)
    p.add_argument("--per-class", type=int, default=20)
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)
    return parser


def _error_line(kind: str, message: str) -> None:
    sys.stderr.write(json.dumps({"error": kind, "message": message}, sort_keys=True) + "\n")


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        _error_line("usage", str(exc))
        return 2
    except (DatasetError, FileNotFoundError, OSError) as exc:
        _error_line(type(exc).__name__, str(exc))
        return 1


if __name__ == "__main__":
    sys.exit(main())
