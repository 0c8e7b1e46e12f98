"""Command line front end: generate | embed | compare | dim.

Every run is reproducible from its JSON sidecar (config, seed and input
hash are recorded) and file outputs are byte-stable for a fixed config.
Exit codes: 0 success, 2 validation failure, 3 numeric failure; failures
also emit a machine-readable JSON object on stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import numpy as np

from .dataset import (
    PointCloud,
    gen_swiss_roll_hole,
    gen_trefoil,
    lift_isometric,
    load_csv,
    load_manifest,
    write_manifest,
    write_matrix_csv,
)
from .errors import DegenerateNullSpaceError, NumericError, ValidationError
from .localfit import estimate_intrinsic_dim
from .metrics import build_report, procrustes_error
from .neighbors import knn
from .pipeline import DEFAULT_RATIO_THRESHOLD, RunConfig, local_spectra, run_embedding

GENERATORS = ("swiss-hole", "trefoil")


def _sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        digest.update(fh.read())
    return digest.hexdigest()


def _write_json(path, payload):
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _out_prefix(raw) -> Path:
    path = Path(raw)
    if path.suffix == ".csv":
        path = path.with_suffix("")
    if path.parent != Path("."):
        path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _load_input(path) -> PointCloud:
    """Read a cloud and, when a manifest sidecar exists, its ground truth."""
    cloud = load_csv(path)
    manifest_path = Path(str(Path(path).with_suffix("")) + ".manifest.json")
    if manifest_path.exists():
        manifest = load_manifest(manifest_path)
        gt_name = manifest.get("files", {}).get("ground_truth")
        if gt_name:
            gt_path = Path(path).parent / gt_name
            if gt_path.exists():
                gt = load_csv(gt_path).points
                if gt.shape[0] == cloud.n:
                    cloud = PointCloud(cloud.points, gt)
    return cloud


def cmd_generate(args) -> int:
    if args.dataset not in GENERATORS:
        raise ValidationError(f"unknown dataset {args.dataset!r}; choose from {GENERATORS}")
    if args.dataset == "swiss-hole":
        cloud = gen_swiss_roll_hole(args.n, args.hole_fraction, args.seed)
        parameters = {"hole_fraction": args.hole_fraction}
    else:
        cloud = gen_trefoil(args.n, args.seed)
        parameters = {}
    if args.lift_dim is not None:
        cloud = lift_isometric(cloud, args.lift_dim, args.seed)
        parameters["lift_dim"] = args.lift_dim

    prefix = _out_prefix(args.out if args.out else args.dataset)
    points_path = prefix.with_suffix(".csv")
    gt_path = prefix.parent / (prefix.name + ".gt.csv")
    write_matrix_csv(cloud.points, points_path)
    files = {"points": points_path.name}
    if cloud.ground_truth is not None:
        write_matrix_csv(cloud.ground_truth, gt_path)
        files["ground_truth"] = gt_path.name
    write_manifest(
        prefix.parent / (prefix.name + ".manifest.json"),
        generator=args.dataset,
        n=args.n,
        seed=args.seed,
        parameters=parameters,
        files=files,
    )
    print(f"wrote {points_path} ({cloud.n} x {cloud.dim})")
    return 0


def _config_from_args(args) -> RunConfig:
    return RunConfig(
        method=args.method,
        k=args.k,
        d=args.d,
        intrinsic_dim=args.dM,
        n_weights=args.m,
        reg=args.reg,
        seed=args.seed,
        ratio_threshold=args.threshold,
    )


def _run_and_report(cloud, config):
    result = run_embedding(cloud, config)
    report = build_report(
        cloud, result.embedding, result.neighbors, result.blocks, k_eval=config.k
    )
    return result, report


def cmd_embed(args) -> int:
    config = _config_from_args(args)
    cloud = _load_input(args.input)
    config.validate(cloud.n, cloud.dim)  # fail before writing anything

    result, report = _run_and_report(cloud, config)
    emb = result.embedding

    prefix = _out_prefix(args.out)
    write_matrix_csv(emb.coords, prefix.with_suffix(".csv"))
    sidecar = {
        "config": emb.config,
        "eigenvalues": [float(v) for v in emb.eigenvalues],
        "null_eigenvalue": emb.null_eigenvalue,
        "input": str(args.input),
        "input_sha256": _sha256(args.input),
        "n": cloud.n,
        "D": cloud.dim,
    }
    _write_json(prefix.parent / (prefix.name + ".json"), sidecar)
    if cloud.ground_truth is not None:
        with open(prefix.parent / (prefix.name + ".report.json"), "w",
                  encoding="ascii", newline="\n") as fh:
            fh.write(report.to_json() + "\n")
    if args.plot:
        _write_plot(args.plot, emb.coords, cloud)
    print(f"wrote {prefix.with_suffix('.csv')} ({emb.n} x {emb.dim})")
    if emb.config.get("dM_estimated"):
        print(f"estimated intrinsic dimension: {emb.config['dM']}")
    return 0


def _write_plot(path, coords, cloud):
    """Whitespace-separated x y [z] label rows for external plotting."""
    if cloud.ground_truth is not None:
        label = cloud.ground_truth[:, 0]
    else:
        label = np.arange(coords.shape[0], dtype=float)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        for row, lab in zip(coords, label):
            cells = [repr(float(v)) for v in row] + [repr(float(lab))]
            fh.write(" ".join(cells) + "\n")


def _parse_run_spec(spec, defaults) -> RunConfig:
    """Parse one --run string like 'tlle k=8 d=2 dM=2 m=2'."""
    tokens = spec.replace(",", " ").split()
    if not tokens:
        raise ValidationError("empty --run specification")
    method = tokens[0]
    fields = {
        "k": defaults.k,
        "d": defaults.d,
        "dM": None,
        "m": None,
        "reg": defaults.reg,
        "seed": defaults.seed,
        "threshold": defaults.threshold,
    }
    for token in tokens[1:]:
        if "=" not in token:
            raise ValidationError(f"malformed --run token {token!r}; expected key=value")
        key, value = token.split("=", 1)
        if key not in fields:
            raise ValidationError(f"unknown --run key {key!r}")
        fields[key] = float(value) if key in ("reg", "threshold") else int(value)
    return RunConfig(
        method=method,
        k=fields["k"],
        d=fields["d"],
        intrinsic_dim=fields["dM"],
        n_weights=fields["m"],
        reg=fields["reg"],
        seed=fields["seed"],
        ratio_threshold=fields["threshold"],
    )


def cmd_compare(args) -> int:
    if len(args.run) < 2:
        raise ValidationError("compare needs at least two --run specifications")
    configs = [_parse_run_spec(spec, args) for spec in args.run]
    cloud = _load_input(args.input)
    for config in configs:
        config.validate(cloud.n, cloud.dim)

    rows = []
    first_error = None
    reference = None
    for spec, config in zip(args.run, configs):
        entry = {"run": spec, "config": config.echo()}
        try:
            result, report = _run_and_report(cloud, config)
            entry["report"] = report.to_dict()
            entry["eigenvalues"] = [float(v) for v in result.embedding.eigenvalues]
            if reference is None:
                reference = result.embedding
                entry["procrustes_vs_first"] = 0.0
            elif reference.dim == result.embedding.dim:
                entry["procrustes_vs_first"] = procrustes_error(
                    result.embedding, reference.coords
                )
        except (ValidationError, NumericError) as exc:
            entry["error"] = {"type": type(exc).__name__, "message": str(exc)}
            if first_error is None:
                first_error = exc
        rows.append(entry)

    _print_compare_table(rows)
    if args.out:
        _write_json(args.out, {"input": str(args.input), "runs": rows})
    if first_error is not None:
        raise first_error
    return 0


def _print_compare_table(rows):
    show_intersection = any(
        r.get("report", {}).get("self_intersection") is not None for r in rows
    )
    header = ["run", "residual", "affine_score", "preservation", "procrustes", "vs_first"]
    if show_intersection:
        header.append("self_intersect")
    widths = [max(28, len(header[0]))] + [14] * (len(header) - 1)
    print("  ".join(h.ljust(w) for h, w in zip(header, widths)))
    for r in rows:
        if "error" in r:
            print(f"{r['run'][:28].ljust(widths[0])}  error: {r['error']['message']}")
            continue
        rep = r["report"]

        def fmt(value):
            if value is None:
                return "-"
            if isinstance(value, bool):
                return str(value)
            return f"{value:.6g}"

        cells = [
            r["run"][:28].ljust(widths[0]),
            fmt(rep["relation_residual"]).ljust(14),
            fmt(rep["affine_projection_score"]).ljust(14),
            fmt(rep["neighborhood_preservation"]).ljust(14),
            fmt(rep["procrustes_error"]).ljust(14),
            fmt(r.get("procrustes_vs_first")).ljust(14),
        ]
        if show_intersection:
            cells.append(fmt(rep["self_intersection"]).ljust(14))
        print("  ".join(cells))


def cmd_dim(args) -> int:
    cloud = _load_input(args.input)
    nbrs = knn(cloud, args.k)
    estimate = estimate_intrinsic_dim(local_spectra(cloud, nbrs), args.threshold)
    print(f"estimated intrinsic dimension: {estimate.dim}")
    for dim, count in sorted(estimate.votes.items()):
        print(f"  d={dim}: {count} neighborhood(s)")
    if estimate.excluded:
        print(f"  excluded {estimate.excluded} degenerate neighborhood(s)")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tlle",
        description="Locally linear embeddings (lle, hlle, tlle) on point clouds",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a synthetic dataset with its manifest")
    gen.add_argument("dataset", help=f"one of {', '.join(GENERATORS)}")
    gen.add_argument("--n", type=int, required=True, help="number of points")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default=None, help="output prefix (default: dataset name)")
    gen.add_argument("--hole-fraction", type=float, default=0.1, dest="hole_fraction")
    gen.add_argument("--lift-dim", type=int, default=None, dest="lift_dim",
                     help="isometrically lift the cloud to this dimension")
    gen.set_defaults(func=cmd_generate)

    emb = sub.add_parser("embed", help="embed a point cloud")
    emb.add_argument("--in", dest="input", required=True)
    emb.add_argument("--out", required=True, help="output prefix")
    emb.add_argument("--method", choices=("lle", "hlle", "tlle"), required=True)
    emb.add_argument("--k", type=int, required=True)
    emb.add_argument("--d", type=int, required=True)
    emb.add_argument("--dM", type=int, default=None,
                     help="manifold dimension (tlle; estimated when omitted)")
    emb.add_argument("--m", type=int, default=None,
                     help="h-weights per neighborhood (tlle; default 2)")
    emb.add_argument("--reg", type=float, default=1e-3)
    emb.add_argument("--seed", type=int, default=0)
    emb.add_argument("--threshold", type=float, default=DEFAULT_RATIO_THRESHOLD)
    emb.add_argument("--plot", default=None,
                     help="also write whitespace-separated x y [z] label rows")
    emb.set_defaults(func=cmd_embed)

    cmp_ = sub.add_parser("compare", help="run several configs and tabulate metrics")
    cmp_.add_argument("--in", dest="input", required=True)
    cmp_.add_argument("--out", default=None, help="aggregate JSON path")
    cmp_.add_argument("--run", action="append", default=[],
                      help="config like 'tlle k=8 d=2 dM=2 m=2' (repeatable)")
    cmp_.add_argument("--k", type=int, default=8, help="default k for --run entries")
    cmp_.add_argument("--d", type=int, default=2, help="default d for --run entries")
    cmp_.add_argument("--reg", type=float, default=1e-3)
    cmp_.add_argument("--seed", type=int, default=0)
    cmp_.add_argument("--threshold", type=float, default=DEFAULT_RATIO_THRESHOLD)
    cmp_.set_defaults(func=cmd_compare)

    dim = sub.add_parser("dim", help="estimate the intrinsic dimension of a cloud")
    dim.add_argument("--in", dest="input", required=True)
    dim.add_argument("--k", type=int, required=True)
    dim.add_argument("--threshold", type=float, default=DEFAULT_RATIO_THRESHOLD)
    dim.set_defaults(func=cmd_dim)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except DegenerateNullSpaceError as exc:
        _emit_error("numeric", f"{exc} (hint: increase k or check connectivity)")
        return 3
    except ValidationError as exc:
        _emit_error("validation", str(exc))
        return 2
    except NumericError as exc:
        _emit_error("numeric", str(exc))
        return 3
    except OSError as exc:
        _emit_error("validation", f"file error: {exc}")
        return 2


def _emit_error(kind, message):
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
