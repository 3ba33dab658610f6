"""Command-line pipeline: one subcommand per stage, reproducible artifacts.

Every run writes its artifacts under --out-dir plus a
manifest-<subcommand>.json recording the package version, the seed, the
semantic parameters, and sha256 digests of all inputs and outputs.
Manifests carry no timestamps, paths are reduced to file names, and
--threads / --quiet are excluded, so rerunning a command on identical
inputs yields byte-identical artifacts at any thread count.

Exit codes: 0 success, 1 usage error, 2 validation error, 3 provider or
runtime error. Every failure writes a one-line JSON record to stderr.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from . import __version__, io
from .data import Bundle, DependencyStructure, ValidationError
from .evalreport import (
    DEFAULT_EDGE_RATES,
    DEFAULT_REMOVAL_RATES,
    headline_metric,
    prompts_saved,
    remove_one_toy,
    render_rows,
    score,
    sweep,
    tokens_saved,
)
from .labelmodel import fit, majority_vote, predict
from .providers import ProviderConfig, ProviderError, embed_prompts, load_prompted_lfs
from .refine import RefineParams, edge_budget, empirical_structure, refine_structure
from .similarity import agreement_matrix, cosine_matrix, double_fault_matrix
from .synth import generate, load_spec, task_config

SIMILARITY_CHOICES = ("cosine", "agreement", "double_fault")


class UsageError(Exception):
    """Bad flags or flag combinations; maps to exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _emit_error(kind: str, message: str, code: int) -> None:
    record = {"error": kind, "message": message, "exit_code": code}
    print(json.dumps(record), file=sys.stderr)


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_manifest(
    args,
    params: dict,
    inputs: dict[str, Path],
    outputs: Sequence[Path],
) -> Path:
    manifest = {
        "version": __version__,
        "subcommand": args.subcommand,
        "seed": args.seed,
        "parameters": params,
        "inputs": {
            label: {"name": Path(p).name, "sha256": _sha256(p)}
            for label, p in sorted(inputs.items())
        },
        "outputs": {p.name: _sha256(p) for p in outputs},
    }
    path = _out_dir(args) / f"manifest-{args.subcommand}.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _out_dir(args) -> Path:
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _info(args, message: str) -> None:
    if not args.quiet:
        print(message)


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


def _parse_floats(text: str, flag: str) -> list[float]:
    try:
        return [float(tok) for tok in text.split(",") if tok.strip() != ""]
    except ValueError:
        raise UsageError(f"{flag} expects comma-separated numbers, got {text!r}") from None


def _write_rows(rows, fmt: str, path: Path) -> None:
    path.write_text(render_rows(rows, fmt))


def _load_bundle_args(args, need_gold: bool) -> Bundle:
    gold_path = getattr(args, "gold", None)
    if need_gold and gold_path is None:
        raise UsageError("--gold is required for this subcommand")
    return io.load_bundle(
        args.votes,
        args.embeddings,
        args.config,
        gold_path,
        provenance=getattr(args, "provenance", "ingested"),
    )


# -- subcommand handlers -------------------------------------------------------


def _cmd_embed(args) -> int:
    lfs = load_prompted_lfs(args.prompts)
    provider = ProviderConfig.from_uri(
        args.provider,
        auth_header_env_var=args.auth_env,
        pooling=args.pooling,
        timeout_seconds=args.timeout,
        batch_size=args.batch_size,
    )
    emb = embed_prompts(lfs, provider)
    out = _out_dir(args) / args.out
    io.save_embeddings_json(emb, out)
    inputs = {"prompts": Path(args.prompts)}
    if provider.kind == "file":
        inputs["provider_file"] = Path(provider.location)
    _write_manifest(
        args,
        {
            "provider": args.provider,
            "pooling": args.pooling,
            "batch_size": args.batch_size,
            "out": args.out,
        },
        inputs,
        [out],
    )
    _info(args, f"embedded {emb.m} prompts (dim {emb.dim}) -> {out}")
    return 0


def _cmd_similarity(args) -> int:
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    for kind in kinds:
        if kind not in SIMILARITY_CHOICES:
            raise UsageError(f"unknown similarity kind {kind!r}")
    if not kinds:
        raise UsageError("--kinds lists no similarity kinds")
    if "cosine" in kinds and args.embeddings is None:
        raise UsageError("cosine similarity needs --embeddings")
    if ("agreement" in kinds or "double_fault" in kinds) and args.votes is None:
        raise UsageError("agreement and double_fault need --votes")
    if "double_fault" in kinds and args.gold is None:
        raise UsageError("double_fault needs --gold")

    inputs: dict[str, Path] = {}
    emb = votes = gold = None
    if args.embeddings is not None:
        emb = io.load_embeddings_json(args.embeddings)
        inputs["embeddings"] = Path(args.embeddings)
    if args.votes is not None:
        votes = io.load_votes_csv(args.votes)
        inputs["votes"] = Path(args.votes)
    if args.gold is not None:
        gold = io.load_gold_csv(args.gold)
        inputs["gold"] = Path(args.gold)

    out_dir = _out_dir(args)
    outputs = []
    for kind in kinds:
        if kind == "cosine":
            mat = cosine_matrix(emb)
        elif kind == "agreement":
            mat = agreement_matrix(votes)
        else:
            mat = double_fault_matrix(votes, gold, per_covote=args.per_covote)
        json_path = out_dir / f"similarity-{kind}.json"
        io.save_similarity_json(mat, json_path)
        cells = [
            {"i": i, "j": j, "value": float(mat.values[i, j])}
            for i in range(mat.m)
            for j in range(mat.m)
        ]
        csv_path = out_dir / f"similarity-{kind}.csv"
        _write_rows(cells, "csv", csv_path)
        outputs.extend([json_path, csv_path])
        _info(args, f"{kind}: {mat.m}x{mat.m} -> {json_path}")
    _write_manifest(
        args, {"kinds": kinds, "per_covote": args.per_covote}, inputs, outputs
    )
    return 0


def _refine_params(args) -> RefineParams:
    if args.m_r is not None and args.removal_rate is not None:
        raise UsageError("give --m-r or --removal-rate, not both")
    if args.m_e is not None and args.edge_rate is not None:
        raise UsageError("give --m-e or --edge-rate, not both")
    return RefineParams(
        removal_count=args.m_r,
        removal_rate=args.removal_rate,
        edge_count=args.m_e,
        edge_rate=args.edge_rate,
    )


def _cmd_refine(args) -> int:
    matrix = io.load_similarity_json(args.similarity)
    params = _refine_params(args)
    m = matrix.m
    m_r, m_e = params.resolve(m)
    if m <= 15:
        if m_r > 0.3 * m:
            _warn(
                f"removing {m_r} of {m} LFs is aggressive for a small pool; "
                "removal counts should stay relatively small"
            )
        cap = edge_budget(m - m_r)
        if m_e > 0.25 * cap:
            _warn(
                f"{m_e} edges out of a budget of {cap} is dense for a small pool; "
                "sparser structures are usually safer"
            )
    if matrix.kind == "cosine":
        structure = refine_structure(matrix, params)
    elif matrix.kind == "agreement":
        structure = empirical_structure(matrix, params)
    else:
        raise ValidationError(
            f"refine works on cosine or agreement matrices, got {matrix.kind!r}"
        )
    out = _out_dir(args) / args.out
    io.save_structure_json(structure, out)
    _write_manifest(
        args,
        {
            "m_r": args.m_r,
            "removal_rate": args.removal_rate,
            "m_e": args.m_e,
            "edge_rate": args.edge_rate,
            "out": args.out,
        },
        {"similarity": Path(args.similarity)},
        [out],
    )
    _info(
        args,
        f"removed {len(structure.removed)}, kept {len(structure.surviving)}, "
        f"{len(structure.edges)} edges -> {out}",
    )
    return 0


def _cmd_label(args) -> int:
    votes = io.load_votes_csv(args.votes)
    cfg = io.load_task_config(args.config)
    inputs = {"votes": Path(args.votes), "config": Path(args.config)}
    if args.structure is not None:
        structure = io.load_structure_json(args.structure)
        inputs["structure"] = Path(args.structure)
    else:
        structure = DependencyStructure.trivial(votes.m)
    out_dir = _out_dir(args)
    outputs = []
    if args.mode == "majority":
        pred = majority_vote(votes, cfg)
    else:
        model = fit(votes, structure, cfg)
        pred = predict(model, votes, dependency_mode=args.mode)
        params_path = out_dir / args.params_out
        io.save_params_json(model, params_path)
        outputs.append(params_path)
    pred_path = out_dir / args.out
    io.save_predictions_csv(pred, pred_path)
    outputs.insert(0, pred_path)
    _write_manifest(
        args,
        {"mode": args.mode, "out": args.out, "params_out": args.params_out},
        inputs,
        outputs,
    )
    _info(args, f"labeled {pred.n} examples -> {pred_path}")
    return 0


def _cmd_eval(args) -> int:
    pred = io.load_predictions_csv(args.pred)
    gold = io.load_gold_csv(args.gold)
    cfg = io.load_task_config(args.config)
    scores = score(pred, gold, cfg)
    name, value = headline_metric(scores, cfg)
    row = {"metric": name, "metric_value": value, **scores}
    out = _out_dir(args) / f"eval-scores.{args.format}"
    _write_rows([row], args.format, out)
    _write_manifest(
        args,
        {"format": args.format},
        {"pred": Path(args.pred), "gold": Path(args.gold), "config": Path(args.config)},
        [out],
    )
    _info(args, f"{name} = {value:.4f} -> {out}")
    return 0


def _cmd_sweep(args) -> int:
    bundle = _load_bundle_args(args, need_gold=True)
    rates = (
        _parse_floats(args.rates, "--rates")
        if args.rates is not None
        else list(DEFAULT_REMOVAL_RATES)
    )
    edge_rates = (
        _parse_floats(args.edge_rates, "--edge-rates")
        if args.edge_rates is not None
        else list(DEFAULT_EDGE_RATES)
    )
    rows = sweep(
        bundle,
        rates,
        edge_rates,
        timing=not args.no_timing,
        threads=args.threads,
        dependency_mode=args.mode,
    )
    out = _out_dir(args) / f"sweep.{args.format}"
    _write_rows(rows, args.format, out)
    _write_manifest(
        args,
        {
            "rates": rates,
            "edge_rates": edge_rates,
            "timing": not args.no_timing,
            "mode": args.mode,
            "provenance": bundle.provenance,
            "format": args.format,
        },
        {
            "votes": Path(args.votes),
            "embeddings": Path(args.embeddings),
            "gold": Path(args.gold),
            "config": Path(args.config),
        },
        [out],
    )
    _info(args, f"{len(rows)} grid points -> {out}")
    return 0


def _cmd_synth(args) -> int:
    spec = load_spec(args.spec)
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    data = generate(spec)
    cfg = task_config(spec, task_name=args.task_name)
    out_dir = _out_dir(args)
    paths = {
        "votes": out_dir / "votes.csv",
        "gold": out_dir / "gold.csv",
        "embeddings": out_dir / "embeddings.json",
        "config": out_dir / "config.json",
        "structure-true": out_dir / "structure-true.json",
    }
    io.save_votes_csv(data.votes, paths["votes"])
    io.save_gold_csv(data.gold, paths["gold"])
    io.save_embeddings_json(data.embeddings, paths["embeddings"])
    io.save_task_config(cfg, paths["config"])
    io.save_structure_json(data.structure, paths["structure-true"])
    _write_manifest(
        args,
        {"task_name": args.task_name, "effective_seed": spec.seed},
        {"spec": Path(args.spec)},
        list(paths.values()),
    )
    _info(
        args,
        f"generated {data.votes.n} examples x {data.votes.m} LFs (seed {spec.seed}) "
        f"-> {out_dir}",
    )
    return 0


def _cmd_savings(args) -> int:
    structure = io.load_structure_json(args.structure)
    if args.n < 0:
        raise UsageError(f"--n must be non-negative, got {args.n}")
    row = {
        "m_removed": len(structure.removed),
        "n": args.n,
        "prompts_saved": prompts_saved(len(structure.removed), args.n),
        "tokens_saved": None,
    }
    inputs = {"structure": Path(args.structure)}
    if args.tokens is not None:
        with open(args.tokens, "r", encoding="utf-8") as fh:
            try:
                counts = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"malformed JSON in {args.tokens}: {exc}") from None
        if not isinstance(counts, list):
            raise ValidationError(f"{args.tokens} must hold a JSON list of token counts")
        row["tokens_saved"] = tokens_saved(structure.removed, counts, args.n)
        inputs["tokens"] = Path(args.tokens)
    out = _out_dir(args) / f"savings.{args.format}"
    _write_rows([row], args.format, out)
    _write_manifest(args, {"n": args.n, "format": args.format}, inputs, [out])
    _info(args, f"prompts saved: {row['prompts_saved']} -> {out}")
    return 0


def _cmd_toy(args) -> int:
    bundle = _load_bundle_args(args, need_gold=True)
    report = remove_one_toy(bundle, low_confidence_threshold=args.threshold)
    out = _out_dir(args) / f"toy-remove-one.{args.format}"
    if args.format == "json":
        out.write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    else:
        _write_rows(report["rows"], args.format, out)
    if report["low_confidence"]:
        _warn(
            f"top pair similarity {report['similarity']:.3f} is below "
            f"{args.threshold}; no strongly correlated pair exists"
        )
    _write_manifest(
        args,
        {"threshold": args.threshold, "format": args.format},
        {
            "votes": Path(args.votes),
            "embeddings": Path(args.embeddings),
            "gold": Path(args.gold),
            "config": Path(args.config),
        },
        [out],
    )
    _info(args, f"pair {report['pair']} (cos {report['similarity']:.3f}) -> {out}")
    return 0


def _cmd_report(args) -> int:
    run_dir = Path(args.run_dir if args.run_dir is not None else args.out_dir)
    if not run_dir.is_dir():
        raise ValidationError(f"run directory {run_dir} does not exist")
    manifest_paths = sorted(run_dir.glob("manifest-*.json"))
    runs = []
    inputs: dict[str, Path] = {}
    for path in manifest_paths:
        try:
            runs.append(json.loads(path.read_text()))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed manifest {path}: {exc}") from None
        inputs[path.stem] = path
    payload = {"run_dir_artifacts": len(manifest_paths), "runs": runs}
    out_dir = _out_dir(args)
    if args.format == "json":
        out = out_dir / "report.json"
        out.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
    else:
        lines = ["# Run report", ""]
        for run in runs:
            lines.append(f"## {run.get('subcommand', '?')}")
            lines.append("")
            lines.append(f"- version: {run.get('version', '?')}")
            lines.append(f"- seed: {run.get('seed')}")
            lines.append(f"- parameters: `{json.dumps(run.get('parameters', {}), sort_keys=True)}`")
            for section in ("inputs", "outputs"):
                entries = run.get(section, {})
                for name in sorted(entries):
                    value = entries[name]
                    digest = value["sha256"] if isinstance(value, dict) else value
                    lines.append(f"- {section[:-1]} {name}: sha256 {digest[:12]}")
            lines.append("")
        out = out_dir / "report.md"
        out.write_text("\n".join(lines))
    _write_manifest(args, {"format": args.format}, inputs, [out])
    _info(args, f"summarized {len(runs)} runs -> {out}")
    return 0


# -- parser wiring -------------------------------------------------------------


def build_parser() -> _Parser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="seed for synthetic data")
    common.add_argument("--out-dir", default=".", help="directory for artifacts")
    common.add_argument(
        "--format", choices=("json", "csv", "md"), default="csv", help="report format"
    )
    common.add_argument("--quiet", action="store_true", help="suppress progress output")
    common.add_argument(
        "--threads", type=int, default=1, help="parallelism for sweep grid points"
    )

    parser = _Parser(prog="lfrefine", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True, parser_class=_Parser)

    p = sub.add_parser("embed", parents=[common], help="embed prompted LFs")
    p.add_argument("--prompts", required=True, help="prompted-LF JSON file")
    p.add_argument("--provider", required=True, help="file:<path> or http(s)://<url>")
    p.add_argument("--pooling", choices=("mean", "first", "last"), default="mean")
    p.add_argument("--auth-env", default=None, help="env var holding a bearer token")
    p.add_argument("--timeout", type=float, default=30.0)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--out", default="embeddings.json")
    p.set_defaults(func=_cmd_embed)

    p = sub.add_parser("similarity", parents=[common], help="pairwise LF similarity")
    p.add_argument("--embeddings", default=None)
    p.add_argument("--votes", default=None)
    p.add_argument("--gold", default=None)
    p.add_argument("--kinds", default="cosine", help="comma-separated kinds")
    p.add_argument("--per-covote", action="store_true", help="double-fault per co-vote")
    p.set_defaults(func=_cmd_similarity)

    p = sub.add_parser("refine", parents=[common], help="remove LFs and build edges")
    p.add_argument("--similarity", required=True, help="similarity JSON file")
    p.add_argument("--m-r", type=int, default=None, help="LFs to remove")
    p.add_argument("--removal-rate", type=float, default=None)
    p.add_argument("--m-e", type=int, default=None, help="edges to generate")
    p.add_argument("--edge-rate", type=float, default=None)
    p.add_argument("--out", default="structure.json")
    p.set_defaults(func=_cmd_refine)

    p = sub.add_parser("label", parents=[common], help="fit the label model and predict")
    p.add_argument("--votes", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--structure", default=None, help="structure JSON (default: none)")
    p.add_argument("--mode", choices=("average", "best", "majority"), default="average")
    p.add_argument("--out", default="predictions.csv")
    p.add_argument("--params-out", default="params.json")
    p.set_defaults(func=_cmd_label)

    p = sub.add_parser("eval", parents=[common], help="score predictions against gold")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--config", required=True)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("sweep", parents=[common], help="grid of removal/edge rates")
    p.add_argument("--votes", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--rates", default=None, help="comma-separated removal rates")
    p.add_argument("--edge-rates", default=None, help="comma-separated edge rates")
    p.add_argument("--no-timing", action="store_true", help="omit runtimes (reproducible bytes)")
    p.add_argument("--mode", choices=("average", "best"), default="average")
    p.add_argument("--provenance", choices=("ingested", "synthetic"), default="ingested")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("synth", parents=[common], help="generate a synthetic bundle")
    p.add_argument("--spec", required=True, help="synthetic spec JSON")
    p.add_argument("--task-name", default="synthetic")
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("savings", parents=[common], help="prompt/token savings")
    p.add_argument("--structure", required=True)
    p.add_argument("--n", type=int, required=True, help="dataset size")
    p.add_argument("--tokens", default=None, help="JSON list of per-LF avg token counts")
    p.set_defaults(func=_cmd_savings)

    p = sub.add_parser(
        "toy-remove-one", parents=[common], help="drop each of the top pair and rescore"
    )
    p.add_argument("--votes", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--threshold", type=float, default=0.5, help="low-confidence cutoff")
    p.set_defaults(func=_cmd_toy)

    p = sub.add_parser("report", parents=[common], help="summarize a run directory")
    p.add_argument("--run-dir", default=None, help="directory holding manifests")
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.threads < 1:
            raise UsageError(f"--threads must be >= 1, got {args.threads}")
        return args.func(args)
    except UsageError as exc:
        _emit_error("usage", str(exc), 1)
        return 1
    except ValidationError as exc:
        _emit_error("validation", str(exc), 2)
        return 2
    except ProviderError as exc:
        _emit_error("provider", str(exc), 3)
        return 3
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 0
        return code
    except Exception as exc:  # pragma: no cover - last-resort guard
        _emit_error("runtime", f"{type(exc).__name__}: {exc}", 3)
        return 3


if __name__ == "__main__":
    sys.exit(main())
