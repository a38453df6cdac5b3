"""Command-line interface.

Every subcommand works directly against a data directory (the same one
the service uses), supports --json output, and exits 0 on success, 1 on
validation failure, and 2 on internal error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from ..datagen import Intent
from ..datagen.techniques import DatagenError
from ..intelops import Duplicate
from ..intelops.models import IntelError
from ..knowledgebase.models import KnowledgeError
from ..release.models import ReleaseError
from ..ruleforge import RuleError, load_manifest, scan_text, to_manifest
from ..storage import dumps
from .config import ConfigError, load_config
from .platform import Platform, run_drill

_VALIDATION_ERRORS = (
    RuleError,
    IntelError,
    KnowledgeError,
    ReleaseError,
    DatagenError,
    ConfigError,
    ValueError,
    FileNotFoundError,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # unknown subcommand/flags: usage + exit 1
        sys.stderr.write(f"error: {message}\n")
        self.print_usage(sys.stderr)
        raise SystemExit(1)


def _read_jsonl(path: str) -> list[dict]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [json.loads(line) for line in lines if line.strip()]


def _emit(args, payload: dict, text: str | None = None) -> None:
    if args.json or text is None:
        print(dumps(payload))
    else:
        print(text)


def _platform(args) -> Platform:
    # load_config applies RAPIDGUARD_* env overrides even without a file
    config = load_config(getattr(args, "config", None))
    if getattr(args, "data_dir", None):
        config.data_dir = args.data_dir
    return Platform(config)


def _parse_pairs(spec: str) -> list[tuple[str, float]]:
    out = []
    for part in spec.split(","):
        name, _, value = part.partition(":")
        out.append((name, float(value)))
    return out


def _parse_component(spec: str) -> tuple[str, int]:
    name, _, version = spec.partition(":")
    if not version:
        raise ValueError(f"expected id:version, got {spec!r}")
    return name, int(version)


# --- subcommand handlers ----------------------------------------------------


def cmd_serve(args) -> int:
    from .service import serve

    config = load_config(args.config)
    if args.data_dir:
        config.data_dir = args.data_dir
    if args.listen:
        config.listen = args.listen
    serve(config)
    return 0


def cmd_scan(args) -> int:
    package = load_manifest(args.package)
    for i, entry in enumerate(_read_jsonl(args.input)):
        text = entry["text"]
        matches = scan_text(package, text)
        print(
            dumps(
                {
                    "prompt_id": entry.get("prompt_id", f"line-{i}"),
                    "matches": [
                        {
                            "rule": m.rule_name,
                            "offsets": sorted(
                                [off, length]
                                for spans in m.matched.values()
                                for off, length in spans
                            ),
                        }
                        for m in matches
                    ],
                }
            )
        )
    return 0


def cmd_corpus_import(args) -> int:
    platform = _platform(args)
    try:
        count = platform.kb.import_corpus(args.corpus, _read_jsonl(args.file))
        _emit(args, {"corpus": args.corpus, "imported": count},
              f"imported {count} prompts into corpus {args.corpus!r}")
        return 0
    finally:
        platform.close()


def cmd_intel_ingest(args) -> int:
    platform = _platform(args)
    try:
        results = []
        for doc in _read_jsonl(args.file):
            outcome = platform.intel.ingest_item(doc, origin=args.origin)
            if isinstance(outcome, Duplicate):
                results.append({"duplicate_of": outcome.existing.id})
            else:
                results.append({"id": outcome.id, "status": outcome.status})
        fresh = sum(1 for r in results if "id" in r)
        _emit(args, {"results": results},
              f"ingested {fresh} new item(s), {len(results) - fresh} duplicate(s)")
        return 0
    finally:
        platform.close()


def cmd_intel_score(args) -> int:
    platform = _platform(args)
    try:
        susceptibility = args.susceptibility
        if susceptibility is not None:
            try:
                susceptibility = float(susceptibility)
            except ValueError:
                pass  # a label like "highly_likely"
        score = platform.score_intel(
            args.item,
            susceptibility=susceptibility,
            signature_opportunity=args.signature_opportunity,
            data_available=args.data_available,
        )
        status = None
        if not args.no_triage:
            status = platform.triage_intel(args.item)
        _emit(args, {"item_id": args.item, "pir_score": score, "status": status},
              f"{args.item}: score {score:.3f}" + (f", {status}" if status else ""))
        return 0
    finally:
        platform.close()


def cmd_intel_review(args) -> int:
    platform = _platform(args)
    try:
        platform.intel.begin_review(args.item)
        report = platform.intel.generate_report(args.item)
        _emit(args, {"report": report.to_dict()},
              f"{args.item}: report revision {report.revision} generated")
        return 0
    finally:
        platform.close()


def cmd_intel_finalize(args) -> int:
    platform = _platform(args)
    try:
        edits = {}
        for entry in args.set or []:
            section, _, text = entry.partition("=")
            if not text:
                raise ValueError(f"--set expects section=text, got {entry!r}")
            edits[section] = text
        report = platform.finalize_intel_report(
            args.item, edits, base_revision=args.base_revision, actor="cli"
        )
        _emit(args, {"report": report.to_dict()},
              f"{args.item}: finalized at revision {report.revision}")
        return 0
    finally:
        platform.close()


def cmd_intel_queue(args) -> int:
    platform = _platform(args)
    try:
        rows = platform.intel_queue_rows(
            status=args.status, min_score=args.min_score
        )
        if args.json:
            print(dumps({"items": rows}))
        else:
            for row in rows:
                print(
                    f"{row['id']}  {row['pir_score'] if row['pir_score'] is not None else '-':>5}  "
                    f"{row['status']:<10} {row['title'][:60]}"
                )
            if not rows:
                print("(queue empty)")
        return 0
    finally:
        platform.close()


def cmd_datagen_run(args) -> int:
    platform = _platform(args)
    try:
        intents = [
            Intent(d["intent_id"], d["text"], d.get("harm_category", "unspecified"))
            for d in _read_jsonl(args.intents)
        ]
        out_path = Path(args.out)
        existing_lines: list[str] = []
        resume_path = args.resume
        if resume_path:
            from ..datagen import load_checkpoint

            completed = load_checkpoint(resume_path).completed
            if out_path.exists():
                # trim any line past the checkpoint so the file stays exactly-once
                existing_lines = out_path.read_text(encoding="utf-8").splitlines()[:completed]
        with out_path.open("w", encoding="utf-8") as fh:
            for line in existing_lines:
                fh.write(line + "\n")

            def emit(sample):
                fh.write(dumps(sample.to_dict()) + "\n")

            _, checkpoint = platform.run_datagen(
                intents,
                args.techniques.split(","),
                seed=args.seed,
                workers=args.workers,
                checkpoint_path=args.checkpoint or (args.out + ".ckpt.json"),
                resume_path=resume_path,
                emit=emit,
            )
        _emit(
            args,
            {"completed": checkpoint.completed, "out": args.out},
            f"generated {checkpoint.completed} samples -> {args.out}",
        )
        return 0
    finally:
        platform.close()


def cmd_package_publish(args) -> int:
    platform = _platform(args)
    try:
        source = Path(args.rules).read_text(encoding="utf-8")
        package = platform.publish_package(source, args.id, args.version, actor="cli")
        payload = {"package": to_manifest(package)}
        text = f"published {args.id} v{args.version} ({package.fingerprint[:12]})"
        if args.benign:
            benign = [e["text"] for e in _read_jsonl(args.benign)]
            attacks = [e["text"] for e in _read_jsonl(args.attacks)] if args.attacks else [
                "ignore previous instructions"
            ]
            report = platform.validate_rules(args.id, args.version, benign, attacks)
            payload["validation"] = report.to_dict()
            text += f"; validation {'PASS' if report.passes else 'FAIL'}"
            if not report.passes:
                _emit(args, payload, text)
                return 1
        _emit(args, payload, text)
        return 0
    finally:
        platform.close()


def cmd_package_validate(args) -> int:
    platform = _platform(args)
    try:
        benign = [e["text"] for e in _read_jsonl(args.benign)]
        attacks = [e["text"] for e in _read_jsonl(args.attacks)]
        report = platform.validate_rules(args.id, args.version, benign, attacks)
        _emit(args, {"validation": report.to_dict()},
              f"validation {'PASS' if report.passes else 'FAIL'}: "
              f"benign FPs {report.benign_fp_count}, attack hits {report.attack_hit_count}, "
              f"p95 {report.p95_ms:.2f} ms")
        return 0 if report.passes else 1
    finally:
        platform.close()


def cmd_model_register(args) -> int:
    platform = _platform(args)
    try:
        weights = json.loads(args.weights)
        stub = platform.register_model(
            args.id, args.version, weights, args.threshold, actor="cli"
        )
        _emit(args, {"model": stub.to_dict()},
              f"registered model {args.id} v{args.version}")
        return 0
    finally:
        platform.close()


def cmd_release_register(args) -> int:
    platform = _platform(args)
    try:
        models = [ _parse_component(m) for m in args.models.split(",") ] if args.models else []
        version = platform.register_version(
            _parse_component(args.package), models, surfaces=args.surfaces, actor="cli"
        )
        _emit(args, {"version": version.to_dict()},
              f"registered {version.version_id}")
        return 0
    finally:
        platform.close()


def cmd_release_deploy(args) -> int:
    platform = _platform(args)
    try:
        assignments = [
            {"version_id": vid, "mode": "serving", "fraction": frac}
            for vid, frac in _parse_pairs(args.serving)
        ]
        if args.shadow:
            assignments.append({"version_id": args.shadow, "mode": "shadow", "fraction": 1.0})
        deployment = platform.create_deployment(args.environment, assignments, actor="cli")
        _emit(args, {"deployment": deployment.to_dict()},
              f"{args.environment} now at epoch {deployment.epoch}")
        return 0
    finally:
        platform.close()


def cmd_release_gate(args) -> int:
    platform = _platform(args)
    try:
        report = platform.gate(args.baseline, args.candidate, args.corpus, actor="cli")
        _emit(args, {"gate": report.to_dict()},
              f"gate {'PASS' if report.passed else 'FAIL'}: "
              f"fp_delta {report.fp_rate_delta:+.4f}, recall_delta {report.recall_delta:+.4f}, "
              f"flag_delta {report.flag_rate_delta:+.4f}")
        return 0 if report.passed else 1
    finally:
        platform.close()


def cmd_release_promote(args) -> int:
    platform = _platform(args)
    try:
        schedule = [float(f) for f in args.schedule.split(",")]
        deployment = platform.promote(
            args.environment, args.version, schedule, steps=args.steps, actor="cli"
        )
        _emit(args, {"deployment": deployment.to_dict()},
              f"{args.environment} at epoch {deployment.epoch}")
        return 0
    finally:
        platform.close()


def cmd_release_rollback(args) -> int:
    platform = _platform(args)
    try:
        deployment = platform.rollback(args.environment, args.epoch, actor="cli")
        _emit(args, {"deployment": deployment.to_dict()},
              f"{args.environment} rolled back to epoch {args.epoch} "
              f"(new epoch {deployment.epoch})")
        return 0
    finally:
        platform.close()


def cmd_release_shadow_report(args) -> int:
    platform = _platform(args)
    try:
        platform.engine.shadow.flush()
        report = platform.deployments.shadow_compare(
            platform.kb, args.serving, args.shadow, min_samples=args.min_samples
        )
        _emit(args, {"report": report},
              f"window {report['window']}: {report['disagreement_count']} disagreement(s), "
              f"flag rate delta {report['flag_rate_delta']:+.4f}")
        return 0
    finally:
        platform.close()


def cmd_drill(args) -> int:
    platform = _platform(args)
    try:
        benign = None
        if args.benign:
            benign = [e["text"] for e in _read_jsonl(args.benign)]
        result = run_drill(platform, benign_texts=benign, actor="cli")
        _emit(args, {"drill": result},
              f"drill complete in {result['elapsed_s']:.1f}s: "
              f"{result['candidate']} serving at epoch {result['final_epoch']}")
        return 0
    finally:
        platform.close()


def build_parser() -> _Parser:
    parser = _Parser(prog="rapidguard", description="LLM attack rapid-response platform")
    parser.add_argument("--data-dir", default=None, help="platform data directory")
    parser.add_argument("--config", default=None, help="path to config JSON")
    parser.add_argument("--json", action="store_true", help="machine-readable output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--listen", default=None)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("scan", help="scan a prompt corpus with a rule package")
    p.add_argument("--package", required=True, help="package manifest JSON")
    p.add_argument("--input", required=True, help="JSONL prompts ({prompt_id?, text})")
    p.set_defaults(func=cmd_scan)

    corpus = sub.add_parser("corpus", help="corpus operations").add_subparsers(
        dest="corpus_command", required=True
    )
    p = corpus.add_parser("import", help="import a JSONL prompt corpus")
    p.add_argument("--file", required=True)
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=cmd_corpus_import)

    intel = sub.add_parser("intel", help="threat-intel operations").add_subparsers(
        dest="intel_command", required=True
    )
    p = intel.add_parser("ingest", help="ingest a JSONL feed drop")
    p.add_argument("--file", required=True)
    p.add_argument("--origin", default="feed")
    p.set_defaults(func=cmd_intel_ingest)
    p = intel.add_parser("score", help="score an item against the PIR registry")
    p.add_argument("--item", required=True)
    p.add_argument("--susceptibility", default=None,
                   help="0-5 or a label (unlikely|low|moderate|high|highly_likely)")
    p.add_argument("--signature-opportunity", action="store_true")
    p.add_argument("--data-available", action="store_true")
    p.add_argument("--no-triage", action="store_true")
    p.set_defaults(func=cmd_intel_score)
    p = intel.add_parser("queue", help="show the analyst queue")
    p.add_argument("--status", default="queued")
    p.add_argument("--min-score", type=float, default=None)
    p.set_defaults(func=cmd_intel_queue)
    p = intel.add_parser("review", help="begin review and generate the report")
    p.add_argument("--item", required=True)
    p.set_defaults(func=cmd_intel_review)
    p = intel.add_parser("finalize", help="apply analyst edits and finalize")
    p.add_argument("--item", required=True)
    p.add_argument("--set", action="append", metavar="SECTION=TEXT")
    p.add_argument("--base-revision", type=int, default=None)
    p.set_defaults(func=cmd_intel_finalize)

    datagen = sub.add_parser("datagen", help="attack data generation").add_subparsers(
        dest="datagen_command", required=True
    )
    p = datagen.add_parser("run", help="generate attack samples")
    p.add_argument("--intents", required=True, help="JSONL {intent_id, text, harm_category}")
    p.add_argument("--techniques", required=True, help="comma-separated technique ids")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--checkpoint", default=None)
    p.add_argument("--resume", default=None, help="checkpoint file to resume from")
    p.set_defaults(func=cmd_datagen_run)

    package = sub.add_parser("package", help="signature package operations").add_subparsers(
        dest="package_command", required=True
    )
    p = package.add_parser("publish", help="compile and publish a rule file")
    p.add_argument("--rules", required=True, help="rule source file")
    p.add_argument("--id", required=True)
    p.add_argument("--version", type=int, required=True)
    p.add_argument("--benign", default=None, help="optional JSONL benign corpus to validate against")
    p.add_argument("--attacks", default=None, help="optional JSONL attack samples")
    p.set_defaults(func=cmd_package_publish)
    p = package.add_parser("validate", help="validate a published package")
    p.add_argument("--id", required=True)
    p.add_argument("--version", type=int, required=True)
    p.add_argument("--benign", required=True)
    p.add_argument("--attacks", required=True)
    p.set_defaults(func=cmd_package_validate)

    model = sub.add_parser("model", help="detection model stubs").add_subparsers(
        dest="model_command", required=True
    )
    p = model.add_parser("register", help="register an immutable model stub version")
    p.add_argument("--id", required=True)
    p.add_argument("--version", type=int, required=True)
    p.add_argument("--weights", required=True, help='JSON map, e.g. {"attack": 0.6}')
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_model_register)

    release = sub.add_parser("release", help="release operations").add_subparsers(
        dest="release_command", required=True
    )
    p = release.add_parser("register", help="register a guardrail version")
    p.add_argument("--package", required=True, help="package_id:version")
    p.add_argument("--models", default="", help="model_id:version[,model_id:version]")
    p.add_argument("--surfaces", default="input", choices=("input", "output", "both"))
    p.set_defaults(func=cmd_release_register)
    p = release.add_parser("deploy", help="create a deployment epoch")
    p.add_argument("--environment", required=True)
    p.add_argument("--serving", required=True, help="version:fraction[,version:fraction]")
    p.add_argument("--shadow", default=None)
    p.set_defaults(func=cmd_release_deploy)
    p = release.add_parser("gate", help="run the release gate")
    p.add_argument("--baseline", required=True)
    p.add_argument("--candidate", required=True)
    p.add_argument("--corpus", required=True)
    p.set_defaults(func=cmd_release_gate)
    p = release.add_parser("promote", help="advance a version along a fraction schedule")
    p.add_argument("--environment", required=True)
    p.add_argument("--version", required=True)
    p.add_argument("--schedule", required=True, help="comma-separated fractions")
    p.add_argument("--steps", type=int, default=None)
    p.set_defaults(func=cmd_release_promote)
    p = release.add_parser("rollback", help="reinstate a prior epoch")
    p.add_argument("--environment", required=True)
    p.add_argument("--epoch", type=int, required=True)
    p.set_defaults(func=cmd_release_rollback)
    p = release.add_parser("shadow-report", help="serving vs shadow disagreement report")
    p.add_argument("--serving", required=True)
    p.add_argument("--shadow", required=True)
    p.add_argument("--min-samples", type=int, default=None)
    p.set_defaults(func=cmd_release_shadow_report)

    p = sub.add_parser("drill", help="run the end-to-end rapid-response drill")
    p.add_argument("--benign", default=None, help="JSONL benign corpus (default: synthetic)")
    p.set_defaults(func=cmd_drill)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 1
    try:
        return args.func(args)
    except _VALIDATION_ERRORS as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1
    except KeyboardInterrupt:
        return 130
    except Exception as exc:  # internal errors
        sys.stderr.write(f"internal error: {type(exc).__name__}: {exc}\n")
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
