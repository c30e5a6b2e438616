"""Command-line interface.

Exit codes: 0 success, 1 usage error, 2 runtime failure. All randomness is
pinned by --seed flags; log lines are JSON objects on stderr.
"""

import argparse
import logging
import sys
from pathlib import Path


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="menagerie", description="Text-driven animal avatar animation")
    sub = parser.add_subparsers(dest="command")

    p_plan = sub.add_parser("plan", help="extract (animal, motion) from a query")
    p_plan.add_argument("query")
    p_plan.add_argument("--taxonomy", default="default")
    p_plan.add_argument("--config", default="", help="use the config's planner backend")

    p_gen = sub.add_parser("gen", help="run the full query-to-avatar pipeline")
    p_gen.add_argument("query")
    p_gen.add_argument("--config", required=True)
    p_gen.add_argument("--seed", type=int, default=None, help="override generation seed")
    p_gen.add_argument("--frames", type=int, default=None)
    p_gen.add_argument("--keep-partial", action="store_true")

    p_data = sub.add_parser("dataset", help="build, review, or emit a text-motion corpus")
    data_sub = p_data.add_subparsers(dest="dataset_command")
    p_build = data_sub.add_parser("build")
    p_build.add_argument("--source", required=True)
    p_build.add_argument("--workdir", required=True)
    p_build.add_argument("--budget", type=int, default=8)
    p_build.add_argument("--taxonomy", default="default")
    p_review = data_sub.add_parser("review")
    p_review.add_argument("--workdir", required=True)
    p_review.add_argument("--reviewer", default="cli")
    p_review.add_argument("--record", default="")
    p_review.add_argument("--verdict", choices=["approved", "rejected"], default="approved")
    p_review.add_argument("--approve-all", action="store_true")
    p_review.add_argument("--list", action="store_true", dest="list_records")
    p_emit = data_sub.add_parser("emit")
    p_emit.add_argument("--workdir", required=True)
    p_emit.add_argument("--out", required=True)

    p_eval = sub.add_parser("eval", help="score the planner or motion quality")
    eval_sub = p_eval.add_subparsers(dest="eval_command")
    p_ep = eval_sub.add_parser("planner")
    p_ep.add_argument("--dataset", required=True)
    p_ep.add_argument("--taxonomy", default="default")
    p_ep.add_argument("--config", default="")
    p_ep.add_argument("--workers", type=int, default=1)
    p_em = eval_sub.add_parser("motion")
    p_em.add_argument("--manifest", required=True)
    p_em.add_argument("--space", default="deterministic")
    p_em.add_argument("--pool", type=int, default=32)
    p_em.add_argument("--pairs", type=int, default=100)
    p_em.add_argument("--seed", type=int, default=0)
    p_em.add_argument("--json", dest="json_out", default="")

    p_train = sub.add_parser("train", help="train the toy models")
    train_sub = p_train.add_subparsers(dest="train_command")
    p_rvq = train_sub.add_parser("rvq")
    p_rvq.add_argument("--manifest", required=True)
    p_rvq.add_argument("--skeleton", required=True, help="BVH file defining the rig/frame time")
    p_rvq.add_argument("--out", required=True)
    p_rvq.add_argument("--codes", type=int, default=512)
    p_rvq.add_argument("--depth", type=int, default=2)
    p_rvq.add_argument("--latent", type=int, default=64)
    p_rvq.add_argument("--downsample", type=int, default=4)
    p_rvq.add_argument("--epochs", type=int, default=200)
    p_rvq.add_argument("--seed", type=int, default=0)
    p_gen2 = train_sub.add_parser("generator")
    p_gen2.add_argument("--manifest", required=True)
    p_gen2.add_argument("--rvq", required=True)
    p_gen2.add_argument("--out", required=True)
    p_gen2.add_argument("--epochs", type=int, default=300)
    p_gen2.add_argument("--layers", type=int, default=4)
    p_gen2.add_argument("--width", type=int, default=256)
    p_gen2.add_argument("--iterations", type=int, default=10)
    p_gen2.add_argument("--seed", type=int, default=0)
    p_space = train_sub.add_parser("eval-space")
    p_space.add_argument("--manifest", required=True)
    p_space.add_argument("--out", required=True)
    p_space.add_argument("--epochs", type=int, default=300)
    p_space.add_argument("--seed", type=int, default=0)
    return parser


def _load_taxonomy(arg: str):
    from .planner.taxonomy import Taxonomy, default_taxonomy

    return default_taxonomy() if arg in ("", "default") else Taxonomy.load(arg)


def _manifest_features(manifest_path: str):
    from .dataset.emit import load_entry_features, load_manifest

    entries = load_manifest(manifest_path)
    return entries, [load_entry_features(manifest_path, e) for e in entries]


def _cmd_plan(args) -> int:
    from .planner.planner import plan

    backend = None
    if args.config:
        from .config import load_config

        backend = load_config(args.config).planner.chat_backend()
    taxonomy = _load_taxonomy(args.taxonomy)
    decision = plan(args.query, backend, taxonomy)
    print(f"animal: {decision.animal}")
    print(f"motion: {decision.motion}")
    print(f"motion_prompt: {decision.motion_prompt}")
    print(f"avatar_prompt: {decision.avatar_prompt}")
    print(f"source: {decision.source}")
    return 0


def _cmd_gen(args) -> int:
    import dataclasses

    from .config import load_config
    from .pipeline import run_pipeline

    config = load_config(args.config)
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.frames is not None:
        updates["frames"] = args.frames
    if updates:
        config = dataclasses.replace(
            config, generation=dataclasses.replace(config.generation, **updates)
        )
    result = run_pipeline(args.query, config, keep_partial=args.keep_partial)
    print(f"animal: {result.decision.animal}")
    print(f"motion: {result.decision.motion}")
    for kind, path in sorted(result.export_paths.items()):
        print(f"{kind}: {path}")
    return 0


def _cmd_dataset(args) -> int:
    from .dataset.build import build_dataset, load_queue, save_queue
    from .dataset.emit import emit_dataset
    from .dataset.records import review

    if args.dataset_command == "build":
        taxonomy = _load_taxonomy(args.taxonomy)
        queue = build_dataset(args.source, args.workdir, taxonomy, budget=args.budget)
        print(f"built {len(queue.records)} pending records in {args.workdir}")
        return 0
    if args.dataset_command == "review":
        queue = load_queue(args.workdir)
        if args.list_records:
            for record in queue.records:
                print(f"{record.id}\t{record.review_state}\t{record.animal}\t{record.motion}")
            return 0
        if args.approve_all:
            for record in queue.by_state("pending"):
                review(queue, record.id, "approved", args.reviewer)
        elif args.record:
            review(queue, args.record, args.verdict, args.reviewer)
        else:
            raise _UsageError("review needs --approve-all, --record, or --list")
        save_queue(queue, args.workdir)
        print(f"approved: {len(queue.by_state('approved'))}, "
              f"rejected: {len(queue.by_state('rejected'))}, "
              f"pending: {len(queue.by_state('pending'))}")
        return 0
    if args.dataset_command == "emit":
        queue = load_queue(args.workdir)
        entries = emit_dataset(queue, args.out)
        print(f"emitted {len(entries)} records to {args.out}")
        return 0
    raise _UsageError("dataset needs a subcommand: build, review, or emit")


def _cmd_eval(args) -> int:
    if args.eval_command == "planner":
        from .planner.evaluate import evaluate_planner
        from .planner.qa import load_qa_dataset

        backend = None
        if args.config:
            from .config import load_config

            backend = load_config(args.config).planner.chat_backend()
        dataset = load_qa_dataset(args.dataset)
        report = evaluate_planner(dataset, backend, _load_taxonomy(args.taxonomy),
                                  max_workers=args.workers)
        print(f"animal accuracy:  {report.animal_acc:.2f}")
        print(f"motion accuracy:  {report.motion_acc:.2f}")
        print(f"overall accuracy: {report.overall_acc:.2f}")
        invalid = [v for v in report.per_record_verdicts if not v.valid]
        if invalid:
            print(f"excluded {len(invalid)} records with unparseable ground truth")
        return 0
    if args.eval_command == "motion":
        from .metrics.embedding import EmbeddingSpace, EvalSpaceConfig, deterministic_space
        from .metrics.report import evaluate_corpus

        if args.space == "deterministic":
            space = deterministic_space(EvalSpaceConfig(train=False, seed=args.seed))
        else:
            space = EmbeddingSpace.load(args.space)
        report = evaluate_corpus(args.manifest, space, pool_size=args.pool,
                                 diversity_pairs=args.pairs, seed=args.seed)
        print(report.format_table())
        if args.json_out:
            Path(args.json_out).write_text(report.to_json(), encoding="utf-8")
            print(f"report written to {args.json_out}")
        return 0
    raise _UsageError("eval needs a subcommand: planner or motion")


def _cmd_train(args) -> int:
    if args.train_command == "rvq":
        from .motion.bvh import parse_bvh
        from .motion.features import FeatureMatrix, FeatureSpec
        from .motiongen.checkpoint import save_rvq_checkpoint
        from .motiongen.rvq import RvqConfig, train_rvq

        skeleton, clip = parse_bvh(Path(args.skeleton).read_text(encoding="utf-8"))
        spec = FeatureSpec(skeleton, clip.frame_time)
        entries, feats = _manifest_features(args.manifest)
        dataset = [FeatureMatrix(f, spec) for f in feats]
        config = RvqConfig(
            num_codes=args.codes, residual_depth=args.depth, latent_dim=args.latent,
            downsample=args.downsample, epochs=args.epochs, seed=args.seed,
        )
        model = train_rvq(dataset, config)
        save_rvq_checkpoint(args.out, model)
        print(f"rvq checkpoint written to {args.out} "
              f"(final loss {model.loss_history[-1]:.6f})")
        return 0
    if args.train_command == "generator":
        from .motiongen.checkpoint import (
            load_rvq_checkpoint,
            save_generator_checkpoint,
        )
        from .motiongen.training import (
            GeneratorConfig,
            new_generator,
            train_masked,
            train_residual,
        )

        rvq = load_rvq_checkpoint(args.rvq)
        entries, feats = _manifest_features(args.manifest)
        f = rvq.config.downsample
        grids, texts = [], []
        for entry, data in zip(entries, feats):
            usable = (data.shape[0] // f) * f
            if usable < f:
                continue
            grids.append(rvq.tokenize(data[:usable]))
            texts.append(entry.caption)
        if not grids:
            raise ValueError("manifest has no clips long enough to tokenize")
        n_max = max(g.length for g in grids)
        config = GeneratorConfig(
            num_codes=rvq.config.num_codes, residual_depth=rvq.config.residual_depth,
            layers=args.layers, d_model=args.width, ff=2 * args.width,
            max_len=max(n_max, 16), epochs=args.epochs, seed=args.seed,
            iterations=args.iterations,
        )
        model = new_generator(config)
        # token batches need one shared length; group by length and train the
        # largest group (toy-scale corpora are homogeneous in practice)
        by_len = {}
        for grid, text in zip(grids, texts):
            by_len.setdefault(grid.length, []).append((grid, text))
        grids, texts = map(list, zip(*max(by_len.values(), key=len)))
        text_embs = [model.text_encoder.encode(t) for t in texts]
        train_masked(grids, text_embs, model)
        if config.residual_depth >= 1:
            train_residual(grids, text_embs, model)
        save_generator_checkpoint(args.out, model)
        print(f"generator checkpoint written to {args.out}")
        return 0
    if args.train_command == "eval-space":
        from .metrics.embedding import EvalSpaceConfig, train_eval_space

        entries, feats = _manifest_features(args.manifest)
        pairs = [(e.caption, f) for e, f in zip(entries, feats)]
        categories = [e.animal for e in entries]
        space = train_eval_space(
            pairs, EvalSpaceConfig(epochs=args.epochs, seed=args.seed), categories
        )
        space.save(args.out)
        print(f"evaluation space written to {args.out}")
        return 0
    raise _UsageError("train needs a subcommand: rvq, generator, or eval-space")


def cli_main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.INFO, format="%(message)s")
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        handler = {
            "plan": _cmd_plan,
            "gen": _cmd_gen,
            "dataset": _cmd_dataset,
            "eval": _cmd_eval,
            "train": _cmd_train,
        }[args.command]
        return handler(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
