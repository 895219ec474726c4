"""Command-line pipeline: feature extraction, stream training, composition,
ranking, and evaluation.

Subcommands: ``features``, ``train``, ``compose``, ``eval``, ``bt-rank``.
Every JSON artifact embeds the resolved configuration and sha256 digests of
its inputs; binary outputs get the same provenance in a ``.meta.json``
sidecar.  Report paths write figures next to their CSV/JSON output.  The
``VS_LOG`` environment variable (debug/info/warning/error) controls log
verbosity.
"""

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import coherence, dataio, evaluation, ranker, rnn
from .config import PipelineConfig
from .util import atomic_write_text, canonical_json, sha256_file

logger = logging.getLogger("videostory")


def _setup_logging() -> None:
    level = os.environ.get("VS_LOG", "warning").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("pipeline configuration")
    g.add_argument("--bins", type=int, default=10, help="HOOF orientation bins")
    g.add_argument("--pyramid", type=int, default=3, help="spatial pyramid grid size M")
    g.add_argument("--seq-len", type=int, default=10, help="training window length T")
    g.add_argument("--hidden", type=int, default=100, help="recurrent hidden size")
    g.add_argument("--lambda", dest="fusion", type=float, default=0.5,
                   help="fusion weight on the semantic stream")
    g.add_argument("--gamma", type=float, default=0.3, help="activity-dynamics weight")
    g.add_argument("--lr", dest="learning_rate", type=float, default=0.05)
    g.add_argument("--momentum", type=float, default=0.9)
    g.add_argument("--weight-decay", type=float, default=1e-7)
    g.add_argument("--epochs", type=int, default=200)
    g.add_argument("--lr-decay-factor", type=float, default=0.5)
    g.add_argument("--patience", type=int, default=5)
    g.add_argument("--seed", type=int, default=0)


def _config(args) -> PipelineConfig:
    return PipelineConfig(
        bins=args.bins,
        pyramid=args.pyramid,
        seq_len=args.seq_len,
        hidden=args.hidden,
        fusion=args.fusion,
        gamma=args.gamma,
        learning_rate=args.learning_rate,
        momentum=args.momentum,
        weight_decay=args.weight_decay,
        epochs=args.epochs,
        lr_decay_factor=args.lr_decay_factor,
        patience=args.patience,
        seed=args.seed,
    )


def _provenance(config: PipelineConfig, input_paths) -> dict:
    return {
        "config": config.to_dict(),
        "inputs": {str(p): sha256_file(p) for p in input_paths},
    }


def _write_meta(out_path, config: PipelineConfig, input_paths) -> None:
    atomic_write_text(str(out_path) + ".meta.json",
                      canonical_json(_provenance(config, input_paths)))


def _sibling(out_path, suffix: str) -> Path:
    base = Path(out_path)
    return base.with_name(base.stem + suffix)


# ---------------------------------------------------------------------------
# subcommands


def cmd_features(args) -> int:
    cfg = _config(args)
    manifest = Path(args.manifest)
    clips = dataio.build_feature_store(manifest, cfg.bins, cfg.pyramid)
    dataio.write_feature_store(args.out, clips)
    doc = dataio.load_manifest(manifest)
    referenced = [manifest]
    for entry in doc["clips"]:
        referenced.append(manifest.parent / entry["semantic"])
        referenced.extend(manifest.parent / f for f in entry["flows"])
    _write_meta(args.out, cfg, referenced)
    logger.info("wrote %d clip records to %s", len(clips), args.out)
    print(f"features: {len(clips)} clips -> {args.out}")
    return 0


def cmd_train(args) -> int:
    cfg = _config(args)
    stores = [dataio.read_feature_store(p) for p in args.store]
    attr = {"semantic": "semantic", "motion": "motion"}[args.stream]
    corpus = [np.stack([getattr(c, attr) for c in clips]) for clips in stores]
    train_cfg = rnn.TrainConfig(
        seq_len=cfg.seq_len,
        learning_rate=cfg.learning_rate,
        momentum=cfg.momentum,
        weight_decay=cfg.weight_decay,
        epochs=cfg.epochs,
        seed=cfg.seed,
        lr_decay_factor=cfg.lr_decay_factor,
        patience=cfg.patience,
    )
    result = rnn.train(corpus, train_cfg, hidden_dim=cfg.hidden)
    rnn.save_checkpoint(args.out, result.params, train_cfg)
    _write_meta(args.out, cfg, args.store)

    log_path = args.log or _sibling(args.out, ".log.csv")
    lines = ["epoch,mean_log_likelihood,learning_rate"]
    for st in result.history:
        lines.append(f"{st.epoch},{repr(st.mean_log_likelihood)},{repr(st.learning_rate)}")
    atomic_write_text(log_path, "\n".join(lines) + "\n")
    from . import figures
    figures.save_training_figure(
        [st.epoch for st in result.history],
        [st.mean_log_likelihood for st in result.history],
        _sibling(log_path, ".png"),
        title=f"{args.stream} stream training",
    )
    final = result.history[-1]
    print(f"train[{args.stream}]: {len(result.history)} epochs, "
          f"final mean log-likelihood {final.mean_log_likelihood:.4f} -> {args.out}")
    return 0


def _load_stream(path, expect_dim: int, name: str) -> rnn.RnnParams:
    params, _ = rnn.load_checkpoint(path)
    if params.input_dim != expect_dim:
        raise ValueError(
            f"{name} checkpoint expects input dim {params.input_dim} "
            f"but the store provides dim {expect_dim}")
    return params


def cmd_compose(args) -> int:
    cfg = _config(args)
    clips = dataio.read_feature_store(args.store)
    sem = _load_stream(args.semantic_ckpt, clips[0].semantic.size, "semantic")
    mot = _load_stream(args.motion_ckpt, clips[0].motion.size, "motion")
    model = coherence.TwoStreamModel(sem, mot, cfg.fusion)

    ids = [c.clip_id for c in clips]
    phi = [c.dynamics for c in clips]
    base_order = coherence.greedy_compose(model, clips)

    artifact = {
        "source": "rnn-baseline",
        "clip_ids": ids,
        "phi": phi,
        "lambda": cfg.fusion,
    }
    artifact.update(_provenance(cfg, [args.store, args.semantic_ckpt, args.motion_ckpt]))
    order = base_order

    if args.mode == "ranked":
        matrix = coherence.coherence_matrix(model, clips, base_order)
        coherence.write_coherence_csv(_sibling(args.out, ".coherence.csv"), matrix)
        graph = ranker.StoryGraph(matrix, phi, cfg.gamma)
        result = ranker.lazy_greedy_rank(graph)
        order = result.order
        artifact["source"] = "ranked"
        artifact["baseline_order"] = [ids[i] for i in base_order]
        artifact["gains"] = [float(g) for g in result.gains]
        artifact["objective_trajectory"] = [float(v) for v in result.objective_values]
        artifact["gamma"] = cfg.gamma
        from . import figures
        figures.save_objective_figure(result.objective_values,
                                      _sibling(args.out, ".objective.png"))

    artifact["order"] = [ids[i] for i in order]
    rows = ranker.dynamics_rows(order, phi, ids)
    artifact["dynamics_curve"] = [
        {"position": p, "clip_id": cid, "phi": v} for p, cid, v in rows
    ]
    ranker.write_dynamics_csv(_sibling(args.out, ".dynamics.csv"), rows)
    from . import figures
    figures.save_dynamics_figure([r[0] for r in rows], [r[2] for r in rows],
                                 _sibling(args.out, ".dynamics.png"))
    atomic_write_text(args.out, canonical_json(artifact))
    print(f"compose[{args.mode}]: order {artifact['order']} -> {args.out}")
    return 0


def _emit_dynamics_report(artifact: dict, out_dir: Path, provenance: dict) -> None:
    ids = artifact["clip_ids"]
    index_of = {cid: i for i, cid in enumerate(ids)}
    order = [index_of[cid] for cid in artifact["order"]]
    phi = artifact["phi"]
    report = evaluation.dynamics_report(order, phi)
    rows = ranker.dynamics_rows(order, phi, ids)
    ranker.write_dynamics_csv(out_dir / "dynamics.csv", rows)
    doc = {
        "rows": [{"position": p, "clip_id": cid, "phi": v} for p, cid, v in rows],
        "spearman_position_vs_phi": report.spearman,
    }
    doc.update(provenance)
    atomic_write_text(out_dir / "dynamics.json", canonical_json(doc))
    from . import figures
    figures.save_dynamics_figure([r[0] for r in rows], [r[2] for r in rows],
                                 out_dir / "dynamics.png")
    print(f"eval: dynamics rows={len(rows)} spearman={report.spearman:.4f}")


def _emit_roc_report(artifact: dict, matrix: np.ndarray, labels: dict,
                     out_dir: Path, provenance: dict) -> None:
    ids = artifact["clip_ids"]
    index_of = {cid: i for i, cid in enumerate(ids)}
    unknown = sorted({x for pair in labels for x in pair if x not in index_of})
    if unknown:
        raise ValueError(f"labels reference unknown clip ids: {unknown}")
    if matrix.shape[0] != len(ids):
        raise ValueError(
            f"coherence matrix is {matrix.shape[0]}x{matrix.shape[0]} "
            f"but the composition has {len(ids)} clips")
    scores = {}
    for a, b in labels:
        ia, ib = index_of[a], index_of[b]
        scores[(a, b)] = max(matrix[ia, ib], matrix[ib, ia])
    curve = evaluation.pairwise_roc(scores, labels)
    lines = ["fpr,tpr"] + [f"{repr(p[0])},{repr(p[1])}" for p in curve.points]
    atomic_write_text(out_dir / "roc.csv", "\n".join(lines) + "\n")
    doc = {
        "auc": curve.auc,
        "points": [{"fpr": p[0], "tpr": p[1]} for p in curve.points],
        "thresholds": curve.thresholds,
    }
    doc.update(provenance)
    atomic_write_text(out_dir / "roc.json", canonical_json(doc))
    from . import figures
    figures.save_roc_figure(curve, out_dir / "roc.png")
    print(f"eval: roc auc={curve.auc:.4f} over {len(labels)} labeled pairs")


def _emit_bt_report(prefs: evaluation.PairwisePreferences, out_dir: Path,
                    provenance: dict) -> None:
    bt = evaluation.bradley_terry(prefs)
    lines = ["item,score"] + [
        f"{item},{repr(float(s))}" for item, s in zip(bt.items, bt.scores)
    ]
    atomic_write_text(out_dir / "bt.csv", "\n".join(lines) + "\n")
    doc = {
        "items": bt.items,
        "scores": [float(s) for s in bt.scores],
        "iterations": bt.iterations,
        "converged": bt.converged,
        "smoothed": bt.smoothed,
    }
    doc.update(provenance)
    atomic_write_text(out_dir / "bt.json", canonical_json(doc))
    from . import figures
    figures.save_bt_figure(bt.items, bt.scores, out_dir / "bt.png")
    ranked = sorted(zip(bt.items, bt.scores), key=lambda t: -t[1])
    print("eval: bt scores " + ", ".join(f"{i}={s:.4f}" for i, s in ranked))
    return None


def cmd_eval(args) -> int:
    cfg = _config(args)
    artifact = json.loads(Path(args.composition).read_text())
    for key in ("order", "clip_ids", "phi"):
        if key not in artifact:
            raise ValueError(f"{args.composition}: composition artifact lacks {key!r}")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    inputs = [args.composition]
    if args.labels:
        if not args.coherence:
            raise ValueError("--labels requires --coherence (matrix the pair scores come from)")
        inputs += [args.coherence, args.labels]
    if args.preferences:
        inputs.append(args.preferences)
    provenance = _provenance(cfg, inputs)

    _emit_dynamics_report(artifact, out_dir, provenance)
    if args.labels:
        matrix = coherence.read_coherence_csv(args.coherence)
        labels = evaluation.load_labels_json(args.labels)
        _emit_roc_report(artifact, matrix, labels, out_dir, provenance)
    if args.preferences:
        _emit_bt_report(evaluation.load_preferences_json(args.preferences),
                        out_dir, provenance)
    return 0


def cmd_bt_rank(args) -> int:
    cfg = _config(args)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    prefs = evaluation.load_preferences_json(args.preferences)
    _emit_bt_report(prefs, out_dir, _provenance(cfg, [args.preferences]))
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="videostory",
        description="Compose video clips into a story: learn pairwise coherence "
                    "with a two-stream recurrent net, order clips, and re-rank "
                    "them toward rising activity dynamics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("features", help="compute clip features from a corpus manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True, help="feature store to write")
    _add_config_flags(p)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="train one stream on feature stores (one store per video)")
    p.add_argument("--store", action="append", required=True,
                   help="feature store path; repeat for multiple training videos")
    p.add_argument("--stream", choices=("semantic", "motion"), required=True)
    p.add_argument("--out", required=True, help="checkpoint to write")
    p.add_argument("--log", default=None, help="per-epoch CSV log (default: <out>.log.csv)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("compose", help="compose a story order from a feature store")
    p.add_argument("--store", required=True)
    p.add_argument("--semantic-ckpt", required=True)
    p.add_argument("--motion-ckpt", required=True)
    p.add_argument("--mode", choices=("baseline", "ranked"), default="ranked")
    p.add_argument("--out", required=True, help="composition artifact (JSON)")
    _add_config_flags(p)
    p.set_defaults(func=cmd_compose)

    p = sub.add_parser("eval", help="evaluate a composition artifact")
    p.add_argument("--composition", required=True)
    p.add_argument("--coherence", default=None, help="coherence matrix CSV (for ROC)")
    p.add_argument("--labels", default=None, help="pairwise coherence labels JSON")
    p.add_argument("--preferences", default=None, help="pairwise preference wins JSON")
    p.add_argument("--out-dir", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("bt-rank", help="global ranking scores from pairwise preferences")
    p.add_argument("--preferences", required=True)
    p.add_argument("--out-dir", required=True)
    _add_config_flags(p)
    p.set_defaults(func=cmd_bt_rank)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, KeyError, ArithmeticError) as e:
        logger.debug("command failed", exc_info=True)
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
