"""Command-line frontend.

Subcommands: gen, train-mrle, train-spr, features, classify, rank,
experiment.  Each takes ``--config <path>`` (flat ``key = value`` file)
plus any number of ``--set key=value`` overrides.  Errors print a single
machine-parsable line to stderr and exit with 2 (usage/config), 3 (I/O),
4 (divergence) or 1 (other runtime failures).
"""

from __future__ import annotations

import argparse
import contextlib
import sys

from . import __version__
from .config import RunConfig, config_help
from .detect import Threshold, TopK, decide
from .errors import ConfigError, DivergenceError, SignedLfmError
from .evaluate import (
    Imbalance,
    Incompleteness,
    LabelSweep,
    RunSettings,
    auc,
    default_policy,
    f_measure,
    labeled_edges,
    parse_method,
    run_experiment,
    suspicion_scores,
)
from .factors import load_model, save_model
from .graph import (
    make_split,
    parse_edge_list,
    parse_edge_list_with_split,
    to_edge_lines,
)
from .mrle import MrleConfig, augment_with_auxiliary, train_mrle
from .operators import OperatorKind
from .seeding import derive_seed
from .spr import SprConfig, rank_held_out, train_spr
from .synth import SynthParams, generate, roles_to_lines

FORMAT_VERSIONS = "edge-list v1, lfm-factors v1, report-csv v1"


def _read_network(cfg: RunConfig):
    cfg.require_paths("edges_path")
    with open(cfg["edges_path"], "r", encoding="utf-8") as f:
        return parse_edge_list(f)


def _network_and_split(cfg: RunConfig):
    """Network plus split, either from an explicit split file or sampled.

    Returns (network, split, cell) where ``cell`` labels the split for
    seed fan-out; fraction-based cells match the experiment runner's, so
    a standalone run reproduces the matching experiment cell exactly.
    """
    if cfg["split_path"]:
        with open(cfg["split_path"], "r", encoding="utf-8") as f:
            network, split = parse_edge_list_with_split(f, seed=cfg["seed"])
        return network, split, "file"
    network = _read_network(cfg)
    fraction = cfg["label_fraction"]
    cell = f"{fraction!r}"
    split = make_split(
        network, fraction, cfg["balance"], derive_seed(cfg["seed"], f"split:{cell}")
    )
    return network, split, cell


def _mrle_config(cfg: RunConfig, seed: int) -> MrleConfig:
    return MrleConfig(
        n=cfg["n"],
        learning_rate=cfg["learning_rate"],
        epochs=cfg["epochs"],
        p0=cfg["p0"],
        d_pos=cfg["d_pos"],
        d_neg=cfg["d_neg"],
        init_scale=cfg["init_scale"],
        seed=seed,
        use_non=cfg["use_non"],
    )


def _spr_config(cfg: RunConfig, seed: int) -> SprConfig:
    return SprConfig(
        alpha=cfg["alpha"],
        lambda_pos=cfg["lambda_pos"],
        lambda_neg=cfg["lambda_neg"],
        xi=cfg["xi"],
        iterations=cfg["iterations"],
        p0=cfg["p0"],
        d_pos=cfg["d_pos"],
        d_neg=cfg["d_neg"],
        init_scale=cfg["init_scale"],
        seed=seed,
    )


def _settings(cfg: RunConfig) -> RunSettings:
    if cfg["policy"] == "threshold":
        policy = Threshold(cfg["threshold"])
    elif cfg["policy"] == "top_k":
        policy = TopK(cfg["top_k"])
    else:
        policy = None
    return RunSettings(
        mrle=_mrle_config(cfg, 0),
        spr=_spr_config(cfg, 0),
        clf_l2=cfg["clf_l2"],
        clf_learning_rate=cfg["clf_learning_rate"],
        clf_epochs=cfg["clf_epochs"],
        au_fraction=cfg["au_fraction"],
        policy=policy,
    )


def _operator(cfg: RunConfig) -> OperatorKind:
    return OperatorKind(cfg["operator"])


def _load_models(cfg: RunConfig):
    cfg.require_paths("model_path")
    models = [load_model(cfg["model_path"])]
    if cfg["second_model_path"]:
        models.append(load_model(cfg["second_model_path"]))
    return models


@contextlib.contextmanager
def _maybe_log(cfg: RunConfig):
    if cfg["log_path"]:
        with open(cfg["log_path"], "w", encoding="utf-8") as f:
            yield f
    else:
        yield None


def cmd_gen(cfg: RunConfig) -> None:
    cfg.require_paths("edges_path", "roles_path")
    params = SynthParams(
        num_benign_users=cfg["num_benign_users"],
        num_spammers=cfg["num_spammers"],
        num_legit_targets=cfg["num_legit_targets"],
        num_malicious_targets=cfg["num_malicious_targets"],
        edges_per_user=cfg["edges_per_user"],
        disguise_rate=cfg["disguise_rate"],
        camouflage_rate=cfg["camouflage_rate"],
        seed=derive_seed(cfg["seed"], "gen"),
    )
    network, truth = generate(params)
    with open(cfg["edges_path"], "w", encoding="utf-8") as f:
        f.write("\n".join(to_edge_lines(network)) + "\n")
    with open(cfg["roles_path"], "w", encoding="utf-8") as f:
        f.write("\n".join(roles_to_lines(network, truth)) + "\n")
    print(f"wrote {network.num_edges} edges, "
          f"{network.num_users} users, {network.num_targets} targets")


def cmd_train_mrle(cfg: RunConfig) -> None:
    cfg.require_paths("model_path")
    network, split, cell = _network_and_split(cfg)
    if cfg["au_model_path"]:
        ranker = load_model(cfg["au_model_path"])
        ranked = rank_held_out(ranker, split, OperatorKind.IP_NEG)
        k = int(cfg["au_fraction"] * len(split.held_out))
        split = augment_with_auxiliary(split, [(r[0], r[1]) for r in ranked], k)
        base = "mrle+au"
    else:
        base = "mrle" if cfg["use_non"] else "mrle-non"
    mrle_cfg = _mrle_config(cfg, derive_seed(cfg["seed"], f"{base}:{cell}"))
    with _maybe_log(cfg) as log:
        model = train_mrle(mrle_cfg, network, split, log_stream=log)
    save_model(model, cfg["model_path"])
    print(f"wrote model to {cfg['model_path']}")


def cmd_train_spr(cfg: RunConfig) -> None:
    cfg.require_paths("model_path")
    network, split, cell = _network_and_split(cfg)
    spr_cfg = _spr_config(cfg, derive_seed(cfg["seed"], f"spr:{cell}"))
    with _maybe_log(cfg) as log:
        model = train_spr(spr_cfg, network, split, log_stream=log)
    save_model(model, cfg["model_path"])
    print(f"wrote model to {cfg['model_path']}")


def cmd_features(cfg: RunConfig) -> None:
    cfg.require_paths("out_path")
    network, split, _ = _network_and_split(cfg)
    models = _load_models(cfg)
    kind = _operator(cfg)
    from .evaluate import edge_feature_matrix

    pairs = [(e.user, e.target) for e in network.edges]
    matrix = edge_feature_matrix(models, kind, pairs)
    with open(cfg["out_path"], "w", encoding="utf-8") as f:
        for (u, t), row in zip(pairs, matrix):
            visible = split.visible_label(u, t)
            token = visible.value if visible is not None else "?"
            values = " ".join(repr(float(v)) for v in row)
            f.write(
                f"{network.user_names[u]}\t{network.target_names[t]}\t{token}\t{values}\n"
            )
    print(f"wrote {len(pairs)} feature rows to {cfg['out_path']}")


def cmd_classify(cfg: RunConfig) -> None:
    cfg.require_paths("out_path")
    network, split, _ = _network_and_split(cfg)
    models = _load_models(cfg)
    kind = _operator(cfg)
    settings = _settings(cfg)
    all_pairs = sorted(split.held_out)
    if not all_pairs:
        raise SignedLfmError("no held-out edges to classify")
    scores = suspicion_scores(models, kind, split, all_pairs, settings)
    policy = settings.policy or default_policy(kind, split, len(all_pairs))
    decisions = decide(scores, policy)
    with open(cfg["out_path"], "w", encoding="utf-8") as f:
        for (u, t), score, decision in zip(all_pairs, scores, decisions):
            f.write(
                f"{network.user_names[u]}\t{network.target_names[t]}\t"
                f"{float(score)!r}\t{int(decision)}\n"
            )
    # metrics over the labeled subset of the held-out edges
    eval_pairs, eval_labels = labeled_edges(network, split.held_out)
    if eval_pairs and eval_labels.any() and not eval_labels.all():
        index = {pair: i for i, pair in enumerate(all_pairs)}
        sub_scores = scores[[index[p] for p in eval_pairs]]
        print(f"auc\t{auc(sub_scores, eval_labels)!r}")
        sub_policy = settings.policy or default_policy(kind, split, len(eval_pairs))
        sub_decisions = decide(sub_scores, sub_policy)
        print(f"f_measure\t{f_measure(sub_decisions, eval_labels)!r}")
    else:
        print("# no labeled held-out edges; metrics skipped")


def cmd_rank(cfg: RunConfig) -> None:
    cfg.require_paths("out_path")
    network, split, _ = _network_and_split(cfg)
    models = _load_models(cfg)
    kind = _operator(cfg)
    if kind not in (OperatorKind.IP_NEG, OperatorKind.IP_POS):
        raise ConfigError("rank needs operator=ipneg or operator=ippos")
    ranked = rank_held_out(models[0], split, kind)
    with open(cfg["out_path"], "w", encoding="utf-8") as f:
        for u, t, score in ranked:
            f.write(
                f"{network.user_names[u]}\t{network.target_names[t]}\t{score!r}\n"
            )
    print(f"wrote {len(ranked)} ranked edges to {cfg['out_path']}")


def cmd_experiment(cfg: RunConfig) -> None:
    cfg.require_paths("out_path")
    network = _read_network(cfg)
    name = cfg["protocol"]
    if name == "label_sweep":
        protocol = LabelSweep(
            fractions=cfg["fractions"],
            metrics=cfg["metrics"],
            precision_ks=cfg["precision_ks"],
        )
    elif name == "imbalance":
        protocol = Imbalance(fractions=cfg["fractions"])
    else:
        protocol = Incompleteness(
            degrees=cfg["degrees"], label_fraction=cfg["label_fraction"]
        )
    methods = tuple(parse_method(m) for m in cfg["methods"])
    report = run_experiment(
        protocol, network, methods, seeds=cfg["seeds"], settings=_settings(cfg)
    )
    with open(cfg["out_path"], "w", encoding="utf-8") as f:
        f.write(report.to_csv())
    print(report.summary_table())


COMMANDS = {
    "gen": cmd_gen,
    "train-mrle": cmd_train_mrle,
    "train-spr": cmd_train_spr,
    "features": cmd_features,
    "classify": cmd_classify,
    "rank": cmd_rank,
    "experiment": cmd_experiment,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="signedlfm",
        description="Mine signed latent factors from contaminated bipartite "
        "networks and score spamming activities.",
        epilog="config keys:\n" + config_help(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"signedlfm {__version__} ({FORMAT_VERSIONS})",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", default=None, help="flat key = value file")
        p.add_argument(
            "--set",
            action="append",
            dest="overrides",
            default=[],
            metavar="KEY=VALUE",
            help="override a single config key",
        )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = RunConfig.from_sources(args.config, args.overrides)
        COMMANDS[args.command](cfg)
        return 0
    except ConfigError as exc:
        print(f"error:usage:{exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error:io:{exc}", file=sys.stderr)
        return 3
    except DivergenceError as exc:
        print(f"error:divergence:{exc}", file=sys.stderr)
        return 4
    except SignedLfmError as exc:
        print(f"error:runtime:{exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
