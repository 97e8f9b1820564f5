"""Command-line pipeline: synth, block, featurize, train, rank, eval, all.

Every stage reads and writes plain files in ``out_dir``:

============== ===================================================
a.csv, b.csv   record lists (``id`` column plus the fields)
gold.csv       gold pairs ``id_a,id_b``
candidates.csv blocked candidate pairs ``id_a,id_b``
features.csv   continuous comparison vectors per candidate pair
model.txt      fitted model, ``key = value``
ranking.csv    ``id_a,id_b,score``, best first
metrics.txt    metrics as ``key = value``
metrics.json   the same metrics as JSON
============== ===================================================

Exit status: 0 on success, 1 on configuration or runtime errors, 2 when an
upstream artifact is missing.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .blocking import candidate_pairs
from .config import ConfigError, PipelineConfig, load_config, parse_config
from .corpus import (CorpusError, Schema, load_gold_pairs, load_records, read_pairs,
                     write_gold_pairs, write_pairs, write_records)
from .evaluation import (cross_validate, ranking_metrics, rank_pairs, read_ranking,
                         write_metrics, write_ranking)
from .features import featurize_pairs, field_stats, read_features, write_features
from .methods import LABEL_FRACTION, MethodConfig, fit_method, load_model, save_model, score_method
from .rng import stage_rng
from .synthgen import SynthConfig, generate_corpus

__all__ = ["main", "run_stage", "STAGES", "MissingArtifact"]

STAGES = ("synth", "block", "featurize", "train", "rank", "eval")


class MissingArtifact(Exception):
    pass


def _need(path: Path, stage: str) -> Path:
    if not path.is_file():
        raise MissingArtifact(f"{stage}: required input {path} does not exist")
    return path


def _method(cfg: PipelineConfig) -> MethodConfig:
    return MethodConfig(
        method=cfg.method, d=cfg.d, binary_threshold=cfg.binary_threshold,
        monotone=cfg.monotone, bootstrap=cfg.bootstrap, learn_structure=cfg.learn_structure,
        a=cfg.a, tau_hi=cfg.tau_hi, tau_lo=cfg.tau_lo, labeled_weight=cfg.labeled_weight,
        gmm_components=cfg.gmm_components, max_iter=cfg.max_iter,
        seed=int(stage_rng(cfg.seed, "train.model").integers(2 ** 31)),
    )


def _datasets(cfg: PipelineConfig, stage: str):
    schema = Schema(cfg.fields)
    a = load_records(_need(cfg.path("a.csv"), stage), schema)
    b = load_records(_need(cfg.path("b.csv"), stage), schema)
    return a, b


def _out(cfg: PipelineConfig, name: str) -> Path:
    return Path(cfg.out_dir) / name


def stage_synth(cfg: PipelineConfig) -> None:
    a, b, gold = generate_corpus(SynthConfig(
        record_count=cfg.record_count, duplicate_fraction=cfg.duplicate_fraction,
        intensity=tuple(cfg.intensity), field_names=tuple(cfg.fields),
        household_size=cfg.household_size,
        seed=int(stage_rng(cfg.seed, "synth").integers(2 ** 31)),
    ))
    write_records(a, cfg.path("a.csv"))
    write_records(b, cfg.path("b.csv"))
    write_gold_pairs(gold, cfg.path("gold.csv"))


def stage_block(cfg: PipelineConfig) -> None:
    a, b = _datasets(cfg, "block")
    write_pairs(candidate_pairs(a, b, cfg.gram_size).sorted(), _out(cfg, "candidates.csv"))


def stage_featurize(cfg: PipelineConfig) -> None:
    a, b = _datasets(cfg, "featurize")
    pairs = read_pairs(_need(_out(cfg, "candidates.csv"), "featurize"))
    table = featurize_pairs(pairs, a, b, field_stats(a, b), cfg.theta)
    write_features(table, _out(cfg, "features.csv"))


def _labels(cfg: PipelineConfig, pairs, stage: str) -> np.ndarray:
    a, b = _datasets(cfg, stage)
    gold = load_gold_pairs(_need(cfg.path("gold.csv"), stage), a, b)
    y = np.array([p in gold.pairs for p in pairs], dtype=np.int64)
    frac = LABEL_FRACTION[cfg.method]
    if frac < 1.0:
        rng = stage_rng(cfg.seed, "train.labels")
        keep = np.zeros(len(y), dtype=bool)
        keep[rng.permutation(len(y))[: int(round(frac * len(y)))]] = True
        y[~keep] = -1
    return y


def stage_train(cfg: PipelineConfig) -> None:
    table = read_features(_need(_out(cfg, "features.csv"), "train"))
    mcfg = _method(cfg)
    labels = _labels(cfg, table.pairs, "train") if mcfg.supervised else None
    save_model(mcfg, fit_method(mcfg, table.F, labels), _out(cfg, "model.txt"))


def stage_rank(cfg: PipelineConfig) -> None:
    table = read_features(_need(_out(cfg, "features.csv"), "rank"))
    mcfg = _method(cfg)
    model = load_model(mcfg, _need(_out(cfg, "model.txt"), "rank"))
    scores = score_method(mcfg, model, table.F)
    write_ranking(rank_pairs(dict(zip(table.pairs, scores))), _out(cfg, "ranking.csv"))


def stage_eval(cfg: PipelineConfig) -> None:
    ranked = read_ranking(_need(_out(cfg, "ranking.csv"), "eval"))
    a, b = _datasets(cfg, "eval")
    gold = load_gold_pairs(_need(cfg.path("gold.csv"), "eval"), a, b)
    summary = {"method": cfg.method, "ranking": ranking_metrics(ranked, gold).summary()}
    mcfg = _method(cfg)
    if mcfg.supervised:
        table = read_features(_need(_out(cfg, "features.csv"), "eval"))

        def fit_score(train, labels, test):
            model = fit_method(mcfg, table.F[train], labels)
            return score_method(mcfg, model, table.F[test])

        cv = cross_validate(table.pairs, gold, fit_score, cfg.folds,
                            int(stage_rng(cfg.seed, "eval.folds").integers(2 ** 31)),
                            LABEL_FRACTION[cfg.method])
        summary["cross_validation"] = {"mean": cv.mean, "folds": cfg.folds}
        for f, fold in enumerate(cv.per_fold):
            summary["cross_validation"][f"fold{f}"] = fold
    write_metrics(summary, _out(cfg, "metrics.txt"), _out(cfg, "metrics.json"))


_RUNNERS = {
    "synth": stage_synth,
    "block": stage_block,
    "featurize": stage_featurize,
    "train": stage_train,
    "rank": stage_rank,
    "eval": stage_eval,
}


def run_stage(cfg: PipelineConfig, command: str) -> None:
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    stages = [command] if command != "all" else [
        s for s in STAGES if s != "synth" or cfg.synthesize
    ]
    for stage in stages:
        try:
            _RUNNERS[stage](cfg)
        except (CorpusError, ValueError, OSError) as exc:
            exc.stage = stage
            raise


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="hgmlink", description=__doc__.split("\n\n")[0])
    p.add_argument("command", choices=(*STAGES, "all"))
    p.add_argument("-c", "--config", help="key = value config file")
    p.add_argument("-s", "--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (repeatable)")
    p.add_argument("--seed", type=int, help="override the seed")
    p.add_argument("--out-dir", help="override the output directory")
    p.add_argument("--method", help="override the ranking method")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    overrides = list(args.set)
    for key, value in (("seed", args.seed), ("out_dir", args.out_dir), ("method", args.method)):
        if value is not None:
            overrides.append(f"{key}={value}")
    try:
        if args.config:
            cfg = load_config(args.config, overrides)
        else:
            cfg = parse_config("", overrides, "command line")
        MethodConfig(method=cfg.method)
    except (ConfigError, ValueError) as exc:
        print(f"hgmlink: config error: {exc}", file=sys.stderr)
        return 1
    try:
        run_stage(cfg, args.command)
    except MissingArtifact as exc:
        print(f"hgmlink: {exc}", file=sys.stderr)
        return 2
    except (CorpusError, ValueError, OSError) as exc:
        stage = getattr(exc, "stage", args.command)
        print(f"hgmlink: {stage} failed: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
