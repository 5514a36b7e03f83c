"""Experiment orchestration: the four reproduction commands.

Each command loads the corpus named by the config, runs one experiment
family, and writes plot-ready CSV results (undefined scores rendered as
0 in the score columns; raw confusion counts are always included so
nothing is lost).
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

import numpy as np

from . import embed, keywords, learn, topicrules
from .activeloop import CSV_HEADER, LoopConfig, run_replications
from .config import ExperimentConfig, ensure_out_dir, results_header
from .corpus import LabeledCorpus, load_corpus, make_folds
from .metrics import confusion, scores
from .textpipe import Pipeline, PruneSpec, build_dtm

log = logging.getLogger(__name__)


def corpus_from_config(config: ExperimentConfig) -> LabeledCorpus:
    spec = config.corpus
    corpus = load_corpus(spec["path"], format=spec.get("format", "jsonl"),
                         schema=spec.get("schema"), name=spec.get("name"))
    if corpus.rejections:
        log.warning("%d rows rejected while loading %s",
                    len(corpus.rejections), spec["path"])
    return corpus


def _fmt(value) -> str:
    if value is None:
        return "0"  # plot convention: undefined renders as 0
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, config: ExperimentConfig, header, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(results_header(config))
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_manifest(config: ExperimentConfig, out: Path, outputs) -> None:
    """Run manifest: config hash, seed, and the files the run produced.

    Trace JSONL files carry bare iteration objects (their schema is
    fixed), so the hash/seed provenance for them lives here.
    """
    manifest = {"config_hash": config.hash(), "seed": config.seed,
                "task": config.task, "config": config.to_dict(),
                "outputs": sorted(str(p) for p in outputs)}
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=1)


def _prune(params: dict, default: PruneSpec) -> PruneSpec:
    spec = params.get("prune")
    if not spec:
        return default
    return PruneSpec(min_doc_count=spec.get("min_doc_count", 1),
                     min_total_count=spec.get("min_total_count", 1),
                     min_tfidf_quantile=spec.get("min_tfidf_quantile", 0.0))


def _keyword_lists(corpus, config: ExperimentConfig, params: dict):
    """Shared front half of the keywords and expansion experiments."""
    lang = config.corpus.get("lang", "en")
    # stem_match stems the extraction features too, so keywords and the
    # matching unit stay the same kind of token
    pipeline = Pipeline(lang=lang, stem=bool(params.get("stem_match")))
    prune = _prune(params, PruneSpec(min_doc_count=5, min_total_count=5))
    _, dtm = build_dtm(corpus, pipeline=pipeline, prune=prune,
                       weighting="boolean")
    pt = keywords.fit_predictive_model(
        dtm, corpus.labels(),
        penalties=tuple(params.get("penalties", ("l1", "l2"))),
        strength_grid=tuple(params.get("strength_grid",
                                       keywords.DEFAULT_STRENGTHS)),
        n_terms=params.get("n_terms", 50), seed=config.seed)
    lists = keywords.sample_keyword_lists(
        pt, n_lists=params.get("n_lists", 100),
        list_size=params.get("list_size", 10), seed=config.seed)
    return dtm, pt, lists


def _match_token_sets(corpus, config: ExperimentConfig):
    # default: raw lowercased token matching; stem_match switches the
    # matching unit to the stemmed pipeline output
    lang = config.corpus.get("lang", "en")
    if config.params.get("stem_match"):
        return keywords.corpus_token_sets(corpus, Pipeline(lang=lang, stem=True))
    return keywords.corpus_token_sets(corpus, lang=lang)


def _query_scores(kw_list, corpus, truth, token_sets=None):
    pred = keywords.boolean_query(kw_list, corpus, token_sets=token_sets)
    c = confusion(pred, truth)
    return c, scores(c)


def cmd_keywords(config: ExperimentConfig) -> dict:
    """Predictive terms -> sampled lists -> boolean query per list."""
    corpus = corpus_from_config(config)
    out = ensure_out_dir(config)
    _, pt, lists = _keyword_lists(corpus, config, config.params)
    keywords.save_predictive_terms(pt, out / "predictive_terms.csv")

    truth = corpus.truth()
    token_sets = _match_token_sets(corpus, config)
    rows, f1s = [], []
    for i, kw in enumerate(lists):
        c, s = _query_scores(kw, corpus, truth, token_sets)
        sz = s.as_zero()
        f1s.append(sz.f1)
        rows.append((i, "|".join(sorted(kw.terms)), c.tp, c.fp, c.fn, c.tn,
                     sz.precision, sz.recall, sz.f1))
    _write_csv(out / "keyword_lists.csv", config,
               ("list_id", "terms", "tp", "fp", "fn", "tn",
                "precision", "recall", "f1"), rows)
    summary = {"n_lists": len(lists), "min_f1": min(f1s), "max_f1": max(f1s),
               "mean_f1": float(np.mean(f1s)),
               "spread_f1": max(f1s) - min(f1s)}
    _write_csv(out / "keywords_summary.csv", config, tuple(summary),
               [tuple(summary.values())])
    write_manifest(config, out, ["predictive_terms.csv", "keyword_lists.csv",
                                 "keywords_summary.csv"])
    log.info("keywords: max F1 %.3f, spread %.3f over %d lists",
             summary["max_f1"], summary["spread_f1"], len(lists))
    return summary


def _local_space(corpus, config, params):
    lang = config.corpus.get("lang", "en")
    pipeline = Pipeline(lang=lang, stem=False)
    _, unigram_dtm = build_dtm(
        corpus, pipeline=pipeline,
        prune=PruneSpec(min_total_count=params.get("min_count", 5)),
        weighting="count")
    table = embed.build_cooccurrence(corpus, unigram_dtm.vocab,
                                     window=params.get("window", 6),
                                     pipeline=pipeline)
    return embed.train_glove(table, dim=params.get("dim", 300),
                             epochs=params.get("epochs", 50), seed=config.seed)


def cmd_expand(config: ExperimentConfig) -> dict:
    """Query expansion trajectories over M for local/global spaces."""
    corpus = corpus_from_config(config)
    out = ensure_out_dir(config)
    params = config.params
    dtm, pt, lists = _keyword_lists(corpus, config, params)
    truth = corpus.truth()

    spaces = {}
    wanted = params.get("spaces", ["local"])
    if "local" in wanted:
        spaces["local"] = _local_space(corpus, config, params)
    if "global" in wanted:
        path = params.get("global_vectors")
        if not path:
            raise FileNotFoundError("global expansion requires "
                                    "expand.global_vectors in the config")
        space = embed.load_vectors(path)
        corpus_terms = set(dtm.vocab.terms)
        for kw in lists:
            corpus_terms |= kw.terms
        spaces["global"] = space.restrict(corpus_terms)

    m_values = list(params.get("m_values", range(1, 10)))
    token_sets = _match_token_sets(corpus, config)
    rows = []
    for name, space in spaces.items():
        for i, kw in enumerate(lists):
            c, s = _query_scores(kw, corpus, truth, token_sets)
            sz = s.as_zero()
            rows.append((name, i, 0, len(kw.terms), c.tp, c.fp, c.fn, c.tn,
                         sz.precision, sz.recall, sz.f1))
            for m in m_values:
                expanded = embed.expand_query(kw, space, m)
                c, s = _query_scores(expanded, corpus, truth, token_sets)
                sz = s.as_zero()
                rows.append((name, i, m, len(expanded.terms),
                             c.tp, c.fp, c.fn, c.tn,
                             sz.precision, sz.recall, sz.f1))
    _write_csv(out / "expansion_trajectories.csv", config,
               ("space", "list_id", "m", "n_terms", "tp", "fp", "fn", "tn",
                "precision", "recall", "f1"), rows)

    dump_terms = params.get("neighbor_dump_terms", [])
    if dump_terms:
        nrows = []
        for name, space in spaces.items():
            for term in dump_terms:
                if term not in space:
                    log.warning("neighbor dump: %r missing from %s space",
                                term, name)
                    continue
                for rank, (nb, cos) in enumerate(
                        embed.neighbors(space, term, 9), start=1):
                    nrows.append((name, term, rank, nb, cos))
        _write_csv(out / "neighbors.csv", config,
                   ("space", "term", "rank", "neighbor", "cosine"), nrows)
    write_manifest(config, out, ["expansion_trajectories.csv"] +
                   (["neighbors.csv"] if dump_terms else []))
    return {"rows": len(rows), "spaces": sorted(spaces)}


def cmd_topicrules(config: ExperimentConfig) -> dict:
    """Fit LDA per K, sweep every 1-3 topic rule at every threshold."""
    corpus = corpus_from_config(config)
    out = ensure_out_dir(config)
    params = config.params
    lang = config.corpus.get("lang", "en")
    pipeline = Pipeline(lang=lang, stem=params.get("stem", True))
    prune = _prune(params, PruneSpec(min_doc_count=5, min_total_count=5))
    _, dtm = build_dtm(corpus, pipeline=pipeline, prune=prune,
                       weighting="count")

    k_grid = tuple(params.get("k_grid", topicrules.K_GRID))
    xi_grid = tuple(params.get("xi_grid", topicrules.XI_GRID))
    iters = params.get("iters", 1000)
    truth = corpus.truth()

    def row_tuple(r):
        sz = r.scores.as_zero()
        return (r.n_topics, "+".join(str(t) for t in r.topics), r.xi,
                r.confusion.tp, r.confusion.fp, r.confusion.fn, r.confusion.tn,
                sz.precision, sz.recall, sz.f1)

    header = ("k", "topics", "xi", "tp", "fp", "fn", "tn",
              "precision", "recall", "f1")
    total_rows = 0
    top_rows = []
    term_rows = []
    best = None
    with open(out / "sweep_full.csv", "w", encoding="utf-8") as fh:
        fh.write(results_header(config))
        fh.write(",".join(header) + "\n")
        for k in k_grid:
            fit = topicrules.fit_lda(dtm, k, iters=iters, seed=config.seed)
            topicrules.save_fit(fit, out / f"fit_k{k}")

            def sink(r):
                nonlocal total_rows
                total_rows += 1
                fh.write(",".join(_fmt(v) for v in row_tuple(r)) + "\n")

            summary, _ = topicrules.sweep_rules(fit, truth, xi_grid=xi_grid,
                                                row_sink=sink)
            top_rows.extend(row_tuple(r) for r in summary.top_rows)
            for r in summary.top_rows:
                key = r.scores.as_zero().f1
                if best is None or key > best[0]:
                    best = (key, r.n_topics, r.topics, r.xi)
            for topic in range(k):
                for ranking in ("probability", "frex"):
                    for rank, term in enumerate(
                            topicrules.top_terms(fit, topic, 10, ranking),
                            start=1):
                        term_rows.append((k, topic, ranking, rank, term))
            log.info("topicrules: K=%d swept %d subsets", k, summary.n_subsets)

    _write_csv(out / "sweep_top2.csv", config, header, top_rows)
    _write_csv(out / "top_terms.csv", config,
               ("k", "topic", "ranking", "rank", "term"), term_rows)
    write_manifest(config, out, ["sweep_full.csv", "sweep_top2.csv",
                                 "top_terms.csv"] +
                   [f"fit_k{k}.npz" for k in k_grid])
    return {"rows": total_rows, "best_f1": best[0] if best else 0.0,
            "best_rule": best[1:] if best else None}


def cmd_supervised(config: ExperimentConfig) -> dict:
    """Active and passive loops with the simulated oracle, per fold."""
    corpus = corpus_from_config(config)
    out = ensure_out_dir(config)
    params = config.params
    lang = config.corpus.get("lang", "en")
    pipeline = Pipeline(lang=lang, stem=params.get("stem", True))
    prune = _prune(params, PruneSpec(min_doc_count=2, min_total_count=2))
    _, dtm = build_dtm(corpus, pipeline=pipeline, prune=prune,
                       weighting="boolean")

    n_folds = params.get("n_folds", 5)
    plan = make_folds(corpus, n_folds, stratified=False, seed=config.seed)
    with open(out / "fold_plan.json", "w", encoding="utf-8") as fh:
        fh.write(plan.to_json())

    modes = params.get("modes", ["active", "passive"])
    kinds = params.get("model_kinds", ["svm"])
    curve_rows = []
    summary_rows = []
    results = {}
    for mode in modes:
        for kind in kinds:
            cfg = LoopConfig(
                init_size=params.get("init_size", 250),
                batch_size=params.get("batch_size", 50),
                iterations=params.get("iterations", 15),
                mode=mode, model_kind=kind,
                reg_c=params.get("reg_c", 1.0),
                oversample_factor=params.get("oversample_factor", 5.0),
                epochs=params.get("epochs", 20),
                tune_grid=tuple(params["tune_grid"]) if params.get("tune_grid")
                else None,
                lang=lang, seed=config.seed)
            traces = run_replications(corpus, plan, cfg, dtm=dtm)
            final_f1s = []
            for t in traces:
                name = f"trace_{mode}_{kind}_fold{t.test_fold}.jsonl"
                (out / name).write_text(t.to_json_lines(), encoding="utf-8")
                for row in t.csv_rows():
                    curve_rows.append((mode, kind, t.test_fold) + row)
                final_f1s.append(t.records[-1].test_scores.as_zero().f1)
            mean_final = float(np.mean(final_f1s))
            results[(mode, kind)] = mean_final
            summary_rows.append((mode, kind, len(traces),
                                 cfg.final_labeled_count, mean_final))
            log.info("supervised %s/%s: mean final test F1 %.3f",
                     mode, kind, mean_final)
    _write_csv(out / "supervised_curves.csv", config,
               ("mode", "kind", "fold") + CSV_HEADER, curve_rows)
    _write_csv(out / "supervised_summary.csv", config,
               ("mode", "kind", "n_folds", "final_labeled", "mean_final_f1"),
               summary_rows)
    write_manifest(config, out,
                   ["supervised_curves.csv", "supervised_summary.csv",
                    "fold_plan.json"] +
                   [f"trace_{m}_{k}_fold{f}.jsonl" for m in modes
                    for k in kinds for f in range(n_folds)])
    return {f"{m}_{k}": v for (m, k), v in results.items()}
