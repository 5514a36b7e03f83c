"""Command line entry point.

    needle keywords|expand|topicrules|supervised|serve --config FILE
           [--seed N] [--out DIR]
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time

from . import runner
from .activeloop import LoopConfig
from .config import ensure_out_dir, load_config
from .corpus import make_folds
from .service import AnnotationService

log = logging.getLogger(__name__)


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="needle",
        description="Retrieval of rare relevant documents: keyword lists, "
                    "query expansion, topic-model rules, supervised learning.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [
            ("keywords", "predictive keyword lists and boolean queries"),
            ("expand", "embedding-based query expansion trajectories"),
            ("topicrules", "topic-model classification rule sweep"),
            ("supervised", "active/passive learning with simulated oracle"),
            ("serve", "interactive annotation service for a live run")]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="JSON config file")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", default=None, help="override the output dir")
    return parser


def _serve(config) -> int:
    corpus = runner.corpus_from_config(config)
    params = config.params
    plan = make_folds(corpus, params.get("n_folds", 5), stratified=False,
                      seed=config.seed)
    cfg = LoopConfig(
        init_size=params.get("init_size", 250),
        batch_size=params.get("batch_size", 50),
        iterations=params.get("iterations", 15),
        mode=params.get("mode", "active"),
        model_kind=params.get("model_kind", "svm"),
        reg_c=params.get("reg_c", 1.0),
        oversample_factor=params.get("oversample_factor", 5.0),
        epochs=params.get("epochs", 20),
        lang=config.corpus.get("lang", "en"),
        seed=config.seed)
    service = AnnotationService(
        corpus, plan, params.get("test_fold", 0), cfg,
        host=params.get("host", "127.0.0.1"), port=params.get("port", 8765),
        static_dir=params.get("static_dir"))
    host, port = service.start()
    print(f"annotation service listening on http://{host}:{port}/ "
          f"(session {service.session.session_id})")
    out = ensure_out_dir(config)
    try:
        trace = service.wait()
        path = out / f"trace_interactive_fold{params.get('test_fold', 0)}.jsonl"
        path.write_text(trace.to_json_lines(), encoding="utf-8")
        print(f"run complete; trace written to {path}")
        print("serving final state; Ctrl+C to stop")
        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        print("stopping")
    finally:
        service.shutdown()
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s")
    config = load_config(args.config, task=args.command,
                         overrides={"seed": args.seed, "out_dir": args.out})
    if args.command == "serve":
        return _serve(config)
    command = {"keywords": runner.cmd_keywords,
               "expand": runner.cmd_expand,
               "topicrules": runner.cmd_topicrules,
               "supervised": runner.cmd_supervised}[args.command]
    result = command(config)
    print(json.dumps(result, sort_keys=True, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
