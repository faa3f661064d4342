"""Command-line interface: gen-task, train, translate, rescore, evaluate,
analyze.  All randomness flows from --seed; identical invocations produce
identical outputs.  Diagnostics go to stderr, data to files or stdout."""

from __future__ import annotations

import argparse
import os
import sys

from . import __version__
from .analysis import export_scatter, extract_representations, pca_2d
from .checkpoint import load_model
from .corpus import (
    EOS_ID,
    load_parallel_corpus,
    load_vocab,
    read_token_lines,
    save_vocab,
    write_token_lines,
)
from .decoding import beam_search, read_nbest, rescore_nbest, write_nbest
from .errors import Seq2SeqError
from .evaluation import (
    bleu_by_length,
    bleu_by_rarity,
    corpus_bleu,
    format_report,
    perplexity,
)
from .model import ModelConfig, init_params
from .tasks import TaskSpec, generate
from .training import INFINITE_WIDTH, TrainConfig, train


def _add_gen_task(sub):
    p = sub.add_parser("gen-task", help="generate a synthetic parallel corpus")
    p.add_argument("--task", required=True, choices=("copy", "reverse", "toy_translate"))
    p.add_argument("--vocab-size", type=int, default=20)
    p.add_argument("--min-len", type=int, default=1)
    p.add_argument("--max-len", type=int, default=8)
    p.add_argument("--num-pairs", type=int, default=1000)
    p.add_argument("--reorder-window", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", required=True)


def _cmd_gen_task(args) -> int:
    spec = TaskSpec(args.task, args.vocab_size, args.min_len, args.max_len,
                    args.num_pairs, args.seed, args.reorder_window)
    train_corpus, heldout_corpus = generate(spec)
    os.makedirs(args.out_dir, exist_ok=True)
    out = lambda name: os.path.join(args.out_dir, name)
    sv, tv = train_corpus.src_vocab, train_corpus.tgt_vocab
    both = {"train": train_corpus.pairs, "heldout": heldout_corpus.pairs,
            "all": train_corpus.pairs + heldout_corpus.pairs}
    for name, pairs in both.items():
        write_token_lines(out(f"{name}.src"), (sv.decode(p.source) for p in pairs))
        write_token_lines(out(f"{name}.tgt"), (tv.decode(p.target) for p in pairs))
    save_vocab(sv, out("vocab.src"))
    save_vocab(tv, out("vocab.tgt"))
    print(f"wrote {len(train_corpus.pairs)} train / {len(heldout_corpus.pairs)} "
          f"held-out pairs to {args.out_dir}", file=sys.stderr)
    return 0


def _add_train(sub):
    p = sub.add_parser("train", help="train a model on corpus files")
    p.add_argument("--train-src", required=True)
    p.add_argument("--train-tgt", required=True)
    p.add_argument("--heldout-src")
    p.add_argument("--heldout-tgt")
    p.add_argument("--src-vocab", required=True)
    p.add_argument("--tgt-vocab", required=True)
    p.add_argument("--checkpoint-dir", required=True)
    p.add_argument("--layers", type=int, default=2)
    p.add_argument("--hidden", type=int, default=64)
    p.add_argument("--embed", type=int, default=32)
    p.add_argument("--batch-size", type=int, default=32)
    p.add_argument("--epochs", type=float, default=7.5)
    p.add_argument("--lr", type=float, default=0.7)
    p.add_argument("--schedule-start", type=float, default=5.0)
    p.add_argument("--halving-period", type=float, default=0.5)
    p.add_argument("--clip", type=float, default=5.0)
    p.add_argument("--init-range", type=float, default=0.08)
    p.add_argument("--bucket-width", type=int, default=4,
                   help="max source-length spread per batch; -1 disables bucketing")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reverse-source", action=argparse.BooleanOptionalAction,
                   default=True)
    p.add_argument("--peepholes", action=argparse.BooleanOptionalAction,
                   default=True)
    p.add_argument("--append-source-eos", action=argparse.BooleanOptionalAction,
                   default=False)
    p.add_argument("--precision", choices=("double", "single"), default="double")
    p.add_argument("--log", help="metric log path (default: <ckpt-dir>/metrics.log)")
    p.add_argument("--dump-first-batch",
                   help="debug: write the first batch's encoder input tokens here")


def _cmd_train(args) -> int:
    src_vocab = load_vocab(args.src_vocab)
    tgt_vocab = load_vocab(args.tgt_vocab)
    corpus = load_parallel_corpus(args.train_src, args.train_tgt,
                                  src_vocab, tgt_vocab)
    heldout = None
    if args.heldout_src and args.heldout_tgt:
        heldout = load_parallel_corpus(args.heldout_src, args.heldout_tgt,
                                       src_vocab, tgt_vocab)
    config = ModelConfig(args.layers, args.hidden, args.embed,
                         peepholes=args.peepholes,
                         reverse_source=args.reverse_source,
                         append_source_eos=args.append_source_eos,
                         precision=args.precision)
    tc = TrainConfig(lr0=args.lr, schedule_start_epoch=args.schedule_start,
                     halving_period=args.halving_period, total_epochs=args.epochs,
                     batch_size=args.batch_size, clip_threshold=args.clip,
                     init_range=args.init_range, seed=args.seed,
                     bucket_width=args.bucket_width if args.bucket_width >= 0
                     else INFINITE_WIDTH)
    model = init_params(config, src_vocab, tgt_vocab, seed=args.seed,
                        init_range=args.init_range)
    os.makedirs(args.checkpoint_dir, exist_ok=True)

    if args.dump_first_batch:
        from .model import encoder_input_ids
        from .training import bucket_batches
        import random as _random

        probe_seed = _random.Random(args.seed).randrange(2 ** 30)
        batches = bucket_batches(corpus.pairs, tc.batch_size, tc.bucket_width,
                                 seed=probe_seed)
        first = batches[0]
        write_token_lines(args.dump_first_batch,
                          (src_vocab.decode(encoder_input_ids(model, p.source))
                           for p in first))

    log_path = args.log or os.path.join(args.checkpoint_dir, "metrics.log")
    with open(log_path, "w", encoding="utf-8") as log_fh:
        def on_record(record):
            log_fh.write(record + "\n")
            log_fh.flush()
            print(record, file=sys.stderr)

        train(model, corpus, tc, heldout=heldout, callbacks=on_record,
              checkpoint_dir=args.checkpoint_dir)
    print(f"final checkpoint: {args.checkpoint_dir}/final.s2s", file=sys.stderr)
    return 0


def _add_translate(sub):
    p = sub.add_parser("translate", help="beam-search decode a file")
    p.add_argument("--checkpoint", action="append", required=True,
                   help="repeat for an ensemble")
    p.add_argument("--input", required=True)
    p.add_argument("--output", required=True)
    p.add_argument("--beam", type=int, default=12)
    p.add_argument("--max-len", type=int, default=0,
                   help="token cap; 0 means 2*source_len + 10")


def _cmd_translate(args) -> int:
    models = [load_model(path) for path in args.checkpoint]
    src_vocab = models[0].src_vocab
    tgt_vocab = models[0].tgt_vocab
    lines = read_token_lines(args.input)
    outputs = []
    empty = 0
    for tokens in lines:
        if not tokens:
            empty += 1
            outputs.append([])
            continue
        source = src_vocab.encode(tokens)
        max_len = args.max_len if args.max_len > 0 else None
        hyps = beam_search(models, source, args.beam, max_len=max_len)
        best = hyps[0].tokens
        content = best[:-1] if best and best[-1] == EOS_ID else best
        outputs.append(tgt_vocab.decode(content))
    write_token_lines(args.output, outputs)
    if empty:
        print(f"warning: {empty} empty input line(s) copied through",
              file=sys.stderr)
    return 0


def _add_rescore(sub):
    p = sub.add_parser("rescore", help="rerank an n-best list")
    p.add_argument("--checkpoint", action="append", required=True)
    p.add_argument("--sources", required=True,
                   help="line i holds the source sentence with id i")
    p.add_argument("--nbest", required=True)
    p.add_argument("--weight", type=float, default=0.5)
    p.add_argument("--output", required=True)


def _cmd_rescore(args) -> int:
    models = [load_model(path) for path in args.checkpoint]
    src_vocab = models[0].src_vocab
    sources = {i: src_vocab.encode(toks)
               for i, toks in enumerate(read_token_lines(args.sources))}
    entries = read_nbest(args.nbest)
    rescored = rescore_nbest(models, sources, entries, weight=args.weight)
    write_nbest(args.output, rescored)
    return 0


def _add_evaluate(sub):
    p = sub.add_parser("evaluate", help="BLEU / perplexity reports")
    p.add_argument("--hyp")
    p.add_argument("--ref")
    p.add_argument("--src", help="source file for --by-length/--by-rarity")
    p.add_argument("--by-length", type=int, metavar="N")
    p.add_argument("--by-rarity", type=int, metavar="N")
    p.add_argument("--freq-corpus",
                   help="corpus for frequency ranks (default: --src file)")
    p.add_argument("--csv", help="write per-bucket reports as CSV here")
    p.add_argument("--perplexity", action="store_true")
    p.add_argument("--checkpoint", action="append", default=[])
    p.add_argument("--ppl-src")
    p.add_argument("--ppl-tgt")


def _rank_map(lines):
    from collections import Counter

    counts = Counter(tok for toks in lines for tok in toks)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return {tok: rank for rank, (tok, _) in enumerate(ranked, start=1)}


def _cmd_evaluate(args) -> int:
    wrote_something = False
    if args.hyp and args.ref:
        hyps = read_token_lines(args.hyp)
        refs = read_token_lines(args.ref)
        print(format_report(corpus_bleu(hyps, refs)))
        wrote_something = True
        reports = None
        if args.by_length or args.by_rarity:
            if not args.src:
                raise Seq2SeqError("--by-length/--by-rarity need --src")
            sources = read_token_lines(args.src)
            if args.by_length:
                reports = bleu_by_length(hyps, refs, sources, args.by_length)
            else:
                rank_lines = (read_token_lines(args.freq_corpus)
                              if args.freq_corpus else sources)
                ranks = _rank_map(rank_lines)
                reports = bleu_by_rarity(hyps, refs, sources, ranks,
                                         args.by_rarity)
            for b, report in enumerate(reports):
                print(f"bucket {b}: {format_report(report)}")
        if args.csv and reports is not None:
            import csv as _csv

            with open(args.csv, "w", encoding="utf-8", newline="") as fh:
                writer = _csv.writer(fh)
                writer.writerow(["bucket", "bleu", "p1", "p2", "p3", "p4",
                                 "brevity_penalty", "hyp_len", "ref_len"])
                for b, r in enumerate(reports):
                    writer.writerow([b, f"{r.bleu:.4f}"]
                                    + [f"{p:.6f}" for p in r.per_n_precisions]
                                    + [f"{r.brevity_penalty:.6f}",
                                       r.hyp_length, r.ref_length])
    if args.perplexity:
        if not (args.checkpoint and args.ppl_src and args.ppl_tgt):
            raise Seq2SeqError("--perplexity needs --checkpoint, --ppl-src, --ppl-tgt")
        models = [load_model(path) for path in args.checkpoint]
        corpus = load_parallel_corpus(args.ppl_src, args.ppl_tgt,
                                      models[0].src_vocab, models[0].tgt_vocab)
        print(f"perplexity = {perplexity(models, corpus):.10g}")
        wrote_something = True
    if not wrote_something:
        raise Seq2SeqError("nothing to evaluate: pass --hyp/--ref or --perplexity")
    return 0


def _add_analyze(sub):
    p = sub.add_parser("analyze", help="PCA projection of phrase encodings")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--phrases", required=True, help="one tokenized phrase per line")
    p.add_argument("--out-prefix", required=True)


def _cmd_analyze(args) -> int:
    model = load_model(args.checkpoint)
    lines = [line for line in read_token_lines(args.phrases) if line]
    phrases = [model.src_vocab.encode(toks) for toks in lines]
    reps = extract_representations(model, phrases,
                                   labels=[" ".join(toks) for toks in lines])
    projections, _, explained = pca_2d(reps.vectors)
    csv_path, svg_path = export_scatter(projections, reps.labels, args.out_prefix)
    print(f"explained variance: {explained[0]:.6g} {explained[1]:.6g}")
    print(f"wrote {csv_path} and {svg_path}", file=sys.stderr)
    return 0


_COMMANDS = {
    "gen-task": _cmd_gen_task,
    "train": _cmd_train,
    "translate": _cmd_translate,
    "rescore": _cmd_rescore,
    "evaluate": _cmd_evaluate,
    "analyze": _cmd_analyze,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="seq2seq",
        description="LSTM encoder-decoder sequence learning at desk scale")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for adder in (_add_gen_task, _add_train, _add_translate, _add_rescore,
                  _add_evaluate, _add_analyze):
        adder(sub)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except Seq2SeqError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
