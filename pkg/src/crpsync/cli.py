"""Command-line driver: ``crpsync {ingest,params,build,train,eval,render-crp}``.

Every flag can also come from a ``key = value`` file passed with
``--config``; command-line flags win. The cache root is ``--cache-dir``,
else ``$CRPSYNC_CACHE_DIR``, else ``./.crpsync-cache``.

Exit codes: 0 success, 1 internal or numeric failure, 2 usage or data error.
"""

from __future__ import annotations

import argparse
import csv
import logging
import os
import shutil
import sys
import traceback
from pathlib import Path

from . import evaluation
from .dataset import (
    WindowConfig,
    load_split,
    pool_pairs,
    save_split,
    window_crps,
)
from .embedding import (
    EmbeddingParams,
    ami_curve,
    embed,
    first_local_minimum,
    fnn_fractions,
    zscore_array,
)
from .errors import CrpSyncError, DataError, NumericError
from .ingestion import (
    parse_channels,
    read_pair_csv,
    read_series_csv,
    write_pair_csv,
    write_series_csv,
)
from .nn.model import ArchConfig, load_checkpoint, save_checkpoint
from .nn.train import TrainConfig, evaluate, train
from .pipeline import align_universe, build_datasets, load_universe
from .recurrence import cross_recurrence_plot, render_pgm

log = logging.getLogger("crpsync")

PAIR_SEP = "__"


def cache_root(args) -> Path:
    root = args.cache_dir or os.environ.get("CRPSYNC_CACHE_DIR") or ".crpsync-cache"
    return Path(root)


def pair_file(root: Path, a: str, b: str) -> Path:
    return root / "pairs" / f"{a}{PAIR_SEP}{b}.csv"


def dataset_name(w, eps, k, tau) -> str:
    return f"w{w}_e{eps:g}_k{k}_t{tau}"


def read_config(path) -> dict:
    out = {}
    for n, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise DataError(f"{path}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def _truthy(value) -> bool:
    if isinstance(value, bool):
        return value
    return str(value).strip().lower() in {"1", "true", "yes", "on"}


def _apply_config(parser: argparse.ArgumentParser, config: dict) -> None:
    for action in parser._actions:
        if action.dest in config:
            value = config[action.dest]
            if action.nargs == 0:
                value = _truthy(value)
            parser.set_defaults(**{action.dest: value})


def _need(args, *names):
    missing = [n for n in names if getattr(args, n, None) in (None, "")]
    if missing:
        raise DataError("missing required option(s): " + ", ".join("--" + m.replace("_", "-") for m in missing))


def _parse_pair(text: str) -> tuple:
    for sep in (",", ":", "/", PAIR_SEP):
        if sep in text:
            a, b = text.split(sep, 1)
            return a.strip(), b.strip()
    if text.count("-") == 1:
        a, b = text.split("-")
        return a, b
    raise DataError(f"cannot read pair {text!r}; use A,B")


def _load_pair(root: Path, text: str) -> tuple:
    a, b = _parse_pair(text)
    for x, y in ((a, b), (b, a)):
        path = pair_file(root, x, y)
        if path.exists():
            return read_pair_csv(path)
    raise DataError(f"no cached pair {a},{b} under {root / 'pairs'}; run ingest first")


def _load_dataset(path: Path):
    path = Path(path)
    files = sorted(path.glob("*.crpd")) if path.is_dir() else [path]
    if not files or not files[0].exists():
        raise DataError(f"no dataset files at {path}")
    per_pair, cfg, meta = {}, None, None
    for f in files:
        split, cfg_f, meta = load_split(f)
        if cfg is not None and cfg_f != cfg:
            raise DataError(f"{f}: window config {cfg_f} differs from {cfg}")
        cfg = cfg_f
        per_pair[tuple(meta["pairs"][0]) if len(meta["pairs"]) == 1 else f.stem] = split
    return pool_pairs(per_pair), cfg, len(files)


# --- subcommands --------------------------------------------------------------

def cmd_ingest(args) -> int:
    _need(args, "data_dir")
    root = cache_root(args)
    channels = parse_channels(args.channels)
    tickers = [t.strip() for t in args.tickers.split(",") if t.strip()] if args.tickers else None
    series = load_universe(args.data_dir, tickers, channels)
    if len(series) < 2:
        raise DataError("need at least two tickers to form pairs")
    pairs = align_universe(series, strict=not args.allow_gaps)
    for sub in ("series", "pairs"):
        shutil.rmtree(root / sub, ignore_errors=True)
        (root / sub).mkdir(parents=True)
    for tick, ts in sorted(series.items()):
        write_series_csv(ts, root / "series" / f"{tick}.csv")
    for (ta, tb), (a, b) in pairs.items():
        write_pair_csv(a, b, pair_file(root, ta, tb))
    lengths = sorted({len(a) for a, _ in pairs.values()})
    print(f"ingested {len(series)} tickers, {len(pairs)} pairs, channels={','.join(channels)}, "
          f"common length(s) {lengths}")
    return 0


def cmd_params(args) -> int:
    _need(args, "ticker")
    path = cache_root(args) / "series" / f"{args.ticker}.csv"
    if not path.exists():
        raise DataError(f"no cached series for {args.ticker} at {path}; run ingest first")
    ts = read_series_csv(path, args.ticker)
    max_lag, max_k = int(args.max_lag), int(args.max_k)
    for name in ts.channel_names:
        x = ts.channels[name]
        mi = ami_curve(x, max_lag)
        print(f"# {args.ticker} {name}: average mutual information")
        print("lag,mi")
        for lag, v in enumerate(mi, 1):
            print(f"{lag},{v:.6f}")
        tau = first_local_minimum(mi) or max_lag
        frac = fnn_fractions(x, tau=int(args.tau or tau), max_k=max_k)
        print(f"# {args.ticker} {name}: false nearest neighbours (tau={int(args.tau or tau)})")
        print("k,fnn_fraction")
        for k, f in enumerate(frac, 1):
            print(f"{k},{f:.6f}")
    return 0


def cmd_build(args) -> int:
    _need(args, "w", "epsilon")
    root = cache_root(args)
    w, eps, k, tau = int(args.w), float(args.epsilon), int(args.k), int(args.tau)
    cfg = WindowConfig(w, EmbeddingParams(k, tau), eps, normalize=not args.no_normalize)
    files = sorted((root / "pairs").glob("*.csv"))
    if not files:
        raise DataError(f"no cached pairs under {root / 'pairs'}; run ingest first")
    out = Path(args.out) if args.out else root / "datasets" / dataset_name(w, eps, k, tau)
    shutil.rmtree(out, ignore_errors=True)
    out.mkdir(parents=True)
    pairs = {}
    for f in files:
        a, b = read_pair_csv(f)
        pairs[(a.ticker, b.ticker)] = (a, b)
    per_pair = build_datasets(pairs, cfg, jobs=int(args.jobs),
                              train_frac=float(args.train_frac),
                              val_frac_of_train=float(args.val_frac))
    for (ta, tb), split in per_pair.items():
        meta = {"pairs": [[ta, tb]], "channels": list(pairs[(ta, tb)][0].channel_names)}
        save_split(out / f"{ta}{PAIR_SEP}{tb}.crpd", split, cfg, meta)
    pooled = pool_pairs(per_pair)
    print(f"dataset {out}: {len(per_pair)} pairs, side {cfg.side}, "
          f"train {len(pooled.train)}, validation {len(pooled.validation)}, test {len(pooled.test)}")
    return 0


def cmd_train(args) -> int:
    _need(args, "dataset")
    data, cfg, _ = _load_dataset(Path(args.dataset))
    arch = ArchConfig(
        conv1_filters=int(args.conv1_filters), conv2_filters=int(args.conv2_filters),
        conv1_kernel=int(args.kernel), conv2_kernel=int(args.kernel),
        pool=int(args.pool), padding=int(args.padding),
    )
    tc = TrainConfig(
        epochs=int(args.epochs), batch_size=int(args.batch_size), lr=float(args.lr),
        seed=int(args.seed), dtype=args.dtype, arch=arch,
    )
    report = train(data, tc, log_every=int(args.log_every))
    dpath = Path(args.dataset)
    out = Path(args.out) if args.out else (dpath if dpath.is_dir() else dpath.parent) / f"model_s{tc.seed}.crpm"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_checkpoint(report.params, out)
    with open(out.with_suffix(".log.csv"), "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["epoch", "lr", "train_loss", "train_f1", "val_accuracy",
                         "val_precision", "val_recall", "val_f1"])
        for r in report.history:
            v = r.validation
            writer.writerow([r.epoch, repr(r.lr), repr(r.train_loss), repr(r.train_f1),
                             repr(v.accuracy), repr(v.precision), repr(v.recall), repr(v.f1)])
    best = report.best_validation
    print(f"model {out}: best epoch {report.best_epoch}, validation f1 {best.f1:.3f}")
    return 0


def cmd_eval(args) -> int:
    _need(args, "model", "dataset")
    model = load_checkpoint(args.model)
    data, cfg, _ = _load_dataset(Path(args.dataset))
    examples = getattr(data, args.split)
    metrics = evaluate(model, examples)
    report = Path(args.report) if args.report else cache_root(args) / "report.csv"
    report.parent.mkdir(parents=True, exist_ok=True)
    results = evaluation.merge_into_report(report, cfg.w, cfg.epsilon, metrics)
    print(evaluation.grid_report(results))
    print(f"{args.split}: tp={metrics.tp} fp={metrics.fp} tn={metrics.tn} fn={metrics.fn}"
          + (f" (undefined: {', '.join(metrics.undefined)})" if metrics.undefined else ""))
    return 0


def cmd_render(args) -> int:
    _need(args, "pair", "out")
    if not args.full and args.w is None:
        raise DataError("render-crp needs --w or --full")
    a, b = _load_pair(cache_root(args), args.pair)
    params = EmbeddingParams(int(args.k), int(args.tau))
    eps = float(args.epsilon)
    normalize = not args.no_normalize
    av, bv = a.values, b.values
    if args.full:
        if normalize:
            av, bv = zscore_array(av, names=a.channel_names), zscore_array(bv, names=b.channel_names)
        bits = cross_recurrence_plot(embed(av, params), embed(bv, params), eps).bits
    else:
        cfg = WindowConfig(int(args.w), params, eps, normalize)
        last = len(a) - params.span - 2
        epoch = last if args.epoch is None else int(args.epoch)
        start = epoch - cfg.w + 1
        if start < 0 or epoch >= len(a):
            raise DataError(f"epoch {epoch} has no full window of {cfg.w} observations")
        bits = window_crps(av[start : epoch + 1], bv[start : epoch + 1], cfg, 1)[0]
    render_pgm(bits, args.out)
    print(f"wrote {args.out} ({bits.shape[0]}x{bits.shape[1]})")
    return 0


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file with defaults for any flag")
    common.add_argument("--cache-dir", help="cache root (default $CRPSYNC_CACHE_DIR or ./.crpsync-cache)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="crpsync", description="Predict pair synchronization from cross-recurrence plots."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", parents=[common], help="load CSVs and cache aligned pairs")
    p.add_argument("--data-dir")
    p.add_argument("--tickers", help="comma-separated; default: every CSV in --data-dir")
    p.add_argument("--channels", default="price,volume,return")
    p.add_argument("--allow-gaps", action="store_true", help="drop unshared dates instead of failing")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("params", parents=[common], help="AMI / FNN diagnostics for one ticker")
    p.add_argument("--ticker")
    p.add_argument("--max-lag", default="20")
    p.add_argument("--max-k", default="10")
    p.add_argument("--tau", help="delay for FNN (default: AMI estimate)")
    p.set_defaults(func=cmd_params)

    p = sub.add_parser("build", parents=[common], help="build the windowed CRP dataset")
    p.add_argument("--w")
    p.add_argument("--epsilon")
    p.add_argument("--k", default="2")
    p.add_argument("--tau", default="1")
    p.add_argument("--train-frac", default="0.7")
    p.add_argument("--val-frac", default="0.15")
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--jobs", default="1")
    p.add_argument("--out", help="dataset directory (default under the cache)")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("train", parents=[common], help="train the CNN on a dataset")
    p.add_argument("--dataset")
    p.add_argument("--seed", default="0")
    p.add_argument("--epochs", default="300")
    p.add_argument("--batch-size", default="128")
    p.add_argument("--lr", default="0.01")
    p.add_argument("--dtype", default="float64", choices=["float32", "float64"])
    p.add_argument("--conv1-filters", default="16")
    p.add_argument("--conv2-filters", default="32")
    p.add_argument("--kernel", default="3")
    p.add_argument("--pool", default="2")
    p.add_argument("--padding", default="1")
    p.add_argument("--log-every", default="0")
    p.add_argument("--out", help="checkpoint path (default <dataset>/model_s<seed>.crpm)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="score a model and update the grid report")
    p.add_argument("--model")
    p.add_argument("--dataset")
    p.add_argument("--split", default="test", choices=["train", "validation", "test"])
    p.add_argument("--report", help="grid CSV (default <cache>/report.csv)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("render-crp", parents=[common], help="export a CRP as a PGM image")
    p.add_argument("--pair", help="A,B")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--w", help="render the window CRP of this length")
    group.add_argument("--full", action="store_true", help="render the full-series CRP")
    p.add_argument("--epoch", help="0-based last observation of the window (default: last example)")
    p.add_argument("--epsilon", default="0.45")
    p.add_argument("--k", default="2")
    p.add_argument("--tau", default="1")
    p.add_argument("--no-normalize", action="store_true")
    p.add_argument("--out")
    p.set_defaults(func=cmd_render)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    try:
        if known.config:
            config = read_config(known.config)
            for subparser in parser._subparsers._group_actions[0].choices.values():
                _apply_config(subparser, config)
        args = parser.parse_args(argv)
    except (DataError, OSError) as exc:
        print(f"crpsync: error: {exc}", file=sys.stderr)
        return 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return int(args.func(args) or 0)
    except NumericError as exc:
        print(f"crpsync: numeric failure: {exc}", file=sys.stderr)
        return 1
    except (CrpSyncError, OSError, ValueError) as exc:
        print(f"crpsync: error: {exc}", file=sys.stderr)
        return 2
    except Exception:  # noqa: BLE001
        traceback.print_exc()
        return 1


if __name__ == "__main__":
    sys.exit(main())
