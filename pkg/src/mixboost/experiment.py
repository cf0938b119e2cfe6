"""Artifact layout and the train / eval / interactions / correlate / grid drivers.

An experiment lives in ``<output_dir>/<config hash>/``::

    config.ini        the full configuration
    checkpoint.mxb    trained model (see mixboost.nn.checkpoint)
    train_log.jsonl   one JSON record per epoch
    report.json       SafetyReport
    report.csv        the same, one row
    profile.json      InteractionProfile
    profile.svg       J against order / n

Every byte written is a function of the configuration alone.
"""

import functools
import json
import os
from concurrent.futures import ProcessPoolExecutor

from . import config as cfgmod
from .data.splits import make_splits
from .interactions import InteractionProfile, profile, proxy_m
from .metrics import REPORT_FIELDS, SafetyReport, build_eval_bundle, full_report
from .nn import checkpoint as ckpt
from .nn.model import architecture
from .reporting import correlation_table, rows_to_csv
from .svg import line_chart, scatter
from .training import train, write_log

CHECKPOINT = "checkpoint.mxb"
CONFIG = "config.ini"
LOG = "train_log.jsonl"
REPORT_JSON = "report.json"
REPORT_CSV = "report.csv"
PROFILE_JSON = "profile.json"
PROFILE_SVG = "profile.svg"


class ExistsError(RuntimeError):
    """Refusing to overwrite an experiment directory without ``force``."""


def experiment_dir(cfg, out=None):
    return os.path.join(out or cfg.experiment.output_dir, cfg.hash())


@functools.lru_cache(maxsize=4)
def _splits(data_key):
    path, fallback, n_train, n_test, k, seed = data_key
    return make_splits(n_train, n_test, k, seed, cifar_dir=path or None, synth_fallback=fallback)


def load_splits(cfg):
    d = cfg.data
    return _splits((d.path, d.synth_fallback, d.n_train, d.n_test, d.num_classes, d.seed))


@functools.lru_cache(maxsize=4)
def _bundle(data_key, metrics_key):
    sp = _splits(data_key)
    seed, nseq, T, nood, npgd = metrics_key
    return build_eval_bundle(sp.test.images, sp.test_labels, seed, nseq, T, nood, npgd)


def load_bundle(cfg):
    d, m = cfg.data, cfg.metrics
    return _bundle((d.path, d.synth_fallback, d.n_train, d.n_test, d.num_classes, d.seed),
                   (m.seed, m.num_sequences, m.sequence_length, m.num_ood, m.pgd_count))


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def run_train(cfg, out=None, force=False):
    """Train and write checkpoint, log and config; returns the experiment dir."""
    exp = experiment_dir(cfg, out)
    if os.path.exists(os.path.join(exp, CHECKPOINT)) and not force:
        raise ExistsError(f"{exp} already holds a checkpoint; pass --force to retrain")
    splits = load_splits(cfg)
    model, records = train(cfg.train_config(), splits)
    os.makedirs(exp, exist_ok=True)
    cfgmod.dump(cfg, os.path.join(exp, CONFIG))
    write_log(os.path.join(exp, LOG), records)
    meta = {
        "config_hash": cfg.hash(),
        "config": cfgmod.dumps(cfg),
        "dataset": splits.source,
        "final": records[-1],
    }
    ckpt.save(os.path.join(exp, CHECKPOINT), model, meta)
    return exp


def load_model(cfg, path):
    model, meta = ckpt.load(path)
    expected = architecture(cfg.data.num_classes, cfg.train.channels)
    if model.layers != expected:
        raise ckpt.CheckpointError(
            f"checkpoint architecture does not match the config "
            f"(classes={cfg.data.num_classes}, channels={cfg.train.channels})"
        )
    return model, meta


def evaluate(cfg, model):
    return full_report(model, load_bundle(cfg), cfg.pgd_config(), cfg.metrics.num_bins, cfg.metrics.seed)


def report_row(report, **extra):
    row = dict(extra)
    row.update({f: getattr(report, f) for f in REPORT_FIELDS})
    row["model"] = report.metadata.get("model")
    return row


def run_eval(cfg, out=None, checkpoint_path=None):
    exp = experiment_dir(cfg, out)
    model, _ = load_model(cfg, checkpoint_path or os.path.join(exp, CHECKPOINT))
    report = evaluate(cfg, model)
    report.metadata["config_hash"] = cfg.hash()
    os.makedirs(exp, exist_ok=True)
    _write(os.path.join(exp, REPORT_JSON), report.to_json() + "\n")
    _write(os.path.join(exp, REPORT_CSV), rows_to_csv([report_row(report, name=cfg.experiment.name)]))
    return report


def compute_profile(cfg, model):
    splits = load_splits(cfg)
    ic = cfg.interaction
    k = ic.num_images
    grid = cfg.player_grid(splits.mean)
    return profile(model, splits.test.images[:k], splits.test_labels[:k], grid,
                   order_grid=ic.orders or None, budget=ic.budget, seed=ic.seed,
                   contexts_per_pair=ic.contexts_per_pair)


def profile_svg(prof, title="relative interaction strength"):
    xs = [m / prof.n for m in prof.orders]
    return line_chart([("J", xs, prof.J)], title=title, xlabel="order / n", ylabel="J")


def run_interactions(cfg, out=None, checkpoint_path=None):
    exp = experiment_dir(cfg, out)
    model, _ = load_model(cfg, checkpoint_path or os.path.join(exp, CHECKPOINT))
    prof = compute_profile(cfg, model)
    os.makedirs(exp, exist_ok=True)
    _write(os.path.join(exp, PROFILE_JSON), prof.to_json() + "\n")
    _write(os.path.join(exp, PROFILE_SVG), profile_svg(prof, cfg.experiment.name))
    return prof


def run_all(cfg, out=None, force=False):
    """train + eval + interactions; reuses an existing checkpoint unless ``force``."""
    exp = experiment_dir(cfg, out)
    if force or not os.path.exists(os.path.join(exp, CHECKPOINT)):
        run_train(cfg, out, force=True)
    report = run_eval(cfg, out)
    prof = run_interactions(cfg, out)
    return exp, report, prof


def load_experiment(exp):
    with open(os.path.join(exp, REPORT_JSON)) as fh:
        report = SafetyReport.from_json(fh.read())
    with open(os.path.join(exp, PROFILE_JSON)) as fh:
        prof = InteractionProfile.from_json(fh.read())
    cfg = cfgmod.load(os.path.join(exp, CONFIG))
    return cfg, report, prof


def find_experiments(directory):
    found = []
    for root, _, files in sorted(os.walk(directory)):
        if REPORT_JSON in files and PROFILE_JSON in files and CONFIG in files:
            found.append(root)
    return sorted(found)


def run_correlate(directory, out=None):
    """Correlation table over every complete experiment under ``directory``."""
    variants = []
    for exp in find_experiments(directory):
        cfg, report, prof = load_experiment(exp)
        variants.append((cfg.experiment.name, prof, report))
    rows, corr = correlation_table(variants)
    out = out or directory
    os.makedirs(out, exist_ok=True)
    _write(os.path.join(out, "correlation_variants.csv"), rows_to_csv(rows))
    corr_rows = [{"metric": m, "pearson_r": r} for m, r in corr.items()]
    _write(os.path.join(out, "correlation.csv"), rows_to_csv(corr_rows))
    xs = [r["M"] for r in rows]
    names = [r["variant"] for r in rows]
    for m in REPORT_FIELDS:
        ys = [r[m] for r in rows]
        if any(y is None for y in ys):
            continue
        _write(os.path.join(out, f"scatter_{m}.svg"),
               scatter(xs, ys, names, title=f"M vs {m}", xlabel="M(0.2, 0.2, 0.8)", ylabel=m))
    return rows, corr


def _grid_cell(args):
    cell_cfg_text, out, force = args
    cell = cfgmod.loads(cell_cfg_text)
    row = {"r1": cell.train.r1, "lambda": cell.train.lam, "error": None}
    try:
        exp, report, prof = run_all(cell, out, force)
        row.update({f: getattr(report, f) for f in REPORT_FIELDS})
        row["M"] = proxy_m(prof)
        row["experiment"] = os.path.basename(exp)
    except Exception as exc:  # recorded in-row; the grid continues
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


GRID_COLUMNS = ("r1", "lambda") + REPORT_FIELDS + ("M", "experiment", "error")


def run_grid(cfg, out=None, jobs=1, force=False):
    """One experiment per (r1, lambda) cell; returns the rows and writes grid.csv."""
    out = out or cfg.experiment.output_dir
    cells = [cfgmod.dumps(cfg.with_cell(r1, lam)) for r1 in cfg.grid.r1_values for lam in cfg.grid.lambda_values]
    if not cells:
        raise ValueError("grid value lists must be nonempty")
    args = [(c, out, force) for c in cells]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_grid_cell, args))
    else:
        rows = [_grid_cell(a) for a in args]
    os.makedirs(out, exist_ok=True)
    _write(os.path.join(out, f"grid-{cfg.hash()}.csv"), rows_to_csv(rows, list(GRID_COLUMNS)))
    return rows


def summary_rows(directory):
    """One row per experiment with a report; ``M`` is blank without a profile."""
    rows = []
    for root, _, files in sorted(os.walk(directory)):
        if REPORT_JSON not in files or CONFIG not in files:
            continue
        cfg = cfgmod.load(os.path.join(root, CONFIG))
        with open(os.path.join(root, REPORT_JSON)) as fh:
            report = SafetyReport.from_json(fh.read())
        M = None
        if PROFILE_JSON in files:
            with open(os.path.join(root, PROFILE_JSON)) as fh:
                M = proxy_m(InteractionProfile.from_json(fh.read()))
        rows.append(report_row(report, name=cfg.experiment.name, experiment=os.path.basename(root),
                               r1=cfg.train.r1, **{"lambda": cfg.train.lam}, M=M))
    return rows


def dump_json(path, obj):
    _write(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")
