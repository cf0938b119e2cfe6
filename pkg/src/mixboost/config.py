"""Experiment configuration: an INI file with a fixed schema.

Sections map one-to-one onto the dataclasses below; every key is optional
and falls back to the default shown. Unknown sections or keys are errors.
Tuples are written comma-separated; booleans as ``true``/``false``; an empty
value for an optional field means "unset".
"""

import configparser
import dataclasses
import hashlib
import io
import typing
from dataclasses import dataclass, field

from .interactions import PlayerGrid
from .metrics import PgdConfig
from .training import TrainConfig


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentSection:
    name: str = "mixboost"
    seed: int = 0
    output_dir: str = "runs"


@dataclass
class DataSection:
    path: str = ""
    synth_fallback: bool = True
    n_train: int = 2000
    n_test: int = 500
    num_classes: int = 10
    seed: int = 0


@dataclass
class TrainSection:
    r1: float = 0.7
    lam: float = 1.0
    augmentation: str = "pixmix_style"
    hole_size: int = 16
    beta_alpha: float = 1.0
    k_max: int = 4
    pixmix_beta: float = 3.0
    mixer_pool_size: int = 64
    base_flip_shift: bool = True
    epochs: int = 30
    batch_size: int = 64
    lr0: float = 0.05
    momentum: float = 0.9
    mask_rows: int = 8
    mask_cols: int = 8
    channels: typing.Tuple[int, ...] = (16, 32, 64)


@dataclass
class InteractionSection:
    grid_rows: int = 4
    grid_cols: int = 4
    orders: typing.Tuple[int, ...] = ()
    budget: int = 960
    contexts_per_pair: int = 8
    num_images: int = 20
    seed: int = 0


@dataclass
class MetricsSection:
    pgd_epsilon: float = 8 / 255
    pgd_step_size: float = 2 / 255
    pgd_steps: int = 10
    pgd_random_start: bool = True
    pgd_count: int = 200
    num_bins: int = 10
    num_sequences: int = 100
    sequence_length: int = 8
    num_ood: int = 500
    seed: int = 0


@dataclass
class GridSection:
    r1_values: typing.Tuple[float, ...] = (0.9, 0.8, 0.7, 0.6, 0.5, 0.4)
    lambda_values: typing.Tuple[float, ...] = (1.0,)


# ``lambda`` is a Python keyword, so the file key maps onto ``lam``.
_KEY_ALIASES = {("train", "lambda"): "lam"}
_FIELD_ALIASES = {("train", "lam"): "lambda"}


@dataclass
class ExperimentConfig:
    experiment: ExperimentSection = field(default_factory=ExperimentSection)
    data: DataSection = field(default_factory=DataSection)
    train: TrainSection = field(default_factory=TrainSection)
    interaction: InteractionSection = field(default_factory=InteractionSection)
    metrics: MetricsSection = field(default_factory=MetricsSection)
    grid: GridSection = field(default_factory=GridSection)

    def train_config(self):
        return TrainConfig(seed=self.experiment.seed, **dataclasses.asdict(self.train))

    def pgd_config(self):
        m = self.metrics
        return PgdConfig(m.pgd_epsilon, m.pgd_step_size, m.pgd_steps, m.pgd_random_start)

    def player_grid(self, baseline):
        return PlayerGrid(self.interaction.grid_rows, self.interaction.grid_cols,
                          tuple(float(b) for b in baseline))

    def hash(self):
        """Content hash over everything except where outputs are written."""
        clone = dataclasses.replace(self, experiment=dataclasses.replace(self.experiment, output_dir=""))
        return hashlib.sha256(dumps(clone).encode()).hexdigest()[:16]

    def with_cell(self, r1, lam):
        return dataclasses.replace(self, train=dataclasses.replace(self.train, r1=float(r1), lam=float(lam)))


_SECTIONS = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}


def _hints(cls):
    return typing.get_type_hints(cls)


def _parse_value(text, tp, where):
    text = text.strip()
    try:
        if tp is bool:
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(text)
        if tp is int:
            return int(text)
        if tp is float:
            return float(text)
        if tp is str:
            return text
        if typing.get_origin(tp) is tuple:
            (inner, _) = typing.get_args(tp)
            return tuple(_parse_value(p, inner, where) for p in text.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {text!r} as {getattr(tp, '__name__', tp)}") from None
    raise ConfigError(f"{where}: unsupported type {tp}")


def _format_value(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(_format_value(x) for x in v)
    return str(v)


def loads(text):
    parser = configparser.ConfigParser(interpolation=None, default_section="__none__")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    unknown = [s for s in parser.sections() if s not in _SECTIONS]
    if unknown:
        raise ConfigError(f"unknown sections: {', '.join(unknown)}")
    sections = {}
    bad = []
    for name, cls in _SECTIONS.items():
        hints = _hints(cls)
        values = {}
        if parser.has_section(name):
            for key, raw in parser.items(name):
                attr = _KEY_ALIASES.get((name, key), key)
                if attr not in hints or (name, attr) in _FIELD_ALIASES and key == attr:
                    bad.append(f"{name}.{key}")
                    continue
                values[attr] = _parse_value(raw, hints[attr], f"{name}.{key}")
        sections[name] = cls(**values)
    if bad:
        raise ConfigError(f"unknown keys: {', '.join(bad)}")
    cfg = ExperimentConfig(**sections)
    try:
        cfg.train_config()
        cfg.pgd_config()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return cfg


def load(path):
    with open(path) as fh:
        return loads(fh.read())


def dumps(cfg):
    out = io.StringIO()
    for name in _SECTIONS:
        section = getattr(cfg, name)
        out.write(f"[{name}]\n")
        for f in dataclasses.fields(section):
            key = _FIELD_ALIASES.get((name, f.name), f.name)
            out.write(f"{key} = {_format_value(getattr(section, f.name))}\n")
        out.write("\n")
    return out.getvalue()


def dump(cfg, path):
    with open(path, "w") as fh:
        fh.write(dumps(cfg))
