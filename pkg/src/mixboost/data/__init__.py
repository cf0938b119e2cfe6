from .cifar import FormatError, ImageBatch, parse_cifar10, write_cifar10
from .corruptions import KINDS, SEVERITY, corrupt, corruption_suite, perturb_sequence, sequence_suite
from .splits import DataError, DatasetSplits, load_set, make_splits, save_set
from .synth import synth_dataset, synth_ood

__all__ = [
    "DataError",
    "DatasetSplits",
    "FormatError",
    "ImageBatch",
    "KINDS",
    "SEVERITY",
    "corrupt",
    "corruption_suite",
    "load_set",
    "make_splits",
    "parse_cifar10",
    "perturb_sequence",
    "save_set",
    "sequence_suite",
    "synth_dataset",
    "synth_ood",
    "write_cifar10",
]
