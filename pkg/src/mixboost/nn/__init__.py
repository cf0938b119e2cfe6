from .autodiff import Tensor, no_grad, softmax
from .model import TinyCnn, architecture, backward, cross_entropy, forward
from .optim import Sgd, SgdSchedule, sgd_step

__all__ = [
    "Tensor",
    "TinyCnn",
    "Sgd",
    "SgdSchedule",
    "architecture",
    "backward",
    "cross_entropy",
    "forward",
    "no_grad",
    "sgd_step",
    "softmax",
]
