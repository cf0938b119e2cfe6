import math
from dataclasses import dataclass


@dataclass(frozen=True)
class SgdSchedule:
    """Cosine-annealed learning rate, reaching exactly zero at ``total_steps``."""

    lr0: float = 0.05
    total_steps: int = 1
    momentum: float = 0.9

    def __post_init__(self):
        if self.lr0 <= 0:
            raise ValueError("lr0 must be positive")
        if self.total_steps < 1:
            raise ValueError("total_steps must be >= 1")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")

    def lr(self, t):
        if not 0 <= t <= self.total_steps:
            raise ValueError(f"step {t} outside [0, {self.total_steps}]")
        if t == self.total_steps:
            return 0.0
        return self.lr0 * 0.5 * (1.0 + math.cos(math.pi * t / self.total_steps))


class Sgd:
    """Heavy-ball SGD: ``v <- momentum * v + g``; ``p <- p - lr(t) * v``."""

    def __init__(self, schedule):
        self.schedule = schedule
        self.velocity = {}

    def step(self, model, grads, t):
        lr = self.schedule.lr(t)
        for name, p in model.params.items():
            g = grads[name]
            v = self.velocity.get(name)
            v = g.copy() if v is None else self.schedule.momentum * v + g
            self.velocity[name] = v
            if lr != 0.0:
                p.data -= lr * v
        return model


def sgd_step(model, gradients, schedule, t, optimizer=None):
    """One update; pass a persistent ``Sgd`` to carry momentum across steps."""
    optimizer = optimizer or Sgd(schedule)
    return optimizer.step(model, gradients, t)

