"""Multi-order game interactions and the mid-order proxy.

A game maps a coalition ``S`` of players ``{0..n-1}`` to a score ``v(S)``.
Coalitions are passed around as boolean membership rows of shape ``(n,)``
(or stacks ``(M, n)``) so that model-backed games can evaluate many
coalitions in a single batched forward pass.

For players ``i != j`` and a context ``S`` not containing either::

    dv(i, j, S) = v(S + {i, j}) - v(S + {i}) - v(S + {j}) + v(S)
    I_m(i, j)   = mean of dv(i, j, S) over all |S| = m

and the model output decomposes exactly as::

    v(N) = v({}) + sum_i mu_i + sum_{i != j} sum_m w_m * I_m(i, j)
    mu_i = v({i}) - v({}),   w_m = (n - 1 - m) / (n (n - 1))
"""

import hashlib
import itertools
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .nn.autodiff import no_grad

BRUTEFORCE_MAX_PLAYERS = 14
DECOMPOSITION_MAX_PLAYERS = 10


class DegenerateProfileError(ValueError):
    pass


def _as_rows(coalitions, n):
    rows = np.asarray(coalitions, dtype=bool)
    if rows.ndim == 1:
        rows = rows[None]
    if rows.shape[1] != n:
        raise ValueError(f"coalition rows must have {n} entries")
    return rows


def coalition(n, members):
    row = np.zeros(n, dtype=bool)
    row[list(members)] = True
    return row


class TabulatedGame:
    """Game stored as a table of ``2**n`` values indexed by membership bitmask."""

    def __init__(self, table):
        table = np.asarray(table, dtype=np.float64)
        n = int(round(math.log2(len(table))))
        if 2**n != len(table):
            raise ValueError("table length must be a power of two")
        self.n = n
        self.table = table
        self._bits = 1 << np.arange(n, dtype=np.int64)

    @classmethod
    def from_function(cls, n, fn):
        """Tabulate ``fn(frozenset_of_members)`` over every coalition."""
        table = np.empty(2**n)
        for mask in range(2**n):
            table[mask] = fn(frozenset(k for k in range(n) if mask >> k & 1))
        return cls(table)

    def values(self, coalitions):
        rows = _as_rows(coalitions, self.n)
        return self.table[rows.astype(np.int64) @ self._bits]

    def __call__(self, members):
        return float(self.values(coalition(self.n, members))[0])


def additive_game(weights):
    w = np.asarray(weights, dtype=np.float64)
    return TabulatedGame.from_function(len(w), lambda S: float(sum(w[k] for k in S)))


def pairwise_game(n, i, j, c):
    """``v(S) = c`` when both ``i`` and ``j`` are in ``S``, else 0."""
    return TabulatedGame.from_function(n, lambda S: c if (i in S and j in S) else 0.0)


def all_pairs_game(n, c):
    """``v(S) = c * C(|S|, 2)``: every pair interacts with strength ``c`` at every order."""
    return TabulatedGame.from_function(n, lambda S: c * len(S) * (len(S) - 1) / 2)


def random_game(n, seed):
    return TabulatedGame(np.random.default_rng([seed, n]).normal(size=2**n))


def delta_v(game, i, j, S):
    """Four-term interaction of ``i`` and ``j`` in context ``S`` (an iterable of players)."""
    S = set(S)
    if i == j:
        raise ValueError("i and j must differ")
    if i in S or j in S:
        raise ValueError("context S must exclude i and j")
    base = coalition(game.n, S)
    rows = np.stack([base, base, base, base])
    rows[0, [i, j]] = True
    rows[1, i] = True
    rows[2, j] = True
    v = game.values(rows)
    return float(v[0] - v[1] - v[2] + v[3])


def _delta_rows(n, pairs, contexts):
    """Coalition rows for every (pair, context) in four-term order."""
    k = len(contexts)
    rows = np.zeros((k, 4, n), dtype=bool)
    rows[:] = contexts[:, None, :]
    idx = np.arange(k)
    i, j = pairs[:, 0], pairs[:, 1]
    rows[idx, 0, i] = True
    rows[idx, 0, j] = True
    rows[idx, 1, i] = True
    rows[idx, 2, j] = True
    return rows.reshape(k * 4, n)


def _delta_batch(game, pairs, contexts):
    v = game.values(_delta_rows(game.n, pairs, contexts)).reshape(-1, 4)
    return v[:, 0] - v[:, 1] - v[:, 2] + v[:, 3]


@dataclass
class InteractionEstimate:
    order: int
    value: float  # mean over pairs of |I_m(i, j)|
    signed: float  # mean over pairs of I_m(i, j)
    stderr: float
    samples: int  # contexts per pair
    pairs: int


def _all_pairs(n):
    return np.array(list(itertools.combinations(range(n), 2)), dtype=np.int64)


def _contexts_for(n, i, j, m):
    rest = [k for k in range(n) if k != i and k != j]
    out = np.zeros((math.comb(n - 2, m), n), dtype=bool)
    for r, S in enumerate(itertools.combinations(rest, m)):
        out[r, list(S)] = True
    return out


def interaction_mc(game, m, num_contexts=32, num_pairs=16, seed=0, pairs=None, exhaustive=False):
    """Estimate order-``m`` interaction statistics by sampling.

    Pairs are drawn without replacement (or given via ``pairs``); for each
    pair ``num_contexts`` size-``m`` contexts are drawn uniformly with
    replacement. ``stderr`` is the context-sampling standard error of
    ``value``. With ``exhaustive=True`` every pair and every context is
    enumerated and ``stderr`` is 0.
    """
    n = game.n
    if not 0 <= m <= n - 2:
        raise ValueError(f"order m={m} outside [0, {n - 2}]")
    if num_contexts < 1 or num_pairs < 1:
        raise ValueError("num_contexts and num_pairs must be >= 1")
    rng = np.random.default_rng([seed, m, 0x1A7])
    if pairs is not None:
        pair_arr = np.asarray(pairs, dtype=np.int64).reshape(-1, 2)
    else:
        every = _all_pairs(n)
        if exhaustive or num_pairs >= len(every):
            pair_arr = every
        else:
            pair_arr = every[np.sort(rng.choice(len(every), size=num_pairs, replace=False))]

    if exhaustive:
        per_pair = []
        for i, j in pair_arr:
            ctx = _contexts_for(n, i, j, m)
            d = _delta_batch(game, np.tile([i, j], (len(ctx), 1)), ctx)
            per_pair.append(d.mean())
        per_pair = np.array(per_pair)
        return InteractionEstimate(m, float(np.abs(per_pair).mean()), float(per_pair.mean()), 0.0,
                                   math.comb(n - 2, m), len(pair_arr))

    P, C = len(pair_arr), num_contexts
    contexts = np.zeros((P, C, n), dtype=bool)
    for p, (i, j) in enumerate(pair_arr):
        rest = np.array([k for k in range(n) if k != i and k != j])
        # uniform size-m subsets of the remaining players: argsort of uniforms
        picks = np.argsort(rng.random((C, n - 2)), axis=1)[:, :m]
        contexts[p, np.arange(C)[:, None], rest[picks]] = True
    d = _delta_batch(game, np.repeat(pair_arr, C, axis=0), contexts.reshape(P * C, n)).reshape(P, C)
    per_pair = d.mean(axis=1)
    var = d.var(axis=1, ddof=1) if C > 1 else np.zeros(P)
    stderr = math.sqrt(float(np.sum(var / C))) / P
    return InteractionEstimate(m, float(np.abs(per_pair).mean()), float(per_pair.mean()), stderr, C, P)


def interaction_bruteforce(game, m, i, j):
    """Exact ``I_m(i, j)`` by enumerating all ``C(n-2, m)`` contexts one at a time."""
    n = game.n
    if n > BRUTEFORCE_MAX_PLAYERS:
        raise ValueError(
            f"n={n} exceeds the enumeration limit of {BRUTEFORCE_MAX_PLAYERS}; use interaction_mc instead"
        )
    if not 0 <= m <= n - 2:
        raise ValueError(f"order m={m} outside [0, {n - 2}]")
    rest = [k for k in range(n) if k not in (i, j)]
    total, count = 0.0, 0
    for S in itertools.combinations(rest, m):
        total += delta_v(game, i, j, S)
        count += 1
    return total / count


def decomposition_weight(n, m):
    return (n - 1 - m) / (n * (n - 1))


def decomposition_check(game):
    """``|v(N) - reconstruction|`` using exact interactions of every order and ordered pair."""
    n = game.n
    if n > DECOMPOSITION_MAX_PLAYERS:
        raise ValueError(f"decomposition check needs exact interactions; n={n} > {DECOMPOSITION_MAX_PLAYERS}")
    v_empty = game(())
    v_full = game(range(n))
    mu = [game((i,)) - v_empty for i in range(n)]
    rhs = v_empty + sum(mu)
    for i, j in itertools.combinations(range(n), 2):
        for m in range(n - 1):
            # I_m is symmetric in (i, j): count both orderings
            rhs += 2 * decomposition_weight(n, m) * interaction_bruteforce(game, m, i, j)
    return abs(v_full - rhs)


@dataclass(frozen=True)
class PlayerGrid:
    """Players are the cells of a ``rows x cols`` tiling of the image."""

    rows: int = 4
    cols: int = 4
    baseline: tuple = (0.5, 0.5, 0.5)

    @property
    def n(self):
        return self.rows * self.cols

    def pixel_masks(self, coalitions, H=32, W=32):
        if H % self.rows or W % self.cols:
            raise ValueError(f"{self.rows}x{self.cols} grid does not tile {H}x{W}")
        rows = _as_rows(coalitions, self.n).reshape(-1, self.rows, self.cols)
        return np.repeat(np.repeat(rows, H // self.rows, axis=1), W // self.cols, axis=2)


class ModelGame:
    """``v(S)``: true-class log-odds with players outside ``S`` set to the baseline.

    ``v(S) = z_y - log sum_{k != y} exp(z_k)`` on the masked image.
    """

    def __init__(self, model, image, label, grid, chunk=512):
        self.model = model
        self.image = np.asarray(image, dtype=np.float64)
        if self.image.shape != (3, 32, 32):
            raise ValueError(f"image must be (3, 32, 32), got {self.image.shape}")
        self.label = int(label)
        self.grid = grid
        self.n = grid.n
        self.chunk = chunk
        self._fill = np.asarray(grid.baseline, dtype=np.float64)[:, None, None]

    def masked_images(self, coalitions):
        keep = self.grid.pixel_masks(coalitions, *self.image.shape[1:])
        return np.where(keep[:, None], self.image[None], self._fill[None])

    def values(self, coalitions):
        rows = _as_rows(coalitions, self.n)
        out = np.empty(len(rows))
        with no_grad():
            for s in range(0, len(rows), self.chunk):
                z = self.model.forward(self.masked_images(rows[s:s + self.chunk])).data
                zy = z[:, self.label]
                others = np.delete(z, self.label, axis=1)
                top = others.max(axis=1)
                out[s:s + self.chunk] = zy - (top + np.log(np.exp(others - top[:, None]).sum(axis=1)))
        return out

    def __call__(self, members):
        return float(self.values(coalition(self.n, members))[0])


def model_game(model, image, label, grid):
    return ModelGame(model, image, label, grid)


def default_order_grid(n):
    """Orders ``round(f * n)`` for ``f`` in {0, 0.05, ..., 0.95}, clipped to ``[0, n-2]``."""
    fracs = np.round(np.arange(20) * 0.05, 2)
    return sorted({int(min(max(round(f * n), 0), n - 2)) for f in fracs})


@dataclass
class InteractionProfile:
    n: int
    orders: list
    J: list
    stderr: list
    strength: list  # A(m): cross-image, cross-pair mean of |I_m|
    normalizer: float
    config: dict = field(default_factory=dict)

    def to_dict(self):
        d = asdict(self)
        d["config_hash"] = config_hash(self.config)
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        d = {k: v for k, v in d.items() if k != "config_hash"}
        return cls(**d)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def mass(self, lo_frac, hi_frac):
        """Sum of J over evaluated orders with ``lo_frac <= m / n <= hi_frac``."""
        return float(sum(j for m, j in zip(self.orders, self.J) if lo_frac - 1e-12 <= m / self.n <= hi_frac + 1e-12))


def config_hash(config):
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()[:16]


def profile_from_strengths(n, orders, strength, stderr=None, config=None):
    """Normalise per-order strengths ``A(m)`` by their mean to give ``J``."""
    A = np.asarray(strength, dtype=np.float64)
    norm = float(A.mean())
    if norm <= 0:
        raise DegenerateProfileError("all interaction strengths are zero")
    se = np.zeros_like(A) if stderr is None else np.asarray(stderr, dtype=np.float64)
    # equal strengths must give an exactly flat J, whatever the rounding of the mean
    J = np.ones_like(A) if np.all(A == A[0]) else A / norm
    return InteractionProfile(
        n=int(n), orders=[int(m) for m in orders], J=J.tolist(), stderr=(se / norm).tolist(),
        strength=A.tolist(), normalizer=norm, config=config or {},
    )


def profile_games(games, order_grid=None, budget=960, seed=0, contexts_per_pair=8):
    """Relative interaction strength profile over a list of games with equal ``n``.

    ``budget`` is the number of sampled ``dv`` terms per game, split evenly
    across orders; within an order they are arranged as pairs x contexts.
    """
    if not games:
        raise ValueError("need at least one game")
    n = games[0].n
    orders = default_order_grid(n) if order_grid is None else sorted(int(m) for m in order_grid)
    if any(m < 0 or m > n - 2 for m in orders):
        raise ValueError(f"order grid must lie within [0, {n - 2}]")
    per_order = budget // len(orders)
    if per_order < 1:
        raise ValueError(f"budget {budget} gives no context for {len(orders)} orders")
    num_pairs = max(1, per_order // contexts_per_pair)
    num_contexts = max(1, per_order // num_pairs)
    A, se = [], []
    for m in orders:
        ests = [interaction_mc(g, m, num_contexts, num_pairs, seed=[seed, k]) for k, g in enumerate(games)]
        A.append(np.mean([e.value for e in ests]))
        se.append(math.sqrt(sum(e.stderr**2 for e in ests)) / len(ests))
    config = {"n": n, "orders": orders, "budget": budget, "seed": seed,
              "contexts_per_pair": contexts_per_pair, "num_images": len(games)}
    return profile_from_strengths(n, orders, A, se, config)


def profile(model, images, labels, grid=PlayerGrid(), order_grid=None, budget=960, seed=0, contexts_per_pair=8):
    """Interaction profile of ``model`` averaged over an image sample."""
    images = np.asarray(images)
    if len(images) == 0:
        raise ValueError("need at least one image")
    games = [ModelGame(model, x, y, grid) for x, y in zip(images, labels)]
    prof = profile_games(games, order_grid, budget, seed, contexts_per_pair)
    prof.config["grid"] = [grid.rows, grid.cols]
    prof.config["baseline"] = [float(b) for b in grid.baseline]
    return prof


@dataclass(frozen=True)
class ProxyParams:
    a: float = 0.2
    b: float = 0.2
    c: float = 0.8

    def __post_init__(self):
        if not 0.0 <= self.a <= self.b <= self.c <= 1.0:
            raise ValueError("need 0 <= a <= b <= c <= 1")


def _floor(x):
    return int(math.floor(x + 1e-9))


def proxy_m(prof, params=ProxyParams()):
    """Adjusted mid-order relative interaction strength.

    ``sqrt( sum_{m=floor(bn)}^{floor(cn)} J_m / sum_{m=0}^{floor(an)} J_m / (max J - min J) )``

    Orders missing from the profile take the J of the nearest evaluated
    order (ties go to the lower one).
    """
    orders = np.asarray(prof.orders)
    J = np.asarray(prof.J, dtype=np.float64)
    n = prof.n
    spread = J.max() - J.min()
    if spread == 0:
        raise DegenerateProfileError("max J == min J: the proxy is undefined for a flat profile")

    def at(m):
        return J[int(np.argmin(np.abs(orders - m)))]

    num = sum(at(m) for m in range(_floor(params.b * n), _floor(params.c * n) + 1))
    den = sum(at(m) for m in range(0, _floor(params.a * n) + 1))
    if den == 0:
        raise DegenerateProfileError("low-order J sum is zero")
    return math.sqrt(num / den / spread)
