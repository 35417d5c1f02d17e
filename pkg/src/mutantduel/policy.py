"""Dynamic tests: a small policy network cloned from gameplay traces.

The network is a single tanh hidden layer with a softmax head, trained by
mini-batch gradient descent on cross-entropy against the actions a player
actually took. Everything is plain numpy float64 with hand-written
gradients so training is bit-reproducible from a seed. After training,
the hidden activations of the training set are kept; the distance from a
new frame's activation to its nearest stored neighbor serves as a
surprise signal when the policy is replayed against mutants.
"""

from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from . import assertions as asrt
from .engine import (Action, Frame, LevelLayout, Trace, default_level, new_world,
                     replay, step)
from .errors import MatchRuleError, UntrainableTargetError
from .rng import DetRng, derive_seed
from .rules import RuleScript

FEATURE_COUNT = 9


def featurize(frame: Frame, level: LevelLayout | None = None) -> np.ndarray:
    """Fixed 9-component observation vector for one frame.

    player x, y (grid-normalized); nearest live coin dx, dy and a
    presence bit (zeros when no coin is left); nearest live bomb dx, dy;
    score / 100; game-over flag.
    """
    lvl = level if level is not None else default_level()
    w, h = float(lvl.width), float(lvl.height)
    player = next(a for a in frame.actors if a.kind == "player")

    def nearest(kind: str):
        best = None
        for a in frame.actors:
            if a.kind != kind or not a.alive:
                continue
            d = abs(a.x - player.x) + abs(a.y - player.y)
            if best is None or d < best[0]:
                best = (d, a)
        return best[1] if best else None

    coin = nearest("coin")
    bomb = nearest("bomb")
    return np.array([
        player.x / w,
        player.y / h,
        (coin.x - player.x) / w if coin else 0.0,
        (coin.y - player.y) / h if coin else 0.0,
        1.0 if coin else 0.0,
        (bomb.x - player.x) / w if bomb else 0.0,
        (bomb.y - player.y) / h if bomb else 0.0,
        frame.score / 100.0,
        1.0 if frame.game_over else 0.0,
    ], dtype=np.float64)


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 200
    batch_size: int = 16
    hidden: int = 16
    seed: int = 0

    def text(self) -> str:
        return "".join(f"{f.name}={getattr(self, f.name)}\n" for f in fields(self))


def parse_train_config(text: str) -> TrainConfig:
    kinds = {f.name: f.type for f in fields(TrainConfig)}
    overrides: dict[str, float | int] = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep or key not in kinds:
            raise MatchRuleError("config", f"line {ln}: unknown setting {key!r}")
        try:
            overrides[key] = (float(value) if key == "learning_rate"
                              else int(value))
        except ValueError:
            raise MatchRuleError("config", f"line {ln}: bad value for {key}") from None
    return TrainConfig(**overrides)


class PolicyNet:
    """input -> tanh hidden -> softmax over the four actions."""

    def __init__(self, n_in: int, n_hidden: int, n_out: int, seed: int = 0,
                 target_statement: int = -1) -> None:
        rng = DetRng(derive_seed(seed, "policy-init"))

        def init(rows: int, cols: int, fan_in: int) -> np.ndarray:
            scale = 1.0 / np.sqrt(fan_in)
            flat = [(rng.next_u64() / 2.0**64 - 0.5) * 2.0 * scale
                    for _ in range(rows * cols)]
            return np.array(flat, dtype=np.float64).reshape(rows, cols)

        self.w1 = init(n_hidden, n_in, n_in)
        self.b1 = np.zeros(n_hidden, dtype=np.float64)
        self.w2 = init(n_out, n_hidden, n_hidden)
        self.b2 = np.zeros(n_out, dtype=np.float64)
        self.target_statement = target_statement
        self.activation_store = np.empty((0, n_hidden), dtype=np.float64)

    @property
    def shape(self) -> tuple[int, int, int]:
        return (self.w1.shape[1], self.w1.shape[0], self.w2.shape[0])

    # -- forward -----------------------------------------------------------

    def hidden(self, x: np.ndarray) -> np.ndarray:
        return np.tanh(self.w1 @ x + self.b1)

    def predict(self, x: np.ndarray) -> np.ndarray:
        z = self.w2 @ self.hidden(x) + self.b2
        z = z - z.max()
        e = np.exp(z)
        return e / e.sum()

    def act(self, x: np.ndarray) -> int:
        return int(np.argmax(self.predict(x)))

    # -- training ----------------------------------------------------------

    def _forward_batch(self, xs: np.ndarray):
        a1 = np.tanh(self.w1 @ xs.T + self.b1[:, None])
        z2 = self.w2 @ a1 + self.b2[:, None]
        z2 = z2 - z2.max(axis=0, keepdims=True)
        e = np.exp(z2)
        probs = e / e.sum(axis=0, keepdims=True)
        return a1, probs

    def loss(self, xs: np.ndarray, ys: np.ndarray) -> float:
        _, probs = self._forward_batch(xs)
        picked = probs[ys, np.arange(len(ys))]
        return float(-np.log(np.maximum(picked, 1e-300)).mean())

    def gradients(self, xs: np.ndarray, ys: np.ndarray):
        """Mean cross-entropy gradients for a batch, derived by hand."""
        n = len(ys)
        a1, probs = self._forward_batch(xs)
        dz2 = probs.copy()
        dz2[ys, np.arange(n)] -= 1.0
        dz2 /= n
        dw2 = dz2 @ a1.T
        db2 = dz2.sum(axis=1)
        da1 = self.w2.T @ dz2
        dz1 = (1.0 - a1 * a1) * da1
        dw1 = dz1 @ xs
        db1 = dz1.sum(axis=1)
        return dw1, db1, dw2, db2

    def sgd_step(self, xs: np.ndarray, ys: np.ndarray, lr: float) -> None:
        dw1, db1, dw2, db2 = self.gradients(xs, ys)
        self.w1 -= lr * dw1
        self.b1 -= lr * db1
        self.w2 -= lr * dw2
        self.b2 -= lr * db2

    # -- serialization -------------------------------------------------------

    def text(self) -> str:
        n_in, n_hidden, n_out = self.shape

        def rows(mat: np.ndarray):
            for row in np.atleast_2d(mat):
                yield " ".join(f"{v:.9g}" for v in row)

        lines = [f"layers\t{n_in}\t{n_hidden}\t{n_out}",
                 f"target\t{self.target_statement}"]
        for name, mat in (("w1", self.w1), ("b1", self.b1),
                          ("w2", self.w2), ("b2", self.b2)):
            lines.append(name)
            lines.extend(rows(mat))
        lines.append(f"store\t{len(self.activation_store)}")
        lines.extend(rows(self.activation_store))
        return "".join(line + "\n" for line in lines)


def parse_policy(text: str) -> PolicyNet:
    lines = [l for l in text.splitlines() if l.strip()]
    head = lines[0].split("\t")
    if head[0] != "layers" or len(head) != 4:
        raise MatchRuleError("policy", "missing layers header")
    n_in, n_hidden, n_out = (int(v) for v in head[1:])
    target = int(lines[1].split("\t")[1])
    net = PolicyNet(n_in, n_hidden, n_out, target_statement=target)
    pos = 2

    def take(rows: int, cols: int) -> np.ndarray:
        nonlocal pos
        out = np.array([[float(v) for v in lines[pos + r].split(" ")]
                        for r in range(rows)], dtype=np.float64)
        pos += rows
        return out.reshape(rows, cols)

    for name, rows_, cols in (("w1", n_hidden, n_in), ("b1", 1, n_hidden),
                              ("w2", n_out, n_hidden), ("b2", 1, n_out)):
        if lines[pos] != name:
            raise MatchRuleError("policy", f"expected {name} block")
        pos += 1
        mat = take(rows_, cols)
        setattr(net, name, mat[0] if name.startswith("b") else mat)
    count = int(lines[pos].split("\t")[1])
    pos += 1
    net.activation_store = (take(count, n_hidden) if count
                            else np.empty((0, n_hidden), dtype=np.float64))
    return net


# --- training ------------------------------------------------------------------


def _training_set(traces, target_statement: int, level):
    xs, ys = [], []
    for t in traces:
        if target_statement not in t.covered_ids():
            continue
        for i in range(t.length):
            xs.append(featurize(t.pre_frame(i), level))
            ys.append(int(t.actions[i]))
    if not xs:
        raise UntrainableTargetError(
            f"no trace covers statement {target_statement}")
    return np.array(xs), np.array(ys, dtype=np.intp)


def train_policy(traces, target_statement: int,
                 hyper: TrainConfig | None = None,
                 level: LevelLayout | None = None) -> PolicyNet:
    """Behavioral cloning on the traces that cover the target statement."""
    cfg = hyper or TrainConfig()
    lvl = level if level is not None else default_level()
    xs, ys = _training_set(traces, target_statement, lvl)
    net = PolicyNet(FEATURE_COUNT, cfg.hidden, len(Action), seed=cfg.seed,
                    target_statement=target_statement)
    rng = DetRng(derive_seed(cfg.seed, "policy-batches"))
    initial = net.loss(xs, ys)
    n = len(ys)
    for _ in range(cfg.epochs):
        order = rng.shuffled(list(range(n)))
        for at in range(0, n, cfg.batch_size):
            batch = order[at:at + cfg.batch_size]
            net.sgd_step(xs[batch], ys[batch], cfg.learning_rate)
    final = net.loss(xs, ys)
    if final > initial:
        raise UntrainableTargetError(
            f"training diverged: loss {initial:.4f} -> {final:.4f}")
    # store rows through the same code path surprise() queries with, so a
    # training frame finds itself at distance exactly zero
    net.activation_store = np.array([net.hidden(x) for x in xs])
    return net


def surprise(net: PolicyNet, frame: Frame,
             level: LevelLayout | None = None) -> float:
    """Euclidean distance from the frame's hidden activation to the store."""
    if len(net.activation_store) == 0:
        raise MatchRuleError("policy", "activation store is empty")
    a = net.hidden(featurize(frame, level))
    gaps = net.activation_store - a
    return float(np.sqrt((gaps * gaps).sum(axis=1)).min())


# --- dynamic test execution -------------------------------------------------------


@dataclass(frozen=True)
class DynamicVerdict:
    target_reached: bool
    max_surprise: float
    surprise_alarm: bool
    assertion_verdicts: tuple[asrt.Verdict, ...]
    trace: Trace


def run_dynamic_test(net: PolicyNet, script: RuleScript, seed: int,
                     budget: int, sa_threshold: float,
                     assertions=(), level: LevelLayout | None = None) -> DynamicVerdict:
    """Argmax rollout against a script until target, game over, or budget."""
    if budget <= 0:
        raise ValueError("budget must be > 0")
    lvl = level if level is not None else default_level()
    state = new_world(lvl, seed)
    actions: list[Action] = []
    max_surprise = 0.0
    reached = False
    for _ in range(budget):
        frame = state.frame()
        if frame.game_over:
            break
        max_surprise = max(max_surprise, surprise(net, frame, lvl))
        action = Action(net.act(featurize(frame, lvl)))
        actions.append(action)
        state, covered = step(script, state, action)
        if net.target_statement in covered:
            reached = True
            break
    trace = replay(script, seed, actions, lvl)
    verdicts = tuple(asrt.evaluate(a, trace, lenient=True) for a in assertions)
    return DynamicVerdict(reached, max_surprise,
                          max_surprise > sa_threshold, verdicts, trace)
