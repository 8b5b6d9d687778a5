"""Multi-head GCN over the fact connection graph with a gated scoring head.

Node states at layer k are ``concat_i ReLU(Lam @ X_{k-1} @ W_i^k)`` with
``Lam = D^-1/2 A D^-1/2``.  The hypothesis row of the last layer is fused
with the sequence vector through a sigmoid gate, projected by ``W_o`` and
summed to a scalar score.  Everything is float64 and has a hand-written
backward pass.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import AsymmetricInput, EmptyText, InputError, KinkTooClose, NonFiniteLoss, ShapeMismatch, ZeroDegree

MAGIC = b"AMRSG1"


@dataclass
class ReasonerParams:
    W: list[list[np.ndarray]]  # K layers x h heads, each d x d/h
    w_lambda: np.ndarray  # (2d,), applied to [x_cls : x_H]
    b_lambda: np.ndarray  # (1,)
    W_o: np.ndarray  # d x d
    b_o: np.ndarray  # (d,)

    @property
    def K(self) -> int:
        return len(self.W)

    @property
    def h(self) -> int:
        return len(self.W[0])

    @property
    def d(self) -> int:
        return self.W_o.shape[0]

    @classmethod
    def init(cls, K: int = 2, h: int = 16, d: int = 64, seed: int = 0) -> "ReasonerParams":
        """Uniform in [-1/sqrt(d), 1/sqrt(d)] from a seeded generator."""
        _check_dims(K, h, d)
        rng = np.random.default_rng(seed)
        bound = 1.0 / np.sqrt(d)
        u = lambda *shape: rng.uniform(-bound, bound, shape)
        W = [[u(d, d // h) for _ in range(h)] for _ in range(K)]
        return cls(W, u(2 * d), u(1), u(d, d), u(d))

    @classmethod
    def zeros(cls, K: int = 2, h: int = 16, d: int = 64) -> "ReasonerParams":
        _check_dims(K, h, d)
        W = [[np.zeros((d, d // h)) for _ in range(h)] for _ in range(K)]
        return cls(W, np.zeros(2 * d), np.zeros(1), np.zeros((d, d)), np.zeros(d))

    def arrays(self) -> list[np.ndarray]:
        """All parameter arrays in declaration order (views, not copies)."""
        return [w for layer in self.W for w in layer] + [self.w_lambda, self.b_lambda, self.W_o, self.b_o]

    def copy(self) -> "ReasonerParams":
        return ReasonerParams([[w.copy() for w in layer] for layer in self.W], self.w_lambda.copy(),
                              self.b_lambda.copy(), self.W_o.copy(), self.b_o.copy())

    def to_bytes(self) -> bytes:
        header = MAGIC + struct.pack("<III", self.K, self.h, self.d)
        w_lambda = self.w_lambda.reshape(1, -1)
        body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes()
                        for a in [w for layer in self.W for w in layer] + [w_lambda, self.b_lambda, self.W_o, self.b_o])
        return header + body

    @classmethod
    def from_bytes(cls, data: bytes) -> "ReasonerParams":
        if data[:6] != MAGIC:
            raise InputError("not a reasoner parameter file (bad magic)")
        K, h, d = struct.unpack("<III", data[6:18])
        _check_dims(K, h, d)
        offset = 18

        def take(*shape):
            nonlocal offset
            count = int(np.prod(shape))
            end = offset + 8 * count
            if end > len(data):
                raise InputError("truncated reasoner parameter file")
            arr = np.frombuffer(data[offset:end], dtype="<f8").astype(np.float64).reshape(shape)
            offset = end
            return arr

        W = [[take(d, d // h) for _ in range(h)] for _ in range(K)]
        params = cls(W, take(1, 2 * d).reshape(-1), take(1), take(d, d), take(d))
        if offset != len(data):
            raise InputError("trailing bytes in reasoner parameter file")
        return params

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_bytes())

    @classmethod
    def load(cls, path) -> "ReasonerParams":
        with open(path, "rb") as fh:
            return cls.from_bytes(fh.read())


def _check_dims(K, h, d):
    if K < 1 or h < 1 or d < 1 or d % h:
        raise InputError(f"invalid reasoner dimensions K={K}, h={h}, d={d} (need d % h == 0)")


@dataclass
class Instance:
    """One question-choice pair as the reasoner sees it."""
    features: np.ndarray  # (n+1) x d, row 0 is the hypothesis
    adjacency: np.ndarray  # (n+1) x (n+1) binary, symmetric, unit diagonal
    x_cls: np.ndarray  # (d,)


@dataclass(frozen=True)
class ChoiceScores:
    raw: np.ndarray
    probs: np.ndarray


def pool_node_features(provider, hypothesis_text: str, fact_texts: Sequence[str]) -> np.ndarray:
    """Row 0 is the max-pooled hypothesis, row i the max-pooled i-th fact."""
    rows = []
    for text in [hypothesis_text, *fact_texts]:
        if not text or not text.strip():
            raise EmptyText("cannot pool an empty text")
        rows.append(provider.embed(text).max(axis=0))
    return np.stack(rows)


def normalize_adjacency(A: np.ndarray) -> np.ndarray:
    A = np.asarray(A, dtype=np.float64)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ShapeMismatch(f"adjacency must be square, got {A.shape}")
    if not np.array_equal(A, A.T):
        raise AsymmetricInput("adjacency matrix is not symmetric")
    deg = A.sum(axis=1)
    if np.any(deg <= 0):
        raise ZeroDegree("a node has zero degree; the adjacency needs a unit diagonal")
    inv_sqrt = 1.0 / np.sqrt(deg)
    return A * inv_sqrt[:, None] * inv_sqrt[None, :]


def _layers(X0, lam, params):
    """Forward through the GCN keeping what the backward pass needs."""
    X0 = np.asarray(X0, dtype=np.float64)
    if X0.ndim != 2 or X0.shape[1] != params.d or lam.shape != (X0.shape[0], X0.shape[0]):
        raise ShapeMismatch(f"features {X0.shape} / adjacency {lam.shape} do not fit d={params.d}")
    states = [X0]
    pre = []
    for layer in params.W:
        LX = lam @ states[-1]
        P = [LX @ w for w in layer]
        pre.append(P)
        states.append(np.concatenate([np.maximum(p, 0.0) for p in P], axis=1))
    return states, pre


def gcn_forward(X0: np.ndarray, lam: np.ndarray, params: ReasonerParams) -> np.ndarray:
    return _layers(X0, lam, params)[0][-1]


def _sigmoid(a):
    return 0.5 * (1.0 + np.tanh(0.5 * a))


def _gate(x_cls, x_h, params):
    a = params.w_lambda @ np.concatenate([x_cls, x_h]) + params.b_lambda[0]
    return float(_sigmoid(a))


def gate_and_score(x_cls: np.ndarray, x_h: np.ndarray, params: ReasonerParams) -> float:
    x_cls = np.asarray(x_cls, dtype=np.float64)
    x_h = np.asarray(x_h, dtype=np.float64)
    if x_cls.shape != (params.d,) or x_h.shape != (params.d,):
        raise ShapeMismatch(f"gate inputs must have length {params.d}")
    lam = _gate(x_cls, x_h, params)
    z = lam * x_h + (1.0 - lam) * x_cls
    return float(np.sum(params.W_o @ z + params.b_o))


def _trace(inst: Instance, params: ReasonerParams):
    """Forward pass of one pair; returns (score without output bias, cache)."""
    lam_adj = normalize_adjacency(inst.adjacency)
    states, pre = _layers(inst.features, lam_adj, params)
    x_h = states[-1][0]
    x_cls = np.asarray(inst.x_cls, dtype=np.float64)
    if x_cls.shape != (params.d,):
        raise ShapeMismatch(f"x_cls must have length {params.d}")
    gate = _gate(x_cls, x_h, params)
    z = gate * x_h + (1.0 - gate) * x_cls
    return float(np.sum(params.W_o @ z)), (lam_adj, states, pre, x_cls, gate, z)


def score_instance(inst: Instance, params: ReasonerParams) -> float:
    lam = normalize_adjacency(inst.adjacency)
    x_k = gcn_forward(inst.features, lam, params)
    return gate_and_score(inst.x_cls, x_k[0], params)


def softmax(raw) -> np.ndarray:
    raw = np.asarray(raw, dtype=np.float64)
    e = np.exp(raw - raw.max())
    return e / e.sum()


def score_choices(instances: Sequence[Instance], params: ReasonerParams) -> ChoiceScores:
    if len(instances) < 2:
        raise InputError("need at least two choices to score")
    raw = np.array([score_instance(inst, params) for inst in instances])
    return ChoiceScores(raw, softmax(raw))


def cross_entropy(probs: np.ndarray, label: int) -> float:
    return float(-np.log(probs[label]))


def _loss_from_unbiased(s: np.ndarray, label: int) -> float:
    m = s.max()
    loss = float(m + np.log(np.exp(s - m).sum()) - s[label])
    if not np.isfinite(loss):
        raise NonFiniteLoss(f"loss is {loss}")
    return loss


def choice_loss(instances: Sequence[Instance], label: int, params: ReasonerParams) -> float:
    """Cross-entropy of the choice softmax against ``label``.

    Computed as a log-sum-exp over bias-free scores so that the output bias,
    which every choice shares, cancels exactly rather than up to rounding.
    """
    return _loss_from_unbiased(np.array([_trace(inst, params)[0] for inst in instances]), label)


# -- backward ----------------------------------------------------------------

def _accumulate_grads(cache, params: ReasonerParams, g_score: float, grads: ReasonerParams):
    """Add g_score * d(score)/d(params) into ``grads``."""
    lam_adj, states, pre, x_cls, gate, z = cache
    x_h = states[-1][0]
    d = params.d

    grads.b_o += g_score
    grads.W_o += g_score * np.outer(np.ones(d), z)
    g_z = g_score * params.W_o.sum(axis=0)
    g_gate = float(g_z @ (x_h - x_cls))
    g_a = g_gate * gate * (1.0 - gate)
    grads.w_lambda += g_a * np.concatenate([x_cls, x_h])
    grads.b_lambda += g_a
    g_xh = gate * g_z + g_a * params.w_lambda[d:]

    g_state = np.zeros_like(states[-1])
    g_state[0] = g_xh
    dh = d // params.h
    for k in range(params.K - 1, -1, -1):
        LX = lam_adj @ states[k]
        g_prev = np.zeros_like(states[k])
        for i, w in enumerate(params.W[k]):
            G = g_state[:, i * dh:(i + 1) * dh] * (pre[k][i] > 0)
            grads.W[k][i] += LX.T @ G
            g_prev += lam_adj.T @ (G @ w.T)
        g_state = g_prev


def loss_and_grads(instances: Sequence[Instance], label: int, params: ReasonerParams):
    """Cross-entropy over the choices and its gradient w.r.t. every parameter."""
    if len(instances) < 2:
        raise InputError("need at least two choices to score")
    traced = [_trace(inst, params) for inst in instances]
    s = np.array([t[0] for t in traced])
    loss = _loss_from_unbiased(s, label)
    g_raw = softmax(s)
    g_raw[label] -= 1.0
    grads = ReasonerParams.zeros(params.K, params.h, params.d)
    for (_, cache), g in zip(traced, g_raw):
        _accumulate_grads(cache, params, float(g), grads)
    return loss, grads


def min_preactivation_margin(instances: Sequence[Instance], params: ReasonerParams) -> float:
    margin = np.inf
    for inst in instances:
        _, pre = _layers(inst.features, normalize_adjacency(inst.adjacency), params)
        for layer in pre:
            for p in layer:
                margin = min(margin, float(np.abs(p).min()))
    return margin


def backward_and_gradcheck(instances: Sequence[Instance], label: int, params: ReasonerParams,
                           epsilon: float = 1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    Raises :class:`KinkTooClose` when a ReLU pre-activation lies within
    ``10 * epsilon`` of zero; resample the point and retry.
    """
    if not 1e-7 <= epsilon <= 1e-4:
        raise InputError("epsilon must lie in [1e-7, 1e-4]")
    if min_preactivation_margin(instances, params) < 10 * epsilon:
        raise KinkTooClose("a ReLU pre-activation is within 10*epsilon of zero")
    _, grads = loss_and_grads(instances, label, params)

    worst = 0.0
    for arr, g_arr in zip(params.arrays(), grads.arrays()):
        flat, g_flat = arr.reshape(-1), g_arr.reshape(-1)
        for j in range(flat.size):
            orig = flat[j]
            flat[j] = orig + epsilon
            plus = choice_loss(instances, label, params)
            flat[j] = orig - epsilon
            minus = choice_loss(instances, label, params)
            flat[j] = orig
            numeric = (plus - minus) / (2 * epsilon)
            analytic = g_flat[j]
            err = abs(analytic - numeric) / max(abs(analytic), abs(numeric), 1e-8)
            worst = max(worst, err)
    return worst


def random_instance(rng: np.random.Generator, n: int, d: int, p_edge: float = 0.5) -> Instance:
    """Random features in [-1, 1] and a random symmetric unit-diagonal adjacency."""
    A = np.eye(n + 1, dtype=np.int64)
    for i in range(n + 1):
        for j in range(i + 1, n + 1):
            if rng.random() < p_edge:
                A[i, j] = A[j, i] = 1
    return Instance(rng.uniform(-1, 1, (n + 1, d)), A, rng.uniform(-1, 1, d))


def gradcheck_point(seed: int, n: int = 2, d: int = 8, h: int = 2, K: int = 2, J: int = 4,
                    epsilon: float = 1e-5, max_tries: int = 100):
    """A seeded (instances, label, params) triple with no ReLU input near a kink."""
    rng = np.random.default_rng(seed)
    instances = [random_instance(rng, n, d) for _ in range(J)]
    label = int(rng.integers(J))
    for attempt in range(max_tries):
        params = ReasonerParams.init(K, h, d, seed=int(rng.integers(2**32)))
        if min_preactivation_margin(instances, params) >= 10 * epsilon:
            return instances, label, params
    raise KinkTooClose(f"no kink-free parameter sample after {max_tries} tries")
