"""Periodic synchronous message exchange over the undirected CIG graph."""

from collections import deque
from dataclasses import dataclass

import numpy as np
from scipy.sparse.csgraph import connected_components


class GraphError(ValueError):
    pass


@dataclass(frozen=True)
class Message:
    sender: int
    omega_hat: float
    q_hat: float
    x: float
    round: int


class CommGraph:
    """Unit-weight undirected communication graph over CIG indices ``0..c-1``."""

    def __init__(self, adjacency):
        self.adjacency = np.array(adjacency, dtype=float)
        validate_graph(self)

    @classmethod
    def from_edges(cls, n, edges):
        A = np.zeros((n, n))
        for i, j in edges:
            A[i, j] = A[j, i] = 1.0
        return cls(A)

    @property
    def size(self):
        return self.adjacency.shape[0]

    def neighbors(self, i):
        return [int(j) for j in np.flatnonzero(self.adjacency[i])]

    def degree(self):
        return self.adjacency.sum(axis=1)

    @property
    def max_degree(self):
        return int(self.degree().max())


def validate_graph(g):
    A = g.adjacency if isinstance(g, CommGraph) else np.asarray(g, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise GraphError(f"adjacency must be square, got shape {A.shape}")
    if not np.array_equal(A, A.T):
        raise GraphError("communication graph is not symmetric")
    if np.any(np.diag(A) != 0):
        raise GraphError("communication graph has self-loops")
    if not np.all((A == 0) | (A == 1)):
        raise GraphError("edge weights must be 0 or 1")
    n_comp, labels = connected_components(A, directed=False)
    if n_comp > 1:
        comps = [sorted(int(i) + 1 for i in np.flatnonzero(labels == k)) for k in range(n_comp)]
        raise GraphError(f"communication graph is disconnected; components (1-based CIG ids): {comps}")
    return True


def broadcast_round(graph, k1, messages):
    """Deliver one round: every CIG receives exactly its neighbours' messages.

    ``messages`` is indexed by sender. Returns ``inbox[i]`` lists ordered by
    sender id.
    """
    if len(messages) != graph.size:
        raise RuntimeError(f"round {k1}: expected {graph.size} messages, got {len(messages)}")
    for i, msg in enumerate(messages):
        if msg is None or msg.sender != i or msg.round != k1:
            raise RuntimeError(f"round {k1}: missing or stale message for CIG {i + 1}")
    return [[messages[j] for j in graph.neighbors(i)] for i in range(graph.size)]


class Channel:
    """Optional lossy/delayed transport wrapped around ``broadcast_round``.

    With the defaults it is exactly ``broadcast_round``. ``drop_prob`` drops
    each directed delivery independently (seeded); ``delay_rounds`` holds a
    delivery back by a fixed number of rounds.
    """

    def __init__(self, graph, drop_prob=0.0, delay_rounds=0, seed=0):
        self.graph = graph
        self.drop_prob = drop_prob
        self.delay_rounds = int(delay_rounds)
        self.rng = np.random.default_rng(seed)
        self._pipe = deque()

    def exchange(self, k1, messages):
        inbox = broadcast_round(self.graph, k1, messages)
        if self.drop_prob > 0:
            inbox = [[m for m in box if self.rng.random() >= self.drop_prob] for box in inbox]
        if self.delay_rounds == 0:
            return inbox
        self._pipe.append(inbox)
        if len(self._pipe) > self.delay_rounds:
            return self._pipe.popleft()
        return [[] for _ in range(self.graph.size)]
