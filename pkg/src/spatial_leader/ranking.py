"""Ground-node random-walk ranking and baseline centralities.

SpatialLeaderRank and LeaderRank share one iteration: a ground node is
linked both ways to every institution with unit weight, every node splits
its current score over its out-edges in proportion to edge weight, and the
process repeats from an all-ones start until the L1 change drops below the
tolerance. The ground node's score is left out of the result.
"""
from __future__ import annotations

import math
from collections.abc import Callable, Mapping
from dataclasses import dataclass

import networkx as nx
import numpy as np
import scipy.sparse as sp

from .errors import InputError
from .leadership import LeadershipNetwork
from .report import Table

GROUND_ID = "__ground__"
DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10000
DEFAULT_DAMPING = 0.85

CENTRALITY_KINDS = ("indegree", "betweenness", "closeness")
ALL_METRICS = ("spatialleaderrank", "leaderrank", "pagerank") + CENTRALITY_KINDS + ("publication",)


@dataclass
class RankingResult:
    metric_name: str
    scores: dict[str, float]
    iterations: int = 0
    converged: bool = True
    residual: float = 0.0

    def ranked(self) -> list[tuple[int, str, float]]:
        """``(rank, id, score)`` by descending score, then ascending id."""
        order = sorted(self.scores.items(), key=lambda kv: (-kv[1], kv[0]))
        return [(i, k, v) for i, (k, v) in enumerate(order, start=1)]

    def top(self, k: int) -> list[str]:
        return [inst for _, inst, _ in self.ranked()[:k]]

    def to_table(self) -> Table:
        comment = (
            f"metric={self.metric_name} iterations={self.iterations} "
            f"converged={str(self.converged).lower()} residual={self.residual:.12g}"
        )
        meta = {
            "metric": self.metric_name,
            "iterations": self.iterations,
            "converged": self.converged,
            "residual": self.residual,
        }
        return Table(("rank", "institution_id", "score"), self.ranked(), [comment], meta)

    def to_csv(self) -> str:
        return self.to_table().to_csv()


@dataclass
class AugmentedNetwork:
    base: LeadershipNetwork
    weight_kind: str
    nodes: tuple[str, ...]  # base nodes sorted, ground last
    edges: dict[tuple[str, str], float]
    ground_id: str = GROUND_ID
    ground_weight: float = 1.0

    @property
    def n_base_edges(self) -> int:
        return len(self.edges) - 2 * (len(self.nodes) - 1)


def augment_ground(
    net: LeadershipNetwork, weight_kind: str = "spatial", ground_weight: float = 1.0
) -> AugmentedNetwork:
    """Add a ground node linked both ways to every node.

    Base edges whose selected weight is zero are not part of the walk.
    ``ground_weight`` other than 1.0 is only meant for scale checks.
    """
    if not net.nodes:
        raise InputError("cannot rank an empty network")
    if GROUND_ID in net.nodes:
        raise InputError(f"institution id {GROUND_ID!r} is reserved for the ground node")
    edges = {k: w for k, w in sorted(net.weights(weight_kind).items()) if w > 0}
    for node in net.nodes:
        edges[node, GROUND_ID] = ground_weight
        edges[GROUND_ID, node] = ground_weight
    return AugmentedNetwork(net, weight_kind, tuple(net.nodes) + (GROUND_ID,), edges, GROUND_ID, ground_weight)


def transition_matrix(nodes, edges: Mapping[tuple[str, str], float]) -> sp.csr_matrix:
    """Sparse ``T`` with ``T[a, b] = w_ba / out_strength(b)`` so ``s' = T @ s``."""
    index = {n: i for i, n in enumerate(nodes)}
    out = np.zeros(len(nodes))
    for (src, _), w in edges.items():
        out[index[src]] += w
    rows, cols, vals = [], [], []
    for (src, dst), w in edges.items():
        b = index[src]
        rows.append(index[dst])
        cols.append(b)
        vals.append(w / out[b])
    n = len(nodes)
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def stationary_scores(
    aug: AugmentedNetwork,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
    metric_name: str = "stationary",
    callback: Callable[[int, np.ndarray], None] | None = None,
) -> RankingResult:
    """Iterate the ground-augmented walk from all ones.

    ``callback(t, scores)`` sees every iterate, ground score last. Hitting
    ``max_iter`` returns the last iterate with ``converged=False``. A
    network without base edges makes the walk periodic (institution <->
    ground only), so it never converges.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    T = transition_matrix(aug.nodes, aug.edges)
    s = np.ones(len(aug.nodes))
    if callback is not None:
        callback(0, s)
    residual = math.inf
    converged = False
    it = 0
    while it < max_iter:
        nxt = T @ s
        residual = float(np.abs(nxt - s).sum())
        s = nxt
        it += 1
        if callback is not None:
            callback(it, s)
        if residual < tol:
            converged = True
            break
    scores = {node: float(v) for node, v in zip(aug.nodes[:-1], s[:-1])}
    return RankingResult(metric_name, scores, it, converged, residual)


def spatial_leader_rank(net: LeadershipNetwork, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER):
    return stationary_scores(augment_ground(net, "spatial"), tol, max_iter, "spatialleaderrank")


def leader_rank(net: LeadershipNetwork, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER):
    return stationary_scores(augment_ground(net, "collab"), tol, max_iter, "leaderrank")


def page_rank(
    net: LeadershipNetwork,
    damping: float = DEFAULT_DAMPING,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> RankingResult:
    """Weighted PageRank on collaboration weights, no ground node.

    Dangling nodes spread their score uniformly over all nodes.
    """
    if not net.nodes:
        raise InputError("cannot rank an empty network")
    if not 0 < damping < 1:
        raise ValueError(f"damping must lie in (0, 1), got {damping}")
    nodes = net.nodes
    n = len(nodes)
    edges = {k: w for k, w in sorted(net.weights("collab").items()) if w > 0}
    T = transition_matrix(nodes, edges)
    dangling = np.asarray(T.sum(axis=0)).ravel() == 0
    x = np.full(n, 1.0 / n)
    residual = math.inf
    converged = False
    it = 0
    while it < max_iter:
        nxt = damping * (T @ x) + (damping * x[dangling].sum() + (1.0 - damping)) / n
        residual = float(np.abs(nxt - x).sum())
        x = nxt
        it += 1
        if residual < tol:
            converged = True
            break
    return RankingResult("pagerank", dict(zip(nodes, map(float, x))), it, converged, residual)


def _digraph(net: LeadershipNetwork) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(net.nodes)
    g.add_edges_from(k for k, w in net.edges.items() if w.collab > 0)
    return g


def centrality(net: LeadershipNetwork, kind: str) -> RankingResult:
    """Unweighted structural baselines.

    ``indegree`` counts distinct in-neighbours, ``betweenness`` is the
    unnormalised directed shortest-path betweenness, ``closeness`` is the
    harmonic in-closeness (unreachable sources add 0).
    """
    if kind not in CENTRALITY_KINDS:
        raise ValueError(f"unknown centrality kind {kind!r}; expected one of {', '.join(CENTRALITY_KINDS)}")
    if not net.nodes:
        raise InputError("cannot rank an empty network")
    g = _digraph(net)
    if kind == "indegree":
        scores = {n: float(g.in_degree(n)) for n in net.nodes}
    elif kind == "betweenness":
        scores = nx.betweenness_centrality(g, normalized=False)
    else:
        scores = nx.harmonic_centrality(g)
    return RankingResult(kind, {n: float(scores[n]) for n in net.nodes})


def publication_ranking(counts: Mapping[str, int], nodes=None) -> RankingResult:
    keys = nodes if nodes is not None else sorted(counts)
    return RankingResult("publication", {k: float(counts.get(k, 0)) for k in keys})


@dataclass
class RankParams:
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER
    damping: float = DEFAULT_DAMPING


def rank(net: LeadershipNetwork, metric: str, params: RankParams | None = None, publication_counts=None):
    """Dispatch by metric name as used on the command line."""
    p = params or RankParams()
    if metric == "spatialleaderrank":
        return spatial_leader_rank(net, p.tol, p.max_iter)
    if metric == "leaderrank":
        return leader_rank(net, p.tol, p.max_iter)
    if metric == "pagerank":
        return page_rank(net, p.damping, p.tol, p.max_iter)
    if metric in CENTRALITY_KINDS:
        return centrality(net, metric)
    if metric == "publication":
        if publication_counts is None:
            raise ValueError("publication ranking needs publication counts")
        return publication_ranking(publication_counts, net.nodes)
    raise ValueError(f"unknown metric {metric!r}")

