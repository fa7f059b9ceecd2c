"""Interference gadget built from a degree-3 graph, and brute-force checks that
its rate-maximizing transmitter subsets are exactly the maximum independent sets.

Every node is an AP-UE pair with signal n*N0.  Adjacent pairs interfere with
power eps*n*N0.  With N0 = B = 1 a subset V' transmits at
    sum_{v in V'} log2(1 + n / (1 + d_v * eps * n))
where d_v is the number of neighbours of v inside V'.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional

import networkx as nx
import numpy as np

from .errors import CapacityError, ValidationError
from .instance import Instance, RssTensor

DEFAULT_N = 10**6
DEFAULT_EPS = 0.999
DEFAULT_N_MIN = 10**5


@dataclass(frozen=True)
class Gadget:
    graph: nx.Graph
    n: float = DEFAULT_N
    epsilon: float = DEFAULT_EPS

    def __post_init__(self):
        g = self.graph
        if any(u == v for u, v in g.edges()):
            raise ValidationError("graph has a self-loop")
        worst = max((d for _, d in g.degree()), default=0)
        if worst > 3:
            raise ValidationError(f"graph has a node of degree {worst} > 3")
        if not (self.n >= 1):
            raise ValidationError("n must be >= 1")
        if not (0 < self.epsilon <= 1):
            raise ValidationError("epsilon must be in (0, 1]")

    @property
    def nodes(self) -> list:
        return sorted(self.graph.nodes())


def subset_sum_rate(gadget: Gadget, subset: Iterable) -> float:
    sub = set(subset)
    missing = sub - set(gadget.graph.nodes())
    if missing:
        raise ValidationError(f"nodes not in graph: {sorted(missing)}")
    n, eps = gadget.n, gadget.epsilon
    total = 0.0
    for v in sorted(sub):
        d = sum(1 for w in gadget.graph.neighbors(v) if w in sub)
        total += math.log2(1.0 + n / (1.0 + d * eps * n))
    return total


def _check_fg(m, n, eps):
    if m not in (1, 2, 3):
        raise ValidationError("m must be 1, 2 or 3")
    if not (n >= 1):
        raise ValidationError("n must be >= 1")
    if not (0 < eps < 1):
        raise ValidationError("eps must be in (0, 1)")


def g(m: int, n: float, eps: float) -> float:
    _check_fg(m, n, eps)
    return (m * eps * n + 1) / ((m * eps + 1) * n + 1)


def f(m: int, n: float, eps: float) -> float:
    _check_fg(m, n, eps)
    return g(m, n, eps) * (((m - 1) * eps + 1) * n + 1) / ((m - 1) * eps * n + 1)


def is_independent(graph: nx.Graph, subset) -> bool:
    sub = set(subset)
    return not any(u in sub and v in sub for u, v in graph.edges())


def drop_increment_check(gadget: Gadget, subset, n_min: Optional[float] = DEFAULT_N_MIN):
    """Node of maximum in-subset degree whose removal raises the subset rate.

    Returns None for an independent subset.  When no such node exists and
    ``gadget.n >= n_min`` a RuntimeError is raised, since the drop is then
    expected to pay off.
    """
    sub = set(subset)
    if is_independent(gadget.graph, sub):
        return None
    deg = {v: sum(1 for w in gadget.graph.neighbors(v) if w in sub) for v in sub}
    top = max(deg.values())
    base = subset_sum_rate(gadget, sub)
    for v in sorted(x for x in sub if deg[x] == top):
        if subset_sum_rate(gadget, sub - {v}) > base:
            return v
    if n_min is not None and gadget.n >= n_min:
        raise RuntimeError(f"no rate-increasing drop for subset {sorted(sub)}")
    return None


def _index_graph(graph: nx.Graph):
    nodes = sorted(graph.nodes())
    pos = {v: i for i, v in enumerate(nodes)}
    nbr = [0] * len(nodes)
    for u, v in graph.edges():
        nbr[pos[u]] |= 1 << pos[v]
        nbr[pos[v]] |= 1 << pos[u]
    return nodes, nbr


def brute_force_mis(graph: nx.Graph, max_nodes: int = 24):
    """All maximum independent sets by branch and bound; returns (size, list of frozensets)."""
    nodes, nbr = _index_graph(graph)
    if len(nodes) > max_nodes:
        raise CapacityError(f"{len(nodes)} nodes exceeds the cap of {max_nodes}")
    best = [0]
    found: list[int] = []

    def search(cand: int, chosen: int, size: int):
        if cand == 0:
            if size > best[0]:
                best[0] = size
                found.clear()
            if size == best[0]:
                found.append(chosen)
            return
        if size + bin(cand).count("1") < best[0]:
            return
        v = (cand & -cand).bit_length() - 1
        bit = 1 << v
        search(cand & ~bit & ~nbr[v], chosen | bit, size + 1)
        # excluding v only makes sense if some neighbour can take its place
        if cand & nbr[v]:
            search(cand & ~bit, chosen, size)

    search((1 << len(nodes)) - 1, 0, 0)
    sets = sorted({frozenset(nodes[i] for i in range(len(nodes)) if m >> i & 1) for m in found},
                  key=lambda s: sorted(s))
    return best[0], sets


def subset_rates(gadget: Gadget, max_nodes: int = 20):
    """Rate of every subset, indexed by bitmask over sorted nodes."""
    nodes, nbr = _index_graph(gadget.graph)
    k = len(nodes)
    if k > max_nodes:
        raise CapacityError(f"{k} nodes exceeds the cap of {max_nodes}")
    masks = np.arange(1 << k, dtype=np.int64)
    bits = (masks[:, None] >> np.arange(k)[None, :]) & 1
    adj = np.array([[(nbr[i] >> j) & 1 for j in range(k)] for i in range(k)], dtype=np.int64)
    deg = bits @ adj.T if k else np.zeros((1, 0), dtype=np.int64)
    per = np.log2(1.0 + gadget.n / (1.0 + deg * gadget.epsilon * gadget.n))
    return nodes, (bits * per).sum(axis=1)


def rate_maximizers(gadget: Gadget, tol: float = 1e-9):
    nodes, rates = subset_rates(gadget)
    top = rates.max()
    idx = np.flatnonzero(rates >= top - tol * max(1.0, abs(top)))
    return float(top), [frozenset(nodes[i] for i in range(len(nodes)) if m >> i & 1) for m in idx]


def verify_reduction(gadget: Gadget) -> bool:
    """True iff the rate-maximizing subsets are exactly the maximum independent sets."""
    _, maximizers = rate_maximizers(gadget)
    _, mis = brute_force_mis(gadget.graph)
    return set(maximizers) == set(mis)


def gadget_instance(gadget: Gadget, noise_power: float = 1.0) -> Instance:
    """One AP, UE and beam per node; node i's AP is AP i and its UE is UE i."""
    nodes = gadget.nodes
    pos = {v: i for i, v in enumerate(nodes)}
    k = len(nodes)
    s = np.zeros((1, k, k))
    for i in range(k):
        s[0, i, i] = gadget.n * noise_power
    for u, v in gadget.graph.edges():
        s[0, pos[u], pos[v]] = s[0, pos[v], pos[u]] = gadget.epsilon * gadget.n * noise_power
    return Instance(RssTensor(s), np.ones(k), noise_power, 1.0, 0.0)


# ---- graph corpora ---------------------------------------------------------

def small_graph_corpus(max_nodes: int = 7) -> list[nx.Graph]:
    """Every connected graph with at most ``max_nodes`` (<= 7) nodes and max degree <= 3."""
    if max_nodes > 7:
        raise ValidationError("the graph atlas only covers up to 7 nodes")
    out = []
    for graph in nx.graph_atlas_g():
        k = graph.number_of_nodes()
        if 1 <= k <= max_nodes and nx.is_connected(graph) and max(dict(graph.degree()).values()) <= 3:
            out.append(graph)
    return out


def random_degree3_graph(rng: np.random.Generator, n_nodes: int, edge_prob: float = 0.5) -> nx.Graph:
    """Random graph on ``n_nodes`` nodes; candidate edges visited in random order
    and kept with probability ``edge_prob`` while both ends have degree < 3."""
    graph = nx.Graph()
    graph.add_nodes_from(range(n_nodes))
    pairs = [(i, j) for i in range(n_nodes) for j in range(i + 1, n_nodes)]
    for k in rng.permutation(len(pairs)):
        i, j = pairs[k]
        if graph.degree(i) < 3 and graph.degree(j) < 3 and rng.random() < edge_prob:
            graph.add_edge(i, j)
    return graph


def parse_edge_list(text: str, n_nodes: Optional[int] = None) -> nx.Graph:
    """Parse "u v" lines (integers, '#' comments).  ``n_nodes`` adds isolated nodes 0..n-1."""
    graph = nx.Graph()
    if n_nodes is not None:
        graph.add_nodes_from(range(n_nodes))
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ValidationError(f"line {lineno}: expected 'u v', got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise ValidationError(f"line {lineno}: node ids must be integers") from None
        if u < 0 or v < 0:
            raise ValidationError(f"line {lineno}: node ids must be >= 0")
        if n_nodes is not None and (u >= n_nodes or v >= n_nodes):
            raise ValidationError(f"line {lineno}: node id out of range 0..{n_nodes - 1}")
        graph.add_edge(u, v)
    return graph
