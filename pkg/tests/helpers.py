"""Constructors shared across test modules."""
from __future__ import annotations

import datetime

import numpy as np

from rewire_kit.dataset import Event, build_dataset
from rewire_kit.netbuild import MemberGraph


def graph_from_dense(adj: np.ndarray) -> MemberGraph:
    """MemberGraph from a dense symmetric adjacency with zero diagonal."""
    n = adj.shape[0]
    iu, iv = np.triu_indices(n, k=1)
    mask = adj[iu, iv] > 0
    return MemberGraph(
        nodes=tuple(f"n{i}" for i in range(n)),
        u_idx=iu[mask].astype(np.int64),
        v_idx=iv[mask].astype(np.int64),
        weights=adj[iu, iv][mask].astype(np.float64),
    )


def graph_from_edges(edges) -> MemberGraph:
    """MemberGraph from (u, v, w) triples over string node names."""
    nodes = tuple(sorted({u for u, _, _ in edges} | {v for _, v, _ in edges}))
    pos = {n: i for i, n in enumerate(nodes)}
    u_idx, v_idx, w = [], [], []
    for u, v, weight in edges:
        i, j = pos[u], pos[v]
        if i > j:
            i, j = j, i
        u_idx.append(i)
        v_idx.append(j)
        w.append(weight)
    return MemberGraph(
        nodes=nodes,
        u_idx=np.asarray(u_idx, dtype=np.int64),
        v_idx=np.asarray(v_idx, dtype=np.int64),
        weights=np.asarray(w, dtype=np.float64),
    )


def two_triangles() -> MemberGraph:
    """Two disjoint unit-weight triangles; optimal Q is exactly 0.5."""
    return graph_from_edges(
        [("a", "b", 1.0), ("a", "c", 1.0), ("b", "c", 1.0),
         ("d", "e", 1.0), ("d", "f", 1.0), ("e", "f", 1.0)]
    )


def complete_graph(n: int) -> MemberGraph:
    adj = np.ones((n, n)) - np.eye(n)
    return graph_from_dense(adj)


def random_dense_adjacency(rng: np.random.Generator, n: int, p: float) -> np.ndarray:
    """Random weighted undirected adjacency with at least one edge."""
    while True:
        mask = np.triu(rng.random((n, n)) < p, k=1)
        if mask.any():
            break
    w = np.where(mask, rng.uniform(0.1, 1.0, (n, n)), 0.0)
    return w + w.T


def coattendance_dataset():
    """Small two-group corpus spanning 2011-2012 with hand-checkable slices.

    2011: alice and bob co-attend e1/e2 in g1; carol attends e3 in g2 and
    e2 in g1. 2012: alice moves to g2 alongside carol; bob stays in g1.
    """
    d0 = datetime.date(2011, 3, 1)
    events = [
        Event(id="e1", group="g1", date=d0),
        Event(id="e2", group="g1", date=d0 + datetime.timedelta(days=30)),
        Event(id="e3", group="g2", date=d0 + datetime.timedelta(days=60)),
        Event(id="e4", group="g2", date=datetime.date(2012, 2, 1)),
        Event(id="e5", group="g2", date=datetime.date(2012, 3, 1)),
        Event(id="e6", group="g1", date=datetime.date(2012, 4, 1)),
    ]
    rsvps = [
        ("alice", "e1"), ("alice", "e2"),
        ("bob", "e1"), ("bob", "e2"),
        ("carol", "e2"), ("carol", "e3"),
        ("alice", "e4"), ("alice", "e5"),
        ("carol", "e4"), ("carol", "e5"),
        ("bob", "e6"),
    ]
    memberships = [
        ("alice", "g1"), ("alice", "g2"),
        ("bob", "g1"),
        ("carol", "g1"), ("carol", "g2"),
    ]
    member_interests = [
        ("alice", "python"), ("alice", "hiking"),
        ("bob", "python"),
        ("carol", "photography"),
    ]
    group_topics = [("g1", "tech"), ("g2", "outdoors")]
    return build_dataset(
        events=events,
        rsvps=rsvps,
        memberships=memberships,
        member_interests=member_interests,
        group_topics=group_topics,
    )
