"""Reference topologies and graph helpers shared by tests and experiments."""

from __future__ import annotations

import math
import random
from collections import deque
from typing import Sequence

from .mac import MacConfig
from .radio import RadioConfig, communication_range, distance

# hosts A and B at the ends, relays 1..6 on a ring: upper branch 1-2-3-6, lower branch 1-4-5-6
HOST_A = 0
HOST_B = 7
FIG2_EDGES = [(0, 1), (1, 2), (2, 3), (3, 6), (1, 4), (4, 5), (5, 6), (6, 7)]

# zero jitter, no interference or carrier sense, no propagation delay
ORACLE_RADIO = RadioConfig(ideal=True, propagation_delay=False)
ORACLE_MAC = MacConfig(max_jitter_ns=0)


def fig2_positions(radius: float = 200.0, host_offset: float = 350.0) -> list[tuple[float, float]]:
    """Relays on a hexagon of side ``radius``; each host only reaches its nearest relay."""

    def at(deg: float) -> tuple[float, float]:
        rad = math.radians(deg)
        return (radius * math.cos(rad), radius * math.sin(rad))

    return [
        (-host_offset, 0.0),
        at(180), at(120), at(60),
        at(-120), at(-60), at(0),
        (host_offset, 0.0),
    ]


def adjacency(positions: Sequence[Sequence[float]], radio: RadioConfig | None = None) -> list[list[int]]:
    reach = communication_range(radio or RadioConfig())
    n = len(positions)
    return [[j for j in range(n) if j != i and distance(positions[i], positions[j]) <= reach] for i in range(n)]


def edges_of(adj: Sequence[Sequence[int]]) -> list[tuple[int, int]]:
    return sorted({(min(i, j), max(i, j)) for i, nbrs in enumerate(adj) for j in nbrs})


def hop_distances(adj: Sequence[Sequence[int]], src: int) -> dict[int, int]:
    dist = {src: 0}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in dist:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def is_connected(adj: Sequence[Sequence[int]]) -> bool:
    return len(hop_distances(adj, 0)) == len(adj) if adj else True


def random_connected_positions(rng: random.Random, n: int, radio: RadioConfig | None = None,
                               max_tries: int = 1000) -> list[tuple[float, float]]:
    """Uniform placement in a square sized for a mean degree around four, redrawn until connected."""
    reach = communication_range(radio or RadioConfig())
    side = reach * math.sqrt(math.pi * n / 4.0)
    for _ in range(max_tries):
        pos = [(rng.uniform(0, side), rng.uniform(0, side)) for _ in range(n)]
        if is_connected(adjacency(pos, radio)):
            return pos
    raise RuntimeError(f"no connected placement of {n} nodes after {max_tries} tries")
