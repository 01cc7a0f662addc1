"""Reference computations written independently of the package internals."""

import itertools
import math

import numpy as np


def capacity_scalar(d_m, f_hz, tx_dbm, noise_dbm, bandwidth, gap):
    """Scalar Friis + Shannon chain, one link at a time."""
    d = max(d_m, 1.0)
    fspl = 20 * math.log10(d) + 20 * math.log10(f_hz) - 147.55
    snr = 10 ** ((tx_dbm - fspl - noise_dbm) / 10)
    return bandwidth * math.log2(1 + snr / gap)


def objective_by_loops(x, pairs, caps, num_nodes, alpha, beta):
    """-alpha * T + beta * F with T and F summed link by link."""
    throughput = sum(c for c, b in zip(caps, x) if b)
    loads = [0.0] * num_nodes
    for (i, j), c, b in zip(pairs, caps, x):
        if b:
            loads[i] += c
            loads[j] += c
    fragility = sum(v * v for v in loads)
    return -alpha * throughput + beta * fragility, throughput, fragility


def qubo_energy_loops(x, q):
    n = len(x)
    return sum(q[i][j] * x[i] * x[j] for i in range(n) for j in range(n))


def exhaustive_minimum(q):
    """Minimum over all states, ties to the smallest little-endian index."""
    n = len(q)
    best, best_x = math.inf, None
    for idx in range(2 ** n):
        x = [(idx >> b) & 1 for b in range(n)]
        e = qubo_energy_loops(x, q)
        if e < best - 1e-12:
            best, best_x = e, x
    return best_x, best


def betweenness_by_paths(adj_pairs, n):
    """Count shortest paths explicitly for every ordered pair (small graphs)."""
    adj = {v: set() for v in range(n)}
    for i, j in adj_pairs:
        adj[i].add(j)
        adj[j].add(i)

    def all_shortest(s, t):
        frontier, paths, seen = [[s]], [], {s}
        while frontier and not paths:
            nxt, layer = [], set()
            for p in frontier:
                for w in adj[p[-1]]:
                    if w == t:
                        paths.append(p + [w])
                    elif w not in seen:
                        nxt.append(p + [w])
                        layer.add(w)
            seen |= layer
            frontier = nxt
        return paths

    score = [0.0] * n
    for s, t in itertools.combinations(range(n), 2):
        paths = all_shortest(s, t)
        if not paths:
            continue
        for v in range(n):
            if v in (s, t):
                continue
            score[v] += sum(v in p for p in paths) / len(paths)
    norm = (n - 1) * (n - 2) / 2
    return np.array(score) / norm if n > 2 else np.zeros(n)
