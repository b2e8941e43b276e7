"""Brute-force references for the lattice Monte Carlo tests."""

import itertools

import numpy as np

from enersim.morph_mc import DEFAULT_INTERACTION, encode_state


def bonds(L):
    """Unordered nearest-neighbour pairs of distinct sites, each once."""
    pairs = set()
    for i, j in itertools.product(range(L), repeat=2):
        for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            a, b = i * L + j, ((i + di) % L) * L + (j + dj) % L
            if a != b:
                pairs.add((min(a, b), max(a, b)))
    return sorted(pairs)


def energy(spins, M=DEFAULT_INTERACTION):
    L = spins.shape[0]
    flat = spins.reshape(-1).astype(int) + 1
    return float(sum(M[flat[a], flat[b]] for a, b in bonds(L)))


def boltzmann(L, counts, beta, M=DEFAULT_INTERACTION):
    """Exact distribution over all arrangements with species counts (A, S, B)."""
    base = [-1] * counts[0] + [0] * counts[1] + [1] * counts[2]
    states = sorted(set(itertools.permutations(base)))
    codes, weights = [], []
    for s in states:
        spins = np.array(s, dtype=np.int8).reshape(L, L)
        codes.append(encode_state(spins))
        weights.append(np.exp(-beta * energy(spins, M)))
    w = np.array(weights)
    return np.array(codes), w / w.sum()


def empirical_tv(trace, codes, probs):
    index = {c: n for n, c in enumerate(codes)}
    counts = np.zeros(len(codes))
    for c, k in zip(*np.unique(trace, return_counts=True)):
        counts[index[int(c)]] += k
    return 0.5 * np.abs(counts / counts.sum() - probs).sum()
