"""Shared generators for randomized small test instances."""

from memsel.chain import BoundaryMode, StateAlphabet, Trajectory, count_transitions


def random_instance(rng, m=None, j=None, h=None, max_len=6,
                    mode=BoundaryMode.PADDED):
    """A small random dataset: (alphabet, trajectories, counts).

    Sizes follow the oracle-suite envelope: M <= 3, J <= 4, short
    trajectories so row counts stay small.
    """
    m = int(rng.integers(2, 4)) if m is None else m
    j = int(rng.integers(2, 5)) if j is None else j
    h = int(rng.integers(0, 2)) if h is None else h
    alphabet = StateAlphabet.of_size(m)
    trajs = [
        Trajectory(f"t{i}", tuple(rng.integers(0, m, int(rng.integers(1, max_len + 1))).tolist()))
        for i in range(j)
    ]
    tc = count_transitions(trajs, h, alphabet, mode)
    return alphabet, trajs, tc


def random_count_table(rng, m=2, max_count=6):
    """A single-context count table with random nonzero counts."""
    from memsel.chain import Context, CountTable

    counts = rng.integers(0, max_count + 1, m)
    if not counts.any():
        counts[int(rng.integers(0, m))] = 1
    alphabet = StateAlphabet.of_size(m)
    return CountTable(0, alphabet, {Context(()): counts}, BoundaryMode.PADDED)
