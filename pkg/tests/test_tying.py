"""Context tying and the jagged free-throw model."""

import numpy as np
import pytest

from memsel.chain import (
    START,
    BoundaryMode,
    Context,
    StateAlphabet,
    Trajectory,
    count_transitions,
)
from memsel.criteria import CRITERIA, criterion_values
from memsel.tying import TieMap, jagged_free_throw_map, tie_counts, tied_param_count

AB2 = StateAlphabet(("0", "1"))


def binary_games(rng, n_games=25, p=0.6):
    out = []
    for i in range(n_games):
        length = int(rng.integers(1, 9))
        out.append(Trajectory(f"g{i}", tuple((rng.random(length) < p).astype(int).tolist())))
    return out


def test_tiemap_validation():
    with pytest.raises(ValueError):
        TieMap(1, 0, {})
    with pytest.raises(ValueError):
        TieMap(1, 2, {Context((0,)): 5})
    with pytest.raises(ValueError):
        TieMap(1, 2, {Context((0, 1)): 0})  # wrong context length
    with pytest.raises(ValueError):
        TieMap(1, 2, {}, default_class=7)
    tm = TieMap(1, 2, {Context((0,)): 0}, default_class=1)
    assert tm.class_of(Context((1,))) == 1
    tm2 = TieMap(1, 2, {Context((0,)): 0})
    with pytest.raises(ValueError):
        tm2.class_of(Context((1,)))


def test_identity_map_preserves_all_criteria_exactly():
    rng = np.random.default_rng(0)
    trajs = binary_games(rng)
    tc = count_transitions(trajs, 1, AB2)
    identity = TieMap(1, 3, {
        Context((START,)): 0, Context((0,)): 1, Context((1,)): 2})
    tied = tie_counts(tc, identity)
    a = criterion_values(tc, k_params=3)
    b = criterion_values(tied, k_params=3)
    for name in CRITERIA:
        assert a[name] == b[name]


def test_constant_map_equals_h0_counts():
    rng = np.random.default_rng(1)
    trajs = binary_games(rng)
    tc1 = count_transitions(trajs, 1, AB2)
    pooled = tie_counts(tc1, TieMap(1, 1, {}, default_class=0))
    tc0 = count_transitions(trajs, 0, AB2)
    assert pooled.total.n_contexts == 1
    (pooled_row,) = pooled.total.rows.values()
    (h0_row,) = tc0.total.rows.values()
    assert np.array_equal(pooled_row, h0_row)
    a = criterion_values(pooled, k_params=1)
    b = criterion_values(tc0, k_params=1)
    for name in CRITERIA:
        assert a[name] == pytest.approx(b[name], rel=1e-12)


def test_class_count_conservation():
    rng = np.random.default_rng(2)
    trajs = binary_games(rng)
    tc = count_transitions(trajs, 1, AB2)
    tied = tie_counts(tc, jagged_free_throw_map(AB2))
    tied.validate()
    assert tied.total.total_transitions() == tc.total.total_transitions()


def test_h_mismatch_rejected():
    rng = np.random.default_rng(3)
    tc = count_transitions(binary_games(rng), 2, AB2)
    with pytest.raises(ValueError):
        tie_counts(tc, jagged_free_throw_map(AB2))


class TestJaggedMap:
    def test_padded_classes(self):
        tm = jagged_free_throw_map(AB2, BoundaryMode.PADDED)
        assert tm.n_classes == 2
        assert tm.class_of(Context((0,))) == 0       # after a miss
        assert tm.class_of(Context((1,))) == 1       # after a hit
        assert tm.class_of(Context((START,))) == 1   # first shot of a game
        assert tied_param_count(tm, 2) == 2

    def test_truncated_classes(self):
        tm = jagged_free_throw_map(AB2, BoundaryMode.TRUNCATED)
        assert tm.class_of(Context((0,))) == 0
        assert tm.class_of(Context((1,))) == 1
        with pytest.raises(ValueError):
            tm.class_of(Context((START,)))

    def test_first_shot_pools_with_after_hit(self):
        # games starting with a make and a miss: the first-shot counts land
        # in class 1 together with the after-hit counts
        trajs = [Trajectory("a", (1, 1)), Trajectory("b", (0, 0))]
        tc = count_transitions(trajs, 1, AB2)
        tied = tie_counts(tc, jagged_free_throw_map(AB2))
        # class 1 rows: two first shots (one make, one miss) + after-hit make
        assert tied.total.rows[1].tolist() == [1, 2]
        assert tied.total.rows[0].tolist() == [1, 0]

    def test_needs_binary_alphabet(self):
        with pytest.raises(ValueError):
            jagged_free_throw_map(StateAlphabet.of_size(3))

    def test_miss_state_override(self):
        tm = jagged_free_throw_map(AB2, miss_state=1)
        assert tm.class_of(Context((1,))) == 0
        assert tm.class_of(Context((0,))) == 1
