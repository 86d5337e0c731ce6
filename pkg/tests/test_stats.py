import math

import numpy as np
import pytest

from fairhome.errors import UsageError
from fairhome.stats import (
    LOSS,
    TIE,
    WIN,
    _exact_p,
    _midranks,
    _normal_p,
    mann_whitney_u,
    win_tie_loss,
)

import oracle


def test_disjoint_samples_exact_p():
    u, p = mann_whitney_u([1, 2, 3], [4, 5, 6])
    assert u == 0.0
    assert p == pytest.approx(0.1, abs=1e-12)  # 2 / C(6,3)


def test_fully_tied_samples():
    _, p = mann_whitney_u([3, 3, 3], [3, 3, 3])
    assert p == 1.0


def test_empty_sample_rejected():
    with pytest.raises(UsageError):
        mann_whitney_u([], [1.0])


def test_midranks_handle_ties():
    ranks = _midranks(np.array([10.0, 20.0, 20.0, 30.0]))
    assert ranks.tolist() == [1.0, 2.5, 2.5, 4.0]


def test_exact_matches_value_enumeration_oracle(rng):
    for _ in range(30):
        n_a, n_b = int(rng.integers(2, 5)), int(rng.integers(2, 5))
        a = sorted(rng.choice(100, size=n_a, replace=False).tolist())
        b = sorted(rng.choice(np.arange(100, 200), size=n_b, replace=False).tolist())
        a = [float(x) for x in a]
        b = [float(x) for x in rng.permutation(a[:0] + b)]
        pool = rng.permutation(np.concatenate([a, b]))
        a, b = list(pool[:n_a]), list(pool[n_a:])
        _, p = mann_whitney_u(a, b)
        assert p == pytest.approx(oracle.exact_mwu_p(a, b), abs=1e-12)


def test_shifted_distributions_significant(rng):
    a = rng.normal(0.0, 0.05, 20)
    b = rng.normal(5.0, 0.05, 20)
    _, p = mann_whitney_u(a, b)
    assert p < 0.001


def test_symmetry_win_loss_swap(rng):
    for _ in range(100):
        a = rng.normal(0, 1, int(rng.integers(3, 15)))
        b = rng.normal(0.5, 1, int(rng.integers(3, 15)))
        _, p_ab = mann_whitney_u(a, b)
        _, p_ba = mann_whitney_u(b, a)
        assert p_ab == pytest.approx(p_ba, abs=1e-12)
        out_ab = win_tie_loss(a, b)
        out_ba = win_tie_loss(b, a)
        swap = {WIN: LOSS, LOSS: WIN, TIE: TIE}
        assert out_ba.outcome == swap[out_ab.outcome]


def test_monotone_transform_invariance(rng):
    transforms = [
        lambda x: 3.0 * x + 7.0,
        lambda x: x ** 3,
        lambda x: np.exp(x / 4.0),
        lambda x: np.arctan(x),
    ]
    for _ in range(100):
        a = rng.normal(0, 1, int(rng.integers(3, 12)))
        b = rng.normal(0.3, 1.2, int(rng.integers(3, 12)))
        _, p0 = mann_whitney_u(a, b)
        f = transforms[int(rng.integers(0, len(transforms)))]
        _, p1 = mann_whitney_u(f(a), f(b))
        assert p1 == pytest.approx(p0, abs=1e-12)


def test_exact_and_normal_agree_on_six_vs_six(rng):
    for _ in range(50):
        pool = rng.permutation(np.arange(12, dtype=float) + rng.uniform(0, 0.4, 12))
        a, b = pool[:6], pool[6:]
        ranks = _midranks(np.concatenate([a, b]))
        rank_sum = float(ranks[:6].sum())
        u_a = rank_sum - 6 * 7 / 2
        exact = _exact_p(rank_sum, 6, 6)
        approx = _normal_p(u_a, 6, 6, np.concatenate([a, b]))
        assert abs(exact - approx) < 0.02


def test_win_tie_loss_basic():
    win = win_tie_loss([0.1] * 6, [0.3] * 6, lower_is_better=True)
    assert win.outcome == WIN and win.p_value < 0.05

    tie = win_tie_loss([0.2] * 6, [0.2] * 6)
    assert tie.outcome == TIE

    # higher-is-better flips the direction
    loss = win_tie_loss([0.1] * 6, [0.3] * 6, lower_is_better=False)
    assert loss.outcome == LOSS


def test_non_significant_is_tie_regardless_of_medians():
    # exact p = 0.2 at n=3+3: only U=0 and U=1 assignments are as extreme
    a, b = [1.0, 2.0, 4.0], [3.0, 5.0, 6.0]
    _, p = mann_whitney_u(a, b)
    assert p == pytest.approx(0.2, abs=1e-12)
    out = win_tie_loss(a, b)
    assert out.outcome == TIE and out.direction == "first"
