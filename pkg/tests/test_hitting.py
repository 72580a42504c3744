import csv

import numpy as np
import pytest

from access_time import (
    ChainSpec,
    ChainSpecError,
    ReducibleChainError,
    TransitionMatrix,
    birth_death_hitting_formula,
    build_chain,
    complete_hitting_formula,
    hitting_time_matrix,
    hitting_time_to,
    is_hitting_symmetric,
    kemeny_tav,
    max_hitting_time,
    path_hitting_formula,
    spectral_tav,
    star_hitting_formula,
    stationary_distribution,
    winning_streak_hitting_formula,
)
from conftest import small_family_chains
from oracles import fraction_hitting_matrix, fraction_stationary


def rel_close(a, b, tol=1e-9):
    return abs(a - b) <= tol * max(1.0, abs(b))


# --- solver correctness ------------------------------------------------------


@pytest.mark.parametrize(
    "spec",
    [
        ChainSpec("winning_streak", n=4),
        ChainSpec("star", n=3),
        ChainSpec("birth_death", n=4, p=0.3),
        ChainSpec("hypercube", n=2),
    ],
)
def test_solver_matches_exact_elimination(spec):
    chain = build_chain(spec)
    M = hitting_time_matrix(chain)
    exact = fraction_hitting_matrix(chain.rows)
    for i in range(chain.size):
        for j in range(chain.size):
            assert rel_close(M.values[i, j], float(exact[i][j]), 1e-12)


def test_solver_matches_exact_elimination_random_chain(rng):
    rows = rng.dirichlet(np.ones(6), size=6)
    chain = TransitionMatrix(rows)
    M = hitting_time_matrix(chain)
    exact = fraction_hitting_matrix(chain.rows)
    for i in range(6):
        for j in range(6):
            assert rel_close(M.values[i, j], float(exact[i][j]), 1e-11)


def test_path_hitting_examples():
    M = hitting_time_matrix(build_chain(ChainSpec("path", n=2)))
    assert M.values[0, 1] == pytest.approx(1.0, abs=1e-12)
    assert M.values[1, 2] == pytest.approx(3.0, abs=1e-12)
    assert M.values[0, 2] == pytest.approx(4.0, abs=1e-12)


def test_winning_streak_hitting_examples():
    M = hitting_time_matrix(build_chain(ChainSpec("winning_streak", n=3)))
    assert M.values[0, 2] == pytest.approx(6.0, abs=1e-12)  # state 1 to state 3
    assert M.values[2, 1] == pytest.approx(4.0, abs=1e-12)  # state 3 to state 2


def test_star_hitting_examples():
    M = hitting_time_matrix(build_chain(ChainSpec("star", n=4)))
    assert M.values[1, 0] == pytest.approx(1.0, abs=1e-12)
    assert M.values[0, 1] == pytest.approx(7.0, abs=1e-12)
    assert M.values[2, 3] == pytest.approx(8.0, abs=1e-12)


def test_diagonal_zero_offdiagonal_positive():
    for chain in small_family_chains().values():
        M = hitting_time_matrix(chain)
        assert np.all(np.diag(M.values) == 0.0)
        off = M.values[~np.eye(chain.size, dtype=bool)]
        assert off.min() > 0.0


def test_hitting_column_matches_matrix():
    chain = build_chain(ChainSpec("birth_death", n=7, p=0.2))
    M = hitting_time_matrix(chain)
    for j in (0, 3, 7):
        np.testing.assert_allclose(hitting_time_to(chain, j), M.values[:, j], rtol=1e-12)


# --- closed-form lemmas vs solver --------------------------------------------


@pytest.mark.parametrize("n", [2, 5, 12, 30])
def test_path_lemma_both_branches(n):
    M = hitting_time_matrix(build_chain(ChainSpec("path", n=n)))
    F = path_hitting_formula(n)
    assert np.abs(M.values - F).max() <= 1e-9 * max(1.0, F.max())


@pytest.mark.parametrize("n", [2, 5, 12, 30])
def test_winning_streak_lemma(n):
    M = hitting_time_matrix(build_chain(ChainSpec("winning_streak", n=n)))
    F = winning_streak_hitting_formula(n)
    assert np.abs((M.values - F) / np.maximum(1.0, F)).max() <= 1e-9


@pytest.mark.parametrize("p", [0.1, 0.25, 0.5])
@pytest.mark.parametrize("n", [2, 9, 30])
def test_birth_death_uphill_lemma(n, p):
    M = hitting_time_matrix(build_chain(ChainSpec("birth_death", n=n, p=p)))
    F = birth_death_hitting_formula(n, p)
    up = np.triu_indices(n + 1, k=1)
    assert np.abs((M.values[up] - F[up]) / np.maximum(1.0, F[up])).max() <= 1e-9


def test_birth_death_downhill_mirror_matches_but_textbook_does_not():
    n, p = 10, 0.3
    M = hitting_time_matrix(build_chain(ChainSpec("birth_death", n=n, p=p)))
    mirror = birth_death_hitting_formula(n, p, downhill="mirror")
    textbook = birth_death_hitting_formula(n, p, downhill="textbook")
    down = np.tril_indices(n + 1, k=-1)
    assert np.abs((M.values[down] - mirror[down]) / np.maximum(1.0, mirror[down])).max() <= 1e-9
    # the textbook branch undershoots, e.g. one step down from state 1 to 0
    assert textbook[1, 0] == 0.0 and M.values[1, 0] > 1.0


def test_star_and_complete_formulas():
    M = hitting_time_matrix(build_chain(ChainSpec("star", n=6)))
    np.testing.assert_allclose(M.values, star_hitting_formula(6), atol=1e-10)
    M = hitting_time_matrix(build_chain(ChainSpec("complete", n=6)))
    np.testing.assert_allclose(M.values, complete_hitting_formula(6), atol=1e-10)


# --- solver-wide invariants ---------------------------------------------------


def family_grid():
    specs = [
        ChainSpec("birth_death", n=33, p=0.25),
        ChainSpec("winning_streak", n=20),
        ChainSpec("hypercube", n=5),
        ChainSpec("path", n=33),
        ChainSpec("complete", n=33),
        ChainSpec("star", n=33),
    ]
    return [build_chain(s) for s in specs]


@pytest.mark.parametrize("chain", family_grid(), ids=lambda c: c.family)
def test_first_step_residual(chain):
    M = hitting_time_matrix(chain)
    R = M.values - 1.0 - chain.rows @ M.values
    R[np.eye(chain.size, dtype=bool)] = 0.0
    assert np.abs(R).max() <= 1e-9 * max(1.0, M.values.max())


def test_first_step_residual_large_path():
    chain = build_chain(ChainSpec("path", n=512))
    M = hitting_time_matrix(chain)
    R = M.values - 1.0 - chain.rows @ M.values
    R[np.eye(chain.size, dtype=bool)] = 0.0
    assert np.abs(R).max() <= 1e-9 * max(1.0, M.values.max())


@pytest.mark.parametrize("chain", family_grid(), ids=lambda c: c.family)
def test_triangle_inequality(chain):
    M = hitting_time_matrix(chain).values
    relaxed = np.min(M[:, :, None] + M[None, :, :], axis=1)  # min over the waypoint
    assert np.all(M <= relaxed + 1e-9 * max(1.0, M.max()))


@pytest.mark.parametrize("chain", family_grid(), ids=lambda c: c.family)
def test_random_target_lemma(chain):
    M = hitting_time_matrix(chain)
    pi = stationary_distribution(chain).weights
    per_start = M.values @ pi  # sum_j pi_j E_i[tau_j] for each start i
    t_av = kemeny_tav(chain, hitting=M).t_av_doublesum
    assert np.abs(per_start - t_av).max() <= 1e-8 * t_av


# --- stationary law -----------------------------------------------------------


def test_stationary_examples():
    np.testing.assert_allclose(
        stationary_distribution(build_chain(ChainSpec("complete", n=3))).weights,
        np.full(4, 0.25),
        atol=1e-14,
    )
    np.testing.assert_allclose(
        stationary_distribution(build_chain(ChainSpec("star", n=3))).weights,
        [0.5, 1 / 6, 1 / 6, 1 / 6],
        atol=1e-14,
    )
    np.testing.assert_allclose(
        stationary_distribution(build_chain(ChainSpec("path", n=2))).weights,
        [0.25, 0.5, 0.25],
        atol=1e-14,
    )


def test_stationary_residual_and_degree_formula(rng):
    from access_time import random_connected_graph

    for _ in range(5):
        edges = random_connected_graph(17, rng, extra_edges=9)
        chain = build_chain(ChainSpec("graph", edges=edges))
        pi = stationary_distribution(chain).weights
        assert np.abs(pi @ chain.rows - pi).max() <= 1e-10
        deg = np.array([sum(1 for e in edges if v in e) for v in range(17)], dtype=float)
        np.testing.assert_allclose(pi, deg / (2 * len(edges)), rtol=1e-12)


def test_stationary_matches_exact_elimination(rng):
    rows = rng.dirichlet(np.ones(7), size=7)
    chain = TransitionMatrix(rows)
    pi = stationary_distribution(chain).weights
    exact = np.array([float(x) for x in fraction_stationary(rows)])
    np.testing.assert_allclose(pi, exact, rtol=1e-12)


def test_stationary_large_chain_residual():
    chain = build_chain(ChainSpec("birth_death", n=512, p=0.37))
    pi = stationary_distribution(chain).weights
    assert np.abs(pi @ chain.rows - pi).max() <= 1e-10
    assert pi.min() > 0


# --- max hitting, symmetry ------------------------------------------------------


def test_max_hitting_examples():
    value, pair = max_hitting_time(build_chain(ChainSpec("path", n=10)))
    assert rel_close(value, 100.0) and pair == (0, 10)
    value, pair = max_hitting_time(build_chain(ChainSpec("complete", n=5)))
    assert rel_close(value, 5.0) and pair == (0, 1)
    value, pair = max_hitting_time(build_chain(ChainSpec("winning_streak", n=3)))
    assert rel_close(value, 6.0) and pair == (1, 3)  # 2^n - 2, below the loose 2^n


def test_hitting_symmetry():
    ok, asym = is_hitting_symmetric(build_chain(ChainSpec("complete", n=4)))
    assert ok and asym <= 1e-10
    ok, _ = is_hitting_symmetric(build_chain(ChainSpec("hypercube", n=3)))
    assert ok
    ok, asym = is_hitting_symmetric(build_chain(ChainSpec("star", n=5)))
    assert not ok
    assert asym == pytest.approx(8.0, rel=1e-9)  # E_0[tau_1] = 9 vs E_1[tau_0] = 1


# --- t_av: double sum and spectrum ----------------------------------------------


def test_kemeny_examples():
    assert kemeny_tav(build_chain(ChainSpec("complete", n=3))).t_av_doublesum == pytest.approx(
        2.25, rel=1e-12
    )
    lazy_two_state = TransitionMatrix(np.array([[0.5, 0.5], [0.5, 0.5]]))
    assert kemeny_tav(lazy_two_state).t_av_doublesum == pytest.approx(1.0, rel=1e-12)


def test_spectral_examples():
    s = spectral_tav(build_chain(ChainSpec("complete", n=3)))
    np.testing.assert_allclose(s.eigenvalues, [1.0, -1 / 3, -1 / 3, -1 / 3], atol=1e-12)
    assert s.t_av_spectral == pytest.approx(2.25, rel=1e-12)

    s = spectral_tav(TransitionMatrix(np.array([[0.5, 0.5], [0.5, 0.5]])))
    np.testing.assert_allclose(s.eigenvalues, [1.0, 0.0], atol=1e-12)
    assert s.t_av_spectral == pytest.approx(1.0, rel=1e-12)

    s = spectral_tav(build_chain(ChainSpec("hypercube", n=2)))  # the 4-cycle
    np.testing.assert_allclose(s.eigenvalues, [1.0, 0.0, 0.0, -1.0], atol=1e-12)
    assert s.t_av_spectral == pytest.approx(2.5, rel=1e-12)


@pytest.mark.parametrize(
    "spec",
    [
        ChainSpec("complete", n=10),
        ChainSpec("path", n=12),
        ChainSpec("hypercube", n=3),
        ChainSpec("star", n=8),
        ChainSpec("birth_death", n=10, p=0.3),
    ],
    ids=lambda s: s.family,
)
def test_spectral_matches_double_sum(spec):
    chain = build_chain(spec)
    ds = kemeny_tav(chain).t_av_doublesum
    sp = spectral_tav(chain).t_av_spectral
    assert abs(ds - sp) <= 1e-8 * ds


def test_spectral_refuses_non_reversible():
    ws = build_chain(ChainSpec("winning_streak", n=5))
    with pytest.raises(ChainSpecError, match="not reversible"):
        spectral_tav(ws)


# --- error paths -----------------------------------------------------------------


def test_reducible_chain_refused():
    rows = np.zeros((4, 4))
    rows[0, 1] = rows[1, 0] = 1.0
    rows[2, 3] = rows[3, 2] = 1.0
    chain = TransitionMatrix(rows)
    with pytest.raises(ReducibleChainError):
        hitting_time_matrix(chain)
    with pytest.raises(ReducibleChainError):
        stationary_distribution(chain)


def test_size_cap_env(monkeypatch):
    monkeypatch.setenv("ACCESS_TIME_MAX_N", "8")
    with pytest.raises(ChainSpecError, match="cap"):
        build_chain(ChainSpec("path", n=10))
    chain = build_chain(ChainSpec("path", n=7))
    hitting_time_matrix(chain)  # exactly at the cap
    monkeypatch.setenv("ACCESS_TIME_MAX_N", "4096")
    build_chain(ChainSpec("path", n=10))


def test_hitting_csv_round_trip(tmp_path):
    chain = build_chain(ChainSpec("winning_streak", n=4))
    M = hitting_time_matrix(chain)
    out = tmp_path / "hit.csv"
    M.to_csv(out)
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["source", "1", "2", "3", "4"]
    parsed = np.array([[float(x) for x in row[1:]] for row in rows[1:]])
    np.testing.assert_array_equal(parsed, M.values)  # %.17g is lossless
