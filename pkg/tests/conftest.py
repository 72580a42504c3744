import numpy as np
import pytest

from access_time import ChainSpec, ProbabilityVector, build_chain, random_connected_graph


def dirac(i, N):
    w = np.zeros(N)
    w[i] = 1.0
    return ProbabilityVector(w)


def dirichlet_pair(rng, N):
    return (
        ProbabilityVector(rng.dirichlet(np.ones(N))),
        ProbabilityVector(rng.dirichlet(np.ones(N))),
    )


def small_family_chains(seed=20240911):
    """One representative small chain per family."""
    rng = np.random.default_rng(seed)
    return {
        "birth_death": build_chain(ChainSpec("birth_death", n=8, p=0.25)),
        "winning_streak": build_chain(ChainSpec("winning_streak", n=8)),
        "hypercube": build_chain(ChainSpec("hypercube", n=3)),
        "path": build_chain(ChainSpec("path", n=8)),
        "complete": build_chain(ChainSpec("complete", n=8)),
        "star": build_chain(ChainSpec("star", n=8)),
        "graph": build_chain(
            ChainSpec("graph", edges=random_connected_graph(9, rng, extra_edges=5))
        ),
    }


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
