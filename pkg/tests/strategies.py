import random

from hypothesis import strategies as st

from greedy_peering.errors import GraphError
from greedy_peering.graph import GameParams, PeerGraph


def random_graph(n, m, d, seed, density=1.0, d_in=None):
    """Graph built by offering random pairs to add_edge, skipping refusals."""
    rnd = random.Random(seed)
    g = PeerGraph(GameParams(n=n, m=m, d=d, d_in=d_in))
    for _ in range(int(density * n * d * 3)):
        a, b = rnd.randrange(n), rnd.randrange(n)
        try:
            g.add_edge(a, b)
        except GraphError:
            pass
    return g


@st.composite
def graphs(draw, max_n=30, max_d=4, capped=False):
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(1, n))
    d = draw(st.integers(1, max_d))
    d_in = draw(st.integers(d + 1, d + 4)) if capped else None
    density = draw(st.sampled_from([0.2, 0.5, 1.0]))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    return random_graph(n, m, d, seed, density, d_in)
