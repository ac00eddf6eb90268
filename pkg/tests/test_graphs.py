import math
from fractions import Fraction
from itertools import product

import numpy as np
import pytest

from ncprob import convolutions as cv
from ncprob import graphs as gr
from ncprob import measures as ms
from ncprob import transforms as tr
from ncprob.loewner import DrivingFunction


def zoo():
    """Five small rooted graphs used in the product identities."""
    return {
        "edge": gr.path_graph(2),
        "path3_end": gr.path_graph(3, root=0),
        "star3": gr.star_graph(3),
        "cycle4": gr.cycle_graph(4),
        "triangle": gr.cycle_graph(3),
    }


class TestRootedGraph:
    def test_from_edges_rejects_loops(self):
        with pytest.raises(gr.GraphError):
            gr.RootedGraph.from_edges(2, [(0, 0)])

    def test_depths(self):
        g = gr.path_graph(4)
        assert list(g.depths()) == [0, 1, 2, 3]

    def test_vertex_guard(self):
        with pytest.raises(gr.GraphError):
            gr.RootedGraph.from_edges(10**8, [])

    def test_edge_list_roundtrip(self, tmp_path):
        g = gr.spidernet(2, 1, 3)
        path = tmp_path / "g.edges"
        gr.write_edge_list(g, path)
        back = gr.read_edge_list(path)
        assert back.n == g.n and back.root == g.root
        assert (back.adj != g.adj).nnz == 0


class TestSpidernet:
    def test_z_lattice_case(self):
        # data (2, 2, 1): two half-lines; arcsine mean 0 variance 2
        g = gr.spidernet(1, 0, 6).check_valid()
        m = gr.walk_moments(g, 4)
        assert m.values == (0, 2, 0, 6)  # m4 = C(4,2) walks on Z

    def test_path_is_wigner(self):
        # degenerate data (1, 2, 1): Catalan moments
        m = gr.walk_moments(gr.path_graph(8), 6)
        assert m.values == (0, 1, 0, 2, 0, 5)

    def test_degree_audit(self):
        for n, u in ((1, 1), (2, 1), (2, 3)):
            depth = 3
            g = gr.spidernet(n, u, depth).check_valid()
            a, b, _ = gr.SpidernetSpec(n, u, depth).data()
            assert g.degree(0) == a
            d = g.depths()
            interior = [v for v in range(1, g.n) if 0 < d[v] < depth]
            assert all(g.degree(v) == b for v in interior)
            # lateral edge count within each shell
            ones = [v for v in range(g.n) if d[v] == 1]
            lateral = sum(1 for v in ones for w in g.neighbors(v)
                          if d[w] == 1)
            assert lateral == len(ones) * u

    def test_existence_constraint(self):
        with pytest.raises(gr.GraphError):
            gr.spidernet(1, 2, 3)  # u > 2n - 1

    def test_truncation_sufficiency(self):
        for n, u in ((2, 1), (2, 2)):
            k = 6
            shallow = gr.walk_moments(gr.spidernet(n, u, k // 2 + 1), k)
            deep = gr.walk_moments(gr.spidernet(n, u, k // 2 + 3), k)
            assert shallow.values == deep.values

    def test_moments_match_slit_series(self):
        for n, u in product((1, 2), (0, 1)):
            g = gr.spidernet(n, u, 4)
            walks = gr.walk_moments(g, 6)
            series = tr.series_moments(tr.free_meixner_f_series(n, u, 10), 6)
            assert walks.values == tuple(int(v) for v in series.values)

    def test_odd_moments_vanish_without_laterals(self):
        g = gr.spidernet(3, 0, 4)
        m = gr.walk_moments(g, 7)
        assert m.values[0] == m.values[2] == m.values[4] == m.values[6] == 0


class TestWalkMoments:
    def test_first_two(self):
        for g in zoo().values():
            m = gr.walk_moments(g, 2)
            assert m[1] == 0
            assert m[2] == g.degree(g.root)

    def test_single_vertex(self):
        m = gr.walk_moments(gr.RootedGraph.single_vertex(), 5)
        assert m.values == (0,) * 5

    def test_star_spectral_law(self):
        g = gr.star_graph(2)
        assert gr.walk_moments(g, 2).values == (0, 2)
        atoms = gr.spectral_distribution(g).atoms
        assert [(round(a, 10), round(w, 10)) for a, w in atoms] == [
            (round(-math.sqrt(2), 10), 0.5), (round(math.sqrt(2), 10), 0.5)]

    def test_edge_spectral_law(self):
        atoms = gr.spectral_distribution(gr.path_graph(2)).atoms
        assert [(round(a, 10), round(w, 10)) for a, w in atoms] == [
            (-1.0, 0.5), (1.0, 0.5)]

    def test_spectral_matches_walks(self):
        for g in zoo().values():
            walks = gr.walk_moments(g, 8)
            spectral = gr.spectral_distribution(g).moments(8)
            assert np.abs(walks.floats() - spectral.floats()).max() < 1e-8


class TestProducts:
    def test_identities_against_convolutions(self):
        order = 6
        graphs = zoo()
        pairs = [(a, b) for a in graphs.values() for b in graphs.values()]
        for g1, g2 in pairs:
            m1 = gr.walk_moments(g1, order)
            m2 = gr.walk_moments(g2, order)
            comb = gr.walk_moments(gr.comb_product(g1, g2), order)
            want = cv.convolve("monotone", m1, m2)
            assert comb.values == tuple(int(v) for v in want.values)
            star = gr.walk_moments(gr.star_product(g1, g2), order)
            want = cv.convolve("boolean", m1, m2)
            assert star.values == tuple(int(v) for v in want.values)
            direct = gr.walk_moments(gr.direct_product(g1, g2), order)
            want = cv.convolve("classical", m1, m2)
            assert direct.values == tuple(int(v) for v in want.values)

    def test_product_guard(self):
        big = gr.path_graph(4000)
        with pytest.raises(gr.GraphError):
            gr.comb_product(big, big)

    def test_ball_preserves_walk_moments(self):
        g = gr.spidernet(2, 1, 5)
        pruned = gr.ball(g, 3)
        assert pruned.n < g.n
        assert (gr.walk_moments(pruned, 6).values
                == gr.walk_moments(g, 6).values)


class TestApproxProcess:
    def test_second_moment_additivity(self):
        for n in (1, 2, 3):
            res = gr.approx_process(DrivingFunction.constant(0.0), 2.0, n,
                                    order=2)
            for k in range(n + 1):
                assert res.raw_moments[k][2] == k * 2 * n**2
                exact = Fraction(int(res.raw_moments[k][2])) \
                    / Fraction(2 * n**3, 2)
                assert exact == Fraction(2 * k, n)

    def test_empty_product(self):
        res = gr.approx_process(DrivingFunction.constant(0.0), 2.0, 2,
                                order=4, k_max=1)
        assert res.graphs[0].n == 1
        assert res.raw_moments[0].values == (0, 0, 0, 0)

    def test_fourth_moment_refinement(self):
        target = 6.0  # arcsine A(0,2) fourth moment
        errs = []
        for n in (1, 2, 3):
            res = gr.approx_process(DrivingFunction.constant(0.0), 2.0, n,
                                    order=4)
            errs.append(abs(res.scaled_moments(n)[4] - target))
        assert errs[1] <= errs[0] + 1e-12
        assert errs[2] <= errs[1] + 1e-12

    def test_nonzero_driving_self_consistency(self):
        driving = DrivingFunction.constant(0.4)
        res2 = gr.approx_process(driving, 2.0, 2, order=4)
        res3 = gr.approx_process(driving, 2.0, 3, order=4)
        # variances stay exactly additive even with lateral edges
        assert res2.raw_moments[2][2] == 2 * 2 * 2**2
        assert res3.raw_moments[3][2] == 3 * 2 * 3**2
        # u values follow the floor formula
        c2 = math.sqrt(2 * 2**3 / 2.0)
        assert res2.us[0] == math.floor(c2 * 0.4)

    def test_bound_error(self):
        with pytest.raises(gr.BoundError):
            gr.approx_process(DrivingFunction.constant(5.0), 2.0, 1, order=2)
        with pytest.raises(gr.BoundError):
            gr.approx_process(DrivingFunction.constant(-0.1), 2.0, 2, order=2)
