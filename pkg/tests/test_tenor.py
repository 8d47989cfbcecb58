"""Grid mechanics: node bookkeeping and the q(t) interval index."""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from colmm import TenorStructure


class TestConstruction:
    def test_deltas(self):
        ts = TenorStructure(np.array([0.0, 0.25, 1.0]))
        np.testing.assert_array_equal(ts.deltas, [0.25, 0.75])
        assert ts.n_buckets == 2
        assert ts.horizon == 1.0

    def test_accrual_examples(self):
        ts = TenorStructure(np.array([0.0, 0.5, 1.0]))
        assert ts.accrual(0) == 0.5
        assert ts.accrual(1) == 0.5
        assert TenorStructure(np.array([0.0, 0.25, 1.0])).accrual(1) == 0.75

    def test_accrual_out_of_range(self):
        ts = TenorStructure(np.array([0.0, 0.5, 1.0]))
        with pytest.raises(ValueError):
            ts.accrual(2)
        with pytest.raises(ValueError):
            ts.accrual(-1)

    @pytest.mark.parametrize("nodes", [
        [0.0],                    # too short
        [0.1, 0.5],               # does not start at zero
        [0.0, 0.5, 0.5],          # not strictly increasing
        [0.0, 1.0, 0.5],          # decreasing
        [0.0, np.nan, 1.0],       # not finite
    ])
    def test_rejects_bad_grids(self, nodes):
        with pytest.raises(ValueError):
            TenorStructure(np.array(nodes))


class TestQIndex:
    def test_examples(self):
        ts = TenorStructure(np.array([0.0, 0.5, 1.0]))
        assert ts.q_index(0.0) == 0
        assert ts.q_index(0.5) == 1
        assert ts.q_index(0.7) == 2

    def test_domain(self):
        ts = TenorStructure(np.array([0.0, 0.5, 1.0]))
        with pytest.raises(ValueError):
            ts.q_index(-0.1)
        with pytest.raises(ValueError):
            ts.q_index(1.0001)

    @given(st.integers(min_value=0, max_value=7),
           st.floats(min_value=1e-9, max_value=1.0))
    def test_interval_convention(self, m, frac):
        # q maps (T_m, T_{m+1}] to m+1 and nodes to their own index
        ts = TenorStructure(np.linspace(0.0, 4.0, 9))
        assert ts.q_index(float(ts.nodes[m])) == m
        t = float(ts.nodes[m]) + frac * float(ts.deltas[m])
        assert ts.q_index(t) == m + 1

    def test_accruals_sum_to_horizon(self):
        ts = TenorStructure(np.array([0.0, 0.25, 0.75, 2.0, 3.5]))
        assert ts.deltas.sum() == ts.horizon


class TestNodeIndex:
    def test_exact_nodes_only(self):
        ts = TenorStructure(np.array([0.0, 0.5, 1.0]))
        assert ts.node_index(0.5) == 1
        assert ts.is_node(1.0)
        assert not ts.is_node(0.25)
        with pytest.raises(ValueError):
            ts.node_index(0.25)
