"""Smoke test for the qds_py extension. Build and install first:

    cd crates/python && maturin build --release -o dist && pip install dist/*.whl
"""
from fractions import Fraction

import qds_py as q


def main():
    assert q.divisor_anatomy_sum(12, 10, 1) == "8"
    assert q.divisor_anatomy_bound(12, 10, 1, 2) == "12"
    assert q.count_many_small_primes(100, 10, 0) == 100

    p = q.Params(Fraction(2, 5), 1, 10, 1)
    sys = q.PairSystem({6: "1/4", 10: "1/4"}, {15: "1/4", 4: "1/8"})
    edges = q.build_edge_set(sys, p)
    assert all(v in (6, 10) and w in (15, 4) for v, w in edges)
    for v, w in edges:
        assert q.omega_t(v, w, 10) >= 1

    rep = q.main_bound_check(sys.with_edges(edges), p)
    assert rep["verdict"] == "holds", rep

    system, params = q.generate_instance(7, support_max=60)
    e = q.build_edge_set(system, params)
    system = system.with_edges(e)
    assert q.PairSystem.from_json(system.to_json()).edges == system.edges

    peeled, steps, ok = q.peel(system, params)
    assert ok and steps <= len(system.psi) + len(system.theta)
    assert set(peeled) <= set(e)

    camp = q.certify_campaign(8, seed=1, support_max=40)
    assert camp["tallies"]["violated"] == 0, camp["tallies"]
    print("qds_py smoke test ok:", repr(system), camp["tallies"])


if __name__ == "__main__":
    main()
