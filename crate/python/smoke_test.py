"""Smoke test for the orbit_approx extension module.

Build and install first:  maturin develop --release -m crates/python/Cargo.toml
"""

import orbit_approx as oa


def main() -> None:
    cf = oa.ContinuedFraction()
    assert cf.partial_quotients(5) == [0, 1, 1, 1, 1, 1]
    assert cf.convergent(6) == (8, 13)
    cf.certify_epsilon_bounds(6)

    g = cf.matrix(6)
    assert g * g.inverse() == oa.Matrix(1, 0, 0, 1)
    assert oa.Matrix.parse(str(g)) == g

    phi = oa.Real("surd:(1+1*sqrt(5))/2")
    assert phi.is_exact() and not phi.is_rational()
    assert abs(float(phi) - 1.6180339887) < 1e-9
    assert phi.compare(oa.Real("8/5")) == 1

    r = oa.approx_rational_slope("1,2", 6)
    assert r["gamma"] == [[-115, 72], [-238, 149]]
    assert all(b["holds"] for b in r["bounds"])

    cert = oa.verify_theorem4("1,2", 6)
    assert cert["passed"] and cert["T"] == 136 and cert["bound"] == "1/104"

    try:
        oa.verify_theorem4("1,2", 4)
    except oa.OrbitApproxError as e:
        assert "precondition" in str(e)
    else:
        raise AssertionError("k = 4 should fail the precondition")

    est = oa.estimate_exponents("0,0", 4096)
    assert est["theory"]["mu"] == "1"
    assert abs(est["mu_hat"] - 1.0) < 0.15

    assert oa.count_matrices(1) == 20
    assert len(oa.enumerate_matrices(1)) == 20
    try:
        oa.enumerate_matrices(10**6)
    except oa.CapExceededError:
        pass
    else:
        raise AssertionError("cap should be enforced")

    print("orbit_approx smoke test OK")


if __name__ == "__main__":
    main()
