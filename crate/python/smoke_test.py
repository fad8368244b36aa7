"""Smoke test for the liouville_py extension module.

Build it first, e.g. `pip install ./crates/liouville-py`, then run
`python python/smoke_test.py`.
"""

import cmath
import math

import liouville_py as lv

B, A = 0.9, -0.35
A3 = (B - 1 / B) - 2 * A - B


def close(x, y, tol):
    return abs(x - y) <= tol * max(1.0, abs(y))


def main():
    # reflection Υ(z) = Υ(b + 1/b − z)
    q = B + 1 / B
    u = lv.upsilon(B, 0.85)
    assert close(u, lv.upsilon(B, q - 0.85), 1e-10), u
    assert abs(lv.upsilon(B, B)) > 0
    assert close(lv.gamma_ratio(0.5), 1.0, 1e-14)

    sc = lv.structure_constant(B, [A, A, A3])
    assert sc["w"] == 1
    assert close(cmath.exp(sc["log_value"]), sc["value"], 1e-12)

    chk = lv.selberg_check(B, A, A, 1, samples=100_000, seed=3)
    assert chk["sigmas"] < 4.0, chk

    one = lv.kpoint(B, [A, A, A3], [0, 1, 50], samples=20_000, seed=5)
    two = lv.kpoint(B, [A, A, A3], [0, 1, 50], samples=20_000, seed=5, workers=3)
    assert one["mean"] == two["mean"]

    naive, correct = lv.naive_vs_correct_demo()
    assert abs(naive - correct) > 0.01

    # E[z^2] = -1 under the wrong-sign Gaussian
    assert close(lv.expect_wrong_sign(lambda z: z * z), -1.0, 1e-12)
    assert close(lv.backward_heat(lambda z: z * z, 0.5, 2.0), 4.0 - 2 * 0.5, 1e-12)

    b = 1 / math.sqrt(math.pi)
    a1, a2 = -b / 2 - 1 / (2 * b), -b / 2 - 1 / (4 * b)
    hits = lv.pole_scan(b, 2, (a1, a1 + 0.1, 2), (a2, a2 + 0.1, 2))
    assert any(abs(h[0] - a1) < 1e-15 and abs(h[1] - a2) < 1e-15 for h in hits)

    pts = [(0.0, 2 * math.pi * k / 3) for k in range(3)]
    r = lv.solve_semiclassical([-0.4] * 3, pts, eps=math.pi / 16)
    assert r["limit_value"].imag == -math.pi
    assert r["fixed_point_residual"] < 1e-8
    mass = sum(v * a for v, a in zip(r["rho_hat"], r["cell_areas"]))
    assert close(mass, 1.0, 1e-12)

    try:
        lv.structure_constant(B, [A, A, 0.5])
    except ValueError as e:
        assert str(e).startswith("NotNeutral")
    else:
        raise AssertionError("non-neutral charges accepted")
    try:
        lv.solve_semiclassical([-0.4] * 3, pts, max_iter=1)
    except RuntimeError as e:
        assert str(e).startswith("NoConvergence")
    else:
        raise AssertionError("expected NoConvergence")

    print("smoke test ok")


if __name__ == "__main__":
    main()
