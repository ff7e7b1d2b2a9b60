"""Smoke test for the kleinian_py extension.

Build and install first:
    pip install --no-build-isolation -e crates/python
"""

import json
import sys

import kleinian_py as k


def main():
    curve = k.Curve.random(1)
    s = k.Sigma(curve)
    print("characteristic", s.characteristic, "gamma^2", s.gamma_sq)
    assert s.legendre_residual() < 1e-8

    x1, x2 = 0.3 + 0.4j, -0.7 + 0.2j
    u = s.abel(x1, curve.f(x1) ** 0.5, x2, curve.f(x2) ** 0.5)
    assert abs(s.wp(u, "22") - (x1 + x2)) < 1e-8
    assert abs(s.wp(u, "12") + x1 * x2) < 1e-8

    x = 0.35 + 1.2j
    psi = s.psi(x, 8)
    y = curve.f(x) ** 0.5
    assert min(abs(psi[2] - 2 * y), abs(psi[2] + 2 * y)) < 1e-8 * abs(y)
    worst = max(s.recursion_residual(x, m, n) for m in range(2, 6) for n in range(m + 1))
    print("worst determinant recursion residual", worst)
    assert worst < 1e-6

    lemniscate = k.Sigma(k.Curve.from_roots([1, 0, -1]))
    assert abs(lemniscate.tau[0][0] - 1j) < 1e-8

    report = json.loads(k.run_suites(json.dumps({"seeds": [1], "suites": ["periods", "elliptic"]})))
    failed = [r for r in report if r["verdict"] == "fail"]
    print(len(report), "records,", len(failed), "failed")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
