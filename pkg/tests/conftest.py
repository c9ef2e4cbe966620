import numpy as np
import pytest

from steer.geometry import build_anchor_set


@pytest.fixture(scope="session")
def anchors():
    return build_anchor_set()


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when == "call" and item.fspath.basename == "test_acceptance.py":
        status = "PASS" if report.passed else "FAIL"
        line = f"[ACCEPTANCE] {item.name}: {status}"
        report.sections.append(("acceptance", line))
        print(f"\n{line}")


def quat_sandwich_rotate(q, v):
    """Independent rotation oracle: p' = q * (0, v) * conj(q), by hand.

    Deliberately a different derivation from the library's rotation-matrix
    column formula.
    """
    w, x, y, z = q

    def mul(a, b):
        aw, ax, ay, az = a
        bw, bx, by, bz = b
        return (
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        )

    p = (0.0, float(v[0]), float(v[1]), float(v[2]))
    conj = (w, -x, -y, -z)
    out = mul(mul((w, x, y, z), p), conj)
    return np.array(out[1:])


def random_unit_quats(rng, n):
    q = rng.normal(size=(n, 4))
    return q / np.linalg.norm(q, axis=1, keepdims=True)
