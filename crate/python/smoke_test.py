"""Smoke test for the optsp extension module.

Build it first:
    cargo build -p optsp-py --features extension-module
    cp target/debug/liboptsp_py.so python/optsp.so
"""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

import optsp  # noqa: E402

TOY = """\
rel E 2
rel F 2
E a b
E b a
F a y1
F b y1
F a y2
"""


def check_toy():
    s = optsp.Structure(TOY)
    f = optsp.Formula("max x1,x2 . count y . E(x1,x2) & (F(x1,y) | F(x2,y))")
    assert (s.n, f.k, f.l, f.kind) == (4, 2, 1, "max"), (s, f)
    assert optsp.baseline_opt(s, f) == (2, ["a", "b"])
    exact = optsp.reduce_and_solve(s, f, audit=True)
    assert exact["value"] == 2 and exact["route"] == "reduction", exact
    assert exact["false_positives"] is not None
    approx = optsp.reduce_and_solve(s, f, ip="approx:2", eps=0.1)
    assert 2 / 2.1 <= approx["value"] <= 2, approx
    names = [n for n, _ in optsp.reduction_artifacts(s, f)]
    assert "normalized" in names and "relaxed" in names, names


def check_generated():
    a = optsp.generate(5, k=3, n=10)
    b = optsp.generate(5, k=3, n=10)
    assert a[0].to_text() == b[0].to_text() and str(a[1]) == str(b[1])
    for seed in range(20):
        s, f = optsp.generate(seed, n=10, density=0.4)
        want = optsp.baseline_opt(s, f)
        got = optsp.reduce_and_solve(s, f)
        assert (want and want[0]) == (got["witness"] and got["value"]), (seed, want, got)
    s, f = optsp.generate(3, l=2, n=8)
    assert optsp.multi_counting_opt(s, f)[0] == optsp.baseline_opt(s, f)[0]


def check_ip():
    ip = optsp.IpInstance(4, [[[0, 1], [2]], [[0, 1, 3], [3]]])
    assert ip.solve("max") == (2, [0, 0])
    assert ip.solve("min")[0] == 0
    assert ip.solve("max", ratio=2.0)[0] == 1
    again = optsp.IpInstance.from_dense(ip.d, ip.to_dense())
    assert again.families() == ip.families()
    assert optsp.IpInstance.parse(ip.to_text()).to_text() == ip.to_text()


def check_hybrid():
    s, f = optsp.generate(8, n=9, density=0.5)
    for name, text in optsp.reduction_artifacts(s, f):
        if name.startswith("hybrid-"):
            h = optsp.HybridInstance.parse(text)
            base = h.baseline()
            sol = h.solve()
            assert (base and base[0]) == (sol and sol[0]), (name, base, sol)


def check_triangles():
    # x0 sees y0,y1 and z0; only y0-z0 closes a triangle
    counts = optsp.triangle_counts(1, 2, 1, [(0, 0), (0, 1)], [(0, 0)], [(0, 0)], 0b1000_0000)
    assert counts == [1], counts


def check_errors():
    try:
        optsp.Formula("max x . count y . E(x,y")
    except ValueError:
        pass
    else:
        raise AssertionError("bad formula accepted")


if __name__ == "__main__":
    check_toy()
    check_generated()
    check_ip()
    check_hybrid()
    check_triangles()
    check_errors()
    print("smoke test ok")
