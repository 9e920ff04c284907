"""Smoke test for the pylebdiff extension.

Build it first, e.g. `maturin develop -m crates/python/Cargo.toml`.
"""

import json

import pylebdiff as lb


def main():
    a = lb.Scalar("1/3")
    b = lb.Scalar("1/6")
    assert str(a + b) == "1/2"
    assert float(a * b) == 1 / 18
    try:
        lb.Scalar("1/5")
    except ValueError:
        pass
    else:
        raise AssertionError("1/5 is not representable")

    w = lb.WTest.avoidance(2, 1)
    assert w.dim == 2
    for m in range(4):
        c = json.loads(w.certified_measure(m))
        assert c["within_target"], c
    avg = json.loads(w.verify_averaging(0, 3))
    assert avg["violation"] is None, avg

    trap = lb.WTest.point_trap(["1/3,1/3"])
    tree = trap.decompose(4)
    assert json.loads(tree)["report"]["violations"] == []
    synth = json.loads(lb.synthesize(tree, x="1/3,1/3", depth=4))
    assert all(g["holds"] for g in synth["gaps"])
    levels = synth["oscillation"]["rows"]
    assert len(levels) == 5

    step = {
        "pieces": [
            {
                "box": {
                    "bounds": [[{"num": "0", "den": "1"}, {"num": "1", "den": "2"}]],
                    "closed": [[False, False]],
                },
                "value": {"num": "1", "den": "1"},
            }
        ]
    }
    rows = json.loads(lb.lebesgue_probe(json.dumps(step), "1/3", 6, tie_policy="lower_closed"))
    assert len(rows) == 3 * 6
    print("pylebdiff smoke test: ok")


if __name__ == "__main__":
    main()
