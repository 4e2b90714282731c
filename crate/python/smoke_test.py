"""Quick check that the compiled `ctk` module loads and agrees with known values.

Build and install first:  pip install --no-build-isolation crates/python
"""

import math
import pathlib
import sys

import ctk

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "crates" / "cli" / "tests" / "fixtures"


def close(rows, expected, tol=1e-9):
    return all(math.isclose(a, e, abs_tol=tol) for r, s in zip(rows, expected) for a, e in zip(r, s))


def main():
    g = ctk.CausalStructure(["A", "B", "C"], [("A", "C"), ("B", "C")])
    assert g.parents("C") == ["A", "B"]
    assert g.ancestral_ordering() == ["A", "B", "C"]
    assert g.d_separated(["A"], ["B"])
    assert not g.d_separated(["A"], ["B"], given=["C"])
    assert g.active_path(["A"], ["B"], given=["C"]) == ["A", "C", "B"]

    d = g.diagram("[C || A]")
    assert d.dom == ["A"] and d.cod == ["C"]
    assert d.equivalent(g.causal_conditional(["C"], given=["A"]))
    assert "digraph" in d.to_dot()

    try:
        g.parents("Z")
    except KeyError:
        pass
    else:
        raise AssertionError("unknown vertex should raise KeyError")

    m = ctk.Model.demo("simpson-mediator")
    rt = m.causal_conditional(["R"], given=["T"])
    assert close(rt.rows, [[0.39, 0.42], [0.61, 0.58]]), rt
    assert ctk.Model.from_json(m.to_json()).joint_prior().rows == m.joint_prior().rows

    food = ctk.Model.demo("food")
    assert close(food.marginal_prior(["A"]).rows, [[0.6], [0.4]])
    assert food.is_compatible_with()

    for name in ctk.DEMOS:
        ok, _ = ctk.run_demo(name)
        assert ok, name

    if FIXTURES.is_dir():
        ok, text = ctk.check_morphism(str(FIXTURES / "coin-to-biased.json"))
        print(text)

    print("smoke test passed")


if __name__ == "__main__":
    sys.exit(main())
