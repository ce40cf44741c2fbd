"""Smoke test for the pyacgeom extension.

Build and install first:
    pip install --no-build-isolation -e crates/python
then run: python python/smoke_test.py
"""

import json
import sys

import pyacgeom


def main() -> int:
    names = pyacgeom.scenes()
    assert "s6" in names and "r4_twisted" in names, names

    r = json.loads(pyacgeom.report("nk-check", "s6", points=10, seed=1))
    assert r["schema"] == "acgeom-report/1"
    assert r["overall"] == "PASS", r["overall"]

    c = json.loads(pyacgeom.report("certify", "s6", points=20))
    verdicts = [p["verdict"] for p in c["details"]]
    assert verdicts == ["NO_COMPATIBLE_SYMPLECTIC_FORM"] * 20, set(verdicts)

    lee = json.loads(pyacgeom.report("lee-form", "r4_remark1", points=5, form="omega"))
    assert lee["overall"] != "FAIL"

    a = pyacgeom.report("nijenhuis", "r4_twisted", points=8, seed=3)
    b = pyacgeom.report("nijenhuis", "r4_twisted", points=8, seed=3)
    assert a == b

    text = pyacgeom.export_scene("r4_twisted")
    assert pyacgeom.load_scene_text(text) == "r4_twisted"
    try:
        pyacgeom.load_scene_text(text.replace("x1^2", "x1^"))
    except ValueError as e:
        assert "line" in str(e), e
    else:
        raise AssertionError("malformed scene accepted")

    try:
        pyacgeom.report("certify", "no_such_scene")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown scene accepted")

    code, out, _ = pyacgeom.run(["nk-check", "r6_product", "--points", "4"])
    assert code == 1, code
    assert pyacgeom.run(["frobnicate"])[0] == 2

    print(f"pyacgeom {pyacgeom.__version__}: smoke test ok")
    return 0


if __name__ == "__main__":
    sys.exit(main())
