"""Smoke test for the optlab Python bindings.

Builds the extension with cargo when it is not importable, then exercises
catalog loading, optimization under every mode, sketches and the ratio.
"""

import importlib
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_module():
    try:
        return importlib.import_module("optlab_py")
    except ImportError:
        pass
    subprocess.run(
        ["cargo", "build", "--release", "-p", "optlab-py", "--features", "extension-module"],
        cwd=ROOT,
        check=True,
    )
    built = ROOT / "target" / "release" / "liboptlab_py.so"
    staging = pathlib.Path(tempfile.mkdtemp())
    shutil.copy(built, staging / "optlab_py.so")
    sys.path.insert(0, str(staging))
    return importlib.import_module("optlab_py")


def main():
    ol = load_module()
    cat = ol.Catalog.tpch()
    assert "lineitem" in cat.table_names(), cat.table_names()

    corpus = ol.generate_corpus()
    assert len(corpus) >= 50
    for qid, sql in corpus[:10]:
        naive = ol.optimize(cat, sql, mode="naive")
        for mode in ("cache", "cache-guess"):
            got = ol.optimize(cat, sql, mode=mode)
            assert got["digest"] == naive["digest"], (qid, mode)
            assert got["cost"] == naive["cost"], (qid, mode)
        assert len(naive["decisions"]) == 2
        assert naive["counters"]["cbo_invocations"] >= 1

    out = ol.optimize(cat, "SELECT n_name FROM nation WHERE n_regionkey = 2", mode="off")
    assert out["explain"].startswith("seqscan nation"), out["explain"]

    try:
        ol.optimize(cat, "SELECT FROM")
    except ValueError as e:
        assert "7" in str(e), e
    else:
        raise AssertionError("syntax error not raised")

    a, b = ol.HllSketch(), ol.HllSketch()
    for i in range(10000):
        a.add(i)
        b.add(i + 5000)
    assert abs(a.estimate() - 10000) / 10000 < 0.05, a.estimate()
    assert abs(a.merge(b).estimate() - 15000) / 15000 < 0.05
    assert abs(a.intersection(b) - 5000) / 5000 < 0.2, a.intersection(b)

    assert round(ol.improvement_ratio(2.836, 7.609, 6.186), 4) == 0.2981
    print("smoke test passed")


if __name__ == "__main__":
    main()
