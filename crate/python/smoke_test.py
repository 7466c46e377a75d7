"""Smoke test for the Python bindings.

Build and install the extension first, e.g.

    pip install maturin
    maturin develop -m crates/python/Cargo.toml   (inside a virtualenv)

or `maturin build -m crates/python/Cargo.toml` and pip-install the wheel.
"""

import json
import pathlib
import sys

import acceptance

DATA = pathlib.Path(__file__).resolve().parent.parent / "data"


def check(condition, message):
    if not condition:
        print("FAIL", message)
        sys.exit(1)
    print("ok  ", message)


def main():
    inst = acceptance.Instrument.from_json((DATA / "instrument.json").read_text())
    graph = inst.graph()
    check(len(graph["nodes"]) == 12 and len(graph["edges"]) == 13, "graph has 12 nodes and 13 edges")
    check(sorted(inst.parents("USE")) == ["BI", "FC", "HB"], "USE depends on BI, FC and HB")

    data = acceptance.Dataset.from_csv((DATA / "survey_wave1.csv").read_bytes(), inst)
    check(len(data) == 200, "wave 1 has 200 respondents")

    post = acceptance.fit(data, inst, seed=17)
    check(post.converged, "fit converges")
    again = acceptance.fit(data, inst, seed=17)
    check(post.to_json() == again.to_json(), "same seed gives identical posterior bytes")
    check(post.mean("BI<-TC") > 0, "TC raises BI")

    summary = post.summary(data)
    check(len(summary["coefficients"]) == 17, "summary lists 17 parameters")

    baseline = acceptance.simulate(post, data, json.dumps({"name": "baseline", "set": {}}))
    check(set(baseline) == {"bi", "use"}, "simulate returns BI and USE summaries")

    ranking = acceptance.rank(post, data, (DATA / "scenarios" / "candidates.json").read_text())
    gains = [row["expectedGain"] for row in ranking["ranking"]]
    check(gains == sorted(gains, reverse=True), "ranking is ordered by expected gain")

    prior = post.compress()
    check(prior.provenance()["sourcePosteriorId"] == post.id, "prior records its source posterior")
    wave2 = acceptance.Dataset.from_csv((DATA / "survey_wave2.csv").read_bytes(), inst)
    chained = acceptance.fit(wave2, inst, prior, seed=18)
    check(chained.converged, "chained fit on wave 2 converges")

    try:
        acceptance.Dataset.from_csv("respondent_id,wave,item_id,value\nr1,1,PE1,9\n", inst)
    except ValueError as err:
        check("PE1" in str(err), "out-of-range answers raise ValueError")
    else:
        check(False, "out-of-range answers raise ValueError")


if __name__ == "__main__":
    main()
