#!/usr/bin/env python3
"""Smoke test for the adshield_py extension module.

Builds nothing itself: it locates the compiled cdylib under target/
(release preferred), copies it into a temp directory under the importable
name, and exercises the bound functions against known values.

Run from the repository root after `cargo build -p adshield-py` (or
`--release`):

    python3 python/smoke_test.py
"""

import json
import math
import shutil
import sys
import tempfile
from pathlib import Path

REPO_ROOT = Path(__file__).resolve().parent.parent


def locate_extension() -> Path:
    candidates = [
        REPO_ROOT / "target" / "release" / "libadshield_py.so",
        REPO_ROOT / "target" / "debug" / "libadshield_py.so",
        REPO_ROOT / "target" / "release" / "libadshield_py.dylib",
        REPO_ROOT / "target" / "debug" / "libadshield_py.dylib",
    ]
    for path in candidates:
        if path.exists():
            return path
    sys.exit("extension not built; run: cargo build -p adshield-py")


def import_module():
    source = locate_extension()
    stage = Path(tempfile.mkdtemp(prefix="adshield_py_"))
    target = stage / ("adshield_py" + (".so" if source.suffix == ".so" else ".dylib"))
    shutil.copy2(source, target)
    sys.path.insert(0, str(stage))
    import adshield_py  # noqa: E402

    return adshield_py


def approx(a, b, tol=1e-9):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    ads = import_module()
    checks = 0

    # tokenizer: punctuation separation and byte offsets
    text = "Book FUN Flights!"
    tokens = ads.tokenize(text)
    assert [t[0] for t in tokens] == ["Book", "FUN", "Flights", "!"], tokens
    for tok, start, end in tokens:
        assert text[start:end] == tok
    assert ads.sentence_spans("A. B.") == [(0, 2), (2, 4)]
    checks += 1
    print("ok tokenize + sentence spans")

    # mutual information: perfect predictor on balanced data
    approx(ads.mutual_information(50, 0, 0, 50), math.log(2), 1e-12)
    checks += 1
    print("ok mutual information (ln 2)")

    # odds ratio on the published contingency row
    or_, lo, hi, p, corrected = ads.odds_ratio(1355, 549, 1785, 119)
    assert 0.164 <= or_ <= 0.165, or_
    assert round(lo, 2) == 0.13 and round(hi, 2) == 0.20, (lo, hi)
    assert p < 0.05 and not corrected
    checks += 1
    print(f"ok odds ratio {or_:.4f} CI [{lo:.4f}, {hi:.4f}]")

    # Benjamini-Hochberg on the ten-test vector: two rejections
    p_values = [0.001, 0.008, 0.039, 0.041, 0.042, 0.06, 0.074, 0.205, 0.212, 0.216]
    flags = ads.benjamini_hochberg(p_values, 0.05)
    assert flags == [True, True] + [False] * 8, flags
    checks += 1
    print("ok benjamini-hochberg")

    # Jaccard conventions
    approx(ads.jaccard_index(["a", "b"], ["b", "c"]), 1 / 3)
    approx(ads.jaccard_index([], []), 1.0)
    approx(ads.jaccard_index(["a"], ["b"]), 0.0)
    checks += 1
    print("ok jaccard")

    # BIO repair and entity extraction
    assert ads.repair_bio(["O", "I-ITEM", "I-ITEM"]) == ["O", "B-ITEM", "I-ITEM"]
    entities = ads.extract_entities(["B-ITEM", "I-ITEM", "O", "B-AD"])
    assert entities == [("ITEM", 0, 2), ("AD", 3, 4)], entities
    assert ads.has_ad(["O", "B-ITEM", "O"]) and not ads.has_ad(["O", "O"])
    checks += 1
    print("ok bio repair + entities")

    # prompt rendering: placeholder-free, carries the request fields
    prompt = ads.render_prompt(
        "covert-rational",
        "Are there specific destinations that usually have last minute deals?",
        "Several coastal regions offer frequent last minute packages.",
        "FUN Flights",
        ["no credit card fees", "fly from 21 uk airports"],
        "fun.co.uk",
    )
    assert "FUN Flights" in prompt and "fun.co.uk" in prompt
    assert "{item}" not in prompt and "{response}" not in prompt
    checks += 1
    print("ok prompt rendering")

    # dataset loading on a corpus written on the fly
    record = {
        "id": "r1",
        "query": "q",
        "response": "Plain answer.",
        "split": "test",
        "label": 0,
        "meta": {"service": "engine-a", "llm": None, "style": None},
        "ad": None,
        "tokens": None,
        "tags": None,
    }
    with tempfile.NamedTemporaryFile("w", suffix=".jsonl", delete=False) as f:
        f.write(json.dumps(record) + "\n")
        corpus_path = f.name
    ds = ads.Dataset.load(corpus_path, True)
    assert len(ds) == 1 and ds.negatives() == 1 and ds.positives() == 0
    assert ds.response("r1") == "Plain answer."
    checks += 1
    print("ok dataset load")

    # bundled fixture, when present
    fixture = REPO_ROOT / "crates" / "adshield-core" / "fixtures" / "synthetic_corpus.jsonl"
    if fixture.exists():
        ds = ads.Dataset.load(str(fixture), True)
        assert len(ds) == 200, len(ds)
        counts = ds.split_counts()
        assert counts["train"] == (146, 46), counts
        assert counts["validation"] == (26, 8), counts
        assert counts["test"] == (28, 9), counts
        checks += 1
        print("ok bundled fixture counts")

    print(f"smoke test passed ({checks} groups)")


if __name__ == "__main__":
    main()
