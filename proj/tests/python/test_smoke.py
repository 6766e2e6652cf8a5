import os
import pathlib

import pytest

import prepmark

DATA = pathlib.Path(os.environ.get("PREPMARK_DATA_DIR", pathlib.Path(__file__).resolve().parents[2] / "data"))
BANK = DATA / "seed_bank.json"
COHORT = DATA / "cohort.json"


def test_expression_helpers():
    assert prepmark.evaluate("2^3^2", {}) == 512
    assert prepmark.equivalent("sin(x)^2+cos(x)^2", "1")
    assert not prepmark.equivalent("x", "x+10^(-6)")
    assert prepmark.equivalent(prepmark.differentiate("x^3", "x"), "3x^2")
    assert prepmark.render("2x") != ""


def test_syntax_errors_carry_code_and_offset():
    with pytest.raises(prepmark.PrepmarkError) as info:
        prepmark.render("(x - 1")
    assert info.value.args[0] == "SyntaxError"


def test_example_a_grading():
    spec = {"expected": "(a-1)^4"}
    assert prepmark.grade("structural_poly", spec, "1-4a+6a^2-4a^3+a^4")["score"] == 1.0
    factored = prepmark.grade("structural_poly", spec, "(a-1)^4")
    assert factored["score"] == 0.0
    assert factored["feedback_key"] == "right_value_wrong_form"


def test_bank_and_instances():
    report = prepmark.validate_bank(BANK)
    assert report["ok"]
    one = prepmark.instantiate(BANK, "quadratic_roots", 7)
    assert one == prepmark.instantiate(BANK, "quadratic_roots", 7)


def test_pearson_perfect_line():
    assert prepmark.pearson([1, 2, 3, 4], [3, 5, 7, 9]) == pytest.approx(1.0, abs=1e-12)


def test_simulated_store(tmp_path):
    store = tmp_path / "store"
    attempts = prepmark.simulate(BANK, COHORT, store, students=12, seed=3)
    assert attempts >= 12 * 6
    assert prepmark.replay_verify(store)
    assert len(prepmark.status(store)["students"]) == 12
    rows = prepmark.followup(store, "2017-10-07T00:00:00Z")["rows"]
    assert all(r["attempts"] >= 0 for r in rows)
    with pytest.raises(prepmark.PrepmarkError):
        prepmark.followup(store, "2017-09-01T00:00:00Z")
