from __future__ import annotations

import json
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from disclosure_scoring import prompts
from disclosure_scoring.corpus import DisclosureRecord, YearSlice, partition_by_year
from disclosure_scoring.gateway import FileCache, Gateway, MockBackend, StructuredOutputError
from disclosure_scoring.rubrics import (
    Rubric,
    RubricItem,
    RubricSet,
    SamplingConfig,
    aggregate_master_rubric,
    dumps_rubric,
    generate_yearly_rubric,
    load_rubric,
    load_rubric_set,
    mask_years,
    master_rubric_request,
    reference_rubric,
    rubric_from_doc,
    rubric_to_doc,
    stratified_sample,
    validate_rubric,
    yearly_rubric_request,
)


def item(index, max_points=4, levels=None, name="Item") -> RubricItem:
    levels = range(max_points + 1) if levels is None else levels
    return RubricItem(index, f"{name} {index}", max_points, tuple((lv, f"level {lv}") for lv in levels))


# -- reference tables -----------------------------------------------------------------

def test_table1_fixture_validates():
    r = reference_rubric("table1")
    assert validate_rubric(r).violations == ()
    assert r.max_total == 10
    assert [it.max_points for it in r.items] == [2] * 5
    assert r.items[0].name == "Strategic Integration"


def test_table2_fixture_validates():
    r = reference_rubric("table2")
    assert validate_rubric(r).violations == ()
    assert r.max_total == 20
    assert [it.max_points for it in r.items] == [4] * 5
    assert r.items[0].name == "Strategic Integration & Influence"


# -- validator ----------------------------------------------------------------------------

def test_level_exceeds_max():
    r = Rubric("x", (item(1, 4, levels=[0, 2, 4, 5]),))
    assert any("level exceeds max" in v for v in validate_rubric(r).violations)


def test_index_gap():
    r = Rubric("x", tuple(item(i) for i in (1, 2, 4, 5, 6)))
    assert any(v.startswith("index gap: item 3") for v in validate_rubric(r).violations)


def test_missing_max_level_and_duplicates():
    r = Rubric("x", (RubricItem(1, "A", 3, ((0, "a"), (1, "b"), (1, "c"))),))
    v = validate_rubric(r).violations
    assert any("duplicate guideline level" in x for x in v)
    assert any("has no guideline level" in x for x in v)


def test_max_total_mismatch():
    r = Rubric("x", (item(1, 2), item(2, 2)), max_total=5)
    assert any("max_total" in v for v in validate_rubric(r).violations)


def test_item_count_not_forced_to_five():
    assert validate_rubric(Rubric("x", (item(1, 3), item(2, 1)))).ok


@given(st.lists(st.integers(1, 6), min_size=1, max_size=8))
@settings(max_examples=100, deadline=None)
def test_max_total_is_sum_of_item_maxima(maxima):
    r = Rubric("x", tuple(item(i, m) for i, m in enumerate(maxima, 1)))
    assert r.max_total == sum(maxima)
    assert validate_rubric(r).ok


# -- serialization ------------------------------------------------------------------------------

def test_doc_round_trip():
    r = reference_rubric("table2")
    again = rubric_from_doc(json.loads(dumps_rubric(r)))
    assert again == r
    doc = rubric_to_doc(r)
    assert set(doc["items"][0]) == {"#", "item", "question", "max_point", "guidelines"}


def test_save_and_load_with_provenance(tmp_path, gateway, fixture_corpus):
    sl = partition_by_year(fixture_corpus)[2010]
    r = generate_yearly_rubric(sl, gateway, "m", out_dir=tmp_path)
    path = tmp_path / "yearly_2010.txt"
    assert path.is_file()
    side = json.loads((tmp_path / "yearly_2010.provenance.json").read_text())
    assert side["source_prompt_hash"] == r.source_prompt_hash and side["sampled"] is False
    assert load_rubric(path) == r


# -- induction ------------------------------------------------------------------------------------

def test_yearly_rubric_shape_on_fixture(gateway, fixture_corpus):
    sl = partition_by_year(fixture_corpus)[2010]
    r = generate_yearly_rubric(sl, gateway, "m")
    assert r.rubric_id == "yearly:2010" and len(r.items) == 5
    assert all(it.max_points == 2 for it in r.items) and r.max_total == 10
    assert validate_rubric(r).ok


def test_yearly_prompt_quotes_instruction_and_masks_years(fixture_corpus):
    sl = partition_by_year(fixture_corpus)[2010]
    req, info = yearly_rubric_request(sl, "m", SamplingConfig())
    assert req.user_text.startswith(prompts.YEARLY_INSTRUCTION)
    assert "Since 20" not in req.user_text and "[YEAR]" in req.user_text
    assert info["companies_in_prompt"] == 30


def test_single_company_slice_gives_valid_rubric(gateway):
    rec = DisclosureRecord("A", "A", "X", "Other", 2015, "Q1", "q", "carbon targets")
    r = generate_yearly_rubric(YearSlice(2015, (rec,)), gateway, "m")
    assert validate_rubric(r).ok


def test_empty_slice_refused(gateway):
    with pytest.raises(ValueError, match="empty"):
        generate_yearly_rubric(YearSlice(2015, ()), gateway, "m")


def test_malformed_replies_exhaust_with_audit(tmp_path):
    g = Gateway(MockBackend(script=["no", "still no", "nope"]), audit_dir=tmp_path)
    rec = DisclosureRecord("A", "A", "X", "Other", 2015, "Q1", "q", "a")
    with pytest.raises(StructuredOutputError) as info:
        generate_yearly_rubric(YearSlice(2015, (rec,)), g, "m")
    assert len(info.value.replies) == 3 and info.value.audit_file.is_file()


def test_regeneration_is_identical(tmp_path, fixture_corpus):
    sl = partition_by_year(fixture_corpus)[2011]
    backend = MockBackend(7)
    g = Gateway(backend, FileCache(tmp_path))
    a = generate_yearly_rubric(sl, g, "m")
    b = generate_yearly_rubric(sl, Gateway(MockBackend(7)), "m")
    c = generate_yearly_rubric(sl, g, "m")
    assert a == b == c and backend.calls == 1


def test_stratified_sample_balances_sectors(fixture_corpus):
    sl = partition_by_year(fixture_corpus)[2010]
    picked = stratified_sample(sl, 6, seed=1)
    assert len(picked) == 6 == len(set(picked))
    sectors = {min(r.sector for r in sl.by_company[c]) for c in picked}
    assert len(sectors) == 6  # five groups plus Other, one each
    assert picked == stratified_sample(sl, 6, seed=1)
    req, info = yearly_rubric_request(sl, "m", SamplingConfig(max_companies=6))
    assert info["sampled"] is True and req.user_text.count("=== COMPANY ") == 6


def test_answers_truncated_to_budget(fixture_corpus):
    sl = partition_by_year(fixture_corpus)[2010]
    req, _ = yearly_rubric_request(sl, "m", SamplingConfig(max_answer_chars=5, hide_years=False))
    for line in req.user_text.splitlines():
        if line.startswith("A: "):
            assert len(line) <= 3 + 5


def test_mask_years():
    assert mask_years("In 2015 and 1999, not 12015 or 305") == "In [YEAR] and [YEAR], not 12015 or 305"


# -- master aggregation -------------------------------------------------------------------------------

def _yearly_set(n_years: int) -> RubricSet:
    base = reference_rubric("table1")
    return RubricSet({2010 + i: replace(base, rubric_id=f"yearly:{2010 + i}") for i in range(n_years)})


def test_master_over_eleven_years(gateway, tmp_path):
    rs = _yearly_set(11)
    m = aggregate_master_rubric(rs, gateway, "m", out_dir=tmp_path)
    assert m.rubric_id == "master" and rs.master is m
    assert [it.max_points for it in m.items] == [4] * 5 and m.max_total == 20
    assert validate_rubric(m).ok
    assert load_rubric_set(tmp_path).master == m


def test_master_with_two_years(gateway):
    assert aggregate_master_rubric(_yearly_set(2), gateway, "m").max_total == 20


def test_master_needs_two_years(gateway):
    with pytest.raises(ValueError, match="at least 2"):
        aggregate_master_rubric(_yearly_set(1), gateway, "m")


def test_master_prompt_holds_only_rubrics():
    rs = _yearly_set(3)
    req = master_rubric_request(rs, "m")
    assert req.user_text.count("=== RUBRIC ") == 3
    assert "=== COMPANY" not in req.user_text
    assert req.user_text.startswith(prompts.MASTER_INSTRUCTION.format(n=3))


def test_master_requires_yearly():
    with pytest.raises(ValueError):
        RubricSet({}, reference_rubric("table2"))
