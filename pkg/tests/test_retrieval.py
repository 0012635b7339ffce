import datetime as dt
import io
import re

import pytest
from hypothesis import given
from hypothesis import strategies as st

from termnb.corpus import Corpus, Tweet
from termnb.retrieval import (
    TEMPLATES, Outcome, PatternError, VariantLexicon, compile_pattern, compile_patterns,
    dump_matches, expand_variants, match_tweet, normalize_for_matching, parse_matches,
    parse_pattern_file, retrieve,
)

from conftest import tweet

PATTERN_SAMPLES = [
    (1, Outcome.TERM, "I'm 39 wks pregnant with a 2 year old and feel guilty for relaxing in the afternoon!"),
    (2, Outcome.TERM, "I have 9days til my due date"),
    (3, Outcome.TERM, "I am due in 3 dayssssss"),
    (4, Outcome.TERM, "Can't believe 2days my due date! Getting induced Wednesday. Can't believe it's over"),
    (5, Outcome.TERM, 'This is supposed to be my "last" dr. appt. since I\'m due tmrw'),
    (6, Outcome.NB, "Meet our beautiful son. 8 pounds and 10 ounces! We are so blessed"),
    (7, Outcome.NB, "Excited & proud to introduce our daughter. Born on 20/01/16 at 2:43pm. 3.8kg, 52cm long"),
]


def ids(result):
    return set() if result is None else set(result.pattern_ids)


@pytest.mark.parametrize("pid, outcome, text", PATTERN_SAMPLES)
def test_samples_match_their_pattern(patterns, pid, outcome, text):
    res = match_tweet(tweet(text), patterns)
    assert res is not None and pid in res.pattern_ids
    assert outcome in res.outcomes


def test_outcome_tags_by_pattern(patterns):
    assert [p.outcome for p in patterns] == [Outcome.TERM] * 5 + [Outcome.NB] * 2
    assert [p.pattern_id for p in patterns] == list(range(1, 8))


def test_identity_lexicon_keeps_canonical_keywords():
    pats = compile_patterns(VariantLexicon())
    assert "weeks" in pats[0].source and "wks" not in pats[0].source
    assert not pats[0].regex.search("i'm 39 wks pregnant")
    assert pats[0].regex.search("i'm 39 weeks pregnant")


def test_variant_examples():
    lex = VariantLexicon.from_pairs([("weeks", "wks"), ("tomorrow", "tmrw")])
    pats = {p.pattern_id: p for p in compile_patterns(lex)}
    assert pats[1].regex.search("i'm 39 wks pregnant")
    assert pats[5].regex.search("i'm due tmrw")


def test_expand_variants_longest_first():
    lex = VariantLexicon.from_pairs([("pounds", "lbs"), ("pounds", "lb")])
    alt = expand_variants("pounds", lex)
    assert alt == "(?:pounds|lbs|lb)"
    for word in ("pounds", "lbs", "lb"):
        assert re.fullmatch(alt, word)
    assert expand_variants("xyz", VariantLexicon()) == "xyz"


def test_ounce_variants_inside_pattern6():
    lex = VariantLexicon.from_pairs([("ounces", "oz"), ("ounces", "ozs"), ("pounds", "lbs")])
    p6 = compile_patterns(lex)[5]
    assert p6.regex.search("she was born 8lbs 4oz")
    assert p6.regex.search("given birth to a beautiful 6 lb, 4oz".replace(" lb", " lbs"))


def test_lexicon_always_contains_canonical():
    lex = VariantLexicon.default()
    for canonical, forms in lex.variants.items():
        assert canonical in forms
        assert all(f == f.lower() for f in forms)


@pytest.mark.parametrize("text, pid", [
    ("until I'm 38 weeks I won't relax", 1),
    ("feels like I'm 40 weeks already", 1),
    ("when I'm full term we can induce", 1),
    ("it'll be 2 weeks until my due date", 2),
    ("it was 9 days until my due date", 2),
    ("I'm due in 2 weeks from now", 3),
    ("my due date is in 3 days sooner than expected", 3),
    ("two weeks from today is my due date", 4),
])
def test_lookaround_counterexamples(patterns, text, pid):
    assert pid not in ids(match_tweet(tweet(text), patterns))


def test_positive_forms_without_the_blocked_context(patterns):
    assert 1 in ids(match_tweet(tweet("I'm 38 weeks and I won't relax"), patterns))
    assert 2 in ids(match_tweet(tweet("2 weeks until my due date"), patterns))
    assert 3 in ids(match_tweet(tweet("I'm due in 2 weeks"), patterns))
    assert 4 in ids(match_tweet(tweet("today is my due date"), patterns))


def test_future_be_form_does_not_match_pattern1(patterns):
    # the term tweet of a false-negative user: no "I'm"/"I am" precedes the weeks
    text = "Haven't done maternity pictures or a belly cast & I'll be 39 weeks tomorrow."
    assert 1 not in ids(match_tweet(tweet(text), patterns))


@pytest.mark.parametrize("weeks", range(0, 46))
def test_week_sweep_pattern1(patterns, weeks):
    res = match_tweet(tweet(f"I'm {weeks} weeks pregnant"), patterns)
    assert (1 in ids(res)) == (37 <= weeks <= 42)


def test_pound_ounce_sweep_pattern6(patterns):
    for lb in range(16):
        for oz in range(16):
            res = match_tweet(tweet(f"Our son was born at {lb} lbs {oz} oz!"), patterns)
            normal = (lb == 5 and oz >= 8) or 6 <= lb <= 10
            assert (6 in ids(res)) == normal, (lb, oz)


def test_kilogram_sweep_pattern7(patterns):
    for tenths in range(100):
        kg = f"{tenths // 10}.{tenths % 10}"
        res = match_tweet(tweet(f"Born at 17:15, weighing {kg}kg"), patterns)
        assert (7 in ids(res)) == (25 <= tenths <= 49), kg


def test_gram_sweep_pattern7(patterns):
    for g in range(0, 10000, 37):
        res = match_tweet(tweet(f"baby born today at {g} grams"), patterns)
        assert (7 in ids(res)) == (2500 <= g <= 4999), g


@pytest.mark.parametrize("qty, unit, hit", [
    (21, "days", True), (22, "days", False), (0, "days", True),
    (3, "weeks", True), (4, "weeks", False),
])
def test_due_in_ranges(patterns, qty, unit, hit):
    res = match_tweet(tweet(f"my due date is in {qty} {unit}"), patterns)
    assert (3 in ids(res)) == hit


def test_retweets_excluded(patterns):
    assert match_tweet(tweet("RT @mom: I'm 39 weeks pregnant"), patterns) is None
    assert match_tweet(tweet("rt @mom: I'm 39 weeks pregnant"), patterns) is None
    assert match_tweet(tweet("ART @ the gallery, I'm 39 weeks pregnant"), patterns) is not None


def test_spans_point_into_original_text(patterns):
    text = "OMG I am due in 3 dayssssss and Meet our son: 8 pounds 10 ounces"
    res = match_tweet(tweet(text), patterns)
    assert res.outcomes == {Outcome.TERM, Outcome.NB}
    for _, start, end in res.matched:
        assert 0 <= start < end <= len(text)
    spans = {pid: text[s:e] for pid, s, e in res.matched}
    assert spans[3].lower().startswith("i am due in 3 days")
    assert spans[3].endswith("dayssssss")


def test_elongation_normalization_keeps_index_map():
    norm, origin = normalize_for_matching("Sooooo HAPPPPY")
    assert norm == "so hapy"
    assert len(origin) == len(norm) + 1
    assert origin[-1] == len("Sooooo HAPPPPY")


def test_bad_pattern_reports_id_and_construct():
    with pytest.raises(PatternError) as err:
        compile_pattern(9, Outcome.TERM, r"(?<=a+)b", VariantLexicon())
    assert err.value.pattern_id == 9
    assert "9" in str(err.value)


def test_pattern_file_overrides():
    rows = parse_pattern_file(["# comment", "1\tterm\tfull\\W?term\\b", "2\tNB\tborn"])
    pats = compile_patterns(VariantLexicon(), rows)
    assert [p.outcome for p in pats] == [Outcome.TERM, Outcome.NB]


def _corpus(rows):
    return Corpus.from_tweets(Tweet(f"t{i}", u, dt.date(2016, 1, 1 + i), text)
                              for i, (u, text) in enumerate(rows))


def test_retrieve_keeps_dual_outcome_users(patterns):
    corpus = _corpus([
        ("a", "I'm 39 weeks pregnant"), ("a", "she was born 7 lbs 2 oz"), ("a", "coffee"),
        ("b", "I'm 40 weeks pregnant"),
        ("c", "RT @x: I'm 39 weeks pregnant"), ("c", "born at 3.2kg"),
    ])
    matched, results, report = retrieve(corpus, patterns)
    assert matched.users == ["a"]
    assert set(results) == {"t0", "t1"}
    assert report.retweets_skipped == 1
    assert report.tweets_matched == 4
    assert report.users_matched == 3 and report.dual_outcome_users == 1
    _, all_results, _ = retrieve(corpus, patterns, require_both=False)
    assert len(all_results) == 4


def test_matches_file_round_trip(patterns):
    corpus = _corpus([("a", "I'm 39 weeks pregnant 😊"), ("a", "she was born 7 lbs 2 oz")])
    matched, results, _ = retrieve(corpus, patterns)
    buf = io.StringIO()
    dump_matches(matched, results, buf)
    again, again_results = parse_matches(io.StringIO(buf.getvalue()))
    assert again.tweets == matched.tweets
    assert again_results == results


words = st.sampled_from(["i'm", "I am", "due", "in", "weeks", "days", "born", "lbs", "oz", "3", "39",
                         "8", "kg", "2.8", "my", "due date", "today", "is", "full term", "RT @x:"])


@given(st.lists(words, max_size=12))
def test_match_result_invariants(patterns, parts):
    text = " ".join(parts) or "x"
    res = match_tweet(tweet(text), patterns)
    if res is None:
        return
    by_id = {p.pattern_id: p for p in patterns}
    assert res.matched
    assert res.outcomes == {by_id[pid].outcome for pid in res.pattern_ids}
    for _, start, end in res.matched:
        assert 0 <= start < end <= len(text)


def test_templates_cover_seven_patterns():
    assert [t[0] for t in TEMPLATES] == list(range(1, 8))
