import datetime as dt

import pytest
from hypothesis import settings

from termnb.corpus import Tweet
from termnb.retrieval import compile_patterns
from termnb.synthetic import SynthConfig, generate

settings.register_profile("default", deadline=None)
settings.load_profile("default")


@pytest.fixture(scope="session")
def patterns():
    return compile_patterns()


@pytest.fixture(scope="session")
def synth():
    return generate(SynthConfig(n_users=200, seed=0))


def tweet(text: str, tweet_id: str = "t1", user_id: str = "u1", day: str = "2016-01-01") -> Tweet:
    return Tweet(tweet_id, user_id, dt.date.fromisoformat(day), text)


@pytest.fixture(scope="session")
def synth_filtered(synth, patterns):
    """Synthetic corpus after retrieval and prefix filtering: (corpus, matches)."""
    from termnb.corpus import Corpus
    from termnb.prefilter import prefilter
    from termnb.retrieval import retrieve

    matched, results, _ = retrieve(Corpus.from_tweets(synth.tweets), patterns)
    kept, kept_results, _ = prefilter(matched, results)
    return kept, kept_results


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=lambda s: int(s.split("]")[1].split(".")[0])):
        terminalreporter.write_line(line)
