import pytest
from hypothesis import given
from hypothesis import strategies as st

from termnb.porter import porter_stem

nltk_porter = pytest.importorskip("nltk.stem.porter")
ORACLE = nltk_porter.PorterStemmer(mode=nltk_porter.PorterStemmer.ORIGINAL_ALGORITHM)

# Published examples for the original algorithm, step by step.
CLASSIC = {
    "caresses": "caress", "ponies": "poni", "ties": "ti", "caress": "caress", "cats": "cat",
    "feed": "feed", "agreed": "agre", "plastered": "plaster", "bled": "bled", "motoring": "motor",
    "sing": "sing", "conflated": "conflat", "troubled": "troubl", "sized": "size",
    "hopping": "hop", "tanned": "tan", "falling": "fall", "hissing": "hiss", "fizzed": "fizz",
    "failing": "fail", "filing": "file", "happy": "happi", "sky": "sky",
    "relational": "relat", "conditional": "condit", "rational": "ration", "valenci": "valenc",
    "digitizer": "digit", "operator": "oper", "feudalism": "feudal", "decisiveness": "decis",
    "hopefulness": "hope", "callousness": "callous", "formaliti": "formal",
    "sensitiviti": "sensit", "sensibiliti": "sensibl", "triplicate": "triplic",
    "formative": "form", "formalize": "formal", "electriciti": "electr", "electrical": "electr",
    "hopeful": "hope", "goodness": "good", "revival": "reviv", "allowance": "allow",
    "inference": "infer", "airliner": "airlin", "adjustable": "adjust", "defensible": "defens",
    "irritant": "irrit", "replacement": "replac", "adjustment": "adjust", "dependent": "depend",
    "adoption": "adopt", "homologou": "homolog", "communism": "commun", "activate": "activ",
    "angulariti": "angular", "homologous": "homolog", "effective": "effect",
    "bowdlerize": "bowdler", "probate": "probat", "rate": "rate", "cease": "ceas",
    "controll": "control", "roll": "roll", "generalizations": "gener", "oscillators": "oscil",
}


@pytest.mark.parametrize("word, stem", sorted(CLASSIC.items()))
def test_classic_vectors(word, stem):
    assert porter_stem(word) == stem


@pytest.mark.parametrize("word", sorted(CLASSIC))
def test_classic_vectors_agree_with_oracle(word):
    assert porter_stem(word) == ORACLE.stem(word, to_lowercase=False)


def test_short_words_unchanged():
    for w in ("a", "is", "as", "be"):
        assert porter_stem(w) == w


WORDS = ("pregnant pregnancy weeks weighing weighed born delivered arrived babies induced "
         "contractions hospital beautiful blessed excited finally officially tomorrow yesterday "
         "daughter grandson congratulations welcoming introducing").split()


@pytest.mark.parametrize("word", WORDS)
def test_domain_words_agree_with_oracle(word):
    assert porter_stem(word) == ORACLE.stem(word, to_lowercase=False)


@given(st.text(alphabet="abcdefghijklmnopqrstuvwxyz", min_size=3, max_size=14))
def test_random_words_agree_with_oracle(word):
    assert porter_stem(word) == ORACLE.stem(word, to_lowercase=False)


@given(st.text(alphabet="aeiouysbnltcdgz", min_size=1, max_size=12))
def test_stem_never_grows(word):
    # the "e" restored after -ed/-ing removal never outweighs the removed suffix
    assert len(porter_stem(word)) <= len(word)
