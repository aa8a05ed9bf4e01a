"""Hypothesis strategies shared by the test modules."""

from fractions import Fraction

from hypothesis import strategies as st

from crgerm.jet import Jet
from crgerm.numbers import QQi

small_fractions = st.builds(Fraction, st.integers(-6, 6), st.integers(1, 4))
gaussian = st.builds(QQi, small_fractions, small_fractions)
nonzero_gaussian = gaussian.filter(lambda c: not c.is_zero())


def exponents(slots=(0, 1, 2), max_degree=8):
    def build(parts):
        e = [0, 0, 0, 0]
        for k, p in zip(slots, parts):
            e[k] = p
        return tuple(e)

    return st.lists(st.integers(0, max_degree), min_size=len(slots), max_size=len(slots)).map(build).filter(
        lambda e: sum(e) <= max_degree)


@st.composite
def jets(draw, slots=(0, 1, 2), cutoff=6, max_terms=5, min_degree=0):
    exps = draw(st.lists(exponents(slots, cutoff).filter(lambda e: sum(e) >= min_degree), max_size=max_terms))
    terms = {e: draw(gaussian) for e in exps}
    return Jet(terms, cutoff)


@st.composite
def real_jets(draw, cutoff=6, max_terms=4, min_degree=0, with_v=True):
    slots = (0, 1, 2) if with_v else (0, 1)
    return draw(jets(slots, cutoff, max_terms, min_degree)).real_part()


@st.composite
def t_series(draw, cutoff=6, max_terms=4, min_degree=1):
    coeffs = draw(st.dictionaries(st.integers(min_degree, cutoff), gaussian, max_size=max_terms))
    return Jet.univariate(coeffs, cutoff)
