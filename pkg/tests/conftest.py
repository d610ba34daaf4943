import os

import pytest

from diagramchase.ctxparse import parse_context
from diagramchase.session import Session

CORPUS = os.path.join(os.path.dirname(__file__), "..", "corpus")

DEMO_TEXT = """\
category C
object a b c d : C
morphism m1 m2 m3 : b -> c in C
morphism m' : a -> b in C
morphism m'' : c -> d in C
map f : (a -> b) => (a -> c) in C
hypothesis H1 : m1 = m2 . I
hypothesis H2 : m3 = m2
lemma Hf : forall (m : a -> b in C), f m = m . m1
goal Goal-0 : I . m' . (m3 . I . (I . m'') . (I . I)) = f m' . (I . (I . I . m'' . I))
"""

FCTX_TEXT = """\
category C
object a : C
functor F : C => C
morphism m1 m2 : a -> F a in C
lemma fctx : forall (G : C => C) {x y : C} {f1 f2 : x -> y in C} (p : f1 = f2), G f1 = G f2
goal Goal-0 : F m1 = F m2
"""


def corpus_pairs():
    names = sorted(
        os.path.splitext(f)[0] for f in os.listdir(CORPUS) if f.endswith(".ctx")
    )
    return [
        (os.path.join(CORPUS, f"{n}.ctx"), os.path.join(CORPUS, f"{n}.diag"))
        for n in names
        if os.path.exists(os.path.join(CORPUS, f"{n}.diag"))
    ]


@pytest.fixture
def demo_ctx():
    return parse_context(DEMO_TEXT)


@pytest.fixture
def demo_session(demo_ctx):
    return Session(demo_ctx)


@pytest.fixture
def fctx_ctx():
    return parse_context(FCTX_TEXT)


@pytest.fixture
def fctx_session(fctx_ctx):
    return Session(fctx_ctx)
