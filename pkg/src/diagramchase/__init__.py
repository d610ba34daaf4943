"""diagramchase: a diagrammatic proof assistant for commutative diagrams."""

from .context import Context, LemmaStatement
from .ctxparse import parse_context, parse_term
from .graph import Diagram, extract_diagram
from .normal import NormalMor, fold, normalize
from .session import Session, replay
from .terms import (
    App,
    CatSort,
    Comp,
    Const,
    EqSort,
    FMor,
    FObj,
    FunctSort,
    Id,
    MapSort,
    Meta,
    MorSort,
    ObjSort,
    Term,
    sort_of,
)
from .trace import check_trace
from .unify import Subst, substitute, unify

__version__ = "0.1.0"

__all__ = [
    "App",
    "CatSort",
    "Comp",
    "Const",
    "Context",
    "Diagram",
    "EqSort",
    "FMor",
    "FObj",
    "FunctSort",
    "Id",
    "LemmaStatement",
    "MapSort",
    "Meta",
    "MorSort",
    "NormalMor",
    "ObjSort",
    "Session",
    "Subst",
    "Term",
    "check_trace",
    "extract_diagram",
    "fold",
    "normalize",
    "parse_context",
    "parse_term",
    "replay",
    "sort_of",
    "substitute",
    "unify",
]
