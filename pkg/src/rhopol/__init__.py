"""Rho-calculus interpreter, namespace-logic checker and ocap policy tooling."""
import sys

from .syntax import (
    STOP, Add, Bind, Choice, Drop, Ground, Input, IntLit, Match, Output, Par, Proc, Quote,
    StrLit, Stop, Sub, Undefined, Var, canonicalize, free_names, name_equiv, names, pretty,
    struct_congruent, substitute,
)
from .parser import ParseError, parse_proc, parse_surface

# deep quoted terms recurse once per nesting level
sys.setrecursionlimit(max(sys.getrecursionlimit(), 20000))

__version__ = "0.1.0"
