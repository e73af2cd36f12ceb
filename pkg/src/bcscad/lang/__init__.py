"""BCS language front end: lexer, parser, AST, selection resolution."""

from .ast import Ast, AstNode, ParseDiagnostic, SelectionError, node_at
from .parser import parse
from .source import LineIndex, SourceSpan

__all__ = [
    "Ast", "AstNode", "LineIndex", "ParseDiagnostic", "SelectionError",
    "SourceSpan", "node_at", "parse",
]
