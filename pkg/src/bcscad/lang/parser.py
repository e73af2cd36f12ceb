"""Recursive-descent parser for BCS, an OpenSCAD subset.

Grammar (see docs/language.md for the full EBNF):

    program       = { statement }
    statement     = assignment | module_def | instantiation
                  | for | if | block | ";"
    assignment    = IDENT "=" expr ";"
    module_def    = "module" IDENT "(" [ param {"," param} ] ")" body_stmt
    param         = IDENT [ "=" expr ]
    instantiation = IDENT "(" [ arg {"," arg} ] ")" ( ";" | body_stmt )
    arg           = [ IDENT "=" ] expr
    for           = "for" "(" IDENT "=" expr ")" body_stmt
    if            = "if" "(" expr ")" body_stmt [ "else" body_stmt ]

Expressions use precedence climbing: || < && < == != < relational <
additive < multiplicative < unary < indexing. Statement spans include
their terminating semicolon, so concatenating top-level statement spans
with the trivia between them reconstructs the source byte for byte.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from . import ast as A
from .lexer import EOF, IDENT, KEYWORD, NUMBER, PUNCT, LexError, Token, tokenize
from .source import LineIndex, SourceSpan

_BINARY_PREC = {
    "||": 1,
    "&&": 2,
    "==": 3, "!=": 3,
    "<": 4, "<=": 4, ">": 4, ">=": 4,
    "+": 5, "-": 5,
    "*": 6, "/": 6, "%": 6,
}

# Statements allowed as the child of an instantiation, for, or if.
_CHILD_STARTERS = {"for", "if"}


@dataclass
class _PNode:
    """Parser-internal node; ids are assigned after the tree is complete."""

    kind: str
    start: int
    end: int
    name: str | None = None
    children: list["_PNode"] = field(default_factory=list)
    arg_names: list[str | None] | None = None


class _ParseFail(Exception):
    def __init__(self, message: str, start: int, end: int):
        super().__init__(message)
        self.message = message
        self.start = start
        self.end = end


def parse(source: str) -> tuple[A.Ast | None, list[A.ParseDiagnostic]]:
    """Parse source into an Ast.

    Returns (ast, diagnostics). Error diagnostics imply ast is None;
    a successful parse returns an empty diagnostic list.
    """
    index = LineIndex(source)
    try:
        tokens = tokenize(source, index)
    except LexError as err:
        return None, [A.ParseDiagnostic(err.message, err.span)]
    parser = _Parser(source, index, tokens)
    try:
        root = parser.parse_program()
    except _ParseFail as err:
        span = index.span(err.start, err.end)
        return None, [A.ParseDiagnostic(err.message, span)]
    return _number_nodes(source, index, root), []


class _Parser:
    def __init__(self, source: str, index: LineIndex, tokens: list[Token]):
        self.index = index
        self.tokens = tokens
        self.pos = 0

    # Token helpers -----------------------------------------------------

    def cur(self) -> Token:
        return self.tokens[self.pos]

    def peek(self, ahead: int = 1) -> Token:
        i = min(self.pos + ahead, len(self.tokens) - 1)
        return self.tokens[i]

    def advance(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != EOF:
            self.pos += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.cur()
        return tok.kind == kind and (text is None or tok.text == text)

    def expect(self, kind: str, text: str | None = None) -> Token:
        if self.at(kind, text):
            return self.advance()
        tok = self.cur()
        want = text or kind
        return self._fail(f"expected '{want}'", tok)

    def _fail(self, message: str, tok: Token):
        start, end = tok.start, tok.end
        if start == end:  # zero-width EOF token: anchor on the last byte
            n = len(self.index.data)
            if n == 0:
                raise _ParseFail(message, 0, 0)
            start, end = n - 1, n
        raise _ParseFail(message, start, end)

    def expect_semi(self) -> Token:
        """Expect ';', anchoring the diagnostic right after the last token."""
        if self.at(PUNCT, ";"):
            return self.advance()
        prev = self.tokens[self.pos - 1] if self.pos > 0 else self.cur()
        n = len(self.index.data)
        start = min(prev.end, max(0, n - 1))
        end = min(start + 1, n)
        raise _ParseFail("expected ';' at end of statement", start, end)

    # Statements --------------------------------------------------------

    def parse_program(self) -> _PNode:
        statements: list[_PNode] = []
        while not self.at(EOF):
            stmt = self.parse_statement()
            if stmt is not None:
                statements.append(stmt)
        return _PNode(A.BLOCK, 0, len(self.index.data), children=statements)

    def parse_statement(self) -> _PNode | None:
        tok = self.cur()
        if tok.kind == PUNCT and tok.text == ";":
            self.advance()
            return None
        if tok.kind == PUNCT and tok.text == "{":
            return self.parse_block()
        if tok.kind == KEYWORD:
            if tok.text == "module":
                return self.parse_module_def()
            if tok.text == "for":
                return self.parse_for()
            if tok.text == "if":
                return self.parse_if()
            self._fail(f"unexpected keyword '{tok.text}'", tok)
        if tok.kind == IDENT:
            nxt = self.peek()
            if nxt.kind == PUNCT and nxt.text == "=":
                return self.parse_assignment()
            if nxt.kind == PUNCT and nxt.text == "(":
                return self.parse_instantiation()
            self._fail("expected '=' or '(' after identifier", nxt)
        return self._fail("expected statement", tok)

    def parse_block(self) -> _PNode:
        lbrace = self.expect(PUNCT, "{")
        statements: list[_PNode] = []
        while not self.at(PUNCT, "}"):
            if self.at(EOF):
                self._fail("unterminated block; expected '}'", self.cur())
            stmt = self.parse_statement()
            if stmt is not None:
                statements.append(stmt)
        rbrace = self.advance()
        return _PNode(A.BLOCK, lbrace.start, rbrace.end, children=statements)

    def parse_assignment(self) -> _PNode:
        name = self.expect(IDENT)
        self.expect(PUNCT, "=")
        value = self.parse_expr()
        semi = self.expect_semi()
        return _PNode(A.ASSIGNMENT, name.start, semi.end, name=name.text,
                      children=[value])

    def parse_module_def(self) -> _PNode:
        kw = self.expect(KEYWORD, "module")
        name = self.expect(IDENT)
        self.expect(PUNCT, "(")
        params: list[_PNode] = []
        names: list[str | None] = []
        if not self.at(PUNCT, ")"):
            while True:
                params.append(self.parse_param())
                names.append(params[-1].name)
                if self.at(PUNCT, ","):
                    self.advance()
                    continue
                break
        self.expect(PUNCT, ")")
        body = self.parse_body_statement("module body")
        return _PNode(A.MODULE_DEF, kw.start, body.end, name=name.text,
                      children=params + [body], arg_names=names)

    def parse_param(self) -> _PNode:
        name = self.expect(IDENT)
        if self.at(PUNCT, "="):
            self.advance()
            default = self.parse_expr()
            return _PNode(A.ASSIGNMENT, name.start, default.end,
                          name=name.text, children=[default])
        return _PNode(A.IDENT, name.start, name.end, name=name.text)

    def parse_instantiation(self) -> _PNode:
        name = self.advance()
        self.expect(PUNCT, "(")
        args: list[_PNode] = []
        names: list[str | None] = []
        if not self.at(PUNCT, ")"):
            while True:
                if (self.at(IDENT)
                        and self.peek().kind == PUNCT and self.peek().text == "="):
                    arg_name = self.advance()
                    self.advance()
                    args.append(self.parse_expr())
                    names.append(arg_name.text)
                else:
                    args.append(self.parse_expr())
                    names.append(None)
                if self.at(PUNCT, ","):
                    self.advance()
                    continue
                break
        rparen = self.expect(PUNCT, ")")
        children = list(args)
        end = rparen.end
        if self.at(PUNCT, ";"):
            end = self.advance().end
        else:
            child = self.parse_child_statement()
            children.append(child)
            end = child.end
        return _PNode(A.INSTANTIATION, name.start, end, name=name.text,
                      children=children, arg_names=names)

    def parse_child_statement(self) -> _PNode:
        """A statement allowed under an instantiation/for/if head."""
        tok = self.cur()
        if tok.kind == PUNCT and tok.text == "{":
            return self.parse_block()
        if tok.kind == KEYWORD and tok.text in _CHILD_STARTERS:
            return self.parse_for() if tok.text == "for" else self.parse_if()
        if tok.kind == IDENT:
            nxt = self.peek()
            if nxt.kind == PUNCT and nxt.text == "(":
                return self.parse_instantiation()
        return self._fail("expected a child statement or ';'", tok)

    def parse_body_statement(self, what: str) -> _PNode:
        tok = self.cur()
        if tok.kind == PUNCT and tok.text == "{":
            return self.parse_block()
        try:
            return self.parse_child_statement()
        except _ParseFail:
            return self._fail(f"expected {what}", tok)

    def parse_for(self) -> _PNode:
        kw = self.expect(KEYWORD, "for")
        self.expect(PUNCT, "(")
        var = self.expect(IDENT)
        self.expect(PUNCT, "=")
        iterable = self.parse_expr()
        self.expect(PUNCT, ")")
        body = self.parse_body_statement("loop body")
        return _PNode(A.FOR, kw.start, body.end, name=var.text,
                      children=[iterable, body])

    def parse_if(self) -> _PNode:
        kw = self.expect(KEYWORD, "if")
        self.expect(PUNCT, "(")
        cond = self.parse_expr()
        self.expect(PUNCT, ")")
        then = self.parse_body_statement("if body")
        children = [cond, then]
        end = then.end
        if self.at(KEYWORD, "else"):
            self.advance()
            otherwise = self.parse_body_statement("else body")
            children.append(otherwise)
            end = otherwise.end
        return _PNode(A.IF, kw.start, end, children=children)

    # Expressions --------------------------------------------------------

    def parse_expr(self, min_prec: int = 1) -> _PNode:
        left = self.parse_unary()
        while True:
            tok = self.cur()
            prec = _BINARY_PREC.get(tok.text) if tok.kind == PUNCT else None
            if prec is None or prec < min_prec:
                return left
            self.advance()
            right = self.parse_expr(prec + 1)
            left = _PNode(A.BINARY_OP, left.start, right.end, name=tok.text,
                          children=[left, right])

    def parse_unary(self) -> _PNode:
        tok = self.cur()
        if tok.kind == PUNCT and tok.text in ("-", "!"):
            self.advance()
            operand = self.parse_unary()
            return _PNode(A.UNARY_OP, tok.start, operand.end, name=tok.text,
                          children=[operand])
        return self.parse_postfix()

    def parse_postfix(self) -> _PNode:
        node = self.parse_primary()
        while self.at(PUNCT, "["):
            self.advance()
            index = self.parse_expr()
            rbracket = self.expect(PUNCT, "]")
            node = _PNode(A.INDEX, node.start, rbracket.end,
                          children=[node, index])
        return node

    def parse_primary(self) -> _PNode:
        tok = self.cur()
        if tok.kind == NUMBER:
            self.advance()
            return _PNode(A.NUMBER_LIT, tok.start, tok.end, name=tok.text)
        if tok.kind == KEYWORD and tok.text in ("true", "false"):
            self.advance()
            return _PNode(A.BOOL_LIT, tok.start, tok.end, name=tok.text)
        if tok.kind == IDENT:
            self.advance()
            if self.at(PUNCT, "("):
                self.advance()
                args: list[_PNode] = []
                if not self.at(PUNCT, ")"):
                    while True:
                        args.append(self.parse_expr())
                        if self.at(PUNCT, ","):
                            self.advance()
                            continue
                        break
                rparen = self.expect(PUNCT, ")")
                return _PNode(A.CALL, tok.start, rparen.end, name=tok.text,
                              children=args)
            return _PNode(A.IDENT, tok.start, tok.end, name=tok.text)
        if tok.kind == PUNCT and tok.text == "(":
            self.advance()
            inner = self.parse_expr()
            self.expect(PUNCT, ")")
            return inner
        if tok.kind == PUNCT and tok.text == "[":
            return self.parse_vector_or_range()
        return self._fail("expected expression", tok)

    def parse_vector_or_range(self) -> _PNode:
        lbracket = self.expect(PUNCT, "[")
        if self.at(PUNCT, "]"):
            rbracket = self.advance()
            return _PNode(A.VECTOR_LIT, lbracket.start, rbracket.end)
        first = self.parse_expr()
        if self.at(PUNCT, ":"):
            self.advance()
            second = self.parse_expr()
            parts = [first, second]
            if self.at(PUNCT, ":"):
                self.advance()
                parts.append(self.parse_expr())
            rbracket = self.expect(PUNCT, "]")
            return _PNode(A.RANGE_LIT, lbracket.start, rbracket.end,
                          children=parts)
        elements = [first]
        while self.at(PUNCT, ","):
            self.advance()
            elements.append(self.parse_expr())
        rbracket = self.expect(PUNCT, "]")
        return _PNode(A.VECTOR_LIT, lbracket.start, rbracket.end,
                      children=elements)


def _number_nodes(source: str, index: LineIndex, root: _PNode) -> A.Ast:
    """Assign ids in document (pre-order) order and freeze the node table."""
    nodes: dict[int, A.AstNode] = {}
    counter = 0

    def visit(pnode: _PNode) -> int:
        nonlocal counter
        node_id = counter
        counter += 1
        child_ids = []
        node = A.AstNode(node_id, pnode.kind, index.span(pnode.start, pnode.end),
                         pnode.name, child_ids, pnode.arg_names)
        nodes[node_id] = node
        for child in pnode.children:
            child_ids.append(visit(child))
        return node_id

    root_id = visit(root)
    return A.Ast(source, index, root_id, nodes)
