"""AST to Abstract CSG Tree evaluation.

Expands loops, conditionals, and module calls; records for every CSG node
its instantiating statement (ast_id), the chain of instantiating statements
that produced it (call_stack), and the taint of its parameters. Scoping is
OpenSCAD style: the last assignment of a name in a scope wins for the whole
scope, a module body sees its parameters plus file-level assignments, and
loop variables are scoped to the loop body.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import mats
from .csg import (
    BOOLEAN_KINDS, DIFFERENCE, GROUP, INTERSECTION, PRIM_CUBE, PRIM_CYLINDER,
    PRIM_KINDS, PRIM_SPHERE, ROTATE, SCALE, TRANSLATE, UNION,
    CsgNode, CsgTree, EvalDiagnostic, EvalError, EvalLimits,
)
from .lang import ast as A
from .lang.ast import Ast, AstNode
from .values import EMPTY_TAINT, Value

DEFAULT_FN = 32
MIN_FN = 3

_BOOLEAN_NAMES = {"union": UNION, "difference": DIFFERENCE,
                  "intersection": INTERSECTION}


@dataclass
class _Binding:
    value: Value
    binder_id: int | None


class _Scope:
    __slots__ = ("parent", "vars", "modules")

    def __init__(self, parent: "_Scope | None" = None):
        self.parent = parent
        self.vars: dict[str, _Binding] = {}
        self.modules: dict[str, AstNode] = {}

    def lookup(self, name: str) -> _Binding | None:
        scope: _Scope | None = self
        while scope is not None:
            hit = scope.vars.get(name)
            if hit is not None:
                return hit
            scope = scope.parent
        return None

    def lookup_module(self, name: str) -> AstNode | None:
        scope: _Scope | None = self
        while scope is not None:
            hit = scope.modules.get(name)
            if hit is not None:
                return hit
            scope = scope.parent
        return None


@dataclass
class _TNode:
    """Tree node before path ids are assigned."""

    kind: str
    params: dict
    matrix: np.ndarray
    ast_id: int
    call_stack: tuple[int, ...]
    taint: frozenset[int]
    children: list["_TNode"] = field(default_factory=list)


def evaluate_program(ast: Ast, limits: EvalLimits | None = None,
                     default_fn: int = DEFAULT_FN) -> CsgTree:
    """Evaluate a parsed program into a CsgTree.

    Raises EvalError carrying the diagnostic on undefined names, type
    errors, or exceeded limits; warnings are collected on the tree.
    """
    return _Evaluator(ast, limits or EvalLimits(), default_fn).run()


def eval_expr(expr: AstNode, env: "dict[str, Value] | _Scope") -> Value:
    """Evaluate one expression against an environment (name -> Value)."""
    ev = _Evaluator(expr.ast, EvalLimits(), DEFAULT_FN)
    if isinstance(env, _Scope):
        scope = env
    else:
        scope = _Scope()
        for name, value in env.items():
            scope.vars[name] = _Binding(value, None)
    return ev._eval(expr, scope)


class _Evaluator:
    def __init__(self, ast: Ast | None, limits: EvalLimits, default_fn: int):
        self.ast = ast
        self.limits = limits
        self.default_fn = default_fn
        self.warnings: list[EvalDiagnostic] = []
        self.expr_taints: dict[int, frozenset[int]] = {}
        self.ident_binders: dict[int, frozenset[int]] = {}
        self.node_count = 0
        self.call_depth = 0
        self.root_scope = _Scope()

    # Entry ---------------------------------------------------------------

    def run(self) -> CsgTree:
        assert self.ast is not None
        root_stmt = self.ast.node(self.ast.root)
        children = self._run_statements(self.ast.children(root_stmt),
                                        self.root_scope, ())
        t_root = _TNode(GROUP, {}, np.eye(4), root_stmt.id, (root_stmt.id,),
                        EMPTY_TAINT, children)
        root = _freeze(t_root, "")
        return CsgTree(root, self.ast, self.expr_taints, self.ident_binders,
                       self.warnings)

    def _warn(self, message: str, node: AstNode) -> None:
        self.warnings.append(EvalDiagnostic(message, node.span, "warning"))

    def _error(self, message: str, node: AstNode):
        raise EvalError(EvalDiagnostic(message, node.span, "error"))

    def _new_node(self, stmt: AstNode, *args) -> _TNode:
        self.node_count += 1
        if self.node_count > self.limits.max_csg_nodes:
            self._error(
                f"max_csg_nodes exceeded ({self.limits.max_csg_nodes})", stmt)
        return _TNode(*args)

    # Statement evaluation --------------------------------------------------

    def _run_statements(self, stmts: list[AstNode], scope: _Scope,
                        stack: tuple[int, ...]) -> list[_TNode]:
        """Evaluate one lexical scope: hoist modules and assignment slots,
        then instantiate."""
        slots: dict[str, AstNode] = {}
        for stmt in stmts:
            if stmt.kind == A.MODULE_DEF:
                if stmt.name in scope.modules:
                    self._warn(f"module '{stmt.name}' redefined; "
                               "last definition wins", stmt)
                scope.modules[stmt.name] = stmt
            elif stmt.kind == A.ASSIGNMENT:
                if stmt.name in slots:
                    self._warn(f"variable '{stmt.name}' reassigned; "
                               "last assignment wins for the whole scope", stmt)
                    # keep the slot position of the first occurrence
                slots[stmt.name] = stmt

        for name, stmt in slots.items():
            value = self._eval(self.ast.node(stmt.children[0]), scope)
            bound = value.with_taint(frozenset({stmt.id}))
            scope.vars[name] = _Binding(bound, stmt.id)

        nodes: list[_TNode] = []
        for stmt in stmts:
            if stmt.kind in (A.MODULE_DEF, A.ASSIGNMENT):
                continue
            nodes.extend(self._eval_statement(stmt, scope, stack))
        return nodes

    def _eval_statement(self, stmt: AstNode, scope: _Scope,
                        stack: tuple[int, ...]) -> list[_TNode]:
        """One statement's nodes, minus composites holding no geometry.

        A group, transform, or union whose entire body evaluated to
        nothing (an untaken branch, a loop iteration gated away) does
        not enter the tree at all, so every structural node bottoms out
        in primitive leaves and booleans see only rendering operands.
        """
        produced = self._statement_nodes(stmt, scope, stack)
        return [n for n in produced if n.children or n.kind in PRIM_KINDS]

    def _statement_nodes(self, stmt: AstNode, scope: _Scope,
                         stack: tuple[int, ...]) -> list[_TNode]:
        if stmt.kind == A.INSTANTIATION:
            return [self._eval_instantiation(stmt, scope, stack)]
        if stmt.kind == A.FOR:
            return self._eval_for(stmt, scope, stack)
        if stmt.kind == A.IF:
            return self._eval_if(stmt, scope, stack)
        if stmt.kind == A.BLOCK:
            inner = self._run_statements(self.ast.children(stmt),
                                         _Scope(scope), stack + (stmt.id,))
            return [self._new_node(stmt, GROUP, {}, np.eye(4), stmt.id,
                                   stack + (stmt.id,), EMPTY_TAINT, inner)]
        self._error("statement cannot be instantiated here", stmt)

    def _child_statements(self, stmt: AstNode) -> list[AstNode]:
        """The trailing child statement of an instantiation, if any."""
        kids = self.ast.children(stmt)
        n_args = len(stmt.arg_names or [])
        return kids[n_args:]

    def _eval_children(self, stmt: AstNode, scope: _Scope,
                       stack: tuple[int, ...]) -> list[_TNode]:
        out: list[_TNode] = []
        for child in self._child_statements(stmt):
            if child.kind == A.BLOCK:
                out.extend(self._run_statements(self.ast.children(child),
                                                _Scope(scope), stack))
            else:
                out.extend(self._eval_statement(child, scope, stack))
        return out

    def _eval_instantiation(self, stmt: AstNode, scope: _Scope,
                            stack: tuple[int, ...]) -> _TNode:
        name = stmt.name
        node_stack = stack + (stmt.id,)
        if name in ("cube", "sphere", "cylinder"):
            if self._child_statements(stmt):
                self._warn(f"'{name}' is a primitive; child statement ignored",
                           stmt)
            return self._eval_primitive(stmt, scope, node_stack)
        if name in ("translate", "rotate", "scale"):
            return self._eval_transform(stmt, scope, node_stack)
        if name in _BOOLEAN_NAMES:
            args, _ = self._bind_args(stmt, scope, ())
            if args:
                self._warn(f"'{name}' takes no arguments; ignored", stmt)
            children = self._eval_children(stmt, scope, node_stack)
            kind = _BOOLEAN_NAMES[name]
            if kind == DIFFERENCE and not children:
                self._error("difference requires at least one child solid",
                            stmt)
            return self._new_node(stmt, kind, {}, np.eye(4), stmt.id,
                                  node_stack, EMPTY_TAINT, children)
        return self._eval_module_call(stmt, scope, node_stack)

    # Argument binding ------------------------------------------------------

    def _bind_args(self, stmt: AstNode, scope: _Scope,
                   positional: tuple[str, ...],
                   named_extra: tuple[str, ...] = ()):
        """Evaluate instantiation arguments against a builtin signature.

        Returns (bound, taint): bound maps parameter name to
        (Value, arg expr node); taint is the union over all accepted
        arguments, which becomes the CSG node's taint.
        """
        kids = self.ast.children(stmt)
        names = stmt.arg_names or []
        allowed = set(positional) | set(named_extra) | {"$fn"}
        bound: dict[str, tuple[Value, AstNode]] = {}
        taint = EMPTY_TAINT
        pos_index = 0
        for arg_name, expr in zip(names, kids):
            value = self._eval(expr, scope)
            if arg_name is None:
                if pos_index >= len(positional):
                    self._warn("too many positional arguments; extra ignored",
                               expr)
                    continue
                arg_name = positional[pos_index]
                pos_index += 1
            elif arg_name not in allowed:
                self._warn(f"unknown argument '{arg_name}' ignored", expr)
                continue
            bound[arg_name] = (value, expr)
            taint |= value.deep_taint()
        return bound, taint

    def _resolve_fn(self, bound: dict, scope: _Scope,
                    stmt: AstNode) -> tuple[int, frozenset[int]]:
        """Facet count: $fn argument, then lexical $fn, then the default."""
        if "$fn" in bound:
            value, expr = bound["$fn"]
            self._as_number(value, "$fn", expr)
        else:
            binding = scope.lookup("$fn")
            if binding is None:
                return self.default_fn, EMPTY_TAINT
            value = binding.value
            if not value.is_number:
                self._warn("$fn is not a number; using default", stmt)
                return self.default_fn, value.deep_taint()
        return max(MIN_FN, int(round(value.data))), value.deep_taint()

    # Typed accessors ---------------------------------------------------------

    def _as_number(self, value: Value, what: str, node: AstNode) -> float:
        if not value.is_number:
            self._error(f"type error: {what} must be a number, got {value.kind}",
                        node)
        return float(value.data)

    def _as_bool(self, value: Value, what: str, node: AstNode) -> bool:
        if value.kind != "bool":
            self._error(f"type error: {what} must be true or false, "
                        f"got {value.kind}", node)
        return bool(value.data)

    def _as_vec(self, value: Value, what: str, node: AstNode, size: int,
                pad: float | None) -> tuple[float, ...]:
        """Vector of numbers, padded with `pad` when shorter (None = exact)."""
        if not value.is_vector:
            self._error(f"type error: {what} must be a vector, got {value.kind}",
                        node)
        items = value.data
        if len(items) > size or (pad is None and len(items) != size):
            self._error(f"type error: {what} must have {size} components", node)
        out = []
        for item in items:
            if not item.is_number:
                self._error(f"type error: {what} components must be numbers",
                            node)
            out.append(float(item.data))
        while len(out) < size:
            out.append(pad)
        return tuple(out)

    # Primitives --------------------------------------------------------------

    def _eval_primitive(self, stmt: AstNode, scope: _Scope,
                        node_stack: tuple[int, ...]) -> _TNode:
        name = stmt.name
        if name == "cube":
            bound, taint = self._bind_args(stmt, scope, ("size", "center"))
            size_v, size_node = bound.get("size", (Value.number(1.0), stmt))
            if size_v.is_number:
                s = float(size_v.data)
                size = (s, s, s)
            else:
                size = self._as_vec(size_v, "cube size", size_node, 3, None)
            center = False
            if "center" in bound:
                center = self._as_bool(bound["center"][0], "cube center",
                                       bound["center"][1])
            params = {"size": size, "center": center}
            return self._new_node(stmt, PRIM_CUBE, params, np.eye(4), stmt.id,
                                  node_stack, taint, [])
        if name == "sphere":
            bound, taint = self._bind_args(stmt, scope, ("r",))
            r_v, r_node = bound.get("r", (Value.number(1.0), stmt))
            r = self._as_number(r_v, "sphere r", r_node)
            fn, fn_taint = self._resolve_fn(bound, scope, stmt)
            params = {"r": r, "fn": fn}
            return self._new_node(stmt, PRIM_SPHERE, params, np.eye(4), stmt.id,
                                  node_stack, taint | fn_taint, [])
        # cylinder
        bound, taint = self._bind_args(stmt, scope, ("h", "r", "center"),
                                       ("r1", "r2"))
        h_v, h_node = bound.get("h", (Value.number(1.0), stmt))
        h = self._as_number(h_v, "cylinder h", h_node)
        r = 1.0
        if "r" in bound:
            r = self._as_number(bound["r"][0], "cylinder r", bound["r"][1])
        r1, r2 = r, r
        if "r1" in bound:
            r1 = self._as_number(bound["r1"][0], "cylinder r1", bound["r1"][1])
        if "r2" in bound:
            r2 = self._as_number(bound["r2"][0], "cylinder r2", bound["r2"][1])
        center = False
        if "center" in bound:
            center = self._as_bool(bound["center"][0], "cylinder center",
                                   bound["center"][1])
        fn, fn_taint = self._resolve_fn(bound, scope, stmt)
        params = {"h": h, "r1": r1, "r2": r2, "center": center, "fn": fn}
        return self._new_node(stmt, PRIM_CYLINDER, params, np.eye(4), stmt.id,
                              node_stack, taint | fn_taint, [])

    # Transforms ----------------------------------------------------------------

    def _eval_transform(self, stmt: AstNode, scope: _Scope,
                        node_stack: tuple[int, ...]) -> _TNode:
        name = stmt.name
        bound, taint = self._bind_args(stmt, scope,
                                       ("v",) if name != "rotate" else ("a",))
        children = self._eval_children(stmt, scope, node_stack)
        if name == "translate":
            v_v, v_node = bound.get("v", (Value.vector(()), stmt))
            v = self._as_vec(v_v, "translate vector", v_node, 3, 0.0)
            return self._new_node(stmt, TRANSLATE, {"v": v},
                                  mats.translation(v), stmt.id, node_stack,
                                  taint, children)
        if name == "scale":
            v_v, v_node = bound.get("v", (Value.number(1.0), stmt))
            if v_v.is_number:
                s = float(v_v.data)
                v = (s, s, s)
            else:
                v = self._as_vec(v_v, "scale vector", v_node, 3, 1.0)
            return self._new_node(stmt, SCALE, {"v": v}, mats.scaling(v),
                                  stmt.id, node_stack, taint, children)
        a_v, a_node = bound.get("a", (Value.number(0.0), stmt))
        if a_v.is_number:
            a = (0.0, 0.0, float(a_v.data))  # rotate(a) spins about z
        else:
            a = self._as_vec(a_v, "rotate angles", a_node, 3, 0.0)
        return self._new_node(stmt, ROTATE, {"a": a},
                              mats.rotation_xyz(*a), stmt.id, node_stack,
                              taint, children)

    # Loops, conditionals, module calls ----------------------------------------

    def _iteration_values(self, stmt: AstNode, iterable: Value) -> list[Value]:
        taint = iterable.deep_taint()
        if iterable.kind == "range":
            start, step, end = iterable.data
            count = math.floor((end - start) / step + 1e-9) + 1
            if count > self.limits.max_loop_iterations:
                self._error("max_loop_iterations exceeded "
                            f"({self.limits.max_loop_iterations})", stmt)
            return [Value.number(start + k * step, taint)
                    for k in range(max(0, count))]
        if iterable.is_vector:
            if len(iterable.data) > self.limits.max_loop_iterations:
                self._error("max_loop_iterations exceeded "
                            f"({self.limits.max_loop_iterations})", stmt)
            return [item.with_taint(taint) for item in iterable.data]
        if iterable.is_number:
            return [iterable]  # OpenSCAD iterates a bare number once
        self._warn("for loop iterable is not a range or vector; "
                   "loop produces nothing", stmt)
        return []

    def _eval_for(self, stmt: AstNode, scope: _Scope,
                  stack: tuple[int, ...]) -> list[_TNode]:
        iter_expr, body = self.ast.children(stmt)
        iterable = self._eval(iter_expr, scope)
        groups: list[_TNode] = []
        for value in self._iteration_values(stmt, iterable):
            body_scope = _Scope(scope)
            bound = value.with_taint(frozenset({stmt.id}))
            body_scope.vars[stmt.name] = _Binding(bound, stmt.id)
            inner = self._scoped_body(body, body_scope, stack + (stmt.id,))
            groups.append(self._new_node(
                stmt, GROUP, {}, np.eye(4), stmt.id, stack + (stmt.id,),
                bound.deep_taint(), inner))
        return groups

    def _eval_if(self, stmt: AstNode, scope: _Scope,
                 stack: tuple[int, ...]) -> list[_TNode]:
        kids = self.ast.children(stmt)
        cond = self._eval(kids[0], scope)
        branch = kids[1] if cond.truthy() else (kids[2] if len(kids) > 2 else None)
        if branch is None:
            return []
        inner = self._scoped_body(branch, _Scope(scope), stack + (stmt.id,))
        return [self._new_node(stmt, GROUP, {}, np.eye(4), stmt.id,
                               stack + (stmt.id,), EMPTY_TAINT, inner)]

    def _scoped_body(self, body: AstNode, scope: _Scope,
                     stack: tuple[int, ...]) -> list[_TNode]:
        if body.kind == A.BLOCK:
            return self._run_statements(self.ast.children(body), scope, stack)
        return self._eval_statement(body, scope, stack)

    def _eval_module_call(self, stmt: AstNode, scope: _Scope,
                          node_stack: tuple[int, ...]) -> _TNode:
        mdef = scope.lookup_module(stmt.name)
        if mdef is None:
            self._error(f"undefined module '{stmt.name}'", stmt)
        if self._child_statements(stmt):
            self._warn("module call child statements are not supported; "
                       "ignored", stmt)
        if self.call_depth + 1 > self.limits.max_recursion_depth:
            self._error("max_recursion_depth exceeded "
                        f"({self.limits.max_recursion_depth})", stmt)

        params = self.ast.children(mdef)[:-1]
        body = self.ast.children(mdef)[-1]
        param_names = list(mdef.arg_names or [])

        kids = self.ast.children(stmt)
        names = stmt.arg_names or []
        values: dict[str, tuple[Value, AstNode]] = {}
        taint = EMPTY_TAINT
        pos_index = 0
        for arg_name, expr in zip(names, kids):
            value = self._eval(expr, scope)
            if arg_name is None:
                if pos_index >= len(param_names):
                    self._warn("too many positional arguments; extra ignored",
                               expr)
                    continue
                arg_name = param_names[pos_index]
                pos_index += 1
            elif arg_name not in param_names:
                self._warn(f"unknown parameter '{arg_name}' ignored", expr)
                continue
            values[arg_name] = (value, expr)
            taint |= value.deep_taint()

        body_scope = _Scope(self.root_scope)
        for param in params:
            pname = param.name
            if pname in values:
                value = values[pname][0]
            elif param.kind == A.ASSIGNMENT:
                value = self._eval(self.ast.node(param.children[0]),
                                   self.root_scope)
            else:
                self._warn(f"parameter '{pname}' missing; undef", stmt)
                value = Value.undef()
            body_scope.vars[pname] = _Binding(
                value.with_taint(frozenset({param.id})), param.id)

        self.call_depth += 1
        try:
            inner = self._scoped_body(body, body_scope, node_stack)
        finally:
            self.call_depth -= 1
        return self._new_node(stmt, GROUP, {}, np.eye(4), stmt.id, node_stack,
                              taint, inner)

    # Expressions ---------------------------------------------------------------

    def _eval(self, expr: AstNode, scope: _Scope) -> Value:
        result = self._eval_inner(expr, scope)
        deep = result.deep_taint()
        if deep:
            prev = self.expr_taints.get(expr.id, EMPTY_TAINT)
            self.expr_taints[expr.id] = prev | deep
        return result

    def _eval_inner(self, expr: AstNode, scope: _Scope) -> Value:
        kind = expr.kind
        if kind == A.NUMBER_LIT:
            return Value.number(float(expr.name))
        if kind == A.BOOL_LIT:
            return Value.boolean(expr.name == "true")
        if kind == A.IDENT:
            binding = scope.lookup(expr.name)
            if binding is None:
                self._error(f"undefined variable '{expr.name}'", expr)
            if binding.binder_id is not None:
                prev = self.ident_binders.get(expr.id, EMPTY_TAINT)
                self.ident_binders[expr.id] = prev | {binding.binder_id}
            return binding.value
        if kind == A.VECTOR_LIT:
            items = tuple(self._eval(self.ast.node(c), scope)
                          for c in expr.children)
            return Value.vector(items)
        if kind == A.RANGE_LIT:
            parts = [self._eval(self.ast.node(c), scope) for c in expr.children]
            nums = []
            taint = EMPTY_TAINT
            for part, child in zip(parts, expr.children):
                if not part.is_number:
                    self._error("type error: range bounds must be numbers",
                                self.ast.node(child))
                nums.append(float(part.data))
                taint |= part.deep_taint()
            if len(nums) == 2:
                start, step, end = nums[0], 1.0, nums[1]
            else:
                start, step, end = nums
            if step == 0:
                self._error("range step must be nonzero", expr)
            return Value.range_(start, step, end, taint)
        if kind == A.UNARY_OP:
            return self._eval_unary(expr, scope)
        if kind == A.BINARY_OP:
            return self._eval_binary(expr, scope)
        if kind == A.INDEX:
            return self._eval_index(expr, scope)
        if kind == A.CALL:
            return self._eval_call(expr, scope)
        self._error(f"cannot evaluate {kind} as an expression", expr)

    def _eval_unary(self, expr: AstNode, scope: _Scope) -> Value:
        operand = self._eval(self.ast.node(expr.children[0]), scope)
        taint = operand.deep_taint()
        if expr.name == "!":
            return Value.boolean(not operand.truthy(), taint)
        if operand.is_number:
            return Value.number(-operand.data, taint)
        if operand.is_vector:
            items = tuple(Value.number(-i.data, i.taint) if i.is_number else
                          Value.undef(i.taint) for i in operand.data)
            return Value.vector(items, taint)
        self._warn(f"cannot negate {operand.kind}", expr)
        return Value.undef(taint)

    def _eval_binary(self, expr: AstNode, scope: _Scope) -> Value:
        op = expr.name
        left_node, right_node = (self.ast.node(c) for c in expr.children)
        if op in ("&&", "||"):
            left = self._eval(left_node, scope)
            if op == "&&" and not left.truthy():
                return Value.boolean(False, left.deep_taint())
            if op == "||" and left.truthy():
                return Value.boolean(True, left.deep_taint())
            right = self._eval(right_node, scope)
            return Value.boolean(right.truthy(),
                                 left.deep_taint() | right.deep_taint())
        left = self._eval(left_node, scope)
        right = self._eval(right_node, scope)
        taint = left.deep_taint() | right.deep_taint()

        if op in ("==", "!="):
            same = _values_equal(left, right)
            return Value.boolean(same if op == "==" else not same, taint)
        if op in ("<", "<=", ">", ">="):
            if left.is_number and right.is_number:
                a, b = left.data, right.data
                result = {"<": a < b, "<=": a <= b,
                          ">": a > b, ">=": a >= b}[op]
                return Value.boolean(result, taint)
            self._warn(f"cannot compare {left.kind} {op} {right.kind}", expr)
            return Value.undef(taint)

        if left.is_number and right.is_number:
            a, b = left.data, right.data
            if op == "+":
                return Value.number(a + b, taint)
            if op == "-":
                return Value.number(a - b, taint)
            if op == "*":
                return Value.number(a * b, taint)
            if op == "/":
                if b == 0:
                    self._warn("division by zero", expr)
                    return Value.undef(taint)
                return Value.number(a / b, taint)
            if op == "%":
                if b == 0:
                    self._warn("modulo by zero", expr)
                    return Value.undef(taint)
                return Value.number(math.fmod(a, b), taint)
        if op in ("+", "-") and left.is_vector and right.is_vector:
            if len(left.data) != len(right.data):
                self._warn("vector length mismatch", expr)
                return Value.undef(taint)
            items = []
            for li, ri in zip(left.data, right.data):
                if li.is_number and ri.is_number:
                    x = li.data + ri.data if op == "+" else li.data - ri.data
                    items.append(Value.number(x, li.taint | ri.taint))
                else:
                    items.append(Value.undef(li.taint | ri.taint))
            return Value.vector(tuple(items), taint)
        if op == "*" and left.is_vector and right.is_number:
            left, right = right, left
        if op == "*" and left.is_number and right.is_vector:
            items = tuple(
                Value.number(left.data * i.data, i.taint) if i.is_number
                else Value.undef(i.taint) for i in right.data)
            return Value.vector(items, taint)
        if op == "*" and left.is_vector and right.is_vector:
            if (len(left.data) == len(right.data)
                    and all(i.is_number for i in left.data + right.data)):
                dot = sum(li.data * ri.data
                          for li, ri in zip(left.data, right.data))
                return Value.number(dot, taint)
        if op == "/" and left.is_vector and right.is_number:
            if right.data == 0:
                self._warn("division by zero", expr)
                return Value.undef(taint)
            items = tuple(
                Value.number(i.data / right.data, i.taint) if i.is_number
                else Value.undef(i.taint) for i in left.data)
            return Value.vector(items, taint)
        self._warn(f"type error in '{op}': {left.kind} and {right.kind}", expr)
        return Value.undef(taint)

    def _eval_index(self, expr: AstNode, scope: _Scope) -> Value:
        base = self._eval(self.ast.node(expr.children[0]), scope)
        idx = self._eval(self.ast.node(expr.children[1]), scope)
        taint = base.taint | idx.deep_taint()
        if not base.is_vector or not idx.is_number:
            self._warn("indexing requires a vector and a numeric index", expr)
            return Value.undef(taint | base.deep_taint())
        i = idx.data
        if abs(i - round(i)) > 1e-9 or not (0 <= round(i) < len(base.data)):
            self._warn("index out of bounds", expr)
            return Value.undef(taint)
        item = base.data[int(round(i))]
        return item.with_taint(taint)

    def _eval_call(self, expr: AstNode, scope: _Scope) -> Value:
        name = expr.name
        args = [self._eval(self.ast.node(c), scope) for c in expr.children]
        taint = EMPTY_TAINT
        for a in args:
            taint |= a.deep_taint()

        def num(i: int) -> float | None:
            return float(args[i].data) if args[i].is_number else None

        if name in ("sin", "cos", "tan", "sqrt", "abs", "floor", "ceil"):
            if len(args) != 1 or num(0) is None:
                self._warn(f"{name} expects one number", expr)
                return Value.undef(taint)
            x = num(0)
            if name == "sin":
                return Value.number(math.sin(math.radians(x)), taint)
            if name == "cos":
                return Value.number(math.cos(math.radians(x)), taint)
            if name == "tan":
                return Value.number(math.tan(math.radians(x)), taint)
            if name == "sqrt":
                if x < 0:
                    self._warn("sqrt of a negative number", expr)
                    return Value.undef(taint)
                return Value.number(math.sqrt(x), taint)
            if name == "abs":
                return Value.number(abs(x), taint)
            if name == "floor":
                return Value.number(math.floor(x), taint)
            return Value.number(math.ceil(x), taint)
        if name in ("min", "max"):
            nums: list[float] = []
            if len(args) == 1 and args[0].is_vector:
                pool = list(args[0].data)
            else:
                pool = args
            for a in pool:
                if not a.is_number:
                    self._warn(f"{name} expects numbers", expr)
                    return Value.undef(taint)
                nums.append(a.data)
            if not nums:
                self._warn(f"{name} of nothing", expr)
                return Value.undef(taint)
            return Value.number(min(nums) if name == "min" else max(nums), taint)
        self._error(f"undefined function '{name}'", expr)


def _values_equal(a: Value, b: Value) -> bool:
    if a.kind != b.kind:
        # numbers and bools never compare equal to other kinds
        return False
    if a.kind == "vector":
        return len(a.data) == len(b.data) and all(
            _values_equal(x, y) for x, y in zip(a.data, b.data))
    return a.data == b.data


def _freeze(t: _TNode, node_id: str) -> CsgNode:
    node = CsgNode(node_id, t.kind, t.params, t.matrix, t.ast_id,
                   t.call_stack, t.taint, [])
    for i, child in enumerate(t.children):
        child_id = f"{node_id}.{i}" if node_id else str(i)
        node.children.append(_freeze(child, child_id))
    return node
