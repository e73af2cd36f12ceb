"""Evaluator behavior: shapes, scoping, taint, limits, and diagnostics."""

from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bcscad import EvalError, EvalLimits, Value, eval_expr, evaluate_program, parse
from bcscad import csg as C
from bcscad import mats
from bcscad.lang import ast as A

from util import compile_tree


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------

def stmts_of(tree):
    """Top-level statement nodes of the program, in order."""
    root = tree.ast.node(tree.ast.root)
    return tree.ast.children(root)


def nodes_of_kind(tree, kind):
    return [n for n in tree.walk() if n.kind == kind]


def assert_same_geometry(a, b):
    """Recursive comparison ignoring provenance (ast ids, stacks, taint)."""
    assert a.kind == b.kind
    assert a.params == b.params
    np.testing.assert_allclose(a.matrix, b.matrix, atol=1e-12)
    assert len(a.children) == len(b.children)
    for ca, cb in zip(a.children, b.children):
        assert_same_geometry(ca, cb)


# ---------------------------------------------------------------------------
# tree shapes
# ---------------------------------------------------------------------------

class TestShapes:
    def test_translate_sphere(self):
        tree = compile_tree("translate([1,0,0]) sphere(2);")
        root = tree.root
        assert root.kind == C.GROUP and root.id == ""
        (tr,) = root.children
        assert tr.kind == C.TRANSLATE and tr.id == "0"
        np.testing.assert_allclose(tr.matrix, mats.translation((1, 0, 0)))
        (sp,) = tr.children
        assert sp.kind == C.PRIM_SPHERE and sp.id == "0.0"
        assert sp.params["r"] == 2.0
        (tr_stmt,) = stmts_of(tree)
        assert tr.ast_id == tr_stmt.id
        sphere_stmt = tree.ast.children(tr_stmt)[-1]
        assert sp.ast_id == sphere_stmt.id
        assert list(sp.call_stack) == [tr_stmt.id, sphere_stmt.id]
        assert list(tr.call_stack) == [tr_stmt.id]

    def test_module_three_calls_share_ast_id(self):
        tree = compile_tree("module m(){ sphere(1); } m(); m(); m();")
        groups = tree.root.children
        assert [g.kind for g in groups] == [C.GROUP] * 3
        spheres = [g.children[0] for g in groups]
        assert len({s.ast_id for s in spheres}) == 1
        call_ids = [g.ast_id for g in groups]
        assert len(set(call_ids)) == 3
        for g, s in zip(groups, spheres):
            assert list(s.call_stack) == [g.ast_id, s.ast_id]

    def test_for_loop_unrolls_to_same_geometry(self):
        looped = compile_tree("for (i=[0:2]) translate([i*10,0,0]) cube(1);")
        unrolled = compile_tree(
            "translate([0,0,0]) cube(1);"
            "translate([10,0,0]) cube(1);"
            "translate([20,0,0]) cube(1);")
        translates = nodes_of_kind(looped, C.TRANSLATE)
        offsets = [tuple(t.matrix[:3, 3]) for t in translates]
        assert offsets == [(0, 0, 0), (10, 0, 0), (20, 0, 0)]
        # one Group per iteration wrapping each translate
        groups = looped.root.children
        assert [g.kind for g in groups] == [C.GROUP] * 3
        flat_groups = [g.children[0] for g in groups]
        for got, want in zip(flat_groups, unrolled.root.children):
            assert_same_geometry(got, want)
        for_stmt = stmts_of(looped)[0]
        for t in translates:
            assert for_stmt.id in t.taint

    def test_if_evaluates_exactly_one_branch(self):
        tree = compile_tree("if (1 < 2) cube(1); else sphere(1);")
        (group,) = tree.root.children
        assert group.kind == C.GROUP
        assert group.children[0].kind == C.PRIM_CUBE
        tree = compile_tree("if (1 > 2) cube(1); else sphere(1);")
        assert tree.root.children[0].children[0].kind == C.PRIM_SPHERE
        tree = compile_tree("if (false) cube(1);")
        assert tree.root.children == []

    def test_explicit_block_groups_structural_block_inlines(self):
        tree = compile_tree("{ cube(1); sphere(1); }")
        (group,) = tree.root.children
        assert group.kind == C.GROUP
        assert [c.kind for c in group.children] == [C.PRIM_CUBE, C.PRIM_SPHERE]
        # a block that is the child of a boolean is plumbing, not a Group
        tree = compile_tree("union() { cube(1); sphere(1); }")
        (u,) = tree.root.children
        assert u.kind == C.UNION
        assert [c.kind for c in u.children] == [C.PRIM_CUBE, C.PRIM_SPHERE]

    def test_booleans_nest(self):
        tree = compile_tree(
            "difference() { cube(10); intersection() { sphere(6); cube(8); } }")
        (d,) = tree.root.children
        assert d.kind == C.DIFFERENCE
        assert d.children[0].kind == C.PRIM_CUBE
        inter = d.children[1]
        assert inter.kind == C.INTERSECTION
        assert len(inter.children) == 2

    def test_path_ids_follow_child_indices(self):
        tree = compile_tree("union() { cube(1); translate([1,0,0]) sphere(1); }")
        assert tree.node("0").kind == C.UNION
        assert tree.node("0.0").kind == C.PRIM_CUBE
        assert tree.node("0.1").kind == C.TRANSLATE
        assert tree.node("0.1.0").kind == C.PRIM_SPHERE

    def test_determinism(self):
        src = "a=3; for(i=[0:4]) rotate([0,0,i*20]) cube([a,1,1]);"
        t1 = compile_tree(src)
        t2 = compile_tree(src)
        assert_same_geometry(t1.root, t2.root)
        for n1, n2 in zip(t1.walk(), t2.walk()):
            assert (n1.id, n1.ast_id, n1.call_stack, n1.taint) == \
                   (n2.id, n2.ast_id, n2.call_stack, n2.taint)


# ---------------------------------------------------------------------------
# primitive and transform parameters
# ---------------------------------------------------------------------------

class TestParams:
    def test_cube_defaults_and_vector_size(self):
        tree = compile_tree("cube();")
        assert tree.node("0").params == {"size": (1, 1, 1), "center": False}
        tree = compile_tree("cube([1,2,3], center=true);")
        assert tree.node("0").params == {"size": (1, 2, 3), "center": True}

    def test_sphere_fn_resolution(self):
        assert compile_tree("sphere(1);").node("0").params["fn"] == 32
        assert compile_tree("sphere(1, $fn=8);").node("0").params["fn"] == 8
        assert compile_tree("$fn=12; sphere(1);").node("0").params["fn"] == 12
        # argument beats scope, and the floor is 3
        assert compile_tree("$fn=12; sphere(1, $fn=48);").node("0").params["fn"] == 48
        assert compile_tree("sphere(1, $fn=1);").node("0").params["fn"] == 3

    def test_cylinder_signatures(self):
        p = compile_tree("cylinder(h=10, r1=2, r2=3);").node("0").params
        assert (p["h"], p["r1"], p["r2"], p["center"]) == (10, 2, 3, False)
        p = compile_tree("cylinder(5, 2, true);").node("0").params
        assert (p["h"], p["r1"], p["r2"], p["center"]) == (5, 2, 2, True)
        p = compile_tree("cylinder(5, r=4);").node("0").params
        assert (p["r1"], p["r2"]) == (4, 4)

    def test_rotate_forms(self):
        tree = compile_tree("rotate(45) cube(1);")
        np.testing.assert_allclose(tree.node("0").matrix,
                                   mats.rotation_xyz(0, 0, 45))
        tree = compile_tree("rotate([90, 0, 30]) cube(1);")
        np.testing.assert_allclose(tree.node("0").matrix,
                                   mats.rotation_xyz(90, 0, 30))

    def test_scale_and_translate_padding(self):
        tree = compile_tree("scale(2) cube(1);")
        assert tree.node("0").params["v"] == (2, 2, 2)
        tree = compile_tree("scale([1,2]) cube(1);")
        assert tree.node("0").params["v"] == (1, 2, 1)
        tree = compile_tree("translate([1,2]) cube(1);")
        assert tree.node("0").params["v"] == (1, 2, 0)

    def test_primitive_ignores_child_with_warning(self):
        tree = compile_tree("sphere(1) { cube(1); }")
        (sp,) = tree.root.children
        assert sp.kind == C.PRIM_SPHERE and sp.children == []
        assert any("primitive" in w.message for w in tree.warnings)


# ---------------------------------------------------------------------------
# scoping
# ---------------------------------------------------------------------------

class TestScoping:
    def test_last_assignment_wins_for_whole_scope(self):
        tree = compile_tree("a=1; cube(a); a=5;")
        assert tree.node("0").params["size"] == (5, 5, 5)
        assert any("reassigned" in w.message for w in tree.warnings)

    def test_module_sees_file_scope_not_caller_scope(self):
        tree = compile_tree("x=10; module m(){ cube(x); } m();")
        assert nodes_of_kind(tree, C.PRIM_CUBE)[0].params["size"] == (10, 10, 10)
        with pytest.raises(EvalError, match="undefined variable 'q'"):
            compile_tree("module m(){ cube(q); } for(q=[1:1]) m();")

    def test_module_params_shadow_file_scope(self):
        tree = compile_tree("x=1; module m(x){ cube(x); } m(3);")
        assert nodes_of_kind(tree, C.PRIM_CUBE)[0].params["size"] == (3, 3, 3)

    def test_module_default_params(self):
        tree = compile_tree("module m(r=4){ sphere(r); } m(); m(2);")
        rs = [s.params["r"] for s in nodes_of_kind(tree, C.PRIM_SPHERE)]
        assert rs == [4, 2]

    def test_loop_variable_is_loop_scoped(self):
        with pytest.raises(EvalError, match="undefined variable 'i'"):
            compile_tree("for(i=[0:1]) cube(i+1); cube(i);")

    def test_block_scope_shadows(self):
        tree = compile_tree("a=1; { a=2; cube(a); } cube(a);")
        sizes = [c.params["size"] for c in nodes_of_kind(tree, C.PRIM_CUBE)]
        assert sizes == [(2, 2, 2), (1, 1, 1)]

    def test_named_args_to_module(self):
        tree = compile_tree(
            "module m(a=1, b=2){ cube([a,b,1]); } m(b=9); m(9);")
        sizes = [c.params["size"] for c in nodes_of_kind(tree, C.PRIM_CUBE)]
        assert sizes == [(1, 9, 1), (9, 2, 1)]

    def test_vector_iteration(self):
        tree = compile_tree("for (s=[[1,1,1],[2,2,2]]) cube(s);")
        sizes = [c.params["size"] for c in nodes_of_kind(tree, C.PRIM_CUBE)]
        assert sizes == [(1, 1, 1), (2, 2, 2)]


# ---------------------------------------------------------------------------
# eval_expr and taint
# ---------------------------------------------------------------------------

def expr_of(source: str):
    """Parse `x = <expr>;` and return the expression node plus the Ast."""
    ast, diags = parse(f"x = {source};")
    assert not diags
    stmt = ast.children(ast.node(ast.root))[0]
    return ast.node(stmt.children[0]), ast


class TestEvalExpr:
    def test_arithmetic_empty_env(self):
        expr, _ = expr_of("1 + 2")
        v = eval_expr(expr, {})
        assert v.data == 3 and v.taint == frozenset()

    def test_taint_propagates_through_ops(self):
        expr, _ = expr_of("a * 3")
        v = eval_expr(expr, {"a": Value.number(2, frozenset({7}))})
        assert v.data == 6 and v.taint == frozenset({7})

    def test_reading_transitively_tainted_value(self):
        expr, _ = expr_of("b")
        env = {"a": Value.number(2, frozenset({7})),
               "b": Value.number(3, frozenset({7, 9}))}
        assert eval_expr(expr, env).taint == frozenset({7, 9})

    def test_builtin_functions(self):
        cases = {"sin(30)": 0.5, "cos(60)": 0.5, "sqrt(9)": 3.0,
                 "abs(0-2)": 2.0, "floor(1.7)": 1.0, "ceil(1.2)": 2.0,
                 "min(3,1,2)": 1.0, "max([3,1,2])": 3.0}
        for src, want in cases.items():
            expr, _ = expr_of(src)
            assert eval_expr(expr, {}).data == pytest.approx(want), src

    def test_vector_ops_and_indexing(self):
        expr, _ = expr_of("([1,2,3] + [1,1,1])[2] * 2")
        assert eval_expr(expr, {}).data == 8
        expr, _ = expr_of("[1,2,3] * [1,1,1]")
        assert eval_expr(expr, {}).data == 6
        expr, _ = expr_of("2 * [1,2,3]")
        got = eval_expr(expr, {})
        assert [i.data for i in got.data] == [2, 4, 6]

    def test_logic_short_circuits(self):
        # the right side would blow up if evaluated
        expr, _ = expr_of("false && [1][5] == 1")
        assert eval_expr(expr, {}).data is False
        expr, _ = expr_of("1 <= 2 || undefined_name")
        assert eval_expr(expr, {}).data is True


class TestProgramTaint:
    def test_assignment_chain_taints_node(self):
        tree = compile_tree("a=2; b=a+1; sphere(b);")
        a_stmt, b_stmt, _ = stmts_of(tree)
        sphere = tree.node("0")
        assert {a_stmt.id, b_stmt.id} <= sphere.taint

    def test_expr_taints_and_ident_binders_recorded(self):
        tree = compile_tree("a=2; b=a+1; sphere(b);")
        a_stmt, b_stmt, sphere_stmt = stmts_of(tree)
        plus = tree.ast.node(b_stmt.children[0])
        assert a_stmt.id in tree.expr_taints[plus.id]
        b_ident = tree.ast.node(sphere_stmt.children[0])
        assert b_ident.kind == A.IDENT
        assert tree.ident_binders[b_ident.id] == frozenset({b_stmt.id})

    def test_for_binding_taints_iteration(self):
        tree = compile_tree("n=2; for(i=[0:n]) cube(i+1);")
        n_stmt, for_stmt = stmts_of(tree)
        for group in tree.root.children:
            assert {n_stmt.id, for_stmt.id} <= group.taint

    def test_module_param_is_a_binder(self):
        tree = compile_tree("module m(r){ sphere(r); } m(5);")
        mdef, _call = stmts_of(tree)
        param = tree.ast.children(mdef)[0]
        sphere = nodes_of_kind(tree, C.PRIM_SPHERE)[0]
        assert param.id in sphere.taint

    def test_control_flow_does_not_taint(self):
        tree = compile_tree("a=1; if (a < 2) cube(1);")
        a_stmt, _ = stmts_of(tree)
        cube = nodes_of_kind(tree, C.PRIM_CUBE)[0]
        assert a_stmt.id not in cube.taint

    def test_taint_soundness_by_perturbation(self):
        """If nudging an assignment's literal changes a node's numbers, that
        assignment must be in the node's taint."""
        src = ("a = 2;\n"
               "b = a + 1;\n"
               "c = 5;\n"
               "for (i = [0:1]) { translate([a*10, 0, 0]) cube(b); }\n"
               "sphere(c);\n"
               "cylinder(h=c, r=a);\n")
        base = compile_tree(src)
        assigns = [s for s in stmts_of(base) if s.kind == A.ASSIGNMENT]
        for stmt in assigns:
            lit = None
            for node in base.ast.walk(stmt.id):
                if node.kind == A.NUMBER_LIT:
                    lit = node
                    break
            assert lit is not None
            nudged = (src[:lit.span.start]
                      + str(float(lit.name) + 1)
                      + src[lit.span.end:])
            other = compile_tree(nudged)
            for n_old, n_new in zip(base.walk(), other.walk()):
                assert n_old.id == n_new.id
                changed = (n_old.params != n_new.params
                           or not np.allclose(n_old.matrix, n_new.matrix))
                if changed:
                    assert stmt.id in n_old.taint, \
                        f"{n_old.id} changed when '{base.ast.text(stmt)}' moved"


# ---------------------------------------------------------------------------
# diagnostics and limits
# ---------------------------------------------------------------------------

class TestDiagnostics:
    def test_type_error_points_at_argument(self):
        src = "cube(true);"
        with pytest.raises(EvalError) as err:
            compile_tree(src)
        diag = err.value.diagnostic
        assert "cube size" in diag.message
        assert src[diag.span.start:diag.span.end] == "true"

    def test_undefined_variable_span(self):
        src = "cube(missing);"
        with pytest.raises(EvalError) as err:
            compile_tree(src)
        diag = err.value.diagnostic
        assert "undefined variable 'missing'" in diag.message
        assert src[diag.span.start:diag.span.end] == "missing"

    def test_undefined_module(self):
        with pytest.raises(EvalError, match="undefined module 'widget'"):
            compile_tree("widget(3);")

    def test_empty_difference_is_an_error(self):
        with pytest.raises(EvalError, match="difference requires"):
            compile_tree("difference() { }")

    def test_max_csg_nodes(self):
        with pytest.raises(EvalError, match="max_csg_nodes"):
            compile_tree("for(i=[0:9]) cube(1);",
                         limits=EvalLimits(max_csg_nodes=10))

    def test_max_loop_iterations(self):
        with pytest.raises(EvalError, match="max_loop_iterations"):
            compile_tree("for(i=[0:99]) cube(1);",
                         limits=EvalLimits(max_loop_iterations=50))

    def test_max_recursion_depth(self):
        with pytest.raises(EvalError, match="max_recursion_depth"):
            compile_tree("module r(){ r(); } r();",
                         limits=EvalLimits(max_recursion_depth=8))

    def test_division_by_zero_warns_and_yields_undef(self):
        tree = compile_tree("a = 1/0; cube(1);")
        assert any("division by zero" in w.message for w in tree.warnings)

    def test_leaf_primitive_invariant_and_call_stacks(self):
        tree = compile_tree(
            "module m(){ translate([1,0,0]) cube(1); }"
            "for(i=[0:1]) m();"
            "difference(){ cube(4); sphere(2); }")
        for node in tree.walk():
            if node.is_prim:
                assert node.children == []
            assert len(node.call_stack) >= 1
            assert node.call_stack[-1] == node.ast_id
            for sid in node.call_stack:
                assert tree.ast.node(sid).kind in A.STATEMENT_KINDS


# ---------------------------------------------------------------------------
# properties
# ---------------------------------------------------------------------------

@settings(max_examples=60, deadline=None)
@given(start=st.integers(-30, 30),
       step=st.integers(-10, 10).filter(lambda s: s != 0),
       end=st.integers(-30, 30))
def test_range_iteration_count_matches_stepping_oracle(start, step, end):
    tree = compile_tree(f"for (i=[{start}:{step}:{end}]) cube(1);")
    expected = 0
    x = start
    while (step > 0 and x <= end) or (step < 0 and x >= end):
        expected += 1
        x += step
    assert len(tree.root.children) == expected


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=3, max_size=3),
       st.lists(st.integers(-5, 5), min_size=3, max_size=3))
def test_nested_translates_compose(a, b):
    tree = compile_tree(
        f"translate({a}) translate({b}) cube(1);")
    acc = tree.accumulated_matrix("0.0.0")
    np.testing.assert_allclose(
        acc, mats.translation([x + y for x, y in zip(a, b)]) @ np.eye(4))
