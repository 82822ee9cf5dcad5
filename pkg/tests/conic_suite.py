"""LP and SOCP instances with optima and multipliers worked out by hand.

Each builder returns ``(program, objective, duals)`` where ``duals`` maps
row tags to the multiplier expected under the package convention (the
derivative of the optimal value in the row's right-hand side).
"""
from __future__ import annotations

import math

from ucgna.model import FREE_CONE, NONNEG_CONE, ConicProgram, soc


def lp_single_bound():
    P = ConicProgram("single")
    x = P.add_block("x", 1, FREE_CONE)
    P.add_ge("r", x[0], 3.0)
    P.set_objective(x[0])
    return P, 3.0, {"r": 1.0}


def lp_scaled_cost():
    P = ConicProgram("scaled")
    x = P.add_block("x", 1, FREE_CONE)
    P.add_ge("r", x[0], 3.0)
    P.set_objective(2.0 * x[0])
    return P, 6.0, {"r": 2.0}


def lp_covering():
    P = ConicProgram("cover")
    x = P.add_block("x", 2)
    P.add_ge("r", x[0] + x[1], 1.0)
    P.set_objective(x[0] + x[1])
    return P, 1.0, {"r": 1.0}


def lp_equality():
    P = ConicProgram("eq")
    x = P.add_block("x", 1, FREE_CONE)
    P.add_eq("r", x[0], 4.0)
    P.set_objective(x[0])
    return P, 4.0, {"r": 1.0}


def lp_upper_row():
    P = ConicProgram("upper")
    x = P.add_block("x", 1)
    P.add_le("cap", x[0], 5.0)
    P.set_objective(-1.0 * x[0])
    # x <= 5 is stored as -x >= -5; raising -5 tightens the cap
    return P, -5.0, {"cap": 1.0}


def lp_two_rows():
    P = ConicProgram("two_rows")
    x = P.add_block("x", 2)
    P.add_ge("total", x[0] + x[1], 4.0)
    P.add_ge("floor", x[0], 1.0)
    P.set_objective(3.0 * x[0] + 2.0 * x[1])
    return P, 9.0, {"total": 2.0, "floor": 1.0}


def lp_vertex():
    # x1 + 2 x2 >= 4 and 3 x1 + x2 >= 6 both bind at (8/5, 6/5)
    P = ConicProgram("vertex")
    x = P.add_block("x", 2)
    P.add_ge("a", x[0] + 2.0 * x[1], 4.0)
    P.add_ge("b", 3.0 * x[0] + x[1], 6.0)
    P.set_objective(x[0] + x[1])
    return P, 2.8, {"a": 0.4, "b": 0.2}


def lp_transport():
    P = ConicProgram("transport")
    x = P.add_block("x", 2)
    P.add_eq("demand", x[0] + x[1], 10.0)
    P.add_le("cheap_cap", x[0], 6.0)
    P.set_objective(2.0 * x[0] + 3.0 * x[1])
    return P, 24.0, {"demand": 3.0, "cheap_cap": 1.0}


def lp_free_negative():
    P = ConicProgram("free_neg")
    x = P.add_block("x", 1, FREE_CONE)
    P.add_ge("r", x[0], -2.0)
    P.set_objective(x[0])
    return P, -2.0, {"r": 1.0}


def lp_column_bounds():
    P = ConicProgram("bounds")
    x = P.add_block("x", 1, FREE_CONE)
    P.set_bounds(x[0], 1.5, 4.0)
    P.add_ge("slack", x[0], 0.0)
    P.set_objective(x[0])
    return P, 1.5, {"slack": 0.0}


def lp_simplex():
    P = ConicProgram("simplex")
    x = P.add_block("x", 3)
    P.add_eq("sum", x[0] + x[1] + x[2], 1.0)
    P.set_objective(x[0] + 2.0 * x[1] + 3.0 * x[2])
    return P, 1.0, {"sum": 1.0}


def lp_zero_objective():
    P = ConicProgram("zero")
    x = P.add_block("x", 2)
    P.add_ge("r", x[0] + x[1], 1.0)
    P.set_objective(0.0 * x[0])
    return P, 0.0, {"r": 0.0}


def lp_chain():
    P = ConicProgram("chain")
    x = P.add_block("x", 2, FREE_CONE)
    P.add_ge("gap", x[0] - x[1], 1.0)
    P.add_ge("base", x[1], 2.0)
    P.set_objective(x[0])
    return P, 3.0, {"gap": 1.0, "base": 1.0}


def lp_badly_scaled():
    P = ConicProgram("scaled_rows")
    x = P.add_block("x", 1)
    P.add_ge("r", 1e-3 * x[0], 1.0)
    P.set_objective(1e3 * x[0])
    return P, 1e6, {"r": 1e6}


def lp_box_with_row():
    P = ConicProgram("box")
    x = P.add_block("x", 2)
    P.set_bounds(x[0], 0.0, 3.0)
    P.set_bounds(x[1], 0.0, 3.0)
    P.add_le("budget", x[0] + x[1], 4.0)
    P.set_objective(-1.0 * x[0] - 1.0 * x[1])
    return P, -4.0, {"budget": 1.0}


def soc_pythagoras():
    P = ConicProgram("pythagoras")
    v = P.add_block("v", 3, soc(3))
    P.add_eq("a", v[1], 3.0)
    P.add_eq("b", v[2], 4.0)
    P.set_objective(v[0])
    return P, 5.0, {"a": 0.6, "b": 0.8}


def soc_diagonal():
    P = ConicProgram("diagonal")
    v = P.add_block("v", 3, soc(3))
    P.add_eq("sum", v[1] + v[2], 2.0)
    P.set_objective(v[0])
    return P, math.sqrt(2.0), {"sum": 1.0 / math.sqrt(2.0)}


def soc_cube_diagonal():
    P = ConicProgram("cube")
    v = P.add_block("v", 4, soc(4))
    for i in (1, 2, 3):
        P.add_eq(f"c{i}", v[i], 1.0)
    P.set_objective(v[0])
    r = 1.0 / math.sqrt(3.0)
    return P, math.sqrt(3.0), {"c1": r, "c2": r, "c3": r}


def soc_disk():
    # max x + y over the unit disk
    P = ConicProgram("disk")
    v = P.add_block("v", 3, soc(3))
    P.add_eq("radius", v[0], 1.0)
    P.set_objective(-1.0 * v[1] - 1.0 * v[2])
    return P, -math.sqrt(2.0), {"radius": -math.sqrt(2.0)}


def soc_projection():
    # distance from (1, 2) to the half-plane x + y >= 10
    P = ConicProgram("projection")
    v = P.add_block("v", 3, soc(3))
    xy = P.add_block("xy", 2, FREE_CONE)
    P.add_eq("dx", v[1] - xy[0], -1.0)
    P.add_eq("dy", v[2] - xy[1], -2.0)
    P.add_ge("half", xy[0] + xy[1], 10.0)
    P.set_objective(v[0])
    r = 1.0 / math.sqrt(2.0)
    return P, 7.0 / math.sqrt(2.0), {"half": r}


def soc_two_abs():
    # |x| + |y| with x + y = 3, x - y = 1
    P = ConicProgram("two_abs")
    a = P.add_block("a", 2, soc(2))
    b = P.add_block("b", 2, soc(2))
    P.add_eq("sum", a[1] + b[1], 3.0)
    P.add_eq("diff", a[1] - b[1], 1.0)
    P.set_objective(a[0] + b[0])
    return P, 3.0, {"sum": 1.0, "diff": 0.0}


def soc_with_row():
    P = ConicProgram("soc_row")
    v = P.add_block("v", 2, soc(2))
    P.add_ge("lift", v[1], 3.0)
    P.set_objective(v[0])
    return P, 3.0, {"lift": 1.0}


def soc_weymouth_pipe():
    # pi_h - pi_t >= W f^2 as (pi_h - pi_t + 1/W... ) in rotated form:
    # (d + 1, d - 1, 2 sqrt(W) f) in SOC3 means d >= W f^2; fix f = 2, W = 1
    P = ConicProgram("weymouth")
    v = P.add_block("v", 3, soc(3))
    d = P.add_block("d", 1, FREE_CONE)
    f = P.add_block("f", 1, FREE_CONE)
    P.add_eq("e0", v[0] - d[0], 1.0)
    P.add_eq("e1", v[1] - d[0], -1.0)
    P.add_eq("e2", v[2] - 2.0 * f[0], 0.0)
    P.add_eq("flow", f[0], 2.0)
    P.set_objective(d[0])
    # optimal d = f^2 = 4 and d(value)/d(flow) = 2 f = 4
    return P, 4.0, {"flow": 4.0}


INSTANCES = [
    lp_single_bound, lp_scaled_cost, lp_covering, lp_equality, lp_upper_row, lp_two_rows, lp_vertex,
    lp_transport, lp_free_negative, lp_column_bounds, lp_simplex, lp_zero_objective, lp_chain,
    lp_badly_scaled, lp_box_with_row, soc_pythagoras, soc_diagonal, soc_cube_diagonal, soc_disk,
    soc_projection, soc_two_abs, soc_with_row, soc_weymouth_pipe,
]
