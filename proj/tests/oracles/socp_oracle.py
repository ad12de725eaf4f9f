"""Freezes reference solutions for the group-sparse conic solver tests.

Instances are drawn from a fixed seed, solved with Clarabel through cvxpy at
tight tolerances, and written to tests/data/socp_oracle.json. Rerun only when
the instance family changes:

    python3 tests/oracles/socp_oracle.py
"""
import json
import pathlib

import cvxpy as cp
import numpy as np

OUT = pathlib.Path(__file__).resolve().parents[1] / "data" / "socp_oracle.json"


def random_instance(rng, n, n_eq, n_in, n_balls, n_groups, lam, with_norm):
    b = rng.standard_normal((n, n))
    q = b @ b.T / n + 0.1 * np.diag(rng.random(n))
    if rng.random() < 0.5:
        q[: n // 3, :] = 0.0
        q[:, : n // 3] = 0.0
    c = rng.standard_normal(n)
    x0 = 0.3 * rng.standard_normal(n)
    a_eq = rng.standard_normal((n_eq, n))
    a_eq[np.abs(a_eq) < 0.8] = 0.0
    b_eq = a_eq @ x0
    a_in = rng.standard_normal((n_in, n))
    a_in[np.abs(a_in) < 0.5] = 0.0
    b_in = a_in @ x0 + rng.random(n_in)
    perm = rng.permutation(n)
    balls = []
    for k in range(n_balls):
        re, im = int(perm[2 * k]), int(perm[2 * k + 1])
        r = float(np.hypot(x0[re], x0[im]) + 0.2 + rng.random())
        balls.append([re, im, r])
    perm = rng.permutation(n)
    size = max(1, n // (n_groups + 1))
    groups = []
    for g in range(n_groups):
        groups.append({"coords": sorted(int(i) for i in perm[g * size:(g + 1) * size]),
                       "weight": float(0.5 + rng.random())})
    norms = []
    if with_norm:
        norms.append({"coords": sorted(int(i) for i in rng.choice(n, 3, replace=False)), "weight": 0.3})
    return {"n": n, "q": q.tolist(), "c": c.tolist(), "a_eq": a_eq.tolist(), "b_eq": b_eq.tolist(),
            "a_in": a_in.tolist(), "b_in": b_in.tolist(), "balls": balls, "groups": groups,
            "lambda": lam, "norms": norms}


def solve(inst):
    n = inst["n"]
    x = cp.Variable(n)
    q = np.array(inst["q"])
    q = 0.5 * (q + q.T)
    obj = 0.5 * cp.quad_form(x, cp.psd_wrap(q)) + np.array(inst["c"]) @ x
    for g in inst["groups"]:
        obj += inst["lambda"] * g["weight"] * cp.norm(x[g["coords"]], 2)
    for t in inst["norms"]:
        obj += t["weight"] * cp.norm(x[t["coords"]], 2)
    cons = []
    if inst["b_eq"]:
        cons.append(np.array(inst["a_eq"]) @ x == np.array(inst["b_eq"]))
    if inst["b_in"]:
        cons.append(np.array(inst["a_in"]) @ x <= np.array(inst["b_in"]))
    for re, im, r in inst["balls"]:
        cons.append(cp.norm(cp.hstack([x[re], x[im]]), 2) <= r)
    prob = cp.Problem(cp.Minimize(obj), cons)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10, max_iter=500)
    if prob.status.startswith("infeasible"):
        return {"status": "infeasible"}
    if prob.status != "optimal":
        return {"status": prob.status}
    xv = x.value
    zero = [bool(np.linalg.norm(xv[g["coords"]]) < 1e-6) for g in inst["groups"]]
    return {"status": "optimal", "objective": float(prob.value), "x": xv.tolist(), "group_zero": zero}


def msto_case(rng, n, n_balls, lam):
    v = 3.0 * rng.standard_normal(n)
    a = float(0.5 + rng.random())
    perm = rng.permutation(n)
    balls = [[int(perm[2 * k]), int(perm[2 * k + 1]), float(0.2 + 0.8 * rng.random())] for k in range(n_balls)]
    x = cp.Variable(n)
    cons = [cp.norm(cp.hstack([x[re], x[im]]), 2) <= r for re, im, r in balls]
    prob = cp.Problem(cp.Minimize(0.5 * a * cp.sum_squares(x) - v @ x + lam * cp.norm(x, 2)), cons)
    prob.solve(solver=cp.CLARABEL, tol_gap_abs=1e-10, tol_gap_rel=1e-10, tol_feas=1e-10)
    return {"v": v.tolist(), "a": a, "lambda": lam, "balls": balls, "x": x.value.tolist(),
            "objective": float(prob.value)}


def main():
    rng = np.random.default_rng(20240611)
    cases = []
    specs = [
        (8, 1, 2, 2, 2, 0.1, False),
        (10, 2, 3, 3, 3, 0.5, True),
        (12, 2, 4, 4, 3, 2.0, False),
        (16, 3, 4, 5, 4, 0.05, True),
        (20, 4, 6, 6, 5, 1.0, True),
        (20, 4, 6, 6, 5, 8.0, False),
        (30, 6, 8, 10, 6, 0.3, True),
    ]
    for i, s in enumerate(specs):
        inst = random_instance(rng, *s)
        inst["name"] = f"random_{i}"
        inst["expected"] = solve(inst)
        assert inst["expected"]["status"] == "optimal", inst["name"]
        cases.append(inst)
    i = 0
    while i < 24:
        n = int(rng.integers(4, 11))
        s = (n, int(rng.integers(0, 3)), int(rng.integers(0, 4)), int(rng.integers(0, n // 2 + 1)),
             int(rng.integers(1, 4)), float(10 ** rng.uniform(-2, 0.7)), bool(rng.random() < 0.3))
        inst = random_instance(rng, *s)
        inst["name"] = f"small_{i}"
        inst["expected"] = solve(inst)
        if inst["expected"]["status"] != "optimal":
            continue  # redraw: the reference must be an accurate optimum
        cases.append(inst)
        i += 1
    # contradictory equalities: x0 + x1 = 1 and x0 + x1 = 3
    inf = random_instance(rng, 6, 0, 0, 1, 1, 0.1, False)
    inf["a_eq"] = [[1, 1, 0, 0, 0, 0], [1, 1, 0, 0, 0, 0]]
    inf["b_eq"] = [1.0, 3.0]
    inf["name"] = "infeasible_equalities"
    inf["expected"] = solve(inf)
    assert inf["expected"]["status"].startswith("infeasible")
    cases.append(inf)
    # ball too small for the equality
    inf2 = random_instance(rng, 6, 0, 0, 0, 1, 0.1, False)
    inf2["balls"] = [[0, 1, 0.5]]
    inf2["a_eq"] = [[1, 0, 0, 0, 0, 0]]
    inf2["b_eq"] = [2.0]
    inf2["name"] = "infeasible_ball"
    inf2["expected"] = solve(inf2)
    assert inf2["expected"]["status"].startswith("infeasible")
    cases.append(inf2)

    msto = [msto_case(rng, n, nb, lam) for n, nb, lam in
            [(4, 1, 0.5), (6, 2, 1.0), (6, 3, 0.2), (8, 2, 4.0), (10, 5, 2.0), (5, 0, 1.0), (6, 3, 0.0)]]
    OUT.write_text(json.dumps({"programs": cases, "msto": msto}, indent=1))
    print("wrote", OUT)


if __name__ == "__main__":
    main()
