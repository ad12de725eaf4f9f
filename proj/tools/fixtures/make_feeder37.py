"""Writes data/feeder37.json: the 37-node test feeder with eight added tie lines,
dispatchable generators and renewable units.

Node numbering (test-feeder name in parentheses):
 1 (799)  2 (701)  3 (702)  4 (705)  5 (742)  6 (712)  7 (713)  8 (704)
 9 (714) 10 (718) 11 (720) 12 (707) 13 (722) 14 (724) 15 (706) 16 (725)
17 (703) 18 (727) 19 (744) 20 (728) 21 (729) 22 (730) 23 (709) 24 (708)
25 (731) 26 (733) 27 (734) 28 (737) 29 (738) 30 (711) 31 (741) 32 (740)
33 (710) 34 (735) 35 (736) 36 (732) 37 (775)
"""
import argparse
import json
from pathlib import Path

CONFIGS = {
    "721": ([[0.2926, 0.0673, 0.0337], [0.0673, 0.2646, 0.0673], [0.0337, 0.0673, 0.2926]],
            [[0.1973, -0.0368, -0.0417], [-0.0368, 0.1900, -0.0368], [-0.0417, -0.0368, 0.1973]]),
    "722": ([[0.4751, 0.1629, 0.1234], [0.1629, 0.4488, 0.1629], [0.1234, 0.1629, 0.4751]],
            [[0.2973, -0.0326, -0.0607], [-0.0326, 0.2678, -0.0326], [-0.0607, -0.0326, 0.2973]]),
    "723": ([[1.2936, 0.4871, 0.4585], [0.4871, 1.3022, 0.4871], [0.4585, 0.4871, 1.2936]],
            [[0.6713, 0.2111, 0.1521], [0.2111, 0.6326, 0.2111], [0.1521, 0.2111, 0.6713]]),
    "724": ([[2.0952, 0.5204, 0.4926], [0.5204, 2.1068, 0.5204], [0.4926, 0.5204, 2.0952]],
            [[0.7758, 0.2738, 0.2123], [0.2738, 0.7398, 0.2738], [0.2123, 0.2738, 0.7758]]),
}

# (from, to, config, length_ft, switchable)
ORIGINAL = [
    (1, 2, "721", 1850, False), (2, 3, "722", 960, False), (3, 4, "724", 400, True),
    (3, 7, "723", 360, False), (3, 17, "722", 1320, False), (4, 5, "724", 320, False),
    (4, 6, "724", 240, False), (7, 8, "723", 520, True), (8, 9, "724", 80, True),
    (8, 11, "723", 800, True), (9, 10, "724", 520, False), (11, 12, "724", 920, False),
    (11, 15, "723", 600, False), (12, 13, "724", 120, False), (12, 14, "724", 760, False),
    (15, 16, "724", 280, True), (17, 18, "724", 240, True), (17, 22, "723", 600, False),
    (18, 19, "723", 280, False), (19, 20, "724", 200, False), (19, 21, "724", 280, False),
    (22, 23, "723", 200, False), (23, 24, "723", 320, True), (23, 25, "723", 600, True),
    (24, 26, "723", 320, False), (24, 36, "724", 320, False), (26, 27, "723", 560, False),
    (27, 28, "724", 640, False), (27, 33, "724", 520, False), (28, 29, "723", 400, False),
    (29, 30, "723", 400, True), (30, 31, "723", 400, False), (30, 32, "724", 200, False),
    (33, 34, "724", 200, False), (33, 35, "724", 1280, False),
]
ADDED = [
    (8, 14, "723", 1144), (6, 20, "724", 1320), (10, 16, "724", 847), (20, 26, "724", 815),
    (16, 24, "724", 1580), (10, 17, "724", 1137), (24, 33, "724", 1315), (26, 35, "724", 377),
]

# kW and kvar per phase; delta loads ab/bc/ca are placed on a/b/c.
LOADS = {
    2: ((140, 70), (140, 70), (350, 175)), 6: (None, None, (85, 40)), 7: (None, None, (85, 40)),
    9: ((17, 8), (21, 10), None), 10: ((85, 40), None, None), 11: (None, None, (85, 40)),
    13: (None, (140, 70), (21, 10)), 14: (None, (42, 21), None), 16: (None, (42, 21), None),
    18: (None, None, (42, 21)), 20: ((42, 21), (42, 21), (42, 21)), 21: ((42, 21), None, None),
    22: (None, None, (85, 40)), 25: (None, (85, 40), None), 36: (None, None, (42, 21)),
    26: ((85, 40), None, None), 27: (None, None, (42, 21)), 34: (None, None, (85, 40)),
    35: (None, (42, 21), None), 28: ((140, 70), None, None), 29: ((126, 62), None, None),
    32: (None, None, (85, 40)), 31: (None, None, (42, 21)), 5: ((8, 4), (85, 40), None),
    19: ((42, 21), None, None),
}
DG_NODES = [10, 12, 16, 19, 24, 28, 32]
# node -> [(phase, kind, capacity_kw)]
RES = {
    5: [("a", "pv", 40), ("b", "pv", 40)],
    13: [("b", "pv", 60), ("c", "pv", 30)],
    20: [("a", "wind", 50), ("b", "wind", 50), ("c", "wind", 50)],
    22: [("c", "pv", 50)],
    26: [("a", "pv", 60)],
    29: [("a", "wind", 80)],
    31: [("c", "pv", 30)],
    34: [("c", "wind", 60)],
    35: [("b", "pv", 40)],
}
PV_FORECAST, WIND_FORECAST = 0.9, 0.7


def ampacity(a, b):
    if (a, b) == (1, 2):
        return 300.0
    if (a, b) in ((2, 3), (3, 17)):
        return 150.0
    return 100.0


def build(args):
    nodes = []
    for n in range(1, 38):
        node = {"id": n, "phases": "abc"}
        if n in LOADS:
            kw = {p: v[0] for p, v in zip("abc", LOADS[n]) if v}
            kvar = {p: v[1] for p, v in zip("abc", LOADS[n]) if v}
            node["load_kw"] = {p: round(v * args.load_scale, 6) for p, v in kw.items()}
            node["load_kvar"] = {p: round(v * args.load_scale, 6) for p, v in kvar.items()}
        if n in DG_NODES:
            node["dg"] = {"p_max_kw": args.dg_kw, "cost_coeff": args.dg_cost}
        if n in RES:
            node["res"] = [
                {"phase": ph, "kind": kind, "capacity_kw": cap,
                 "forecast_kw": round(cap * (PV_FORECAST if kind == "pv" else WIND_FORECAST), 6)}
                for ph, kind, cap in RES[n]
            ]
        nodes.append(node)

    lines = []
    for a, b, cfg, ft, sw in ORIGINAL:
        lines.append({"from": a, "to": b, "phases": "abc", "config": cfg, "length_ft": ft,
                      "i_max_a": ampacity(a, b), "switchable": sw})
    lines.append({"from": 23, "to": 37, "phases": "abc", "r_ohm": [[0.05, 0, 0], [0, 0.05, 0], [0, 0, 0.05]],
                  "x_ohm": [[0.2, 0, 0], [0, 0.2, 0], [0, 0, 0.2]], "i_max_a": 100.0, "switchable": False})
    for a, b, cfg, ft in ADDED:
        lines.append({"from": a, "to": b, "phases": "abc", "config": cfg, "length_ft": ft,
                      "i_max_a": ampacity(a, b), "switchable": True, "weight": 1.5})

    return {
        "nominal_voltage_v": args.voltage,
        "pcc_node": 1,
        "price_pcc": args.pcc_price,
        "impedance_configs": {k: {"phases": "abc", "r_per_mile": r, "x_per_mile": x}
                              for k, (r, x) in CONFIGS.items()},
        "nodes": nodes,
        "lines": lines,
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=Path(__file__).resolve().parents[2] / "data" / "feeder37.json")
    ap.add_argument("--voltage", type=float, default=4800.0)
    ap.add_argument("--load-scale", type=float, default=1.0)
    ap.add_argument("--dg-kw", type=float, default=50.0)
    ap.add_argument("--dg-cost", type=float, default=0.5)
    ap.add_argument("--pcc-price", type=float, default=1.0)
    args = ap.parse_args()
    args.out.write_text(json.dumps(build(args), indent=1) + "\n")


if __name__ == "__main__":
    main()
