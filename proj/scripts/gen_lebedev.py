#!/usr/bin/env python3
"""Regenerates include/wave3/lebedev_tables.hpp from scipy's Lebedev rules."""
import sys
from scipy.integrate import lebedev_rule

ORDERS = [17, 29, 41, 59, 89]

out = []
out.append("// Generated by scripts/gen_lebedev.py from scipy.integrate.lebedev_rule. Do not edit.")
out.append("#pragma once\n")
out.append("#include <array>\n#include <span>\n")
out.append("namespace wave3::detail {\n")
out.append("struct LebedevNode {\n    double x, y, z, w;\n};\n")
for order in ORDERS:
    pts, w = lebedev_rule(order)
    w = w / w.sum()
    n = len(w)
    out.append(f"inline constexpr std::array<LebedevNode, {n}> kLebedev{order}{{{{")
    for i in range(n):
        out.append(f"    {{{float(pts[0,i])!r}, {float(pts[1,i])!r}, {float(pts[2,i])!r}, {float(w[i])!r}}},")
    out.append("}};\n")
out.append("struct LebedevTable {\n    int order;\n    std::span<const LebedevNode> nodes;\n};\n")
out.append("inline constexpr std::array<LebedevTable, %d> kLebedevTables{{" % len(ORDERS))
for order in ORDERS:
    out.append(f"    {{{order}, kLebedev{order}}},")
out.append("}};\n")
out.append("}  // namespace wave3::detail")
sys.stdout.write("\n".join(out) + "\n")
