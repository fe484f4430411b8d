#!/usr/bin/env python3
"""Freeze per-program cyclomatic-complexity expectations for the fixture suite.

Implements the decision-point rules of the standard Python complexity tool
over the ast module and writes cc_expected.json next to the fixtures:

  if / elif arm          +1   (ast.If; elif chains are nested If nodes)
  conditional expression +1   (ast.IfExp)
  for / while loop       +1, and +1 more when the loop has an else clause
  try                    +1 per except handler, +1 when try has an else
  and / or               +1 per extra operand (len(values) - 1 per BoolOp)
  comprehension clause   +1 per generator, +1 per condition in a generator
  assert                 +1
  with, finally, lambda  +0

Function and class definitions start fresh blocks; their headers
(decorators, argument defaults, base classes, return annotations) are not
visited, mirroring the body-only traversal of the reference tool.
Program complexity is 1 + the sum of decisions over all blocks.
"""
import ast
import json
import pathlib
import sys


def new_block(blocks, kind, name):
    blocks.append({"kind": kind, "name": name, "decisions": 0})
    return len(blocks) - 1


def visit(node, blocks, bidx, path):
    if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
        child_path = f"{path}.{node.name}" if path else node.name
        cidx = new_block(blocks, "function", child_path)
        for stmt in node.body:
            visit(stmt, blocks, cidx, child_path)
        return
    if isinstance(node, ast.ClassDef):
        child_path = f"{path}.{node.name}" if path else node.name
        cidx = new_block(blocks, "class", child_path)
        for stmt in node.body:
            visit(stmt, blocks, cidx, child_path)
        return
    if isinstance(node, (ast.Match,)):
        raise SystemExit("match statements are excluded from the fixture suite")

    d = 0
    if isinstance(node, (ast.If, ast.IfExp)):
        d = 1
    elif isinstance(node, (ast.For, ast.While, ast.AsyncFor)):
        d = 1 + bool(node.orelse)
    elif isinstance(node, ast.Try):
        d = len(node.handlers) + bool(node.orelse)
    elif isinstance(node, ast.BoolOp):
        d = len(node.values) - 1
    elif isinstance(node, ast.comprehension):
        d = 1 + len(node.ifs)
    elif isinstance(node, ast.Assert):
        d = 1
    blocks[bidx]["decisions"] += d

    for child in ast.iter_child_nodes(node):
        visit(child, blocks, bidx, path)


def analyze(source):
    tree = ast.parse(source)
    blocks = []
    midx = new_block(blocks, "module", "")
    for stmt in tree.body:
        visit(stmt, blocks, midx, "")
    total = sum(b["decisions"] for b in blocks)
    return {"blocks": blocks, "program_cc": total + 1}


def main():
    suite = pathlib.Path(__file__).resolve().parent.parent / "fixtures" / "cc_suite"
    out = {}
    for prog in sorted(suite.glob("*.py")):
        source = prog.read_text(encoding="utf-8")
        out[prog.name] = analyze(source)
    target = suite / "cc_expected.json"
    target.write_text(json.dumps(out, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    print(f"wrote {target} ({len(out)} programs)")


if __name__ == "__main__":
    sys.exit(main())
