"""Flat ``key = value`` configuration files.

Values are numbers, ``pi`` expressions (``0.3pi``, ``pi/2``), strings, or
axis arrays written as ``[a, b, c]``, ``linspace(a, b, n)``,
``geomspace(a, b, n)`` or ``range(start, stop, step)``. A key whose value is
an array becomes a sweep axis.
"""

from __future__ import annotations

import ast
import math
import operator
import re

import numpy as np

from ..errors import ConfigError

# canonical parameter names and accepted spellings
ALIASES = {
    "n": "N",
    "n_atoms": "N",
    "j0": "J0",
    "phi": "phi",
    "d": "d",
    "spacing": "d",
    "gamma0": "gamma0",
    "delta_omega": "delta_omega",
    "detuning": "delta_omega",
    "dw": "delta_omega",
}
AXIS_NAMES = ("N", "J0", "phi", "d", "gamma0", "delta_omega")

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}
_FUNCS = {
    "linspace": lambda a, b, n: np.linspace(a, b, int(n)).tolist(),
    "geomspace": lambda a, b, n: np.geomspace(a, b, int(n)).tolist(),
    "range": lambda *a: list(range(*[int(x) for x in a])),
    "sqrt": math.sqrt,
    "cos": math.cos,
    "sin": math.sin,
    "tan": math.tan,
}
_PI_SUFFIX = re.compile(r"(?<![\w.])(\d+(?:\.\d*)?|\.\d+)(?:e[+-]?\d+)?\s*pi\b")


def _eval(node):
    if isinstance(node, ast.Expression):
        return _eval(node.body)
    if isinstance(node, ast.Constant) and isinstance(node.value, (int, float, str)):
        return node.value
    if isinstance(node, ast.Name):
        if node.id == "pi":
            return math.pi
        raise ConfigError(f"unknown name {node.id!r}")
    if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
        v = _eval(node.operand)
        return -v if isinstance(node.op, ast.USub) else v
    if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
        return _BINOPS[type(node.op)](_eval(node.left), _eval(node.right))
    if isinstance(node, (ast.List, ast.Tuple)):
        out = []
        for elt in node.elts:
            v = _eval(elt)
            out.extend(v if isinstance(v, list) else [v])
        return out
    if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS:
        return _FUNCS[node.func.id](*[_eval(a) for a in node.args])
    raise ConfigError(f"unsupported expression: {ast.dump(node)}")


def parse_value(text: str):
    """Evaluate one config value; bare words that are not expressions stay strings."""
    src = text.strip()
    if not src:
        raise ConfigError("empty value")
    src = _PI_SUFFIX.sub(lambda m: f"({m.group(0)[:-2].strip()})*pi", src)
    try:
        tree = ast.parse(src, mode="eval")
    except SyntaxError:
        return text.strip()
    try:
        return _eval(tree)
    except ConfigError:
        if isinstance(tree.body, ast.Name):
            return tree.body.id
        if isinstance(tree.body, ast.Tuple):
            # comma separated words, e.g. an outputs list
            return [p.strip() for p in text.split(",") if p.strip()]
        raise


def parse_config(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        key = ALIASES.get(key.lower(), key.lower()) if key.lower() in ALIASES else key
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            out[key] = parse_value(value)
        except ConfigError as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
    return out


def load_config(path) -> dict:
    with open(path) as fh:
        return parse_config(fh.read())


def canonical_name(key: str) -> str:
    return ALIASES.get(key.lower(), key)
