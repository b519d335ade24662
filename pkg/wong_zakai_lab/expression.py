"""A small interpreter for user-supplied Lyapunov functions.

Accepted syntax: numbers, the variables ``x1 .. xm`` (``x`` is an alias of
``x1`` when ``m == 1``), parentheses, unary ``+``/``-`` and the binary
operators ``+ - * / ^`` (``**``, ``×`` and ``÷`` are also understood).
Everything else is rejected before evaluation.
"""

import ast

import numpy as np

from .errors import ParameterError

_BINARY = {
    ast.Add: np.add,
    ast.Sub: np.subtract,
    ast.Mult: np.multiply,
    ast.Div: np.true_divide,
    ast.Pow: np.power,
}

_UNARY = {
    ast.UAdd: np.positive,
    ast.USub: np.negative,
}


class Expression(object):
    """A parsed arithmetic expression in the state variables.

    Args:
      text (str): The expression, e.g. ``"x1^4/2 + x1^2 + x2^2"``.
      dim (int): State dimension ``m``.

    Raises:
      ParameterError: On syntax errors, unknown names or disallowed constructs.
    """

    def __init__(self, text, dim):
        self.text = text
        self.dim = int(dim)
        self._names = {"x%d" % (i + 1): i for i in range(self.dim)}
        if self.dim == 1:
            self._names["x"] = 0
        source = text.replace("^", "**").replace("×", "*").replace("÷", "/")
        try:
            tree = ast.parse(source, mode="eval")
        except SyntaxError as exc:
            raise ParameterError("cannot parse expression %r: %s" % (text, exc.msg))
        self._check(tree.body)
        self._tree = tree.body

    def _check(self, node):
        if isinstance(node, ast.BinOp):
            if type(node.op) not in _BINARY:
                raise ParameterError("operator %s is not allowed in %r" % (type(node.op).__name__, self.text))
            self._check(node.left)
            self._check(node.right)
        elif isinstance(node, ast.UnaryOp):
            if type(node.op) not in _UNARY:
                raise ParameterError("operator %s is not allowed in %r" % (type(node.op).__name__, self.text))
            self._check(node.operand)
        elif isinstance(node, ast.Constant):
            if isinstance(node.value, bool) or not isinstance(node.value, (int, float)):
                raise ParameterError("only numeric constants are allowed in %r" % (self.text,))
        elif isinstance(node, ast.Name):
            if node.id not in self._names:
                raise ParameterError("unknown variable %r in %r (expected %s)" % (node.id, self.text, ", ".join(sorted(self._names))))
        else:
            raise ParameterError("%s is not allowed in %r" % (type(node).__name__, self.text))

    def _eval(self, node, x):
        if isinstance(node, ast.BinOp):
            return _BINARY[type(node.op)](self._eval(node.left, x), self._eval(node.right, x))
        if isinstance(node, ast.UnaryOp):
            return _UNARY[type(node.op)](self._eval(node.operand, x))
        if isinstance(node, ast.Constant):
            return float(node.value)
        return x[..., self._names[node.id]]

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.dim:
            raise ParameterError("expected states of dimension %d, got %d" % (self.dim, x.shape[-1]))
        return np.broadcast_to(self._eval(self._tree, x), x.shape[:-1]) * 1.0

    def __repr__(self):
        return "Expression(%r, dim=%d)" % (self.text, self.dim)
