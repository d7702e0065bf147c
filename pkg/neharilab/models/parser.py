"""
Recursive-descent parser for user nonlinearities.

Grammar (lowest precedence first):

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("-" | "+") unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | NAME | NAME "(" expr ")" | "(" expr ")"

"^" is right-associative and binds tighter than unary minus, so -t^2 is
-(t^2) and t^-1 is t^(-1). Trees evaluate on numpy arrays.
"""

import re
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Callable, Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from neharilab.errors import ExpressionSyntaxError

FUNCTIONS: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "abs": np.abs,
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "ln": np.log,
    "arctan": np.arctan,
}

CONSTANTS = {"pi": np.pi}

VARIABLES = ("t", "x", "y", "z")

TOKEN_RE = re.compile(
    r"\s*(?:(?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    position: int


class Node(ABC):
    """Expression tree node."""

    @abstractmethod
    def evaluate(self, env: Dict[str, np.ndarray]) -> np.ndarray:
        """Value of the subtree for the arrays bound in env."""
        pass

    def variables(self) -> FrozenSet[str]:
        return frozenset()


@dataclass(frozen=True)
class Number(Node):
    value: float

    def evaluate(self, env):
        return np.float64(self.value)


@dataclass(frozen=True)
class Variable(Node):
    name: str

    def evaluate(self, env):
        return env[self.name]

    def variables(self):
        return frozenset([self.name])


@dataclass(frozen=True)
class Negate(Node):
    operand: Node

    def evaluate(self, env):
        return -self.operand.evaluate(env)

    def variables(self):
        return self.operand.variables()


@dataclass(frozen=True)
class Binary(Node):
    op: str
    left: Node
    right: Node

    def evaluate(self, env):
        a = self.left.evaluate(env)
        b = self.right.evaluate(env)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            return np.divide(a, b)
        return np.power(a, b)

    def variables(self):
        return self.left.variables() | self.right.variables()


@dataclass(frozen=True)
class Call(Node):
    name: str
    argument: Node

    def evaluate(self, env):
        return FUNCTIONS[self.name](self.argument.evaluate(env))

    def variables(self):
        return self.argument.variables()


def tokenize(src: str) -> List[Token]:
    tokens = []
    pos = 0
    while pos < len(src):
        if src[pos:].strip() == "":
            break
        match = TOKEN_RE.match(src, pos)
        if match is None or match.end() == pos:
            bad = pos + len(src[pos:]) - len(src[pos:].lstrip())
            raise ExpressionSyntaxError(f"unexpected character {src[bad]!r}", bad)
        kind = match.lastgroup
        tokens.append(Token(kind, match.group(kind), match.start(kind)))
        pos = match.end()
    tokens.append(Token("end", "", len(src.rstrip())))
    return tokens


class Parser:
    """Parse one expression string into a Node tree."""

    def __init__(self, src: str):
        self.src = src
        self.tokens = tokenize(src)
        self.index = 0

    @property
    def current(self) -> Token:
        return self.tokens[self.index]

    def advance(self) -> Token:
        token = self.current
        self.index += 1
        return token

    def expect(self, text: str) -> Token:
        token = self.current
        if token.text != text:
            raise self.error(f"expected {text!r}")
        return self.advance()

    def error(self, message: str) -> ExpressionSyntaxError:
        token = self.current
        if token.kind == "end":
            return ExpressionSyntaxError(f"{message}, found end of input", token.position)
        return ExpressionSyntaxError(f"{message}, found {token.text!r}", token.position)

    def parse(self) -> Node:
        if self.current.kind == "end":
            raise self.error("empty expression")
        node = self.expr()
        if self.current.kind != "end":
            raise self.error("unexpected trailing input")
        return node

    def expr(self) -> Node:
        node = self.term()
        while self.current.text in ("+", "-") and self.current.kind == "op":
            op = self.advance().text
            node = Binary(op, node, self.term())
        return node

    def term(self) -> Node:
        node = self.unary()
        while self.current.text in ("*", "/") and self.current.kind == "op":
            op = self.advance().text
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.current.kind == "op" and self.current.text == "-":
            self.advance()
            return Negate(self.unary())
        if self.current.kind == "op" and self.current.text == "+":
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        base = self.atom()
        if self.current.kind == "op" and self.current.text == "^":
            self.advance()
            return Binary("^", base, self.unary())
        return base

    def atom(self) -> Node:
        token = self.current
        if token.kind == "number":
            self.advance()
            return Number(float(token.text))
        if token.kind == "name":
            self.advance()
            if token.text in FUNCTIONS:
                self.expect("(")
                argument = self.expr()
                self.expect(")")
                return Call(token.text, argument)
            if token.text in CONSTANTS:
                return Number(CONSTANTS[token.text])
            if token.text in VARIABLES:
                return Variable(token.text)
            raise ExpressionSyntaxError(f"unknown name {token.text!r}", token.position)
        if token.kind == "op" and token.text == "(":
            self.advance()
            node = self.expr()
            self.expect(")")
            return node
        raise self.error("expected a number, name or '('")


def parse_expression(src: str) -> Node:
    """
    Parse an arithmetic expression in t, x, y, z.

    Raises:
        ExpressionSyntaxError: with the character offset of the problem.
    """
    return Parser(src).parse()


def evaluate(node: Node, t: np.ndarray, coords: Optional[np.ndarray] = None) -> np.ndarray:
    """
    Evaluate a tree at values t and points coords of shape (k, dim) or (dim,).

    Coordinates beyond the point dimension evaluate as 0.
    """
    t = np.asarray(t, dtype=float)
    env: Dict[str, np.ndarray] = {"t": t}
    if coords is not None:
        coords = np.asarray(coords, dtype=float)
        for axis, name in enumerate(VARIABLES[1:]):
            env[name] = coords[..., axis] if axis < coords.shape[-1] else np.zeros(coords.shape[:-1])
    else:
        for name in VARIABLES[1:]:
            env[name] = np.float64(0.0)
    with np.errstate(all="ignore"):
        out = node.evaluate(env)
    return np.broadcast_to(np.asarray(out, dtype=float), np.broadcast(t, *env.values()).shape).copy()


def free_variables(node: Node) -> Tuple[str, ...]:
    return tuple(sorted(node.variables()))
