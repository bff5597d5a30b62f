__all__ = [
    'Expression', 'parse', 'chart_environment', 'IDENTIFIERS', 'FUNCTIONS'
]
__doc__ = """
Observable expressions for run configurations.

Grammar
-------

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := ('+' | '-') unary | power
    power  := atom ('^' unary)?
    atom   := number | name | name '(' expr ')' | '(' expr ')'

`^` binds tighter than unary minus on its left, so -q^2 is -(q^2), and is
right associative. Names are chart variables (q, p, z, zbar, x, y on the
plane; theta, phi, nx, ny, nz on the sphere), the Fock level n and the
ordering parameter s (ordering tables), and the constants i and pi.

Example
-------

    from csquant.expressions import parse
    f = parse('abs2(z) + 2*q')
    print(f.names)
    # ('q', 'z')
    g = f.on_chart('plane')
    print(g(0., 1.))
    # (0.5+0j)
"""

import re

import numpy as np

from .errors import ConfigError

FUNCTIONS = {
    'exp': np.exp, 'cos': np.cos, 'sin': np.sin,
    'abs2': lambda v: np.abs(v) ** 2, 'sqrt': np.sqrt, 'conj': np.conj,
    're': np.real, 'im': np.imag,
}
CONSTANTS = {'i': 1j, 'pi': np.pi}
CHART_NAMES = {
    'plane': ('q', 'p', 'z', 'zbar', 'x', 'y'),
    'sphere': ('theta', 'phi', 'nx', 'ny', 'nz'),
}
IDENTIFIERS = (
    CHART_NAMES['plane'] + CHART_NAMES['sphere'] + ('n', 's')
    + tuple(CONSTANTS)
)

_token = re.compile(
    r'\s*(?:(?P<num>\d+\.?\d*(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)'
    r'|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^(),]))'
)


def _tokenize(text):
    pos = 0
    out = []
    text = text.rstrip()
    while pos < len(text):
        m = _token.match(text, pos)
        if m is None or m.end() == pos:
            raise ConfigError(f'unexpected character at {pos}: {text[pos:]!r}')
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(('end', '', len(text)))
    return out


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    @property
    def peek(self):
        return self.tokens[self.i]

    def take(self, value=None):
        tok = self.tokens[self.i]
        if value is not None and tok[1] != value:
            raise ConfigError(
                f'expected {value!r} at {tok[2]} in {self.text!r}; '
                f'got {tok[1] or "end"!r}'
            )
        self.i += 1
        return tok

    def expr(self):
        node = self.term()
        while self.peek[1] in ('+', '-'):
            op = self.take()[1]
            node = (op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek[1] in ('*', '/'):
            op = self.take()[1]
            node = (op, node, self.unary())
        return node

    def unary(self):
        if self.peek[1] in ('+', '-'):
            op = self.take()[1]
            inner = self.unary()
            return inner if op == '+' else ('neg', inner)
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek[1] == '^':
            self.take()
            return ('^', base, self.unary())
        return base

    def atom(self):
        kind, value, pos = self.take()
        if kind == 'num':
            return ('num', float(value))
        if kind == 'name':
            if self.peek[1] == '(':
                if value not in FUNCTIONS:
                    raise ConfigError(f'unknown function {value!r} at {pos}')
                self.take('(')
                arg = self.expr()
                self.take(')')
                return ('call', value, arg)
            if value not in IDENTIFIERS:
                raise ConfigError(f'unknown name {value!r} at {pos}')
            return ('name', value)
        if value == '(':
            node = self.expr()
            self.take(')')
            return node
        raise ConfigError(
            f'unexpected {value or "end"!r} at {pos} in {self.text!r}'
        )


def _names(node, acc):
    tag = node[0]
    if tag == 'name' and node[1] not in CONSTANTS:
        acc.add(node[1])
    elif tag in ('+', '-', '*', '/', '^'):
        _names(node[1], acc)
        _names(node[2], acc)
    elif tag == 'neg':
        _names(node[1], acc)
    elif tag == 'call':
        _names(node[2], acc)
    return acc


def _evaluate(node, env):
    tag = node[0]
    if tag == 'num':
        return node[1]
    if tag == 'name':
        if node[1] in CONSTANTS:
            return CONSTANTS[node[1]]
        return env[node[1]]
    if tag == 'neg':
        return -_evaluate(node[1], env)
    if tag == 'call':
        return FUNCTIONS[node[1]](_evaluate(node[2], env))
    a = _evaluate(node[1], env)
    b = _evaluate(node[2], env)
    if tag == '+':
        return a + b
    if tag == '-':
        return a - b
    if tag == '*':
        return a * b
    if tag == '/':
        return a / b
    if np.iscomplexobj(a) or np.iscomplexobj(b):
        return np.power(np.asarray(a, dtype=complex), b)
    # real bases with integer exponents stay real
    return np.power(np.asarray(a, dtype=float), b)


def chart_environment(kind, c1, c2):
    c1 = np.asarray(c1, dtype=float)
    c2 = np.asarray(c2, dtype=float)
    if kind == 'plane':
        z = (c1 + 1j * c2) / np.sqrt(2)
        return dict(q=c1, p=c2, x=c1, y=c2, z=z, zbar=z.conj())
    st = np.sin(c1)
    return dict(
        theta=c1, phi=c2, nx=st * np.cos(c2), ny=st * np.sin(c2),
        nz=np.cos(c1)
    )


class Expression:
    """Parsed observable; call with keyword arrays for its names."""
    def __init__(self, source):
        self.source = source
        parser = _Parser(source)
        self.tree = parser.expr()
        if parser.peek[0] != 'end':
            tok = parser.peek
            raise ConfigError(f'unexpected {tok[1]!r} at {tok[2]} in {source!r}')
        self.names = tuple(sorted(_names(self.tree, set())))

    def __repr__(self):
        return f'Expression({self.source!r})'

    def __call__(self, **env):
        missing = [n for n in self.names if n not in env]
        if missing:
            raise ConfigError(f'{self.source!r} needs {", ".join(missing)}')
        return _evaluate(self.tree, env)

    def check_kind(self, kind):
        allowed = set(CHART_NAMES[kind])
        bad = [n for n in self.names if n not in allowed]
        if bad:
            raise ConfigError(
                f'{self.source!r} uses {", ".join(bad)} on the {kind} chart'
            )

    def on_chart(self, kind):
        """Closure f(c1, c2) on chart coordinates of `kind`."""
        self.check_kind(kind)

        def func(c1, c2):
            value = self(**chart_environment(kind, c1, c2))
            return np.broadcast_to(value, np.shape(c1)) * (1 + 0j)
        return func


def parse(text):
    if not isinstance(text, str) or not text.strip():
        raise ConfigError(f'empty expression {text!r}')
    return Expression(text)
