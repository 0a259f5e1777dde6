"""LTL formulas: syntax tree, parser, normal form, and lasso-word semantics.

The next operator is rejected at parse time; it has no meaning over
continuous trajectories and nothing downstream supports it.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import LtlSyntaxError, NextUnsupportedError

Word = list  # list of frozenset[str] letters


class Ltl:
    """Base class for formula nodes."""

    def __repr__(self) -> str:
        return to_text(self)


@dataclass(frozen=True, repr=False)
class TrueF(Ltl):
    pass


@dataclass(frozen=True, repr=False)
class FalseF(Ltl):
    pass


@dataclass(frozen=True, repr=False)
class Atom(Ltl):
    name: str


@dataclass(frozen=True, repr=False)
class Not(Ltl):
    operand: Ltl


@dataclass(frozen=True, repr=False)
class And(Ltl):
    left: Ltl
    right: Ltl


@dataclass(frozen=True, repr=False)
class Or(Ltl):
    left: Ltl
    right: Ltl


@dataclass(frozen=True, repr=False)
class Implies(Ltl):
    left: Ltl
    right: Ltl


@dataclass(frozen=True, repr=False)
class Until(Ltl):
    left: Ltl
    right: Ltl


@dataclass(frozen=True, repr=False)
class Release(Ltl):
    left: Ltl
    right: Ltl


@dataclass(frozen=True, repr=False)
class Eventually(Ltl):
    operand: Ltl


@dataclass(frozen=True, repr=False)
class Always(Ltl):
    operand: Ltl


def atoms_of(f: Ltl) -> frozenset[str]:
    match f:
        case Atom(name):
            return frozenset([name])
        case TrueF() | FalseF():
            return frozenset()
        case Not(g) | Eventually(g) | Always(g):
            return atoms_of(g)
        case And(l, r) | Or(l, r) | Implies(l, r) | Until(l, r) | Release(l, r):
            return atoms_of(l) | atoms_of(r)
    raise TypeError(f"not a formula: {f!r}")


def to_text(f: Ltl) -> str:
    match f:
        case TrueF():
            return "true"
        case FalseF():
            return "false"
        case Atom(name):
            return name
        case Not(g):
            return f"!{to_text(g)}" if isinstance(g, (Atom, TrueF, FalseF)) else f"!({to_text(g)})"
        case And(l, r):
            return f"({to_text(l)} && {to_text(r)})"
        case Or(l, r):
            return f"({to_text(l)} || {to_text(r)})"
        case Implies(l, r):
            return f"({to_text(l)} -> {to_text(r)})"
        case Until(l, r):
            return f"({to_text(l)} U {to_text(r)})"
        case Release(l, r):
            return f"({to_text(l)} R {to_text(r)})"
        case Eventually(g):
            return f"<>({to_text(g)})"
        case Always(g):
            return f"[]({to_text(g)})"
    raise TypeError(f"not a formula: {f!r}")


# --- parser -----------------------------------------------------------------

_KEYWORDS = {"true", "false", "U", "R", "F", "G"}


class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens: list[tuple[str, str, int]] = []  # (kind, value, offset)
        self._scan()
        self.index = 0

    def _scan(self) -> None:
        text = self.text
        i = 0
        n = len(text)
        while i < n:
            c = text[i]
            if c.isspace():
                i += 1
                continue
            if text.startswith("&&", i):
                self.tokens.append(("op", "&&", i))
                i += 2
            elif text.startswith("||", i):
                self.tokens.append(("op", "||", i))
                i += 2
            elif text.startswith("->", i):
                self.tokens.append(("op", "->", i))
                i += 2
            elif text.startswith("<>", i):
                self.tokens.append(("op", "<>", i))
                i += 2
            elif text.startswith("[]", i):
                self.tokens.append(("op", "[]", i))
                i += 2
            elif text.startswith("()", i):
                raise NextUnsupportedError("next operator '()' is not supported", i)
            elif c == "!":
                self.tokens.append(("op", "!", i))
                i += 1
            elif c == "(":
                self.tokens.append(("lparen", "(", i))
                i += 1
            elif c == ")":
                self.tokens.append(("rparen", ")", i))
                i += 1
            elif c.isalpha() or c == "_":
                j = i + 1
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                word = text[i:j]
                if word == "X":
                    raise NextUnsupportedError("next operator 'X' is not supported", i)
                if word in _KEYWORDS:
                    self.tokens.append(("kw", word, i))
                else:
                    self.tokens.append(("atom", word, i))
                i = j
            else:
                raise LtlSyntaxError(f"unexpected character {c!r}", i)
        self.tokens.append(("eof", "", n))

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.index]

    def next(self) -> tuple[str, str, int]:
        tok = self.tokens[self.index]
        self.index += 1
        return tok


def parse_ltl(text: str) -> Ltl:
    """Parse formula text into a syntax tree.

    Grammar: atoms ``[a-zA-Z_]\\w*``; operators ``! && || -> U R F G``
    with aliases ``<>`` for F and ``[]`` for G; precedence
    unary > U/R (right assoc) > && > || > ->.
    """
    tz = _Tokenizer(text)
    f = _parse_implies(tz)
    kind, val, off = tz.peek()
    if kind != "eof":
        raise LtlSyntaxError(f"unexpected token {val!r}", off)
    return f


def _parse_implies(tz: _Tokenizer) -> Ltl:
    left = _parse_or(tz)
    kind, val, _ = tz.peek()
    if kind == "op" and val == "->":
        tz.next()
        return Implies(left, _parse_implies(tz))
    return left


def _parse_or(tz: _Tokenizer) -> Ltl:
    left = _parse_and(tz)
    while True:
        kind, val, _ = tz.peek()
        if kind == "op" and val == "||":
            tz.next()
            left = Or(left, _parse_and(tz))
        else:
            return left


def _parse_and(tz: _Tokenizer) -> Ltl:
    left = _parse_until(tz)
    while True:
        kind, val, _ = tz.peek()
        if kind == "op" and val == "&&":
            tz.next()
            left = And(left, _parse_until(tz))
        else:
            return left


def _parse_until(tz: _Tokenizer) -> Ltl:
    left = _parse_unary(tz)
    kind, val, _ = tz.peek()
    if kind == "kw" and val in ("U", "R"):
        tz.next()
        right = _parse_until(tz)
        return Until(left, right) if val == "U" else Release(left, right)
    return left


def _parse_unary(tz: _Tokenizer) -> Ltl:
    kind, val, off = tz.peek()
    if kind == "op" and val == "!":
        tz.next()
        return Not(_parse_unary(tz))
    if (kind == "op" and val in ("<>", "[]")) or (kind == "kw" and val in ("F", "G")):
        tz.next()
        sub = _parse_unary(tz)
        return Eventually(sub) if val in ("<>", "F") else Always(sub)
    return _parse_primary(tz)


def _parse_primary(tz: _Tokenizer) -> Ltl:
    kind, val, off = tz.next()
    if kind == "atom":
        return Atom(val)
    if kind == "kw" and val == "true":
        return TrueF()
    if kind == "kw" and val == "false":
        return FalseF()
    if kind == "lparen":
        f = _parse_implies(tz)
        kind2, val2, off2 = tz.next()
        if kind2 != "rparen":
            raise LtlSyntaxError(f"expected ')', got {val2!r}", off2)
        return f
    raise LtlSyntaxError(f"unexpected token {val!r}", off)


# --- normalization ----------------------------------------------------------

def normalize(f: Ltl) -> Ltl:
    """Negation normal form over {atoms, !atom, &&, ||, U, R}.

    Sugar is eliminated first (a -> b becomes !a || b, <>a becomes
    true U a, []a becomes false R a), then negations are pushed to
    the atoms by duality.
    """
    return _nnf(_desugar(f), negate=False)


def _desugar(f: Ltl) -> Ltl:
    match f:
        case TrueF() | FalseF() | Atom(_):
            return f
        case Not(g):
            return Not(_desugar(g))
        case And(l, r):
            return And(_desugar(l), _desugar(r))
        case Or(l, r):
            return Or(_desugar(l), _desugar(r))
        case Implies(l, r):
            return Or(Not(_desugar(l)), _desugar(r))
        case Until(l, r):
            return Until(_desugar(l), _desugar(r))
        case Release(l, r):
            return Release(_desugar(l), _desugar(r))
        case Eventually(g):
            return Until(TrueF(), _desugar(g))
        case Always(g):
            return Release(FalseF(), _desugar(g))
    raise TypeError(f"not a formula: {f!r}")


def _nnf(f: Ltl, negate: bool) -> Ltl:
    match f:
        case TrueF():
            return FalseF() if negate else TrueF()
        case FalseF():
            return TrueF() if negate else FalseF()
        case Atom(_):
            return Not(f) if negate else f
        case Not(g):
            return _nnf(g, not negate)
        case And(l, r):
            if negate:
                return Or(_nnf(l, True), _nnf(r, True))
            return And(_nnf(l, False), _nnf(r, False))
        case Or(l, r):
            if negate:
                return And(_nnf(l, True), _nnf(r, True))
            return Or(_nnf(l, False), _nnf(r, False))
        case Until(l, r):
            if negate:
                return Release(_nnf(l, True), _nnf(r, True))
            return Until(_nnf(l, False), _nnf(r, False))
        case Release(l, r):
            if negate:
                return Until(_nnf(l, True), _nnf(r, True))
            return Release(_nnf(l, False), _nnf(r, False))
    raise TypeError(f"not desugared: {f!r}")


# --- lasso-word semantics oracle --------------------------------------------

def eval_ltl_on_lasso(f: Ltl, stem: Word, loop: Word) -> bool:
    """Ground-truth satisfaction of ``f`` on the word stem . loop^omega.

    Direct recursive evaluation: each subformula gets a truth vector
    over the stem+loop positions, with Until/Release computed as
    least/greatest fixpoints on the loop part. Letters are sets of
    atom names.
    """
    if not loop:
        raise ValueError("loop must be nonempty")
    word = [frozenset(sigma) for sigma in list(stem) + list(loop)]
    n = len(word)
    first_loop = len(stem)

    def succ(p: int) -> int:
        return p + 1 if p < n - 1 else first_loop

    memo: dict[Ltl, list[bool]] = {}

    def vec(g: Ltl) -> list[bool]:
        if g in memo:
            return memo[g]
        match g:
            case TrueF():
                v = [True] * n
            case FalseF():
                v = [False] * n
            case Atom(name):
                v = [name in word[p] for p in range(n)]
            case Not(h):
                v = [not b for b in vec(h)]
            case And(l, r):
                vl, vr = vec(l), vec(r)
                v = [a and b for a, b in zip(vl, vr)]
            case Or(l, r):
                vl, vr = vec(l), vec(r)
                v = [a or b for a, b in zip(vl, vr)]
            case Implies(l, r):
                vl, vr = vec(l), vec(r)
                v = [(not a) or b for a, b in zip(vl, vr)]
            case Eventually(h):
                v = _fix_until([True] * n, vec(h), n, succ)
            case Always(h):
                v = _fix_release([False] * n, vec(h), n, succ)
            case Until(l, r):
                v = _fix_until(vec(l), vec(r), n, succ)
            case Release(l, r):
                v = _fix_release(vec(l), vec(r), n, succ)
            case _:
                raise TypeError(f"not a formula: {g!r}")
        memo[g] = v
        return v

    return vec(f)[0]


def _fix_until(a: list[bool], b: list[bool], n: int, succ) -> list[bool]:
    # least fixpoint of  u[p] = b[p] or (a[p] and u[succ(p)])
    u = [False] * n
    changed = True
    while changed:
        changed = False
        for p in range(n - 1, -1, -1):
            v = b[p] or (a[p] and u[succ(p)])
            if v != u[p]:
                u[p] = v
                changed = True
    return u


def _fix_release(a: list[bool], b: list[bool], n: int, succ) -> list[bool]:
    # greatest fixpoint of  u[p] = b[p] and (a[p] or u[succ(p)])
    u = [True] * n
    changed = True
    while changed:
        changed = False
        for p in range(n - 1, -1, -1):
            v = b[p] and (a[p] or u[succ(p)])
            if v != u[p]:
                u[p] = v
                changed = True
    return u
