"""SMILES subset parser.

Supported: organic-subset and bracket atoms (isotope, chirality, H count,
charge, atom class), bonds ``- = # :``, branches, ring closures (digits and
``%nn``), aromatic lowercase atoms and ``.`` disconnections.  Rejected with a
:class:`~kgaffinity.errors.ParseError`: wildcard ``*``, quadruple ``$``,
cis/trans marks ``/ \\`` and reaction syntax ``>``.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import ParseError
from .elements import (
    AROMATIC_BRACKET,
    AROMATIC_ORGANIC,
    ELEMENT_SET,
    ORGANIC_SUBSET,
    allowed_valences,
)
from .graph import AROMATIC, DOUBLE, SINGLE, TRIPLE, VALENCE_CONTRIBUTION, Atom, Bond, MolecularGraph
from .rings import ring_atom_flags

_BOND_SYMBOLS = {"-": SINGLE, "=": DOUBLE, "#": TRIPLE, ":": AROMATIC}
_REJECTED = {
    "*": "wildcard atoms are not supported",
    "$": "quadruple bonds are not supported",
    "/": "cis/trans bond marks are not supported",
    "\\": "cis/trans bond marks are not supported",
    ">": "reaction SMILES are not supported",
}


@dataclass
class _RawAtom:
    symbol: str
    aromatic: bool
    bracket: bool
    charge: int = 0
    hcount: int = 0
    isotope: int | None = None
    chirality: str | None = None
    atom_class: int | None = None
    offset: int = 0


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.atoms: list[_RawAtom] = []
        self.bonds: dict[tuple[int, int], str] = {}
        self.bond_list: list[Bond] = []

    def error(self, msg: str, offset: int | None = None):
        raise ParseError(msg, self.pos if offset is None else offset, self.text)

    def peek(self, k: int = 0) -> str:
        i = self.pos + k
        return self.text[i] if i < len(self.text) else ""

    def add_bond(self, a: int, b: int, symbol: str | None, offset: int):
        if a == b:
            self.error("atom bonded to itself", offset)
        key = (min(a, b), max(a, b))
        if key in self.bonds:
            self.error("duplicate bond", offset)
        if symbol is None:
            order = AROMATIC if self.atoms[a].aromatic and self.atoms[b].aromatic else SINGLE
        else:
            order = _BOND_SYMBOLS[symbol]
        self.bonds[key] = order
        self.bond_list.append(Bond(a, b, order))

    def parse(self):
        text = self.text
        prev: int | None = None
        branch_stack: list[tuple[int | None, int]] = []
        rings: dict[int, tuple[int, str | None, int]] = {}
        pending_bond: str | None = None
        pending_offset = 0
        expect_atom_after_open = False

        while self.pos < len(text):
            ch = text[self.pos]
            start = self.pos
            if ch in _REJECTED:
                self.error(_REJECTED[ch])
            if ch == "(":
                if prev is None:
                    self.error("branch opened before any atom")
                if pending_bond is not None:
                    self.error("bond symbol before branch")
                branch_stack.append((prev, start))
                expect_atom_after_open = True
                self.pos += 1
                continue
            if ch == ")":
                if not branch_stack:
                    self.error("unmatched ')'")
                if expect_atom_after_open or pending_bond is not None:
                    self.error("empty branch")
                prev, _ = branch_stack.pop()
                self.pos += 1
                continue
            if ch in _BOND_SYMBOLS:
                if pending_bond is not None:
                    self.error("two consecutive bond symbols")
                if prev is None:
                    self.error("bond symbol without a preceding atom")
                pending_bond, pending_offset = ch, start
                self.pos += 1
                continue
            if ch == ".":
                if pending_bond is not None:
                    self.error("bond symbol before '.'")
                if branch_stack and expect_atom_after_open:
                    self.error("empty branch")
                prev = None
                self.pos += 1
                continue
            if ch.isdigit() or ch == "%":
                if prev is None:
                    self.error("ring closure without a preceding atom")
                if ch == "%":
                    digits = text[self.pos + 1:self.pos + 3]
                    if len(digits) != 2 or not digits.isdigit():
                        self.error("'%' must be followed by two digits")
                    label = int(digits)
                    self.pos += 3
                else:
                    label = int(ch)
                    self.pos += 1
                if label in rings:
                    other, other_bond, other_off = rings.pop(label)
                    if pending_bond and other_bond and pending_bond != other_bond:
                        self.error(f"conflicting bond symbols for ring closure {label}", start)
                    self.add_bond(other, prev, pending_bond or other_bond, start)
                else:
                    rings[label] = (prev, pending_bond, start)
                pending_bond = None
                continue
            if ch == "[":
                atom = self.bracket_atom()
            else:
                atom = self.organic_atom()
            idx = len(self.atoms)
            self.atoms.append(atom)
            if prev is not None:
                self.add_bond(prev, idx, pending_bond, pending_offset if pending_bond else start)
            elif pending_bond is not None:
                self.error("bond symbol without a preceding atom", pending_offset)
            pending_bond = None
            prev = idx
            expect_atom_after_open = False

        if pending_bond is not None:
            self.error("dangling bond symbol", pending_offset)
        if branch_stack:
            self.error("unclosed branch", branch_stack[-1][1])
        if rings:
            label, (_, _, off) = min(rings.items(), key=lambda kv: kv[1][2])
            self.error(f"unmatched ring closure {label}", off)
        if not self.atoms:
            self.error("no atoms", 0)

    def organic_atom(self) -> _RawAtom:
        start = self.pos
        two = self.text[self.pos:self.pos + 2]
        if two in ("Cl", "Br"):
            self.pos += 2
            return _RawAtom(two, False, False, offset=start)
        ch = self.peek()
        if ch in ORGANIC_SUBSET:
            self.pos += 1
            return _RawAtom(ch, False, False, offset=start)
        if ch in AROMATIC_ORGANIC:
            self.pos += 1
            return _RawAtom(ch.upper(), True, False, offset=start)
        self.error(f"unknown symbol {ch!r}")

    def bracket_atom(self) -> _RawAtom:
        start = self.pos
        self.pos += 1
        isotope = None
        j = self.pos
        while self.peek().isdigit():
            self.pos += 1
        if self.pos > j:
            isotope = int(self.text[j:self.pos])

        symbol, aromatic = None, False
        for cand in AROMATIC_BRACKET:
            if self.text.startswith(cand, self.pos):
                symbol, aromatic = cand.capitalize(), True
                self.pos += len(cand)
                break
        if symbol is None:
            ch = self.peek()
            if ch == "*":
                self.error(_REJECTED["*"])
            if not ch.isupper():
                self.error(f"expected element symbol, got {ch!r}")
            two = self.text[self.pos:self.pos + 2]
            if len(two) == 2 and two[1].islower() and two in ELEMENT_SET:
                symbol = two
                self.pos += 2
            elif ch in ELEMENT_SET:
                symbol = ch
                self.pos += 1
            else:
                self.error(f"unknown element {ch!r}")

        chirality = None
        if self.peek() == "@":
            j = self.pos
            self.pos += 1
            if self.peek() == "@":
                self.pos += 1
            elif self.text[self.pos:self.pos + 2] in ("TH", "AL", "SP", "TB", "OH"):
                self.pos += 2
                while self.peek().isdigit():
                    self.pos += 1
            chirality = self.text[j:self.pos]

        hcount = 0
        if self.peek() == "H":
            self.pos += 1
            hcount = 1
            j = self.pos
            while self.peek().isdigit():
                self.pos += 1
            if self.pos > j:
                hcount = int(self.text[j:self.pos])

        charge = 0
        sign = self.peek()
        if sign and sign in "+-":
            self.pos += 1
            unit = 1 if sign == "+" else -1
            j = self.pos
            while self.peek().isdigit():
                self.pos += 1
            if self.pos > j:
                charge = unit * int(self.text[j:self.pos])
            else:
                charge = unit
                while self.peek() == sign:
                    self.pos += 1
                    charge += unit

        atom_class = None
        if self.peek() == ":":
            self.pos += 1
            j = self.pos
            while self.peek().isdigit():
                self.pos += 1
            if self.pos == j:
                self.error("atom class ':' must be followed by digits")
            atom_class = int(self.text[j:self.pos])

        if self.peek() != "]":
            self.error("unterminated bracket atom" if not self.peek() else f"unexpected {self.peek()!r} in bracket atom")
        self.pos += 1
        return _RawAtom(symbol, aromatic, True, charge, hcount, isotope, chirality, atom_class, start)


def _finalize(p: _Parser) -> MolecularGraph:
    used = [0] * len(p.atoms)
    for bond in p.bond_list:
        c = VALENCE_CONTRIBUTION[bond.order]
        used[bond.a] += c
        used[bond.b] += c

    atoms = []
    for i, raw in enumerate(p.atoms):
        valences = allowed_valences(raw.symbol, raw.charge)
        implicit_h = radical = 0
        if not raw.bracket:
            target = next((v for v in (valences or ()) if v >= used[i]), None)
            if target is None:
                p.error(f"valence violation on {raw.symbol} (bond order sum {used[i]})", raw.offset)
            implicit_h = target - used[i]
            if raw.aromatic and implicit_h > 0:
                implicit_h -= 1
        elif valences is not None:
            total = used[i] + raw.hcount
            target = next((v for v in valences if v >= total), None)
            if target is None:
                p.error(f"valence violation on [{raw.symbol}] (valence {total})", raw.offset)
            radical = target - total
            if raw.aromatic and radical > 0:
                radical -= 1
        atoms.append(
            Atom(
                symbol=raw.symbol,
                charge=raw.charge,
                aromatic=raw.aromatic,
                implicit_h=implicit_h,
                radical=radical,
                explicit_h=raw.hcount,
                isotope=raw.isotope,
                chirality=raw.chirality,
                atom_class=raw.atom_class,
                bracket=raw.bracket,
            )
        )
    graph = MolecularGraph(tuple(atoms), tuple(p.bond_list), p.text)
    in_ring = ring_atom_flags(graph)
    for i, atom in enumerate(atoms):
        if atom.aromatic and not in_ring[i]:
            p.error(f"aromatic atom {atom.symbol.lower()} outside a ring", p.atoms[i].offset)
    return graph


def parse_smiles(text: str) -> MolecularGraph:
    """Parse a SMILES string into a :class:`MolecularGraph`.

    Raises :class:`~kgaffinity.errors.ParseError` carrying the byte offset of
    the offending token.
    """
    if not isinstance(text, str):
        raise TypeError("SMILES must be a str")
    text = text.strip()
    if not text:
        raise ParseError("empty SMILES", 0)
    if not text.isascii():
        bad = next(i for i, c in enumerate(text) if not c.isascii())
        raise ParseError("non-ASCII character", bad, text)
    p = _Parser(text)
    p.parse()
    return _finalize(p)
