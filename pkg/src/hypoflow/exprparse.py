"""Tiny expression grammar for forms in input files.

    expr  := ('-')? term (('+'|'-') term)*
    term  := coeff ('*')? monom | coeff | monom
    monom := 'e' digits | 'e{' i (',' i)* '}'
    coeff := decimal | p'/'q | 'sqrt(' decimal ')' | decimal '*sqrt(' decimal ')'

A bare coefficient is only allowed for the literal zero form ("0").
Fractions may multiply sqrt literals ("2/3*sqrt(6)"). Non-ascending
monomials are normalized with the permutation sign ("e21" == -e12);
repeated indices are rejected. The unicode minus sign is accepted.
"""

from __future__ import annotations

import numpy as np

from .algebra import Form, sort_sign


class ParseError(ValueError):
    def __init__(self, msg, pos):
        super().__init__(f"{msg} (at position {pos})")
        self.pos = pos


class _Scanner:
    def __init__(self, src: str):
        self.src = src.replace("−", "-")
        self.pos = 0

    def skip_ws(self):
        while self.pos < len(self.src) and self.src[self.pos].isspace():
            self.pos += 1

    def peek(self):
        self.skip_ws()
        return self.src[self.pos] if self.pos < len(self.src) else ""

    def expect(self, ch):
        if self.peek() != ch:
            raise ParseError(f"expected {ch!r}", self.pos)
        self.pos += 1

    def match(self, ch):
        if self.peek() == ch:
            self.pos += 1
            return True
        return False

    def number(self):
        self.skip_ws()
        start = self.pos
        while self.pos < len(self.src) and (self.src[self.pos].isdigit() or self.src[self.pos] == "."):
            self.pos += 1
        if self.pos == start:
            raise ParseError("expected a number", self.pos)
        try:
            return float(self.src[start:self.pos])
        except ValueError as exc:
            raise ParseError(str(exc), start) from exc

    def word(self, w):
        self.skip_ws()
        if self.src.startswith(w, self.pos):
            self.pos += len(w)
            return True
        return False


def _parse_coeff(sc: _Scanner):
    """Numeric coefficient; returns None when the next token is a monomial."""
    sc.skip_ws()
    if sc.peek() == "e":
        return None
    if sc.word("sqrt("):
        v = np.sqrt(sc.number())
        sc.expect(")")
    else:
        v = sc.number()
        if sc.match("/"):
            v = v / sc.number()
    save = sc.pos
    if sc.match("*"):
        if sc.word("sqrt("):
            v = v * np.sqrt(sc.number())
            sc.expect(")")
            save = sc.pos
            if sc.match("/"):
                v = v / sc.number()
                save = sc.pos
        sc.pos = save if sc.peek() != "e" and sc.src[save - 1] == "*" else sc.pos
        if sc.pos == save and sc.src[save - 1] == "*":
            sc.pos = save - 1  # the '*' belongs to coeff*monom
    return v


def _parse_monom(sc: _Scanner):
    sc.skip_ws()
    pos0 = sc.pos
    if not sc.match("e"):
        raise ParseError("expected a monomial like e127 or e{1,2,7}", sc.pos)
    if sc.match("{"):
        idx = [int(sc.number())]
        while sc.match(","):
            idx.append(int(sc.number()))
        sc.expect("}")
    else:
        start = sc.pos
        while sc.pos < len(sc.src) and sc.src[sc.pos].isdigit():
            sc.pos += 1
        if sc.pos == start:
            raise ParseError("expected digit indices after 'e'", sc.pos)
        idx = [int(d) for d in sc.src[start:sc.pos]]
    if len(set(idx)) != len(idx):
        raise ParseError(f"repeated index in monomial {idx}", pos0)
    srt, sign = sort_sign(tuple(i - 1 for i in idx))
    return srt, sign


def parse_expression(src: str, dim: int | None = None) -> Form:
    """Parse an expression into a Form; dim is inferred from the largest index
    when not given. "0" parses to the zero form (degree fixed by context or 0)."""
    sc = _Scanner(src)
    terms = []
    sign = -1.0 if sc.match("-") else 1.0
    while True:
        coeff = _parse_coeff(sc)
        if coeff is None:
            coeff = 1.0
            mono = _parse_monom(sc)
        else:
            sc.match("*")
            if sc.peek() == "e":
                mono = _parse_monom(sc)
            else:
                if coeff != 0.0:
                    raise ParseError("bare coefficients are only allowed for 0", sc.pos)
                mono = None
        terms.append((sign * coeff, mono))
        sc.skip_ws()
        if sc.pos >= len(sc.src):
            break
        if sc.match("+"):
            sign = 1.0
        elif sc.match("-"):
            sign = -1.0
        else:
            raise ParseError(f"unexpected character {sc.peek()!r}", sc.pos)
    mono_terms = [(c, m) for c, m in terms if m is not None]
    if not mono_terms:
        return Form.zero(dim or 1, 0)
    degrees = {len(m[0]) for _, m in mono_terms}
    if len(degrees) != 1:
        raise ParseError(f"mixed degrees {sorted(degrees)} in one form", 0)
    k = degrees.pop()
    n = dim or max(max(m[0]) + 1 for _, m in mono_terms)
    entries = {}
    for c, (srt, sgn) in mono_terms:
        entries[srt] = entries.get(srt, 0.0) + c * sgn
    coeffs = np.zeros(len(list(__import__("itertools").combinations(range(n), k))))
    out = Form.zero(n, k)
    for srt, v in entries.items():
        if max(srt) >= n:
            raise ParseError(f"index {max(srt) + 1} exceeds dimension {n}", 0)
        out = out + v * Form.from_dict(n, k, {srt: 1.0})
    return out


def emit(form: Form) -> str:
    """Render a real form so that parse_expression(emit(f)) == f."""
    if form.is_complex:
        raise ValueError("emit handles real forms only")
    parts = []
    for idx, c in form.items():
        c = float(np.real(c))
        mono = "e" + "".join(str(i) for i in idx) if form.dim < 10 else \
            "e{" + ",".join(str(i) for i in idx) + "}"
        mag = f"{abs(c):.17g}"
        lead = "-" if c < 0 else ("+" if parts else "")
        frag = mono if abs(c) == 1.0 else f"{mag}*{mono}"
        parts.append(f"{lead} {frag}".strip() if parts or c < 0 else frag)
    if not parts:
        return "0"
    return " ".join(parts)
