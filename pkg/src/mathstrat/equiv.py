"""Canonicalization of final-answer text and mathematical equivalence.

Answers arrive in mixed formats: boxed LaTeX fragments from reasoning
stages, stringified Python/sympy values from executed programs, and raw
dataset references. canonicalize() maps each to a typed CanonicalAnswer and
equivalent() compares two such values. Parsing is total: anything the
grammar does not recognize becomes normalized Text.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from enum import Enum
from fractions import Fraction
from math import isqrt
from typing import Optional

from .core import Dataset, Problem

# Relative tolerance for decimal-vs-anything comparisons; absolute floor
# near zero.
REL_TOL = Fraction(1, 10**6)
ABS_TOL = Fraction(1, 10**9)

# 50 digits are plenty for a 1e-6 relative comparison.
_PI = Fraction(Decimal("3.14159265358979323846264338327950288419716939937510"))
_SQRT_PRECISION = 10**40


class Kind(str, Enum):
    INTEGER = "integer"
    RATIONAL = "rational"
    DECIMAL = "decimal"
    SYMBOLIC_PRODUCT = "symbolic_product"
    RADICAL = "radical"
    INTERVAL = "interval"
    TUPLE = "tuple"
    MATRIX = "matrix"
    POLYNOMIAL = "polynomial"
    TEXT = "text"

_NUMERIC_KINDS = {Kind.INTEGER, Kind.RATIONAL, Kind.DECIMAL,
                  Kind.RADICAL, Kind.SYMBOLIC_PRODUCT}


class ReferenceUnparseable(ValueError):
    pass


@dataclass(frozen=True)
class CanonicalAnswer:
    kind: Kind
    payload: object
    display: str

    def __repr__(self):  # payloads can nest; keep test failures readable
        return f"CanonicalAnswer({self.kind.value}, {self.display!r})"


# ---------------------------------------------------------------------------
# wrapper stripping

_TEXT_CMD_RE = re.compile(r"\\(?:text|mbox|textrm|mathrm)\{([^{}]*)\}")


def _strip_wrappers(raw: str) -> str:
    s = raw.strip()
    if "\\begin" not in s:  # inside pmatrix, \\ is the row separator
        s = s.replace("\\\\", "\\")
    s = s.replace("\\!", "").replace("\\,", "").replace("\\;", "")
    s = s.replace("\\left", "").replace("\\right", "")
    s = s.replace("\\dfrac", "\\frac").replace("\\tfrac", "\\frac")
    s = s.replace("\\%", "").replace("\\$", "")
    s = s.replace("^{\\circ}", "").replace("^\\circ", "")
    s = s.replace("$", "")
    s = re.sub(r"\\\(|\\\)|\\\[|\\\]", "", s)
    # \text{...} almost always carries units; drop it entirely.
    s = _TEXT_CMD_RE.sub("", s)
    s = s.strip()
    while s.endswith(".") and not re.search(r"\d\.$", s):
        s = s[:-1].rstrip()
    # strip one pair of surrounding braces if they match
    while len(s) >= 2 and s[0] == "{" and s[-1] == "}" and _balanced(s[1:-1]):
        s = s[1:-1].strip()
    return s


def _balanced(s: str) -> bool:
    depth = 0
    for c in s:
        if c in "{([":
            depth += 1
        elif c in "})]":
            depth -= 1
            if depth < 0:
                return False
    return depth == 0


def _split_top_commas(s: str) -> list:
    parts, depth, cur = [], 0, []
    for c in s:
        if c in "([{":
            depth += 1
        elif c in ")]}":
            depth -= 1
        if c == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(c)
    parts.append("".join(cur))
    return parts


# ---------------------------------------------------------------------------
# scalar constructors

def _integer(v) -> CanonicalAnswer:
    v = int(v)
    return CanonicalAnswer(Kind.INTEGER, Fraction(v), str(v))


def _rational(fr: Fraction) -> CanonicalAnswer:
    if fr.denominator == 1:
        return _integer(fr.numerator)
    return CanonicalAnswer(Kind.RATIONAL, fr, f"{fr.numerator}/{fr.denominator}")


def _decimal(fr: Fraction, display: str) -> CanonicalAnswer:
    return CanonicalAnswer(Kind.DECIMAL, fr, display)


def _simplify_sqrt(n: int) -> tuple:
    """n -> (outside, inside) with sqrt(n) = outside*sqrt(inside), inside square-free."""
    outside, inside = 1, n
    f = 2
    while f * f <= inside:
        while inside % (f * f) == 0:
            inside //= f * f
            outside *= f
        f += 1
    return outside, inside


def _symbolic(coeff: Fraction, symbol: tuple) -> CanonicalAnswer:
    """symbol is ("pi",) or ("sqrt", radicand:int)."""
    if coeff == 0:
        return _integer(0)
    if symbol[0] == "sqrt":
        outside, inside = _simplify_sqrt(symbol[1])
        coeff = coeff * outside
        if inside == 1:
            return _rational(coeff)
        symbol = ("sqrt", inside)
        if coeff == 1:
            return CanonicalAnswer(Kind.RADICAL, inside, f"sqrt({inside})")
    sym_str = "pi" if symbol[0] == "pi" else f"sqrt({symbol[1]})"
    c = coeff
    if c == 1:
        disp = sym_str
    elif c == -1:
        disp = f"-{sym_str}"
    elif c.denominator == 1:
        disp = f"{c.numerator}*{sym_str}"
    else:
        disp = f"{c.numerator}/{c.denominator}*{sym_str}"
    return CanonicalAnswer(Kind.SYMBOLIC_PRODUCT, (coeff, symbol), disp)


# ---------------------------------------------------------------------------
# scalar parsers

_INT_RE = re.compile(r"^[+-]?\d+$")
_INT_COMMAS_RE = re.compile(r"^[+-]?\d{1,3}(?:,\d{3})+$")
_DEC_RE = re.compile(r"^[+-]?(?:\d+\.\d*|\.\d+)(?:[eE][+-]?\d+)?$|^[+-]?\d+[eE][+-]?\d+$")
_FRAC_LATEX_RE = re.compile(r"^([+-]?)\\frac\{([+-]?\d+)\}\{([+-]?\d+)\}$")
_FRAC_SLASH_RE = re.compile(r"^([+-]?\d+)\s*/\s*(\d+)$")
_SQRT_RE = re.compile(r"^(?:\\sqrt\{(\d+)\}|\\sqrt(\d)|sqrt\((\d+)\))$")

# coefficient forms allowed in a symbolic product
_COEFF = r"(?:\d+\.\d+|\d+|\d+/\d+|\\frac\{\d+\}\{\d+\})"
_SYM = r"(?:\\pi|pi|\\sqrt\{\d+\}|\\sqrt\d|sqrt\(\d+\))"
_SYMPROD_RE = re.compile(
    rf"^([+-]?)({_COEFF})?\s*(?:\*|\\cdot)?\s*({_SYM})\s*(?:/\s*(\d+))?$"
)


def _parse_int(s: str) -> Optional[CanonicalAnswer]:
    if _INT_RE.match(s):
        return _integer(int(s))
    if _INT_COMMAS_RE.match(s):
        return _integer(int(s.replace(",", "")))
    return None


def _parse_decimal(s: str) -> Optional[CanonicalAnswer]:
    if not _DEC_RE.match(s):
        return None
    try:
        d = Decimal(s)
    except InvalidOperation:
        return None
    disp = s.lstrip("+")
    return _decimal(Fraction(d), disp)


def _parse_rational(s: str) -> Optional[CanonicalAnswer]:
    m = _FRAC_LATEX_RE.match(s)
    if m:
        sign = -1 if m.group(1) == "-" else 1
        num, den = int(m.group(2)), int(m.group(3))
        if den == 0:
            return None
        return _rational(Fraction(sign * num, den))
    m = _FRAC_SLASH_RE.match(s)
    if m:
        num, den = int(m.group(1)), int(m.group(2))
        if den == 0:
            return None
        return _rational(Fraction(num, den))
    return None


def _parse_radical(s: str) -> Optional[CanonicalAnswer]:
    neg = s.startswith("-")
    body = s[1:].strip() if s[:1] in "+-" else s
    m = _SQRT_RE.match(body)
    if not m:
        return None
    n = int(next(g for g in m.groups() if g is not None))
    if n <= 0:
        return None
    return _symbolic(Fraction(-1 if neg else 1), ("sqrt", n))


def _coeff_to_fraction(text: str) -> Fraction:
    if "\\frac" in text:
        m = re.match(r"^\\frac\{(\d+)\}\{(\d+)\}$", text)
        return Fraction(int(m.group(1)), int(m.group(2)))
    if "/" in text:
        num, den = text.split("/")
        return Fraction(int(num), int(den))
    if "." in text:
        return Fraction(Decimal(text))
    return Fraction(int(text))


def _parse_symbolic_product(s: str) -> Optional[CanonicalAnswer]:
    # \frac{<coeff*sym>}{<int>} e.g. \frac{\pi}{4}, \frac{\sqrt{2}}{2}
    m = re.match(r"^([+-]?)\\frac\{(.+)\}\{(\d+)\}$", s)
    if m and re.search(r"pi|sqrt", m.group(2)):
        inner = _parse_symbolic_product(m.group(2))
        if inner is None or inner.kind not in (Kind.SYMBOLIC_PRODUCT, Kind.RADICAL):
            return None
        coeff, sym = _as_product(inner)
        sign = -1 if m.group(1) == "-" else 1
        return _symbolic(sign * coeff / int(m.group(3)), sym)
    m = _SYMPROD_RE.match(s)
    if not m:
        return None
    sign_s, coeff_s, sym_s, div_s = m.groups()
    coeff = _coeff_to_fraction(coeff_s) if coeff_s else Fraction(1)
    if sign_s == "-":
        coeff = -coeff
    if div_s:
        den = int(div_s)
        if den == 0:
            return None
        coeff /= den
    if "pi" in sym_s:
        symbol = ("pi",)
    else:
        digits = re.search(r"\d+", sym_s).group()
        if int(digits) <= 0:
            return None
        symbol = ("sqrt", int(digits))
    return _symbolic(coeff, symbol)


def _as_product(c: CanonicalAnswer) -> tuple:
    if c.kind is Kind.RADICAL:
        return Fraction(1), ("sqrt", c.payload)
    return c.payload


def _parse_scalar_numeric(s: str) -> Optional[CanonicalAnswer]:
    for fn in (_parse_rational, _parse_radical, _parse_symbolic_product,
               _parse_decimal, _parse_int):
        got = fn(s)
        if got is not None:
            return got
    return None


# ---------------------------------------------------------------------------
# composite parsers

def _parse_interval(s: str) -> Optional[CanonicalAnswer]:
    flags = None
    inner = None
    m = re.match(r"^Interval(?:\.(open|Ropen|Lopen))?\s*\((.*)\)$", s)
    if m:
        variant = m.group(1)
        inner = m.group(2)
        flags = {
            None: (True, True),
            "open": (False, False),
            "Ropen": (True, False),
            "Lopen": (False, True),
        }[variant]
    elif len(s) >= 2 and s[0] in "[(" and s[-1] in "])" and ("[" in s[0] or "]" in s[-1]):
        inner = s[1:-1]
        flags = (s[0] == "[", s[-1] == "]")
    if inner is None:
        return None
    parts = _split_top_commas(inner)
    if len(parts) != 2:
        return None
    endpoints = [canonicalize(p) for p in parts]
    if any(e.kind not in _NUMERIC_KINDS for e in endpoints):
        return None
    lo, hi = endpoints
    if _value(lo) > _value(hi):
        return None
    lo_c, hi_c = flags
    if not lo_c and not hi_c:
        disp = f"Interval.open({lo.display}, {hi.display})"
    else:
        disp = f"{'[' if lo_c else '('}{lo.display}, {hi.display}{']' if hi_c else ')'}"
    return CanonicalAnswer(Kind.INTERVAL, (lo, hi, lo_c, hi_c), disp)


def _parse_tuple(s: str) -> Optional[CanonicalAnswer]:
    if not (s.startswith("(") and s.endswith(")") and _balanced(s)):
        return None
    inner = s[1:-1]
    parts = _split_top_commas(inner)
    if len(parts) < 2 or any(not p.strip() for p in parts):
        return None
    elements = tuple(canonicalize(p) for p in parts)
    disp = "(" + ", ".join(e.display for e in elements) + ")"
    return CanonicalAnswer(Kind.TUPLE, elements, disp)


def _parse_matrix(s: str) -> Optional[CanonicalAnswer]:
    m = re.match(r"^\\begin\{pmatrix\}(.*)\\end\{pmatrix\}$", s, re.DOTALL)
    if not m:
        return None
    body = m.group(1).strip()
    rows = [r.strip() for r in re.split(r"\\\\", body) if r.strip()]
    if not rows:
        return None
    parsed_rows = []
    width = None
    for row in rows:
        entries = tuple(canonicalize(e) for e in row.split("&"))
        if width is None:
            width = len(entries)
        elif len(entries) != width:
            return None
        parsed_rows.append(entries)
    disp = ("\\begin{pmatrix}"
            + "\\\\".join(" & ".join(e.display for e in row) for row in parsed_rows)
            + "\\end{pmatrix}")
    return CanonicalAnswer(Kind.MATRIX, tuple(parsed_rows), disp)


_POLY_TERM_RE = re.compile(
    r"([+-])\s*(\d+/\d+|\d+)?\s*\*?\s*([a-zA-Z])\s*(?:(?:\^|\*\*)\s*\{?(\d+)\}?)?"
    r"|([+-])\s*(\d+/\d+|\d+)"
)


def _parse_polynomial(s: str) -> Optional[CanonicalAnswer]:
    text = s.replace(" ", "")
    if not text or not re.search(r"[a-zA-Z]", text):
        return None
    if text[0] not in "+-":
        text = "+" + text
    pos = 0
    coeffs: dict[int, Fraction] = {}
    var = None
    while pos < len(text):
        m = _POLY_TERM_RE.match(text, pos)
        if not m or m.start() != pos:
            return None
        if m.group(3):  # variable term
            sign = -1 if m.group(1) == "-" else 1
            coeff = Fraction(m.group(2)) if m.group(2) else Fraction(1)
            v = m.group(3)
            if var is None:
                var = v
            elif v != var:
                return None  # multivariate falls back to text
            deg = int(m.group(4)) if m.group(4) else 1
        else:  # constant term
            sign = -1 if m.group(5) == "-" else 1
            coeff = Fraction(m.group(6))
            deg = 0
        coeffs[deg] = coeffs.get(deg, Fraction(0)) + sign * coeff
        pos = m.end()
    if var is None:
        return None
    degree = max((d for d, c in coeffs.items() if c != 0), default=0)
    if degree == 0:
        return None
    vec = tuple(coeffs.get(d, Fraction(0)) for d in range(degree, -1, -1))
    disp = _poly_display(var, vec, degree)
    return CanonicalAnswer(Kind.POLYNOMIAL, (var, vec), disp)


def _poly_display(var: str, vec: tuple, degree: int) -> str:
    parts = []
    for i, c in enumerate(vec):
        d = degree - i
        if c == 0:
            continue
        sign = "-" if c < 0 else ("+" if parts else "")
        mag = abs(c)
        coeff_s = "" if (mag == 1 and d > 0) else (
            str(mag.numerator) if mag.denominator == 1
            else f"{mag.numerator}/{mag.denominator}")
        if d == 0:
            term = coeff_s or "1"
        elif d == 1:
            term = f"{coeff_s}{var}"
        else:
            term = f"{coeff_s}{var}^{d}"
        parts.append(sign + term)
    return "".join(parts) or "0"


def _normalize_text(s: str) -> str:
    t = s.lower().strip()
    t = re.sub(r"\s+", " ", t)
    t = t.strip(" .,:;!?\"'")
    return t


def canonicalize(raw: str) -> CanonicalAnswer:
    """Parse raw answer text into a CanonicalAnswer. Total: never raises."""
    s = _strip_wrappers(raw if isinstance(raw, str) else str(raw))
    for fn in (_parse_interval, _parse_tuple, _parse_matrix, _parse_rational,
               _parse_radical, _parse_symbolic_product, _parse_decimal,
               _parse_int, _parse_polynomial):
        try:
            got = fn(s)
        except RecursionError:  # pathological nesting; treat as opaque text
            got = None
        if got is not None:
            return got
    return CanonicalAnswer(Kind.TEXT, _normalize_text(s), _normalize_text(s))


# ---------------------------------------------------------------------------
# equivalence

def _value(c: CanonicalAnswer) -> Fraction:
    """High-precision rational approximation of a numeric-valued scalar."""
    if c.kind in (Kind.INTEGER, Kind.RATIONAL, Kind.DECIMAL):
        return c.payload
    if c.kind is Kind.RADICAL:
        return _sqrt_fraction(Fraction(c.payload))
    if c.kind is Kind.SYMBOLIC_PRODUCT:
        coeff, symbol = c.payload
        base = _PI if symbol[0] == "pi" else _sqrt_fraction(Fraction(symbol[1]))
        return coeff * base
    raise TypeError(f"{c.kind} has no numeric value")


def _sqrt_fraction(fr: Fraction) -> Fraction:
    scaled = fr.numerator * fr.denominator * _SQRT_PRECISION ** 2
    return Fraction(isqrt(scaled), fr.denominator * _SQRT_PRECISION)


def _close(x: Fraction, y: Fraction) -> bool:
    diff = abs(x - y)
    return diff <= max(ABS_TOL, REL_TOL * max(abs(x), abs(y)))


def _scalar_equal(a: CanonicalAnswer, b: CanonicalAnswer) -> bool:
    if a.kind == b.kind and a.kind in (Kind.INTEGER, Kind.RATIONAL,
                                       Kind.RADICAL, Kind.SYMBOLIC_PRODUCT):
        return a.payload == b.payload
    exact = {Kind.INTEGER, Kind.RATIONAL}
    if a.kind in exact and b.kind in exact:
        return a.payload == b.payload
    # a decimal on either side, or a mixed numeric/symbolic pair: compare
    # high-precision evaluations within tolerance
    return _close(_value(a), _value(b))


def answers_equal(a: CanonicalAnswer, b: CanonicalAnswer) -> bool:
    if a.kind in _NUMERIC_KINDS and b.kind in _NUMERIC_KINDS:
        return _scalar_equal(a, b)
    if a.kind != b.kind:
        return False
    if a.kind is Kind.INTERVAL:
        alo, ahi, alc, ahc = a.payload
        blo, bhi, blc, bhc = b.payload
        return (alc, ahc) == (blc, bhc) and _scalar_equal(alo, blo) and _scalar_equal(ahi, bhi)
    if a.kind is Kind.TUPLE:
        return len(a.payload) == len(b.payload) and all(
            answers_equal(x, y) for x, y in zip(a.payload, b.payload))
    if a.kind is Kind.MATRIX:
        if len(a.payload) != len(b.payload):
            return False
        for ra, rb in zip(a.payload, b.payload):
            if len(ra) != len(rb) or not all(answers_equal(x, y) for x, y in zip(ra, rb)):
                return False
        return True
    if a.kind is Kind.POLYNOMIAL:
        return a.payload == b.payload
    return a.payload == b.payload  # text


def equivalent(a: str, b: str, strict_string: bool = False) -> bool:
    """True iff the two answer texts denote the same mathematical value."""
    if strict_string:
        return a.strip() == b.strip()
    return answers_equal(canonicalize(a), canonicalize(b))


# ---------------------------------------------------------------------------
# dataset reference normalization

_GSM8K_MARKER = "####"


def normalize_reference(p: Problem) -> str:
    """Extract the gradable final answer from a dataset reference field."""
    ref = p.reference_answer
    if not ref:
        raise ReferenceUnparseable(f"problem {p.id!r} has an empty reference")
    if p.dataset is Dataset.GSM8K:
        idx = ref.rfind(_GSM8K_MARKER)
        if idx == -1:
            raise ReferenceUnparseable(f"problem {p.id!r}: no '####' marker in reference")
        return ref[idx + len(_GSM8K_MARKER):].strip()
    if p.dataset is Dataset.MATH:
        from .extract import extract_boxed, NoAnswerFound
        try:
            return extract_boxed(ref).payload
        except NoAnswerFound:
            raise ReferenceUnparseable(f"problem {p.id!r}: no boxed answer in solution")
    return ref
