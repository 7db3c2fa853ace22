"""Series definitions in product-of-linear-factors normal form.

A series is written as

    S = sum_{n>=0} a(n) * prod_{i=0}^{n-1} p(i)/q(i)

with integer polynomials a, p, q, where p and q are given as products of
linear factors (u*i + v)^k times an integer constant.  The constant of
interest is recovered from S by a post-processing recipe (rational
multiplier, optional square-root factor, optional reciprocal).

The built-in catalog covers pi (Chudnovsky), Apery's constant zeta(3),
e and ln 2.  Each catalog entry's normal form is frozen here and guarded
by an exact rational-summation test against the published formula.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from math import gcd


class SeriesDefError(ValueError):
    """A series definition violates one of its invariants."""


class DegreesMismatch(SeriesDefError):
    pass


class NonConvergent(SeriesDefError):
    pass


class IntegerRootInRange(SeriesDefError):
    pass


class NotCoprime(SeriesDefError):
    pass


@dataclass(frozen=True)
class LinearFactor:
    """The factor (u*n + v)^power."""

    u: int
    v: int
    power: int = 1

    def __post_init__(self):
        if self.power < 1:
            raise SeriesDefError(f"factor power must be positive, got {self.power}")
        if self.u == 0 and self.v == 0:
            raise SeriesDefError("factor is the zero polynomial")

    def value(self, n: int) -> int:
        return (self.u * n + self.v) ** self.power

    def base_value(self, n: int) -> int:
        """u*n + v without the power."""
        return self.u * n + self.v

    def nonneg_integer_root(self):
        """The integer n >= 0 with u*n + v == 0, or None."""
        if self.u == 0:
            return None
        if self.v % self.u == 0 and -self.v // self.u >= 0:
            return -self.v // self.u
        return None


@dataclass(frozen=True)
class Polynomial:
    """Dense integer polynomial, coefficients in ascending degree."""

    coeffs: tuple[int, ...]

    def __post_init__(self):
        c = tuple(int(x) for x in self.coeffs)
        if len(c) > 1 and c[-1] == 0:
            raise SeriesDefError("leading coefficient must be nonzero")
        if not c:
            c = (0,)
        object.__setattr__(self, "coeffs", c)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, n):
        acc = 0
        for c in reversed(self.coeffs):
            acc = acc * n + c
        return acc

    def derivative(self) -> "Polynomial":
        if self.degree == 0:
            return Polynomial((0,))
        return Polynomial(tuple(i * c for i, c in enumerate(self.coeffs) if i > 0))


@dataclass(frozen=True)
class PostProcess:
    """constant = multiplier * sqrt(sqrt_factor) * (S or 1/S)."""

    multiplier: Fraction = Fraction(1)
    sqrt_factor: int | None = None
    reciprocal: bool = False


@dataclass(frozen=True)
class SeriesDef:
    name: str
    a: Polynomial
    sign_alternates: bool
    p_factors: tuple[LinearFactor, ...]
    p_const: int
    q_factors: tuple[LinearFactor, ...]
    q_const: int
    ratio_limit: Fraction
    postprocess: PostProcess
    tail_bits_per_term: Fraction
    # prime factorizations of |p_const| and |q_const|, fixed when the entry
    # is built so fully factored evaluation never has to factor them
    p_const_factors: tuple[tuple[int, int], ...] = ()
    q_const_factors: tuple[tuple[int, int], ...] = ()
    # index from which |p(n)| <= |q(n)| holds onward
    domination_start: int = 0

    def __post_init__(self):
        # constant factors (u == 0) fold into the constant multiplier so the
        # sieve only ever sees genuine linear forms
        for side in ("p", "q"):
            factors = getattr(self, f"{side}_factors")
            const = getattr(self, f"{side}_const")
            kept = []
            for f in factors:
                if f.u == 0:
                    const *= f.v ** f.power
                else:
                    kept.append(f)
            object.__setattr__(self, f"{side}_factors", tuple(kept))
            object.__setattr__(self, f"{side}_const", const)

    @property
    def p_degree(self) -> int:
        return sum(f.power for f in self.p_factors)

    @property
    def q_degree(self) -> int:
        return sum(f.power for f in self.q_factors)


def eval_p(sdef: SeriesDef, n: int) -> int:
    """Exact p(n), sign fold included."""
    acc = sdef.p_const
    for f in sdef.p_factors:
        acc *= f.value(n)
    return acc


def eval_q(sdef: SeriesDef, n: int) -> int:
    acc = sdef.q_const
    for f in sdef.q_factors:
        acc *= f.value(n)
    return acc


def eval_a(sdef: SeriesDef, n: int) -> int:
    return sdef.a(n)


def _scale_product(factors, const) -> int:
    acc = const
    for f in factors:
        acc *= f.u ** f.power
    return acc


def validate(sdef: SeriesDef) -> None:
    """Raise the specific SeriesDefError naming the violated invariant.

    Checks, in order: factor roots, polynomial coprimality, degree and
    convergence consistency, constant factorizations.
    """
    for f in sdef.p_factors + sdef.q_factors:
        r = f.nonneg_integer_root()
        if r is not None:
            raise IntegerRootInRange(
                f"{sdef.name}: factor ({f.u}n+{f.v}) vanishes at n = {r}"
            )
    for fp in sdef.p_factors:
        for fq in sdef.q_factors:
            if fp.u * fq.v == fq.u * fp.v:
                raise NotCoprime(
                    f"{sdef.name}: p and q share the factor ({fp.u}n+{fp.v})"
                )
    dp, dq = sdef.p_degree, sdef.q_degree
    if sdef.ratio_limit != 0:
        if dp != dq:
            raise DegreesMismatch(
                f"{sdef.name}: deg p = {dp} != deg q = {dq} with nonzero ratio limit"
            )
        c = Fraction(_scale_product(sdef.p_factors, sdef.p_const),
                     _scale_product(sdef.q_factors, sdef.q_const))
        if abs(c) >= 1:
            raise NonConvergent(f"{sdef.name}: |p/q limit| = {abs(c)} >= 1")
        if c != sdef.ratio_limit:
            raise SeriesDefError(
                f"{sdef.name}: stored ratio_limit {sdef.ratio_limit} != computed {c}"
            )
    else:
        if dp >= dq:
            raise NonConvergent(
                f"{sdef.name}: ratio limit 0 requires deg p < deg q (got {dp} >= {dq})"
            )
    for side in ("p", "q"):
        const = abs(getattr(sdef, f"{side}_const"))
        fac = getattr(sdef, f"{side}_const_factors")
        prod = 1
        for prime, e in fac:
            prod *= prime ** e
        if fac and prod != const:
            raise SeriesDefError(f"{sdef.name}: {side}_const_factors do not multiply to {const}")
        if not fac and const != 1:
            raise SeriesDefError(f"{sdef.name}: {side}_const = {const} lacks its factorization")


def _factor_small(n: int) -> tuple[tuple[int, int], ...]:
    n = abs(n)
    out = []
    d = 2
    while d * d <= n:
        e = 0
        while n % d == 0:
            n //= d
            e += 1
        if e:
            out.append((d, e))
        d += 1 if d == 2 else 2
    if n > 1:
        out.append((n, 1))
    return tuple(out)


def _sign(x: int) -> int:
    return -1 if x < 0 else 1


def make_series(name, a_coeffs, p_factors, p_const, q_factors, q_const,
                postprocess=PostProcess(), tail_bits_per_term=Fraction(1),
                sign_alternates=False, domination_start=0) -> SeriesDef:
    """Build and validate a SeriesDef, deriving the ratio limit and the
    constant factorizations."""
    pf = tuple(LinearFactor(*t) for t in p_factors)
    qf = tuple(LinearFactor(*t) for t in q_factors)
    dp = sum(f.power for f in pf)
    dq = sum(f.power for f in qf)
    if dp == dq:
        ratio = Fraction(_scale_product(pf, p_const), _scale_product(qf, q_const))
    elif dp < dq:
        ratio = Fraction(0)
    else:
        ratio = Fraction(1)  # rejected by validate
    sdef = SeriesDef(
        name=name,
        a=Polynomial(tuple(a_coeffs)),
        sign_alternates=sign_alternates,
        p_factors=pf,
        p_const=p_const,
        q_factors=qf,
        q_const=q_const,
        ratio_limit=ratio,
        postprocess=postprocess,
        tail_bits_per_term=Fraction(tail_bits_per_term),
        p_const_factors=_factor_small(p_const) if abs(p_const) != 1 else (),
        q_const_factors=_factor_small(q_const) if abs(q_const) != 1 else (),
        domination_start=domination_start,
    )
    validate(sdef)
    return sdef


def _build_catalog() -> dict[str, SeriesDef]:
    entries = {}

    # pi, Chudnovsky: 1/pi = 12 sum (-1)^n (545140134 n + 13591409) (6n)! /
    # ((3n)! n!^3 640320^(3n+3/2)).  Term-ratio extraction gives
    #   p(i) = -(2i+1)(6i+1)(6i+5),   q(i) = (i+1)^3 * 640320^3/24,
    # and pi = 53360 * sqrt(640320) / S.
    entries["pi_chudnovsky"] = make_series(
        "pi_chudnovsky",
        a_coeffs=(13591409, 545140134),
        p_factors=((2, 1, 1), (6, 1, 1), (6, 5, 1)),
        p_const=-1,
        q_factors=((1, 1, 3),),
        q_const=640320 ** 3 // 24,
        postprocess=PostProcess(multiplier=Fraction(53360), sqrt_factor=640320,
                                reciprocal=True),
        tail_bits_per_term=Fraction(47),
        sign_alternates=True,
    )

    # zeta(3): 2 zeta(3) = sum (-1)^n (205 n^2 + 250 n + 77) (n+1)!^5 n!^5 /
    # (2n+2)!^5.  Term ratio: p(i) = -(i+1)^5, q(i) = 32 (2i+3)^5; the n = 0
    # weight 1/32 and the leading 2 combine into the 1/64 multiplier.
    entries["zeta3"] = make_series(
        "zeta3",
        a_coeffs=(77, 250, 205),
        p_factors=((1, 1, 5),),
        p_const=-1,
        q_factors=((2, 3, 5),),
        q_const=32,
        postprocess=PostProcess(multiplier=Fraction(1, 64)),
        tail_bits_per_term=Fraction(10),
        sign_alternates=True,
    )

    # e = sum 1/n!: a = 1, p = 1, q(i) = i + 1.  Ratio limit 0; term planning
    # solves sum log2 q(i) >= target directly.
    entries["e"] = make_series(
        "e",
        a_coeffs=(1,),
        p_factors=(),
        p_const=1,
        q_factors=((1, 1, 1),),
        q_const=1,
        tail_bits_per_term=Fraction(1),
    )

    # ln 2 = sum_{n>=1} 1/(n 2^n), reindexed from m = n-1:
    # term ratio (m+1) / (2(m+2)), leading weight 1/2.
    entries["ln2"] = make_series(
        "ln2",
        a_coeffs=(1,),
        p_factors=((1, 1, 1),),
        p_const=1,
        q_factors=((1, 2, 1),),
        q_const=2,
        postprocess=PostProcess(multiplier=Fraction(1, 2)),
        tail_bits_per_term=Fraction(1),
    )
    return entries


_CATALOG = _build_catalog()


def catalog() -> list[SeriesDef]:
    """The built-in, validated series definitions."""
    return list(_CATALOG.values())


def get_series(name: str) -> SeriesDef:
    try:
        return _CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown constant {name!r}; known: {', '.join(_CATALOG)}") from None


def term(sdef: SeriesDef, n: int) -> Fraction:
    """a(n) * prod_{i<n} p(i)/q(i) as an exact rational (oracle helper)."""
    num, den = 1, 1
    for i in range(n):
        num *= eval_p(sdef, i)
        den *= eval_q(sdef, i)
    return Fraction(eval_a(sdef, n) * num, den)


def partial_sum(sdef: SeriesDef, n1: int, n2: int) -> Fraction:
    """S(n1, n2) by direct exact rational summation (oracle helper)."""
    total = Fraction(0)
    num, den = 1, 1
    for n in range(n1, n2):
        total += Fraction(eval_a(sdef, n) * num, den)
        num *= eval_p(sdef, n)
        den *= eval_q(sdef, n)
    return total


# --- JSON interchange -------------------------------------------------------
#
# Schema (documented in docs/series-schema.md): an object with
#   name: str, a: [int, ...] ascending, sign_alternates: bool,
#   p: {factors: [{u, v, power}], const: int},
#   q: {factors: [{u, v, power}], const: int},
#   postprocess: {multiplier: "num/den", sqrt_factor: int|null, reciprocal: bool},
#   tail_bits_per_term: "num/den"

def _frac_str(x: Fraction) -> str:
    return f"{x.numerator}/{x.denominator}"


def _parse_frac(s) -> Fraction:
    if isinstance(s, str):
        num, _, den = s.partition("/")
        return Fraction(int(num), int(den or 1))
    return Fraction(s)


def to_json_dict(sdef: SeriesDef) -> dict:
    return {
        "name": sdef.name,
        "a": list(sdef.a.coeffs),
        "sign_alternates": sdef.sign_alternates,
        "p": {"factors": [{"u": f.u, "v": f.v, "power": f.power} for f in sdef.p_factors],
              "const": sdef.p_const},
        "q": {"factors": [{"u": f.u, "v": f.v, "power": f.power} for f in sdef.q_factors],
              "const": sdef.q_const},
        "postprocess": {
            "multiplier": _frac_str(sdef.postprocess.multiplier),
            "sqrt_factor": sdef.postprocess.sqrt_factor,
            "reciprocal": sdef.postprocess.reciprocal,
        },
        "tail_bits_per_term": _frac_str(sdef.tail_bits_per_term),
        "domination_start": sdef.domination_start,
    }


def from_json_dict(d: dict) -> SeriesDef:
    pp = d.get("postprocess", {})
    return make_series(
        d["name"],
        a_coeffs=tuple(d["a"]),
        p_factors=tuple((f["u"], f["v"], f.get("power", 1)) for f in d["p"]["factors"]),
        p_const=d["p"].get("const", 1),
        q_factors=tuple((f["u"], f["v"], f.get("power", 1)) for f in d["q"]["factors"]),
        q_const=d["q"].get("const", 1),
        postprocess=PostProcess(
            multiplier=_parse_frac(pp.get("multiplier", 1)),
            sqrt_factor=pp.get("sqrt_factor"),
            reciprocal=pp.get("reciprocal", False),
        ),
        tail_bits_per_term=_parse_frac(d.get("tail_bits_per_term", 1)),
        sign_alternates=d.get("sign_alternates", False),
        domination_start=d.get("domination_start", 0),
    )


def to_json(sdef: SeriesDef) -> str:
    return json.dumps(to_json_dict(sdef), indent=2)


def from_json(text: str) -> SeriesDef:
    return from_json_dict(json.loads(text))
