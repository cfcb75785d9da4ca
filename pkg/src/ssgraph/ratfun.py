"""Exact univariate polynomials and rational functions over Q.

Coefficient arithmetic is delegated to FLINT (``python-flint``); this module
adds the canonical forms, Riemann-sphere evaluation, power series, root
finding and the resolvent solver used by the rest of the package.

Points of the Riemann sphere are plain Python ``complex`` values, with
:data:`INF` as the single representation of the point at infinity.
"""
from __future__ import annotations

import cmath
import logging
import math
from fractions import Fraction
from typing import Hashable, Iterable, Mapping, Sequence

import flint
import mpmath
import numpy as np

log = logging.getLogger(__name__)

INF = complex(math.inf, 0.0)

#: relative tolerance below which a root's imaginary part is snapped to zero
SNAP_TOL = 1e-9


class IndeterminateEvaluation(ArithmeticError):
    """Numerator and denominator both vanish numerically at the evaluation point."""


class RootFindingError(ArithmeticError):
    pass


def is_inf(z: complex) -> bool:
    return not cmath.isfinite(z)


def as_point(z) -> complex:
    """Normalise a number (or ``None``/``inf``) to a point of the sphere."""
    if z is None:
        return INF
    z = complex(z)
    return INF if is_inf(z) else z


def parse_point(text: str) -> complex:
    """Parse ``"2+0.5i"``, ``"0.6"``, ``"inf"`` into a sphere point."""
    s = text.strip().lower().replace(" ", "")
    if s in {"inf", "infinity", "∞", "oo"}:
        return INF
    return complex(s.replace("i", "j"))


def snap_real(z: complex, tol: float = SNAP_TOL) -> complex:
    """Drop the imaginary part of ``z`` when it is below ``tol*(1+|re z|)``."""
    if is_inf(z) or z.imag == 0.0:
        return z
    if abs(z.imag) < tol * (1.0 + abs(z.real)):
        log.debug("snapping %r to the real axis", z)
        return complex(z.real, 0.0)
    return z


def _q(c) -> flint.fmpq:
    if isinstance(c, flint.fmpq):
        return c
    if isinstance(c, Fraction):
        return flint.fmpq(c.numerator, c.denominator)
    if isinstance(c, (int, flint.fmpz)):
        return flint.fmpq(int(c))
    if isinstance(c, str):
        f = Fraction(c)
        return flint.fmpq(f.numerator, f.denominator)
    if isinstance(c, float):
        f = Fraction(c)
        return flint.fmpq(f.numerator, f.denominator)
    raise TypeError(f"not an exact rational: {c!r}")


def _frac(c: flint.fmpq) -> Fraction:
    return Fraction(int(c.p), int(c.q))


def _fmt_coeff(c: Fraction) -> str:
    return str(c.numerator) if c.denominator == 1 else f"{c.numerator}/{c.denominator}"


class Polynomial:
    """Polynomial with exact rational coefficients in ascending degree order.

    The zero polynomial has no stored coefficients and degree ``-1``.
    """

    __slots__ = ("_p", "_fc")

    def __init__(self, coefficients: Iterable = ()):
        if isinstance(coefficients, flint.fmpq_poly):
            self._p = coefficients
        else:
            self._p = flint.fmpq_poly([_q(c) for c in coefficients])
        self._fc = None

    @classmethod
    def _wrap(cls, p: flint.fmpq_poly) -> "Polynomial":
        obj = cls.__new__(cls)
        obj._p = p
        obj._fc = None
        return obj

    @classmethod
    def constant(cls, c) -> "Polynomial":
        return cls([c])

    @classmethod
    def monomial(cls, k: int, c=1) -> "Polynomial":
        return cls([0] * k + [c])

    @classmethod
    def z(cls) -> "Polynomial":
        return cls([0, 1])

    @property
    def coefficients(self) -> tuple[Fraction, ...]:
        return tuple(_frac(c) for c in self._p.coeffs())

    @property
    def degree(self) -> int:
        return self._p.degree()

    def is_zero(self) -> bool:
        return self._p.is_zero()

    def is_constant(self) -> bool:
        return self._p.degree() <= 0

    @property
    def leading(self) -> Fraction:
        return _frac(self._p.leading_coefficient()) if not self.is_zero() else Fraction(0)

    def valuation(self) -> int:
        """Order of vanishing at ``z = 0`` (``-1`` for the zero polynomial)."""
        if self.is_zero():
            return -1
        for k, c in enumerate(self._p.coeffs()):
            if c != 0:
                return k
        return -1  # pragma: no cover

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            return other
        return Polynomial([other])

    def __add__(self, other):
        if isinstance(other, RationalFunction):
            return NotImplemented
        return Polynomial._wrap(self._p + self._coerce(other)._p)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, RationalFunction):
            return NotImplemented
        return Polynomial._wrap(self._p - self._coerce(other)._p)

    def __rsub__(self, other):
        return Polynomial._wrap(self._coerce(other)._p - self._p)

    def __mul__(self, other):
        if isinstance(other, RationalFunction):
            return NotImplemented
        return Polynomial._wrap(self._p * self._coerce(other)._p)

    __rmul__ = __mul__

    def __neg__(self):
        return Polynomial._wrap(-self._p)

    def __pow__(self, k: int):
        return Polynomial._wrap(self._p ** k)

    def __divmod__(self, other):
        q, r = divmod(self._p, self._coerce(other)._p)
        return Polynomial._wrap(q), Polynomial._wrap(r)

    def __floordiv__(self, other):
        return divmod(self, other)[0]

    def __mod__(self, other):
        return divmod(self, other)[1]

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self._p == other._p
        if isinstance(other, (int, Fraction)):
            return self._p == Polynomial([other])._p
        return NotImplemented

    def __hash__(self):
        return hash(self.coefficients)

    def gcd(self, other: "Polynomial") -> "Polynomial":
        """Monic greatest common divisor."""
        return Polynomial._wrap(self._p.gcd(other._p))

    def monic(self) -> "Polynomial":
        if self.is_zero():
            return self
        return Polynomial._wrap(self._p / self._p.leading_coefficient())

    def derivative(self) -> "Polynomial":
        return Polynomial._wrap(self._p.derivative())

    def compose(self, inner: "Polynomial") -> "Polynomial":
        return Polynomial._wrap(self._p(inner._p))

    def exact_value(self, x) -> Fraction:
        return _frac(self._p(_q(x)))

    def float_coefficients(self) -> np.ndarray:
        if self._fc is None:
            self._fc = np.array([float(_frac(c)) for c in self._p.coeffs()], dtype=float)
        return self._fc

    def evaluate(self, z: complex, prec: int = 53):
        """Numeric value at a finite point (``mpmath.mpc`` when ``prec > 53``)."""
        if prec > 53:
            with mpmath.workprec(prec):
                acc = mpmath.mpc(0)
                zz = mpmath.mpc(z)
                for c in reversed(self.coefficients):
                    acc = acc * zz + mpmath.mpf(c.numerator) / c.denominator
                return acc
        acc = 0j
        for c in self.float_coefficients()[::-1]:
            acc = acc * z + c
        return acc

    def abs_bound(self, r: float) -> float:
        """``sum |c_k| r^k``; the natural scale for rounding errors at ``|z| = r``."""
        acc = 0.0
        for c in np.abs(self.float_coefficients())[::-1]:
            acc = acc * r + c
        return acc

    def __call__(self, x):
        if isinstance(x, (int, Fraction, flint.fmpq)):
            return self.exact_value(x)
        if isinstance(x, Polynomial):
            return self.compose(x)
        return self.evaluate(complex(x))

    def __repr__(self):
        return f"Polynomial({[_fmt_coeff(c) for c in self.coefficients]})"

    def __str__(self):
        return format_poly(self.coefficients)


def format_poly(coeffs: Sequence[Fraction], var: str = "z") -> str:
    terms = []
    for k in range(len(coeffs) - 1, -1, -1):
        c = coeffs[k]
        if c == 0:
            continue
        mag = abs(c)
        if k == 0:
            body = _fmt_coeff(mag)
        else:
            mono = var if k == 1 else f"{var}^{k}"
            body = mono if mag == 1 else f"{_fmt_coeff(mag)}*{mono}"
        sign = "-" if c < 0 else "+"
        terms.append((sign, body))
    if not terms:
        return "0"
    out = ("-" if terms[0][0] == "-" else "") + terms[0][1]
    for sign, body in terms[1:]:
        out += f" {sign} {body}"
    return out


def poly_arith(a: Polynomial, b: Polynomial, op: str) -> Polynomial:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown polynomial operation {op!r}")


class InfiniteConstant:
    """The constant function with value infinity (e.g. ``f`` composed with one of its poles)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __call__(self, z):
        return INF

    def eval(self, z, prec: int = 53) -> complex:
        return INF

    def __repr__(self):
        return "InfiniteConstant()"


INFINITE_CONSTANT = InfiniteConstant()


class RationalFunction:
    """Reduced quotient of two exact polynomials with a monic denominator.

    Instances are immutable; equality is coefficient-wise on the canonical form.
    """

    __slots__ = ("_n", "_d", "_num", "_den")

    def __init__(self, numerator=0, denominator=1):
        n = numerator._p if isinstance(numerator, Polynomial) else _as_fpoly(numerator)
        d = denominator._p if isinstance(denominator, Polynomial) else _as_fpoly(denominator)
        self._set(*_normalise(n, d))

    def _set(self, n, d):
        self._n = n
        self._d = d
        self._num = None
        self._den = None

    @classmethod
    def _raw(cls, n: flint.fmpq_poly, d: flint.fmpq_poly, reduced: bool = False) -> "RationalFunction":
        obj = cls.__new__(cls)
        if reduced:
            obj._set(n, d)
        else:
            obj._set(*_normalise(n, d))
        return obj

    @classmethod
    def z(cls) -> "RationalFunction":
        return cls._raw(flint.fmpq_poly([0, 1]), flint.fmpq_poly([1]), reduced=True)

    @classmethod
    def constant(cls, c) -> "RationalFunction":
        return cls._raw(flint.fmpq_poly([_q(c)]), flint.fmpq_poly([1]), reduced=True)

    @property
    def numerator(self) -> Polynomial:
        if self._num is None:
            self._num = Polynomial._wrap(self._n)
        return self._num

    @property
    def denominator(self) -> Polynomial:
        if self._den is None:
            self._den = Polynomial._wrap(self._d)
        return self._den

    @property
    def degree(self) -> int:
        """Degree as a self-map of the sphere."""
        return max(self._n.degree(), self._d.degree(), 0)

    def is_zero(self) -> bool:
        return self._n.is_zero()

    def is_constant(self) -> bool:
        return self._n.degree() <= 0 and self._d.degree() == 0

    def is_polynomial(self) -> bool:
        return self._d.degree() == 0

    # arithmetic -------------------------------------------------------
    def _coerce(self, other) -> "RationalFunction":
        if isinstance(other, RationalFunction):
            return other
        if isinstance(other, Polynomial):
            return RationalFunction._raw(other._p, flint.fmpq_poly([1]), reduced=True)
        return RationalFunction.constant(other)

    def __add__(self, other):
        o = self._coerce(other)
        if self._d == o._d:
            return RationalFunction._raw(self._n + o._n, self._d)
        return RationalFunction._raw(self._n * o._d + o._n * self._d, self._d * o._d)

    __radd__ = __add__

    def __sub__(self, other):
        o = self._coerce(other)
        if self._d == o._d:
            return RationalFunction._raw(self._n - o._n, self._d)
        return RationalFunction._raw(self._n * o._d - o._n * self._d, self._d * o._d)

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        o = self._coerce(other)
        return RationalFunction._raw(self._n * o._n, self._d * o._d)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o.is_zero():
            raise ZeroDivisionError("division by the zero rational function")
        return RationalFunction._raw(self._n * o._d, self._d * o._n)

    def __rtruediv__(self, other):
        return self._coerce(other) / self

    def __neg__(self):
        return RationalFunction._raw(-self._n, self._d, reduced=True)

    def __pow__(self, k: int):
        if k < 0:
            return RationalFunction.constant(1) / (self ** -k)
        return RationalFunction._raw(self._n ** k, self._d ** k, reduced=True)

    def __eq__(self, other):
        if isinstance(other, InfiniteConstant):
            return False
        try:
            o = self._coerce(other)
        except TypeError:
            return NotImplemented
        return self._n == o._n and self._d == o._d

    def __hash__(self):
        return hash((self.numerator.coefficients, self.denominator.coefficients))

    # calculus ---------------------------------------------------------
    def derivative(self) -> "RationalFunction":
        n, d = self._n, self._d
        return RationalFunction._raw(n.derivative() * d - n * d.derivative(), d * d)

    def compose(self, inner) -> "RationalFunction | InfiniteConstant":
        return compose(self, inner)

    def series(self, order: int) -> list[Fraction]:
        """Taylor coefficients at 0 up to ``z**order`` by the denominator recurrence."""
        dcoef = self._d.coeffs()
        if not dcoef or dcoef[0] == 0:
            raise ValueError("rational function has a pole at z = 0")
        ncoef = self._n.coeffs()
        d0 = dcoef[0]
        out: list[flint.fmpq] = []
        for k in range(order + 1):
            acc = ncoef[k] if k < len(ncoef) else flint.fmpq(0)
            for i in range(1, min(k, len(dcoef) - 1) + 1):
                acc -= dcoef[i] * out[k - i]
            out.append(acc / d0)
        return [_frac(c) for c in out]

    # evaluation -------------------------------------------------------
    def exact_value(self, x) -> Fraction | None:
        """Exact value at a rational point; ``None`` at a pole."""
        xq = _q(x)
        den = self._d(xq)
        if den == 0:
            return None
        return _frac(self._n(xq) / den)

    def value_at_infinity(self) -> complex:
        dn, dd = self._n.degree(), self._d.degree()
        if self._n.is_zero() or dn < dd:
            return 0j
        if dn > dd:
            return INF
        return complex(float(_frac(self._n.leading_coefficient() / self._d.leading_coefficient())))

    def eval(self, z: complex, prec: int = 53) -> complex:
        """Value on the Riemann sphere.

        Raises :class:`IndeterminateEvaluation` when numerator and denominator
        both vanish to working precision, so the caller can raise ``prec``.
        """
        if is_inf(z):
            return self.value_at_infinity()
        N, D = self.numerator, self.denominator
        num = N.evaluate(z, prec)
        den = D.evaluate(z, prec)
        r = abs(z)
        tol = 64.0 * 2.0 ** (-prec)
        small_n = abs(num) <= tol * N.abs_bound(r)
        small_d = abs(den) <= tol * D.abs_bound(r)
        if small_n and small_d and not N.is_zero():
            raise IndeterminateEvaluation(f"0/0 at z={z!r} with {prec} bits")
        if den == 0:
            return INF if num != 0 else 0j
        val = complex(num / den)
        return INF if is_inf(val) else val

    def __call__(self, z):
        if isinstance(z, (int, Fraction, flint.fmpq)):
            return self.exact_value(z)
        if isinstance(z, (RationalFunction, Polynomial)):
            return compose(self, z)
        return self.eval(complex(z))

    # presentation -----------------------------------------------------
    def __repr__(self):
        return f"RationalFunction({self.numerator!r}, {self.denominator!r})"

    def __str__(self):
        if self.is_polynomial():
            return str(self.numerator)
        return f"({self.numerator})/({self.denominator})"

    def integer_form(self) -> tuple[list[int], list[int]]:
        """Numerator/denominator as coprime integer coefficient lists (ascending).

        The common scale is chosen so both lists are integral with
        content-free union and a positive leading denominator coefficient.
        """
        nn, nd = self._n.numer(), self._n.denom()
        dn, dd = self._d.numer(), self._d.denom()
        # n/d = (nn/nd) / (dn/dd) = (nn*dd) / (dn*nd)
        top = [int(c) for c in (nn * int(dd)).coeffs()]
        bot = [int(c) for c in (dn * int(nd)).coeffs()]
        g = 0
        for c in top + bot:
            g = math.gcd(g, c)
        if g > 1:
            top = [c // g for c in top]
            bot = [c // g for c in bot]
        return top, bot


def _as_fpoly(x) -> flint.fmpq_poly:
    if isinstance(x, flint.fmpq_poly):
        return x
    if isinstance(x, (list, tuple)):
        return flint.fmpq_poly([_q(c) for c in x])
    return flint.fmpq_poly([_q(x)])


def _normalise(n: flint.fmpq_poly, d: flint.fmpq_poly):
    if d.is_zero():
        raise ZeroDivisionError("zero denominator")
    if n.is_zero():
        return flint.fmpq_poly([]), flint.fmpq_poly([1])
    if d.degree() > 0 and n.degree() > 0:
        g = n.gcd(d)
        if g.degree() > 0:
            n = n // g
            d = d // g
    lc = d.leading_coefficient()
    if lc != 1:
        n = n / lc
        d = d / lc
    return n, d


def ratfun_arith(a: RationalFunction, b: RationalFunction, op: str) -> RationalFunction:
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    if op == "div":
        return a / b
    raise ValueError(f"unknown rational-function operation {op!r}")


def compose(outer, inner):
    """``outer(inner(z))`` as a reduced rational function.

    Composition with a constant is evaluation; landing on a pole yields
    :data:`INFINITE_CONSTANT`.
    """
    if isinstance(outer, Polynomial):
        outer = RationalFunction(outer)
    if isinstance(inner, Polynomial):
        inner = RationalFunction(inner)
    if isinstance(outer, InfiniteConstant):
        return outer
    if isinstance(inner, InfiniteConstant):
        v = outer.value_at_infinity()
        if is_inf(v):
            return INFINITE_CONSTANT
        # value at infinity of an exact function is a ratio of leading coefficients
        dn, dd = outer._n.degree(), outer._d.degree()
        if outer.is_zero() or dn < dd:
            return RationalFunction.constant(0)
        return RationalFunction._raw(
            flint.fmpq_poly([outer._n.leading_coefficient() / outer._d.leading_coefficient()]),
            flint.fmpq_poly([1]), reduced=True)
    if inner.is_constant():
        c = inner._n.coeffs()[0] if not inner.is_zero() else flint.fmpq(0)
        val = outer.exact_value(c)
        if val is None:
            return INFINITE_CONSTANT
        return RationalFunction.constant(val)
    P, Q = outer._n.coeffs(), outer._d.coeffs()
    A, B = inner._n, inner._d
    m = max(len(P), len(Q)) - 1
    apow = [flint.fmpq_poly([1])]
    bpow = [flint.fmpq_poly([1])]
    for _ in range(m):
        apow.append(apow[-1] * A)
        bpow.append(bpow[-1] * B)
    num = flint.fmpq_poly([])
    den = flint.fmpq_poly([])
    for k in range(m + 1):
        term = apow[k] * bpow[m - k]
        if k < len(P) and P[k] != 0:
            num += P[k] * term
        if k < len(Q) and Q[k] != 0:
            den += Q[k] * term
    return RationalFunction._raw(num, den)


def iterate(r: RationalFunction, n: int) -> RationalFunction:
    """The ``n``-fold composition ``r∘...∘r`` (identity for ``n = 0``)."""
    out = RationalFunction.z()
    for _ in range(n):
        out = compose(r, out)
    return out


def derivative(r: RationalFunction) -> RationalFunction:
    return r.derivative()


def evaluate(r: RationalFunction, z: complex, prec: int = 53) -> complex:
    return r.eval(z, prec)


# roots ---------------------------------------------------------------------

def roots(p: Polynomial, prec: int = 53) -> list[complex]:
    """All roots of an exact polynomial, repeated according to multiplicity.

    FLINT's certified isolation is used; a root whose isolating ball meets the
    real axis is real and is returned with a zero imaginary part.
    """
    if p.is_zero():
        raise ValueError("the zero polynomial has no finite root set")
    if p.degree == 0:
        return []
    with flint.ctx.workprec(max(prec, 53)):
        found = p._p.complex_roots()
    out: list[complex] = []
    for ball, mult in found:
        re = float(ball.real.mid())
        im = 0.0 if ball.imag.contains(0) else float(ball.imag.mid())
        out.extend([complex(re, im)] * mult)
    out.sort(key=lambda w: (w.real, w.imag))
    return out


def distinct_roots(p: Polynomial, prec: int = 53) -> list[tuple[complex, int]]:
    if p.degree <= 0:
        return []
    with flint.ctx.workprec(max(prec, 53)):
        found = p._p.complex_roots()
    out = []
    for ball, mult in found:
        im = 0.0 if ball.imag.contains(0) else float(ball.imag.mid())
        out.append((complex(float(ball.real.mid()), im), mult))
    out.sort(key=lambda t: (t[0].real, t[0].imag))
    return out


def root_residual_ok(p: Polynomial, rho: complex, rtol: float = 1e-10) -> bool:
    """Residual criterion ``|p(rho)| <= rtol * max|c| * max(1,|rho|)**deg``."""
    scale = float(max(abs(c) for c in p.coefficients))
    return abs(p.evaluate(rho)) <= rtol * scale * max(1.0, abs(rho)) ** p.degree


def numeric_roots(coeffs: Sequence[complex], prec: int = 53, max_escalations: int = 3) -> list[complex]:
    """Roots of a polynomial with floating coefficients (ascending order).

    Companion-matrix eigenvalues polished by Newton steps; if the residual
    test fails, the computation is redone with ``mpmath.polyroots`` at
    increasing precision.
    """
    c = np.trim_zeros(np.asarray(coeffs, dtype=complex), "b")
    deg = len(c) - 1
    if deg < 1:
        return []
    scale = float(np.max(np.abs(c)))
    rts = np.roots(c[::-1]) if prec <= 53 else None
    if rts is not None:
        rts = _newton_polish(c, rts)
        if all(_residual(c, r) <= 1e-10 * scale * max(1.0, abs(r)) ** deg for r in rts):
            return [complex(r) for r in rts]
    bits = max(prec, 106)
    for _ in range(max_escalations):
        with mpmath.workprec(bits):
            try:
                rts = mpmath.polyroots([mpmath.mpc(x) for x in c[::-1]], maxsteps=400, extraprec=bits)
            except mpmath.libmp.libhyper.NoConvergence:
                bits *= 2
                continue
        out = [complex(r) for r in rts]
        if all(_residual(c, r) <= 1e-10 * scale * max(1.0, abs(r)) ** deg for r in out):
            return out
        bits *= 2
    raise RootFindingError(f"no convergence for degree-{deg} polynomial")


def _residual(c: np.ndarray, r: complex) -> float:
    return abs(np.polyval(c[::-1], r))


def _newton_polish(c: np.ndarray, rts: np.ndarray, steps: int = 2) -> np.ndarray:
    dc = c[1:] * np.arange(1, len(c))
    out = rts.astype(complex)
    for _ in range(steps):
        pv = np.polyval(c[::-1], out)
        dv = np.polyval(dc[::-1], out)
        ok = dv != 0
        step = np.zeros_like(out)
        step[ok] = pv[ok] / dv[ok]
        cand = out - step
        better = np.abs(np.polyval(c[::-1], cand)) <= np.abs(pv)
        out = np.where(better, cand, out)
    return out


def batch_roots(coeffs: np.ndarray) -> np.ndarray:
    """Roots of many polynomials of a common degree at once.

    ``coeffs`` has shape ``(k, deg+1)`` in ascending order with nonzero
    leading column. Returns a ``(k, deg)`` complex array (companion-matrix
    eigenvalues followed by two vectorised Newton steps).
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    k, m = coeffs.shape
    deg = m - 1
    if deg == 0:
        return np.empty((k, 0), dtype=complex)
    monic = coeffs[:, :-1] / coeffs[:, -1:]
    comp = np.zeros((k, deg, deg), dtype=complex)
    if deg > 1:
        idx = np.arange(deg - 1)
        comp[:, idx + 1, idx] = 1.0
    comp[:, :, -1] = -monic
    rts = np.linalg.eigvals(comp)
    dcoef = coeffs[:, 1:] * np.arange(1, m)
    for _ in range(2):
        pv = _horner_rows(coeffs, rts)
        dv = _horner_rows(dcoef, rts)
        safe = np.abs(dv) > 0
        step = np.where(safe, pv / np.where(safe, dv, 1.0), 0.0)
        cand = rts - step
        better = np.abs(_horner_rows(coeffs, cand)) <= np.abs(pv)
        rts = np.where(better, cand, rts)
    return rts


def _horner_rows(coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    acc = np.zeros_like(x)
    for j in range(coeffs.shape[1] - 1, -1, -1):
        acc = acc * x + coeffs[:, j:j + 1]
    return acc


# resolvent -----------------------------------------------------------------

def solve_resolvent(Q, rows: Sequence[Hashable], cols: Sequence[Hashable]) -> list[list[RationalFunction]]:
    """Entries of ``(I - zQ)^{-1}`` at ``rows x cols`` as exact rational functions.

    ``Q`` is either a dense square matrix (sequence of rows; keys are integer
    indices) or a sparse mapping ``{i: {j: q_ij}}``. All states other than
    the requested ones are removed by sparse Gaussian elimination (Schur
    complement, minimum-degree order); the remaining block is inverted by
    Gauss-Jordan elimination.
    """
    sparse = _sparse_from(Q)
    keys = list(sparse)
    _check_substochastic(sparse)
    zpoly = flint.fmpq_poly([0, 1])
    one = flint.fmpq_poly([1])
    M: dict[Hashable, dict[Hashable, RationalFunction]] = {}
    colset: dict[Hashable, set] = {k: set() for k in keys}
    for i in keys:
        row: dict[Hashable, RationalFunction] = {}
        qii = _q(sparse[i].get(i, 0))
        row[i] = RationalFunction._raw(one - qii * zpoly, one, reduced=True) if qii != 0 else RationalFunction.constant(1)
        for j, qij in sparse[i].items():
            if j == i or qij == 0:
                continue
            row[j] = RationalFunction._raw(-_q(qij) * zpoly, one, reduced=True)
        M[i] = row
        for j in row:
            colset[j].add(i)
    keep = list(dict.fromkeys(list(rows) + list(cols)))
    for k in keep:
        if k not in M:
            raise KeyError(f"unknown state {k!r}")
    _eliminate(M, colset, set(keys) - set(keep))
    inv = _dense_inverse([[M[i].get(j, _ZERO) for j in keep] for i in keep])
    pos = {k: n for n, k in enumerate(keep)}
    return [[inv[pos[r]][pos[c]] for c in cols] for r in rows]


_ZERO = RationalFunction.constant(0)


def _sparse_from(Q) -> dict:
    if isinstance(Q, Mapping):
        keys = set(Q)
        for i, row in Q.items():
            keys.update(row)
        return {k: dict(Q.get(k, {})) for k in keys}
    n = len(Q)
    out = {}
    for i in range(n):
        if len(Q[i]) != n:
            raise ValueError("Q must be square")
        out[i] = {j: Q[i][j] for j in range(n) if Q[i][j] != 0}
    return out


def _check_substochastic(sparse: dict) -> None:
    for i, row in sparse.items():
        total = Fraction(0)
        for j, q in row.items():
            qf = _frac(_q(q))
            if qf < 0 or qf > 1:
                raise ValueError(f"entry Q[{i!r}][{j!r}] = {qf} outside [0, 1]")
            total += qf
        if total > 1:
            raise ValueError(f"row {i!r} of Q sums to {total} > 1")


def _eliminate(M: dict, colset: dict, todo: set) -> None:
    while todo:
        u = min(todo, key=lambda k: (len(M[k]) * len(colset[k]), repr(k)))
        todo.discard(u)
        row_u = M.pop(u)
        piv = row_u.pop(u)
        if piv.is_zero():
            raise ZeroDivisionError(f"singular pivot at {u!r}")
        col_u = colset.pop(u)
        col_u.discard(u)
        for b in row_u:
            colset[b].discard(u)
        for a in col_u:
            row_a = M[a]
            factor = row_a.pop(u) / piv
            for b, mub in row_u.items():
                new = row_a.get(b, _ZERO) - factor * mub
                if new.is_zero():
                    if b in row_a:
                        del row_a[b]
                        colset[b].discard(a)
                else:
                    if b not in row_a:
                        colset[b].add(a)
                    row_a[b] = new


def _dense_inverse(A: list[list[RationalFunction]]) -> list[list[RationalFunction]]:
    n = len(A)
    one = RationalFunction.constant(1)
    aug = [list(A[i]) + [one if j == i else _ZERO for j in range(n)] for i in range(n)]
    for col in range(n):
        candidates = [r for r in range(col, n) if not aug[r][col].is_zero()]
        if not candidates:
            raise ZeroDivisionError("singular resolvent block")
        piv = min(candidates, key=lambda r: aug[r][col].degree)
        aug[col], aug[piv] = aug[piv], aug[col]
        p = aug[col][col]
        aug[col] = [x / p if not x.is_zero() else x for x in aug[col]]
        for r in range(n):
            if r == col or aug[r][col].is_zero():
                continue
            fac = aug[r][col]
            aug[r] = [x - fac * y if not y.is_zero() else x for x, y in zip(aug[r], aug[col])]
    return [row[n:] for row in aug]
