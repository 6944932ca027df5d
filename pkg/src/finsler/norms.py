"""Squared Finsler norms ``F^2(v)``: parsed expressions and the built-in family.

Built-in members
----------------
``euclidean(n)``      sum of squares
``pseudo(p, q)``      ``+`` on the first ``p`` coordinates, ``-`` on the last ``q``
``ratio3(A)``         ``q + A (v1 v2 v3)^2 / q^2`` with ``q = v1^2 + v2^2 + v3^2``,
                      extended by 0 at the origin
``spacetime4(c, A)``  ``-c^2 v0^2 + ratio3(A)(v1, v2, v3)``, a direct sum of a
                      negative line and the ``ratio3`` space

Every norm is checked for degree-2 positive homogeneity when it is built.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
import math
from typing import Callable, Optional

import numpy as np

from . import rng as _rng
from .errors import DomainError, HomogeneityError, NonSmoothError
from .expr import evaluate, to_text
from .jet import Jet3
from .parser import parse_expr

HOMOGENEITY_SAMPLES = 64
HOMOGENEITY_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class FinslerNorm:
    """An evaluatable squared norm on ``R^dim``.

    ``fn`` receives a sequence of ``dim`` numbers or jets and returns
    ``F^2`` of the same kind.  ``spatial`` and ``c`` are set only for
    product-form norms ``-c^2 v0^2 + F3^2(v1, v2, v3)``.
    """

    dim: int
    kind: str
    params: tuple = ()
    fn: Callable = field(default=None, repr=False)
    expr: object = field(default=None, repr=False)
    spatial: Optional["FinslerNorm"] = field(default=None, repr=False)
    c: Optional[float] = None

    @property
    def is_quadratic(self):
        return self.kind in ("euclidean", "pseudo")

    def label(self):
        if not self.params:
            return self.kind
        inner = ", ".join(f"{k}={v}" for k, v in self.params)
        return f"{self.kind}({inner})"

    def to_text(self):
        """Equivalent expression in the metric grammar (coordinates named v1..vn)."""
        if self.expr is not None:
            return to_text(self.expr)
        return _builtin_text(self)

    def __call__(self, v):
        return eval_f2(self, v)


def eval_f2(norm, v):
    v = np.asarray(v, dtype=float)
    if v.shape != (norm.dim,):
        raise ValueError(f"expected a vector of length {norm.dim}, got shape {v.shape}")
    out = norm.fn([float(x) for x in v])
    if isinstance(out, Jet3):
        out = out.value
    out = float(out)
    if not math.isfinite(out):
        raise DomainError(f"F^2 is not finite at {v.tolist()}", v=v.tolist())
    return out


def check_homogeneity(norm, seed=0, samples=HOMOGENEITY_SAMPLES, tol=HOMOGENEITY_TOL):
    """Sample ``|F^2(lam v) - lam^2 F^2(v)| <= tol max(1, |lam^2 F^2(v)|)``.

    Points where ``F^2`` cannot be evaluated or vanishes are skipped.
    Raises :class:`HomogeneityError` with the first failing ``(v, lam)``.
    """
    gen = _rng.stream(seed, "homogeneity", norm.dim)
    for _ in range(samples):
        v = gen.standard_normal(norm.dim)
        lam = gen.uniform(0.1, 10.0)
        try:
            f = eval_f2(norm, v)
            if f == 0.0:
                continue
            fl = eval_f2(norm, lam * v)
        except DomainError:
            continue
        target = lam * lam * f
        if abs(fl - target) > tol * max(1.0, abs(target)):
            raise HomogeneityError(
                f"F^2 is not homogeneous of degree 2: F^2(lam v) = {fl!r}, lam^2 F^2(v) = {target!r}",
                v=v.tolist(),
                lam=lam,
            )
    return norm


def parse_metric(text, n, seed=0):
    """Parse a squared-norm expression over ``v1..vn`` into a :class:`FinslerNorm`."""
    if n < 1:
        raise ValueError("dimension must be positive")
    tree = parse_expr(text, n)
    norm = FinslerNorm(
        dim=n,
        kind="expr",
        params=(("text", text),),
        fn=lambda args, _t=tree: evaluate(_t, args),
        expr=tree,
    )
    return check_homogeneity(norm, seed)


# -- built-in family ---------------------------------------------------------

def _as_param(x):
    if isinstance(x, str):
        x = x.strip()
        try:
            return Fraction(x)
        except ValueError:
            return float(x)
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    return float(x)


def _ratio3_value(x, y, z, A):
    q = x * x + y * y + z * z
    qv = q.value if isinstance(q, Jet3) else q
    if qv == 0:
        # continuous extension at the origin: value and gradient vanish
        if isinstance(q, Jet3) and q.order >= 2:
            raise NonSmoothError("ratio3 has no second derivatives at the spatial origin")
        return q
    p = x * y * z
    return q + A * (p * p) / (q * q)


def euclidean(n, seed=0):
    n = int(n)
    if n < 1:
        raise ValueError("dimension must be positive")

    def fn(v):
        out = v[0] * v[0]
        for x in v[1:]:
            out = out + x * x
        return out

    return check_homogeneity(FinslerNorm(n, "euclidean", (("n", n),), fn), seed)


def pseudo(p, q, seed=0):
    p, q = int(p), int(q)
    if p < 0 or q < 0 or p + q < 1:
        raise ValueError("need p, q >= 0 and p + q >= 1")

    def fn(v):
        out = 0.0
        for i, x in enumerate(v):
            out = out + x * x if i < p else out - x * x
        return out

    return check_homogeneity(FinslerNorm(p + q, "pseudo", (("p", p), ("q", q)), fn), seed)


def ratio3(A=1, seed=0):
    A = _as_param(A)
    Af = float(A)

    def fn(v):
        return _ratio3_value(v[0], v[1], v[2], Af)

    return check_homogeneity(FinslerNorm(3, "ratio3", (("A", A),), fn), seed)


def spacetime4(c=1, A=1, seed=0):
    c = _as_param(c)
    if c <= 0:
        raise ValueError("c must be positive")
    spatial = ratio3(A, seed)
    c2 = float(c) ** 2
    Af = float(spatial.params[0][1])

    def fn(v):
        return -c2 * (v[0] * v[0]) + _ratio3_value(v[1], v[2], v[3], Af)

    norm = FinslerNorm(4, "spacetime4", (("c", c), ("A", spatial.params[0][1])), fn, spatial=spatial, c=float(c))
    return check_homogeneity(norm, seed)


def _lit(x):
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return repr(float(x))


def _builtin_text(norm):
    n = norm.dim
    if norm.kind == "euclidean":
        return " + ".join(f"v{i}^2" for i in range(1, n + 1))
    if norm.kind == "pseudo":
        p = dict(norm.params)["p"]
        terms = [("+" if i <= p else "-", f"v{i}^2") for i in range(1, n + 1)]
        text = terms[0][1] if terms[0][0] == "+" else f"-{terms[0][1]}"
        for sign, t in terms[1:]:
            text += f" {sign} {t}"
        return text
    if norm.kind == "ratio3":
        return _ratio3_text(1, dict(norm.params)["A"])
    if norm.kind == "spacetime4":
        c = dict(norm.params)["c"]
        A = dict(norm.params)["A"]
        return f"-({_lit(c)})^2*v1^2 + {_ratio3_text(2, A)}"
    raise ValueError(f"no text form for {norm.kind}")


def _ratio3_text(first, A):
    a, b, c = (f"v{first + k}" for k in range(3))
    q = f"({a}^2 + {b}^2 + {c}^2)"
    return f"{q} + ({_lit(A)})*({a}*{b}*{c})^2/{q}^2"


BUILTINS = {
    "euclidean": euclidean,
    "pseudo": pseudo,
    "ratio3": ratio3,
    "spacetime4": spacetime4,
}
