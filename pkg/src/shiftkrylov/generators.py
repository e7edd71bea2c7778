"""Test-problem generators: convection-diffusion matrices, shift families and
diagonalizable dense matrices with prescribed spectrum.

Random streams come from numpy's Philox counter-based bit generator seeded
with a single integer, so a seed pins every draw.
"""
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sps

from .errors import ConfigError
from .sparse import CsrMatrix

__all__ = [
    "make_rng",
    "parse_complex",
    "gen_convdiff",
    "ShiftSet",
    "ShiftSetSpec",
    "gen_shifts",
    "DiagonalizableProblem",
    "gen_diagonalizable",
    "SHIFT_FAMILIES",
    "signed_integer_spectrum",
]

SHIFT_FAMILIES = ("real-logspace", "conjugate-pairs", "ellipse", "explicit-list", "clustered-gaussian")


def make_rng(seed):
    """Philox-backed generator; the same seed always yields the same stream."""
    return np.random.Generator(np.random.Philox(int(seed)))


def parse_complex(value):
    """Accept a number, ``[re, im]``, ``{"re": .., "im": ..}`` or a string like ``"1-2j"``."""
    if isinstance(value, (int, float, complex, np.number)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(float(value[0]), float(value[1]))
    if isinstance(value, dict) and set(value) <= {"re", "im"}:
        return complex(float(value.get("re", 0.0)), float(value.get("im", 0.0)))
    if isinstance(value, str):
        return complex(value.replace(" ", "").replace("i", "j"))
    raise ValueError(f"cannot interpret {value!r} as a complex number")


def _swirl_field(dim):
    if dim == 2:
        return lambda x, y: (3.0 * y * (1.0 - x**2), -2.0 * x * (1.0 - y**2))
    return lambda x, y, z: (x * np.cos(x), y * np.sin(y), np.exp(z**2 - 1.0))


def _resolve_field(field, dim):
    if callable(field):
        return field
    if field == "zero":
        return lambda *xs: tuple(np.zeros_like(xs[0]) for _ in range(dim))
    if field == "swirl":
        return _swirl_field(dim)
    raise ValueError(f"unknown convection field {field!r}; use 'zero', 'swirl' or a callable")


def gen_convdiff(dim, n, nu, field="swirl"):
    """Centered finite differences for ``-nu*Lap(u) + w.grad(u)`` on ``[0,1]^dim``.

    Zero Dirichlet data, ``n`` interior points per direction, lexicographic
    ordering with x running fastest. The convection coefficient coupling two
    neighbouring nodes is evaluated at their midpoint, so the convection part
    of the matrix is exactly skew-symmetric.

    Parameters
    ----------
    dim : {2, 3}
    n : int
        Interior grid points per direction (``n >= 2``).
    nu : float
        Viscosity, ``nu > 0``.
    field : {"swirl", "zero"} or callable
        Convection field ``w(x, y[, z]) -> tuple of arrays``.

    Returns
    -------
    CsrMatrix of order ``n**dim``.
    """
    if dim not in (2, 3):
        raise ValueError("dim must be 2 or 3")
    if n < 2:
        raise ValueError("n must be at least 2")
    if nu <= 0:
        raise ValueError("nu must be positive")
    w = _resolve_field(field, dim)
    h = 1.0 / (n + 1)
    N = n**dim
    idx = np.arange(N)
    multi = np.unravel_index(idx, (n,) * dim, order="F")
    coords = [(m + 1) * h for m in multi]
    rows = [idx]
    cols = [idx]
    vals = [np.full(N, 2.0 * dim * nu / h**2)]
    stride = 1
    for a in range(dim):
        has_next = multi[a] < n - 1
        p = idx[has_next]
        q = p + stride
        mid = [c[has_next].copy() for c in coords]
        mid[a] = mid[a] + 0.5 * h
        wa = np.asarray(w(*mid)[a], dtype=float) * np.ones(p.size)
        conv = wa / (2.0 * h)
        rows += [p, q]
        cols += [q, p]
        vals += [-nu / h**2 + conv, -nu / h**2 - conv]
        stride *= n
    M = sps.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N)
    )
    return CsrMatrix.from_scipy(M)


@dataclass
class ShiftSet:
    """Ordered collection of (possibly complex) shifts."""

    shifts: np.ndarray
    labels: Optional[list] = None

    def __post_init__(self):
        self.shifts = np.atleast_1d(np.asarray(self.shifts, dtype=complex))
        if self.shifts.ndim != 1 or self.shifts.size < 1:
            raise ValueError("a shift set needs at least one shift")
        if not np.all(np.isfinite(self.shifts)):
            raise ValueError("shifts must be finite")
        if self.labels is not None and len(self.labels) != self.shifts.size:
            raise ValueError("labels must match the number of shifts")

    def __len__(self):
        return self.shifts.size

    def __array__(self, dtype=None, copy=None):
        return self.shifts if dtype is None else self.shifts.astype(dtype)


@dataclass
class ShiftSetSpec:
    """Recipe for a shift family.

    ``params`` by family:

    * ``real-logspace``: ``low``, ``high`` (moduli, default 1e-6 and 1e6), ``sign`` (default -1)
    * ``conjugate-pairs``: ``low``, ``high`` for the log-spaced moduli of ``theta``
    * ``ellipse``: ``center``, ``radius``, ``aspect``
    * ``explicit-list``: ``values``
    * ``clustered-gaussian``: ``centroid``, ``k``, ``scale`` (default 1)
    """

    family: str
    count: int
    params: dict = field(default_factory=dict)
    seed: int = 0


def _logspace(params, count):
    low = float(params.get("low", 1e-6))
    high = float(params.get("high", 1e6))
    if low <= 0 or high <= 0:
        raise ConfigError("logspace bounds must be positive moduli", "shifts.params")
    return np.logspace(np.log10(low), np.log10(high), count)


def gen_shifts(spec):
    """Materialize a :class:`ShiftSetSpec` into a :class:`ShiftSet`."""
    fam, count, p = spec.family, int(spec.count), dict(spec.params)
    if fam not in SHIFT_FAMILIES:
        raise ConfigError(f"unknown shift family {fam!r}", "shifts.family")
    if fam != "explicit-list" and count < 1:
        raise ConfigError("count must be positive", "shifts.count")
    if fam == "real-logspace":
        sign = float(p.get("sign", -1.0))
        s = sign * _logspace(p, count)
    elif fam == "conjugate-pairs":
        if count % 2:
            raise ConfigError("conjugate-pairs needs an even count", "shifts.count")
        theta = _logspace(p, count // 2)
        s = np.empty(count, dtype=complex)
        s[0::2] = 1j * theta
        s[1::2] = -1j * theta
    elif fam == "ellipse":
        c = parse_complex(p.get("center", 0.0))
        rho = float(p.get("radius", 1.0))
        v = float(p.get("aspect", 1.0))
        if rho <= 0:
            raise ConfigError("ellipse radius must be positive", "shifts.params.radius")
        theta = 2.0 * np.pi * np.arange(1, count + 1) / count
        s = c + rho * (np.cos(theta) + 1j * v * np.sin(theta))
    elif fam == "explicit-list":
        if "values" not in p:
            raise ConfigError("explicit-list needs 'values'", "shifts.params.values")
        s = np.array([parse_complex(x) for x in p["values"]], dtype=complex)
    else:
        centroid = parse_complex(p.get("centroid", 0.0))
        k = float(p.get("k", 0.0))
        scale = float(p.get("scale", 1.0))
        omega = make_rng(spec.seed).standard_normal(count)
        s = centroid + 1j * scale * omega * 10.0 ** (-k)
    return ShiftSet(np.asarray(s, dtype=complex))


@dataclass
class DiagonalizableProblem:
    """Dense ``A = Q diag(lam) Q^{-1}`` with a random right-hand side."""

    A: np.ndarray
    b: np.ndarray
    lam: np.ndarray
    Q: np.ndarray
    seed: int


def gen_diagonalizable(lam, seed, Q=None, max_cond=1e8, max_attempts=10):
    """Build ``A = Q diag(lam) Q^{-1}`` with Gaussian ``Q`` and ``b`` drawn from ``seed``.

    When ``Q`` is not supplied it is redrawn while its condition number
    exceeds ``max_cond`` (at most ``max_attempts`` draws).
    """
    lam = np.asarray(lam, dtype=float)
    n = lam.size
    rng = make_rng(seed)
    if Q is None:
        for _ in range(max_attempts):
            Q = rng.standard_normal((n, n))
            if np.linalg.cond(Q) <= max_cond:
                break
        else:
            raise RuntimeError(f"no Gaussian Q with cond <= {max_cond} in {max_attempts} attempts")
    Q = np.asarray(Q, dtype=float)
    b = rng.standard_normal(n)
    # A = (Q Lam) Q^{-1}  <=>  Q^T A^T = (Q Lam)^T
    A = np.linalg.solve(Q.T, (Q * lam).T).T
    return DiagonalizableProblem(A=A, b=b, lam=lam, Q=Q, seed=seed)


def signed_integer_spectrum(half=100):
    """Integer spectrum ``-half, ..., -1, 1, ..., half``."""
    pos = np.arange(1, half + 1, dtype=float)
    return np.concatenate([-pos[::-1], pos])
