"""Manufactured solutions on the unit square and unit cube.

Each displacement component is a sum of separable terms
``coef * a(x) * b(y) [* c(z)]``, so gradients and Hessians follow exactly
from 1D derivatives.  The body force is ``f = div sigma`` with
``sigma = 2 mu eps(u) + lambda (div u) I``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PI = np.pi


@dataclass(frozen=True)
class Fn1D:
    """A 1D function with its first two derivatives."""

    f0: callable
    f1: callable
    f2: callable

    def __call__(self, t, order=0):
        return (self.f0, self.f1, self.f2)[order](t)


def sin_(a):
    return Fn1D(lambda t: np.sin(a * t), lambda t: a * np.cos(a * t),
                lambda t: -a * a * np.sin(a * t))


def cos_(a):
    return Fn1D(lambda t: np.cos(a * t), lambda t: -a * np.sin(a * t),
                lambda t: -a * a * np.cos(a * t))


ONE = Fn1D(np.ones_like, np.zeros_like, np.zeros_like)

# P(t) = 2t^3 - 3t^2 + t and Q(t) = (t - t^2)^2, with Q' = 2P
CUBIC = Fn1D(lambda t: 2 * t**3 - 3 * t**2 + t, lambda t: 6 * t**2 - 6 * t + 1,
             lambda t: 12 * t - 6)
QUARTIC = Fn1D(lambda t: (t - t**2) ** 2, lambda t: 2 * (2 * t**3 - 3 * t**2 + t),
               lambda t: 2 * (6 * t**2 - 6 * t + 1))


@dataclass
class ManufacturedCase:
    id: str
    dim: int
    mu: float
    lam: float
    terms: list = field(repr=False)   # per component: list of (coef, [Fn1D per axis])

    def _component(self, i, x, deriv):
        """``deriv`` is a tuple of axis derivative orders."""
        val = np.zeros(x.shape[:-1])
        for coef, fns in self.terms[i]:
            prod = coef
            for ax, fn in enumerate(fns):
                prod = prod * fn(x[..., ax], deriv[ax])
            val = val + prod
        return val

    def u(self, x):
        x = np.asarray(x, dtype=float)
        zero = (0,) * self.dim
        return np.stack([self._component(i, x, zero) for i in range(self.dim)], axis=-1)

    def grad_u(self, x):
        """``(..., d, d)`` with entry ``[i, j] = d_j u_i``."""
        x = np.asarray(x, dtype=float)
        d = self.dim
        rows = []
        for i in range(d):
            rows.append(np.stack([self._component(i, x, tuple(int(a == j) for a in range(d)))
                                  for j in range(d)], axis=-1))
        return np.stack(rows, axis=-2)

    def hessian_u(self, x):
        """``(..., d, d, d)`` with entry ``[i, j, l] = d_j d_l u_i``."""
        x = np.asarray(x, dtype=float)
        d = self.dim
        out = np.empty(x.shape[:-1] + (d, d, d))
        for i in range(d):
            for j in range(d):
                for l in range(d):
                    deriv = [0] * d
                    deriv[j] += 1
                    deriv[l] += 1
                    out[..., i, j, l] = self._component(i, x, tuple(deriv))
        return out

    def strain(self, x):
        g = self.grad_u(x)
        return 0.5 * (g + np.swapaxes(g, -1, -2))

    def sigma(self, x):
        eps = self.strain(x)
        div = np.trace(eps, axis1=-2, axis2=-1)
        return 2 * self.mu * eps + self.lam * div[..., None, None] * np.eye(self.dim)

    def f(self, x):
        """``div sigma = mu lap u + (mu + lambda) grad div u``."""
        hes = self.hessian_u(x)
        lap = np.trace(hes, axis1=-2, axis2=-1)                   # (..., d)
        grad_div = np.einsum("...jji->...i", hes)
        return self.mu * lap + (self.mu + self.lam) * grad_div

    def g_D(self, x):
        return self.u(x)

    def g_N(self, x, n):
        return np.einsum("...ij,...j->...i", self.sigma(x), n)


def case_2d(lam, mu=1.0):
    s = 1.0 / (1.0 + lam)
    terms = [
        [(-1.0, [ONE, sin_(2 * PI)]), (1.0, [cos_(2 * PI), sin_(2 * PI)]),
         (s, [sin_(PI), sin_(PI)])],
        [(1.0, [sin_(2 * PI), ONE]), (-1.0, [sin_(2 * PI), cos_(2 * PI)]),
         (s, [sin_(PI), sin_(PI)])],
    ]
    return ManufacturedCase("2d", 2, mu, lam, terms)


def case_3d(lam, mu=0.5):
    terms = [
        [(200.0, [QUARTIC, CUBIC, CUBIC])],
        [(-100.0, [CUBIC, QUARTIC, CUBIC])],
        [(-100.0, [CUBIC, CUBIC, QUARTIC])],
    ]
    return ManufacturedCase("3d", 3, mu, lam, terms)


CASES = {"2d": case_2d, "3d": case_3d}
DEFAULT_MU = {"2d": 1.0, "3d": 0.5}


def make_case(name, lam, mu=None):
    if name not in CASES:
        raise ValueError(f"unknown case {name!r}")
    return CASES[name](lam, DEFAULT_MU[name] if mu is None else mu)


def fd_divergence(sigma, x, step=1e-5):
    """Central-difference ``div sigma`` (rows) for cross-checking ``f``."""
    x = np.asarray(x, dtype=float)
    d = x.shape[-1]
    out = np.zeros(x.shape[:-1] + (d,))
    for j in range(d):
        e = np.zeros(d)
        e[j] = step
        out += (sigma(x + e)[..., :, j] - sigma(x - e)[..., :, j]) / (2 * step)
    return out
