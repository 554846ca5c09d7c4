"""Random polynomial fields and random IPHS instances for property checks."""
from __future__ import annotations

import itertools
import math

import numpy as np

from .core import (
    DissipationTerm,
    IphsSystem,
    IrreversiblePort,
    ReversibleInternalTerm,
    ReversiblePort,
    SkewMatrix,
)
from .discrete_gradient import ScalarField


def polynomial_field(exponents, coefficients) -> ScalarField:
    """``f(x) = sum_k c_k prod_i x_i^{E_ki}`` with its exact gradient."""
    E = np.asarray(exponents, dtype=int)
    c = np.asarray(coefficients, dtype=float)
    n = E.shape[1]
    lowered = []
    for i in range(n):
        Ei = E.copy()
        Ei[:, i] = np.maximum(Ei[:, i] - 1, 0)
        lowered.append((c * E[:, i], Ei))

    def value(x):
        return float(c @ np.prod(np.asarray(x, float) ** E, axis=1))

    def gradient(x):
        x = np.asarray(x, float)
        return np.array([ci @ np.prod(x ** Ei, axis=1) for ci, Ei in lowered])

    return ScalarField(n, value, gradient)


def random_polynomial_field(rng: np.random.Generator, dimension: int, degree: int, terms: int = 8) -> ScalarField:
    """Random polynomial of total degree ``<= degree`` with ``terms`` monomials."""
    monomials = [e for e in itertools.product(range(degree + 1), repeat=dimension) if sum(e) <= degree]
    pick = rng.choice(len(monomials), size=min(terms, len(monomials)), replace=False)
    E = np.array([monomials[k] for k in pick])
    return polynomial_field(E, rng.normal(size=len(E)))


def random_skew(rng: np.random.Generator, n: int, scale: float = 1.0) -> np.ndarray:
    A = rng.normal(scale=scale, size=(n, n))
    return A - A.T


def _positive_coefficient(w, b, amplitude):
    # exp of a bounded field: strictly positive, between exp(b-a) and exp(b+a)
    return lambda x, *u: math.exp(b + amplitude * math.tanh(float(w @ x)))


def random_iphs(rng: np.random.Generator, n: int | None = None, m: int | None = None) -> IphsSystem:
    """Random IPHS satisfying the structural conditions.

    ``H`` is a convex quadratic plus a positive quartic, ``S`` is linear,
    internal matrices are projected so that ``grad S`` lies in their kernel,
    reversible port maps are projected likewise and carry ``tau = 0``, and all
    irreversible ports share one entropy weight vector ``tau``.
    """
    n = int(rng.integers(3, 7)) if n is None else n
    m = int(rng.integers(1, 4)) if m is None else m

    B = rng.normal(size=(n, n))
    Q = B @ B.T / n + np.eye(n)
    quartic = rng.uniform(0.0, 0.2, size=n)

    def H_value(x):
        return float(0.5 * x @ Q @ x + quartic @ x**4)

    def H_grad(x):
        return Q @ x + 4.0 * quartic * x**3

    H = ScalarField(n, H_value, H_grad)
    c = rng.normal(size=n)
    S = ScalarField.linear(c)
    P = np.eye(n) - np.outer(c, c) / (c @ c)

    dissipation = [
        DissipationTerm(SkewMatrix(random_skew(rng, n, 0.5)),
                        _positive_coefficient(rng.normal(size=n), rng.uniform(-1, 0), 0.5))
        for _ in range(int(rng.integers(1, 3)))
    ]
    internal = []
    for _ in range(int(rng.integers(1, 3))):
        M = P @ random_skew(rng, n) @ P
        internal.append(ReversibleInternalTerm(SkewMatrix(0.5 * (M - M.T))))
    tau = rng.normal(size=m)
    ports = [
        IrreversiblePort(0.25 * rng.normal(size=(n, m)),
                         _positive_coefficient(rng.normal(size=n), rng.uniform(-1, 0), 0.5), tau)
        for _ in range(int(rng.integers(1, 3)))
    ]
    rev_ports = [ReversiblePort(P @ rng.normal(size=(n, m)), np.zeros(m))
                 for _ in range(int(rng.integers(0, 2)))]
    return IphsSystem(n, m, H, S, True, dissipation, internal, ports, rev_ports, name="random_iphs")
