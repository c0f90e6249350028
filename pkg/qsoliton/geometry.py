"""
Local Geometry
==============

Levi-Civita calculus at one point of a chart, carried out on truncated jets.

Curvature convention: R(X, Y)Z = nabla_X nabla_Y Z - nabla_Y nabla_X Z - nabla_[X,Y] Z, stored
as ``riemann[l, i, j, k]`` with R(d_i, d_j)d_k = R^l_ijk d_l. With this convention the round
sphere has positive sectional curvature, Ric_jk = R^i_ijk and R = g^jk Ric_jk.

A LocalGeometry built with metric order K holds Christoffel symbols of order K - 1 and curvature
of order K - 2; every derived quantity truncates to the orders of its ingredients, so a value is
available exactly when enough metric derivatives were requested.

Usage:
    geometry = LocalGeometry(chart, p=[0.3, -1.1], order=2)
    geometry.scalar.value
    curvature_at(chart, [0.3, -1.1]).ricci
"""

from __future__ import annotations

import functools
import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from qsoliton.charts import Chart, ScalarField, TensorField
from qsoliton.errors import CriticalPointError, DimensionError, JetOrderError, ValenceError
from qsoliton.jets import Jet, einsum

logger = logging.getLogger(__name__)

CRITICAL_GRADIENT = 1e-10
_SLOT_LETTERS = "abcdefgh"


@dataclass(frozen=True)
class CurvatureBundle:
    """Curvature values at a point."""

    point: np.ndarray
    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float


class LocalGeometry:
    """Metric jet of order ``order`` at ``point`` and everything derived from it."""

    def __init__(self, chart: Chart, point: Sequence[float], order: int) -> None:
        self.chart = chart
        self.point = chart.validate_point(point)
        self.order = order
        self.g = chart.metric_jet(self.point, order)
        chart.check_metric(self.g.value, self.point)
        self._fields: dict[int, Jet] = {}
        self._scalars: dict[int, Jet] = {}

    @property
    def dim(self) -> int:
        return self.chart.dim

    def _require(self, needed: int, what: str) -> None:
        if self.order < needed:
            raise JetOrderError(f"{what} needs metric order {needed}, geometry has {self.order}")

    # ------------------------------------------------------------------
    # Connection and curvature
    # ------------------------------------------------------------------

    @functools.cached_property
    def ginv(self) -> Jet:
        return self.g.inverse_matrix()

    @functools.cached_property
    def christoffel(self) -> Jet:
        """Gamma^k_ij as ``[k, i, j]``."""
        self._require(1, "Christoffel symbols")
        dg = self.g.grad()
        lowered = 0.5 * (einsum("ijl->lij", dg) + einsum("jil->lij", dg) - dg)
        return einsum("kl,lij->kij", self.ginv, lowered)

    @functools.cached_property
    def riemann(self) -> Jet:
        """R^l_ijk as ``[l, i, j, k]``."""
        self._require(2, "Riemann tensor")
        gamma = self.christoffel
        dgamma = gamma.grad()
        return (
            einsum("iljk->lijk", dgamma)
            - einsum("jlik->lijk", dgamma)
            + einsum("lim,mjk->lijk", gamma, gamma)
            - einsum("ljm,mik->lijk", gamma, gamma)
        )

    @functools.cached_property
    def riemann_lowered(self) -> Jet:
        """<R(d_i, d_j)d_k, d_l> as ``[i, j, k, l]``."""
        return einsum("lm,mijk->ijkl", self.g, self.riemann)

    @functools.cached_property
    def ricci(self) -> Jet:
        return einsum("iijk->jk", self.riemann)

    @functools.cached_property
    def scalar(self) -> Jet:
        return self.trace(self.ricci)

    @functools.cached_property
    def ricci_up(self) -> Jet:
        return self.raise_both(self.ricci)

    @functools.cached_property
    def schouten(self) -> Jet:
        n = self.dim
        if n < 3:
            raise DimensionError("Schouten tensor needs dimension >= 3")
        return (self.ricci - self.g * self.scalar * (1.0 / (2 * (n - 1)))) * (1.0 / (n - 2))

    @functools.cached_property
    def weyl(self) -> Jet:
        """Weyl tensor lowered like ``riemann_lowered``."""
        return self.riemann_lowered - kulkarni_nomizu(self.schouten, self.g)

    @functools.cached_property
    def bach(self) -> Jet:
        """Bach tensor of a 4-manifold, sign fixed so that S^2 x R^2 gives -c^2 g_S + c^2 g_R."""
        if self.dim != 4:
            raise DimensionError(f"Bach tensor is defined here for dimension 4, got {self.dim}")
        self._require(4, "Bach tensor")
        weyl = self.weyl
        ddw = self.covariant_derivative(self.covariant_derivative(weyl))
        partial = einsum("ka,abkijl->bijl", self.ginv, ddw)
        double_divergence = einsum("lb,bijl->ij", self.ginv, partial)
        contraction = einsum("kl,kijl->ij", self.ricci_up, weyl)
        return -(double_divergence + contraction * 0.5)

    def curvature(self) -> CurvatureBundle:
        return CurvatureBundle(
            point=self.point,
            christoffel=self.christoffel.value,
            riemann=self.riemann.value,
            ricci=self.ricci.value,
            scalar=float(self.scalar.value),
        )

    # ------------------------------------------------------------------
    # Tensor calculus
    # ------------------------------------------------------------------

    def covariant_derivative(self, tensor: Jet) -> Jet:
        """nabla of a covariant tensor; the derivative index comes first."""
        rank = tensor.ndim
        if rank > len(_SLOT_LETTERS):
            raise ValenceError(f"Covariant derivative supports rank <= {len(_SLOT_LETTERS)}")
        letters = _SLOT_LETTERS[:rank]
        result = tensor.grad()
        for slot in range(rank):
            contracted = letters[:slot] + "p" + letters[slot + 1 :]
            result = result - einsum(
                f"pm{letters[slot]},{contracted}->m{letters}", self.christoffel, tensor
            )
        return result

    def hessian(self, u: Jet) -> Jet:
        """nabla_i nabla_j u = d_i d_j u - Gamma^k_ij d_k u."""
        return self.covariant_derivative(u.grad())

    def raise_index(self, covector: Jet) -> Jet:
        return einsum("ij,j->i", self.ginv, covector)

    def raise_first(self, tensor: Jet) -> Jet:
        """(1,1) dual T^i_j = g^ik T_kj."""
        self._check_rank(tensor, 2)
        return einsum("ik,kj->ij", self.ginv, tensor)

    def raise_both(self, tensor: Jet) -> Jet:
        self._check_rank(tensor, 2)
        return einsum("ij,jl->il", self.raise_first(tensor), self.ginv)

    def trace(self, tensor: Jet) -> Jet:
        self._check_rank(tensor, 2)
        return einsum("ij,ij->", self.ginv, tensor)

    def inner(self, a: Jet, b: Jet) -> Jet:
        """g-inner product of two covariant 2-tensors."""
        return einsum("ij,ij->", self.raise_both(a), b)

    def norm2(self, tensor: Jet) -> Jet:
        return self.inner(tensor, tensor)

    def covector_inner(self, a: Jet, b: Jet) -> Jet:
        return einsum("i,i->", a, self.raise_index(b))

    def laplacian(self, u: Jet) -> Jet:
        return self.trace(self.hessian(u))

    def f_laplacian(self, u: Jet, f: Jet) -> Jet:
        """Delta u - <grad f, grad u>."""
        return self.laplacian(u) - self.covector_inner(f.grad(), u.grad())

    def divergence_02(self, tensor: Jet) -> Jet:
        """(div T)_l = g^ij nabla_i T_jl."""
        self._check_rank(tensor, 2)
        return einsum("ij,ijl->l", self.ginv, self.covariant_derivative(tensor))

    def divergence_01(self, covector: Jet) -> Jet:
        return self.trace(self.covariant_derivative(covector))

    def apply_dual(self, tensor: Jet, covector: Jet) -> Jet:
        """Components of Q(X) lowered, i.e. T_ij X^j for X the vector dual to ``covector``."""
        return einsum("ij,j->i", tensor, self.raise_index(covector))

    def radial_curvature(self, f: Jet, direction: np.ndarray) -> np.ndarray:
        """Components of R(X, grad f)grad f at the point."""
        gradient = self.raise_index(f.grad()).value
        g = self.g.value
        if np.sqrt(gradient @ g @ gradient) < CRITICAL_GRADIENT:
            raise CriticalPointError(f"grad f vanishes at {self.point.tolist()}")
        return np.einsum(
            "i,j,k,lijk->l", np.asarray(direction, dtype=float), gradient, gradient,
            self.riemann.value,
        )

    @staticmethod
    def _check_rank(tensor: Jet, rank: int) -> None:
        if tensor.ndim != rank:
            raise ValenceError(f"Expected a rank-{rank} tensor, got rank {tensor.ndim}")

    # ------------------------------------------------------------------
    # Fields
    # ------------------------------------------------------------------

    def field(self, tensor: TensorField) -> Jet:
        key = id(tensor)
        if key not in self._fields:
            self._require(tensor.cost, tensor.name)
            jet = tensor.builder(self)
            if jet.ndim != sum(tensor.valence):
                raise ValenceError(
                    f"Field {tensor.name!r} has rank {jet.ndim}, declared {tensor.valence}"
                )
            self._fields[key] = jet
        return self._fields[key]

    def scalar_field(self, u: ScalarField) -> Jet:
        key = id(u)
        if key not in self._scalars:
            self._scalars[key] = u.jet(self)
        return self._scalars[key]


def kulkarni_nomizu(h: Jet, k: Jet) -> Jet:
    """(h o k)_ijkl = h_jk k_il + h_il k_jk - h_ik k_jl - h_jl k_ik."""
    return (
        einsum("jk,il->ijkl", h, k)
        + einsum("il,jk->ijkl", h, k)
        - einsum("ik,jl->ijkl", h, k)
        - einsum("jl,ik->ijkl", h, k)
    )


# ============================================================================
# Pointwise operations
# ============================================================================


def curvature_at(chart: Chart, p: Sequence[float]) -> CurvatureBundle:
    """Christoffel symbols, Riemann, Ricci and scalar curvature at ``p``."""
    return LocalGeometry(chart, p, order=2).curvature()


def hessian(chart: Chart, f: ScalarField, p: Sequence[float]) -> np.ndarray:
    geometry = LocalGeometry(chart, p, order=1)
    return geometry.hessian(geometry.scalar_field(f)).value


def divergence_02(chart: Chart, tensor: TensorField, p: Sequence[float]) -> np.ndarray:
    if tensor.valence != (0, 2):
        raise ValenceError(f"divergence_02 needs a (0,2) field, got {tensor.valence}")
    geometry = LocalGeometry(chart, p, order=tensor.cost + 1)
    return geometry.divergence_02(geometry.field(tensor)).value


def laplacian(chart: Chart, u: ScalarField, p: Sequence[float]) -> float:
    geometry = LocalGeometry(chart, p, order=1)
    return float(geometry.laplacian(geometry.scalar_field(u)).value)


def f_laplacian(chart: Chart, u: ScalarField, f: ScalarField, p: Sequence[float]) -> float:
    geometry = LocalGeometry(chart, p, order=1)
    return float(
        geometry.f_laplacian(geometry.scalar_field(u), geometry.scalar_field(f)).value
    )


def radial_curvature(
    chart: Chart, f: ScalarField, p: Sequence[float], direction: Sequence[float]
) -> np.ndarray:
    """R(X, grad f)grad f; raises CriticalPointError where grad f vanishes."""
    geometry = LocalGeometry(chart, p, order=2)
    return geometry.radial_curvature(geometry.scalar_field(f), np.asarray(direction))


def orthonormal_frame(g: np.ndarray) -> np.ndarray:
    """Columns form a g-orthonormal basis (Cholesky of the inverse metric)."""
    return np.linalg.cholesky(np.linalg.inv(g))


def orthogonal_complement(g: np.ndarray, vector: np.ndarray) -> np.ndarray:
    """g-orthonormal basis (as columns) of the g-orthogonal complement of ``vector``."""
    unit = vector / np.sqrt(vector @ g @ vector)
    basis = [unit]
    for candidate in orthonormal_frame(g).T:
        for e in basis:
            candidate = candidate - (candidate @ g @ e) * e
        size = np.sqrt(candidate @ g @ candidate)
        if size > 1e-8:
            basis.append(candidate / size)
        if len(basis) == len(vector):
            break
    return np.array(basis[1:]).T
