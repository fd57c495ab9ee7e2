"""Chart-based manifold models: metric, connection, and tangent-space helpers.

A model is a single chart (an open box, optionally refined by a smooth
interior function) together with a metric evaluator.  Christoffel symbols
come from an analytic evaluator when the model supplies one and are
otherwise derived from the metric by central differences.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

import numpy as np

from .errors import DegenerateMetric, NotTimelike, OutOfChart

__all__ = [
    "ChartDomain", "ManifoldModel", "Tangent", "ScalarField", "VectorField",
    "metric_eval", "christoffel_eval", "inner", "causal_class",
    "auxiliary_riemannian", "embedding_point", "embedding_jacobian",
    "orthonormal_frame", "DEGENERACY_TOL",
]

DEGENERACY_TOL = 1e-12


@dataclass(frozen=True)
class ChartDomain:
    """Open box, optionally intersected with {interior_fn > 0}."""

    lower: np.ndarray
    upper: np.ndarray
    interior_fn: Optional[Callable[[np.ndarray], float]] = None

    @staticmethod
    def unbounded(dim: int) -> "ChartDomain":
        return ChartDomain(np.full(dim, -np.inf), np.full(dim, np.inf))

    def margin(self, x: np.ndarray) -> float:
        """Signed distance-like margin; positive strictly inside."""
        m = np.inf
        finite_lo = np.isfinite(self.lower)
        finite_hi = np.isfinite(self.upper)
        if finite_lo.any():
            m = min(m, float(np.min(x[finite_lo] - self.lower[finite_lo])))
        if finite_hi.any():
            m = min(m, float(np.min(self.upper[finite_hi] - x[finite_hi])))
        if self.interior_fn is not None:
            m = min(m, float(self.interior_fn(x)))
        return m

    def contains(self, x: np.ndarray, margin: float = 0.0) -> bool:
        return self.margin(np.asarray(x, dtype=float)) > margin

    @property
    def is_trivial(self) -> bool:
        return (
            self.interior_fn is None
            and not np.isfinite(self.lower).any()
            and not np.isfinite(self.upper).any()
        )


class GeodesicOracle(Protocol):
    """Closed-form geodesic map in chart and embedding coordinates."""

    def point(self, p: np.ndarray, v: np.ndarray, t: float) -> np.ndarray: ...

    def point_embedding(self, p: np.ndarray, v: np.ndarray, t: float) -> np.ndarray: ...


@dataclass(frozen=True)
class ManifoldModel:
    name: str
    dim: int
    signature: tuple[int, ...]
    domain: ChartDomain
    metric: Callable[[np.ndarray], np.ndarray]
    christoffel: Optional[Callable[[np.ndarray], np.ndarray]] = None
    christoffel_deriv: Optional[Callable[[np.ndarray], np.ndarray]] = None
    oracle: Optional[GeodesicOracle] = None
    embedding: Optional[Callable[[np.ndarray], np.ndarray]] = None
    embedding_jac: Optional[Callable[[np.ndarray], np.ndarray]] = None
    chart_from_embedding: Optional[Callable[[np.ndarray], np.ndarray]] = None
    metadata: dict = field(default_factory=dict)

    @property
    def is_riemannian(self) -> bool:
        return all(s == 1 for s in self.signature)

    def __repr__(self) -> str:  # keep frozen dataclass repr short
        return f"ManifoldModel({self.name}, dim={self.dim}, signature={self.signature})"


@dataclass(frozen=True)
class Tangent:
    base: tuple[float, ...]
    vec: tuple[float, ...]

    @staticmethod
    def of(base, vec) -> "Tangent":
        return Tangent(tuple(map(float, base)), tuple(map(float, vec)))

    @property
    def base_array(self) -> np.ndarray:
        return np.asarray(self.base, dtype=float)

    @property
    def vec_array(self) -> np.ndarray:
        return np.asarray(self.vec, dtype=float)


@dataclass(frozen=True)
class ScalarField:
    eval: Callable[[np.ndarray], float]
    name: str = "f"


@dataclass(frozen=True)
class VectorField:
    eval: Callable[[np.ndarray], np.ndarray]
    name: str = "V"


def _check_chart(model: ManifoldModel, x: np.ndarray, margin: float = 0.0) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape != (model.dim,):
        raise OutOfChart(x, f"expected {model.dim} coordinates")
    if not model.domain.contains(x, margin):
        raise OutOfChart(x)
    return x


def metric_eval(model: ManifoldModel, x) -> np.ndarray:
    """Validated metric matrix g(x): symmetric, nondegenerate, signature-true."""
    x = _check_chart(model, x)
    g = np.asarray(model.metric(x), dtype=float)
    if not np.array_equal(g, g.T):
        raise DegenerateMetric(x, float(np.max(np.abs(g - g.T))))
    eig = np.linalg.eigvalsh(g)
    small = np.abs(eig).min()
    if small < DEGENERACY_TOL:
        raise DegenerateMetric(x, float(small))
    signs = tuple(int(s) for s in np.sign(np.sort(eig)))
    if signs != tuple(sorted(model.signature)):
        raise DegenerateMetric(x, float(small))
    return g


def fd_metric_derivatives(model: ManifoldModel, x: np.ndarray) -> np.ndarray:
    """dg[l, i, j] = d g_ij / d x_l by central differences."""
    n = model.dim
    dg = np.empty((n, n, n))
    for l in range(n):
        h = 1e-5 * max(1.0, abs(x[l]))
        xp = x.copy(); xp[l] += h
        xm = x.copy(); xm[l] -= h
        dg[l] = (np.asarray(model.metric(xp)) - np.asarray(model.metric(xm))) / (2.0 * h)
    return dg


def fd_christoffel(model: ManifoldModel, x: np.ndarray) -> np.ndarray:
    """Gamma^k_ij = (1/2) g^{kl} (d_i g_jl + d_j g_il - d_l g_ij)."""
    g = np.asarray(model.metric(x), dtype=float)
    try:
        ginv = np.linalg.inv(g)
    except np.linalg.LinAlgError:
        raise DegenerateMetric(x, 0.0) from None
    dg = fd_metric_derivatives(model, x)
    # bracket[l, i, j] = d_i g_jl + d_j g_il - d_l g_ij
    bracket = dg.transpose(2, 0, 1) + dg.transpose(2, 1, 0) - dg
    return 0.5 * np.einsum("kl,lij->kij", ginv, bracket)


def christoffel_raw(model: ManifoldModel, x: np.ndarray) -> np.ndarray:
    """Unvalidated Christoffel evaluation (fast path for integrators)."""
    if model.christoffel is not None:
        return np.asarray(model.christoffel(x), dtype=float)
    return fd_christoffel(model, x)


def christoffel_eval(model: ManifoldModel, x) -> np.ndarray:
    """Validated Christoffel symbols Gamma^k_ij at a chart point."""
    x = _check_chart(model, x, margin=0.0)
    gamma = christoffel_raw(model, x)
    return gamma


def christoffel_deriv_raw(model: ManifoldModel, x: np.ndarray) -> np.ndarray:
    """dGamma[l, k, i, j] = d Gamma^k_ij / d x_l (analytic or central difference)."""
    if model.christoffel_deriv is not None:
        return np.asarray(model.christoffel_deriv(x), dtype=float)
    n = model.dim
    # Wider step when Gamma itself is finite-differenced: keeps fd noise in check.
    base_h = 1e-6 if model.christoffel is not None else 1e-4
    out = np.empty((n, n, n, n))
    for l in range(n):
        h = base_h * max(1.0, abs(x[l]))
        xp = x.copy(); xp[l] += h
        xm = x.copy(); xm[l] -= h
        out[l] = (christoffel_raw(model, xp) - christoffel_raw(model, xm)) / (2.0 * h)
    return out


def inner(model: ManifoldModel, x, u, w) -> float:
    """Metric inner product u^T g(x) w."""
    x = _check_chart(model, x)
    u = np.asarray(u, dtype=float)
    w = np.asarray(w, dtype=float)
    return float(u @ np.asarray(model.metric(x), dtype=float) @ w)


def causal_class(model: ManifoldModel, x, u) -> str:
    """Classify a tangent vector as spacelike, timelike, or null."""
    u = np.asarray(u, dtype=float)
    q = inner(model, x, u, u)
    tol = 1e-12 * float(u @ u)
    if q > tol:
        return "spacelike"
    if q < -tol:
        return "timelike"
    return "null"


def auxiliary_riemannian(model: ManifoldModel, V: VectorField) -> ManifoldModel:
    """Riemannian metric h(X,Y) = 2 g(V,X) g(V,Y) + g(X,Y) from a timelike V.

    V is rescaled pointwise to g(V,V) = -1; a non-timelike sample raises
    NotTimelike with the offending point.
    """

    def h_metric(x: np.ndarray) -> np.ndarray:
        g = np.asarray(model.metric(x), dtype=float)
        Vx = np.asarray(V.eval(x), dtype=float)
        q = float(Vx @ g @ Vx)
        if q >= 0.0:
            raise NotTimelike(x, q)
        w = (g @ Vx) / np.sqrt(-q)
        return 2.0 * np.outer(w, w) + g

    return ManifoldModel(
        name=f"{model.name}+aux({V.name})",
        dim=model.dim,
        signature=(1,) * model.dim,
        domain=model.domain,
        metric=h_metric,
        embedding=model.embedding,
        chart_from_embedding=model.chart_from_embedding,
        metadata={"auxiliary_of": model.name},
    )


def embedding_point(model: ManifoldModel, x) -> np.ndarray:
    """Point in ambient space if the model embeds; chart coordinates otherwise."""
    x = np.asarray(x, dtype=float)
    if model.embedding is None:
        return x
    return np.asarray(model.embedding(x), dtype=float)


def embedding_jacobian(model: ManifoldModel, x: np.ndarray) -> np.ndarray:
    """Jacobian of the embedding map (analytic if supplied, else central fd)."""
    x = np.asarray(x, dtype=float)
    if model.embedding is None:
        return np.eye(model.dim)
    if model.embedding_jac is not None:
        return np.asarray(model.embedding_jac(x), dtype=float)
    cols = []
    for i in range(model.dim):
        h = 1e-6 * max(1.0, abs(x[i]))
        xp = x.copy(); xp[i] += h
        xm = x.copy(); xm[i] -= h
        cols.append((embedding_point(model, xp) - embedding_point(model, xm)) / (2.0 * h))
    return np.stack(cols, axis=1)


def orthonormal_frame(model: ManifoldModel, x) -> tuple[np.ndarray, np.ndarray]:
    """Frame E with E^T g(x) E = diag(signs); returns (E, signs).

    Columns are ordered spacelike first (+1) then timelike (-1).
    """
    x = np.asarray(x, dtype=float)
    g = np.asarray(model.metric(x), dtype=float)
    eig, vec = np.linalg.eigh(g)
    order = np.argsort(-eig)  # positive eigenvalues first
    eig = eig[order]
    vec = vec[:, order]
    if np.abs(eig).min() < DEGENERACY_TOL:
        raise DegenerateMetric(x, float(np.abs(eig).min()))
    E = vec / np.sqrt(np.abs(eig))
    signs = np.sign(eig).astype(int)
    return E, signs
