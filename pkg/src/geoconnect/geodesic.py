"""Geodesic ODE integration, exponential map, and closed-form oracle access.

The integrator is an embedded Runge-Kutta 5(4) pair (scipy's RK45 stepper,
driven manually) with dense output per accepted step.  Termination is typed:
reaching the horizon, leaving the chart (event-located by root finding on
the dense output), or state blow-up in finite parameter.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Optional

import numpy as np
from scipy.integrate import OdeSolution, RK45
from scipy.optimize import brentq

from .errors import DomainEscape, NoOracle, OutOfChart, StepSizeUnderflow
from .manifold import ManifoldModel, christoffel_raw

__all__ = [
    "IntegratorConfig", "Termination", "GeodesicPath",
    "integrate_geodesic", "exp", "oracle_geodesic", "oracle_geodesic_embedding",
    "energy", "energy_drift",
]


class Termination(Enum):
    REACHED_TMAX = "ReachedTmax"
    CHART_EXIT = "ChartExit"
    BLOW_UP = "BlowUp"
    ORACLE_EXACT = "OracleExact"


@dataclass(frozen=True)
class IntegratorConfig:
    rtol: float = 1e-10
    atol: float = 1e-12
    t_max: float = 1.0
    max_steps: int = 10**6
    blowup_norm: float = 1e8
    prefer_oracle: bool = False

    def with_(self, **kw) -> "IntegratorConfig":
        return replace(self, **kw)


@dataclass
class GeodesicPath:
    model: ManifoldModel
    ts: np.ndarray            # accepted step times, strictly increasing
    states: np.ndarray        # (len(ts), 2n): chart position and velocity
    termination: Termination
    term_time: float
    sol: Optional[OdeSolution] = None

    @property
    def dim(self) -> int:
        return self.model.dim

    @property
    def nodes(self) -> list[tuple[float, np.ndarray, np.ndarray]]:
        n = self.dim
        return [(float(t), s[:n], s[n:]) for t, s in zip(self.ts, self.states)]

    def state(self, t: float) -> np.ndarray:
        if self.sol is None:
            raise ValueError("path has no dense output")
        return self.sol(t)

    def point(self, t: float) -> np.ndarray:
        return self.state(t)[: self.dim]

    def velocity(self, t: float) -> np.ndarray:
        return self.state(t)[self.dim:]

    @property
    def endpoint(self) -> np.ndarray:
        return self.states[-1, : self.dim]

    @property
    def end_velocity(self) -> np.ndarray:
        return self.states[-1, self.dim:]


def _integrate(
    rhs: Callable,
    y0: np.ndarray,
    t_end: float,
    rtol: float,
    atol: float,
    max_steps: int,
    margin_fn: Optional[Callable[[np.ndarray], float]] = None,
    blowup_fn: Optional[Callable[[np.ndarray], float]] = None,
) -> tuple[np.ndarray, np.ndarray, Optional[OdeSolution], Termination, float]:
    """Drive RK45, watching sign changes of the margin/blow-up monitors."""
    solver = RK45(rhs, 0.0, y0, t_end, rtol=rtol, atol=atol)
    ts = [0.0]
    ys = [np.asarray(y0, dtype=float)]
    interpolants = []
    termination = Termination.REACHED_TMAX
    term_time = t_end
    steps = 0
    while solver.status == "running":
        # overflow inside a trial step surfaces as a typed failure, not a warning
        with np.errstate(over="ignore", invalid="ignore"):
            solver.step()
        if solver.status == "failed":
            raise StepSizeUnderflow(solver.t)
        steps += 1
        dense = solver.dense_output()
        hit = None
        for fn, kind in ((margin_fn, Termination.CHART_EXIT),
                         (blowup_fn, Termination.BLOW_UP)):
            if fn is None:
                continue
            if fn(solver.y) <= 0.0:
                f = lambda s: fn(dense(s))
                lo, hi = dense.t_min, dense.t_max
                if f(lo) <= 0.0:
                    t_star = lo
                else:
                    t_star = brentq(f, lo, hi, xtol=1e-12, rtol=8.9e-16)
                if hit is None or t_star < hit[0]:
                    hit = (t_star, kind)
        if hit is not None:
            t_star, kind = hit
            ts.append(t_star)
            ys.append(dense(t_star))
            interpolants.append(dense)
            termination = kind
            term_time = t_star
            break
        ts.append(solver.t)
        ys.append(solver.y.copy())
        interpolants.append(dense)
        if steps >= max_steps:
            raise StepSizeUnderflow(solver.t, "max_steps exceeded")
    ts_arr = np.asarray(ts)
    ys_arr = np.asarray(ys)
    sol = OdeSolution(ts_arr, interpolants) if interpolants else None
    return ts_arr, ys_arr, sol, termination, term_time


def geodesic_rhs(model: ManifoldModel) -> Callable:
    n = model.dim

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        x = y[:n]
        v = y[n:]
        gamma = christoffel_raw(model, x)
        acc = -(gamma @ v) @ v
        return np.concatenate([v, acc])

    return rhs


def chart_margin_fn(model: ManifoldModel) -> Optional[Callable[[np.ndarray], float]]:
    """Margin monitor on the position part of the state; None for full-R^n charts."""
    if model.domain.is_trivial:
        return None
    n = model.dim
    return lambda y: model.domain.margin(y[:n])


def integrate_geodesic(
    model: ManifoldModel,
    p0,
    v0,
    cfg: IntegratorConfig | None = None,
    t_max: float | None = None,
) -> GeodesicPath:
    cfg = cfg or IntegratorConfig()
    t_end = cfg.t_max if t_max is None else float(t_max)
    p0 = np.asarray(p0, dtype=float)
    v0 = np.asarray(v0, dtype=float)
    if not np.all(np.isfinite(v0)):
        raise ValueError(f"initial velocity not finite: {v0}")
    if not model.domain.contains(p0):
        raise OutOfChart(p0)
    y0 = np.concatenate([p0, v0])
    if t_end == 0.0 or not np.any(v0):
        # stationary or zero-horizon: trivial path
        ts = np.array([0.0, t_end]) if t_end > 0 else np.array([0.0])
        states = np.tile(y0, (len(ts), 1))
        return GeodesicPath(model, ts, states, Termination.REACHED_TMAX, t_end, None)
    blow = cfg.blowup_norm
    ts, ys, sol, term, t_term = _integrate(
        geodesic_rhs(model), y0, t_end, cfg.rtol, cfg.atol, cfg.max_steps,
        margin_fn=chart_margin_fn(model),
        blowup_fn=lambda y: blow - float(np.max(np.abs(y))),
    )
    return GeodesicPath(model, ts, ys, term, t_term, sol)


def exp(model: ManifoldModel, p, v, cfg: IntegratorConfig | None = None) -> np.ndarray:
    """Exponential map: time-1 endpoint of the geodesic with initial data (p, v)."""
    cfg = cfg or IntegratorConfig()
    p = np.asarray(p, dtype=float)
    v = np.asarray(v, dtype=float)
    if not np.any(v):
        return p.copy()
    if cfg.prefer_oracle and model.oracle is not None:
        return np.asarray(model.oracle.point(p, v, 1.0), dtype=float)
    path = integrate_geodesic(model, p, v, cfg, t_max=1.0)
    if path.termination is not Termination.REACHED_TMAX:
        raise DomainEscape(path.termination, path.term_time)
    return path.endpoint


def oracle_geodesic(model: ManifoldModel, p, v, t: float) -> np.ndarray:
    """Closed-form geodesic point in chart coordinates; NoOracle if unavailable."""
    if model.oracle is None:
        raise NoOracle(model.name)
    return np.asarray(model.oracle.point(np.asarray(p, float), np.asarray(v, float), t))


def oracle_geodesic_embedding(model: ManifoldModel, p, v, t: float) -> np.ndarray:
    if model.oracle is None:
        raise NoOracle(model.name)
    return np.asarray(
        model.oracle.point_embedding(np.asarray(p, float), np.asarray(v, float), t)
    )


def energy(model: ManifoldModel, x: np.ndarray, v: np.ndarray) -> float:
    return float(v @ np.asarray(model.metric(x), dtype=float) @ v)


def energy_drift(path: GeodesicPath) -> float:
    """Max deviation of g(x', x') from its initial value over the path nodes."""
    n = path.dim
    e0 = energy(path.model, path.states[0, :n], path.states[0, n:])
    worst = 0.0
    for s in path.states:
        worst = max(worst, abs(energy(path.model, s[:n], s[n:]) - e0))
    return worst
