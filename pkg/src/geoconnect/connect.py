"""Two-point geodesic connection by lifting a target path through exp_p.

The connector solves exp_p(v) = q by continuation: a target path sigma from
a nearby regular start to q is tracked in the tangent space by a predictor
step through the inverse differential of exp_p plus a Newton corrector.
Failures are typed, never raised: a singular differential (conjugate hit,
with detour retries), unbounded lift norm (escape witness), leaving the
maximal domain, or step underflow.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from .errors import DomainEscape, LinearizationFailure, NoConvergence, StepSizeUnderflow
from .geodesic import IntegratorConfig, Termination, integrate_geodesic
from .jacobi import (
    ConjugateLocusSample, DifferentialFrame, _wrap_delta, component_of_point,
    dexp_matrix, integrate_variational,
)
from .manifold import ManifoldModel, VectorField, auxiliary_riemannian, causal_class, orthonormal_frame

__all__ = [
    "ConnectConfig", "TargetPath", "LiftOutcome",
    "local_log", "connect", "connect_report", "render_report",
]


@dataclass(frozen=True)
class ConnectConfig:
    corrector_tol: float = 1e-9
    connect_tol: float = 1e-6
    sv_floor: float = 1e-6
    escape_factor: float = 1e4
    max_retries: int = 8
    bump_fraction: float = 0.05
    path_kind: str = "segment"       # 'segment' | 'aux'
    max_lift_steps: int = 400
    newton_iterations: int = 8
    integrator: IntegratorConfig = field(
        # step cap keeps runaway correction geodesics from stalling the lift;
        # the final residual is re-checked against connect_tol regardless
        default_factory=lambda: IntegratorConfig(rtol=1e-8, atol=1e-10, max_steps=4000)
    )


@dataclass
class TargetPath:
    point: Callable[[float], np.ndarray]
    deriv: Callable[[float], np.ndarray]
    length: float
    provenance: str  # 'ChartSegment' | 'AuxGeodesic' | 'UserPolyline'


@dataclass
class LiftOutcome:
    status: str  # Connected | ConjugateHit | EscapeWitness | DomainExit | Stalled
    v: Optional[np.ndarray]
    lift_trace: list[dict]
    witness: dict = field(default_factory=dict)

    @property
    def connected(self) -> bool:
        return self.status == "Connected"


def local_log(
    model: ManifoldModel,
    p,
    target,
    cfg: ConnectConfig | None = None,
    tol: float = 1e-10,
    max_iter: int = 50,
) -> np.ndarray:
    """Invert exp_p near p by Newton iteration seeded at the chart difference."""
    cfg = cfg or ConnectConfig()
    p = np.asarray(p, dtype=float)
    target = np.asarray(target, dtype=float)
    v = target - p
    cap = 100.0 * (1.0 + np.linalg.norm(v))
    residual = np.inf
    # far from the root a cheap integration is enough to steer Newton
    coarse = cfg.integrator.with_(rtol=max(cfg.integrator.rtol, 1e-6),
                                  atol=max(cfg.integrator.atol, 1e-8))
    for it in range(max_iter):
        ic = cfg.integrator if residual < 1e-5 else coarse
        try:
            frame = dexp_matrix(model, p, v, ic)
        except (DomainEscape, LinearizationFailure, StepSizeUnderflow):
            raise NoConvergence(it, residual) from None
        r = _wrap_delta(model, frame.endpoint - target)
        residual = float(np.linalg.norm(r))
        if residual < tol and ic is cfg.integrator:
            return v
        try:
            dv = np.linalg.solve(frame.matrix, r)
        except np.linalg.LinAlgError:
            raise NoConvergence(it, residual) from None
        v = v - dv
        if np.linalg.norm(v) > cap or not np.all(np.isfinite(v)):
            raise NoConvergence(it, residual)
    raise NoConvergence(max_iter, residual)


def _segment_path(p: np.ndarray, q: np.ndarray) -> TargetPath:
    delta = q - p
    length = float(np.linalg.norm(delta))
    direction = delta / length

    return TargetPath(
        point=lambda t: p + t * direction,
        deriv=lambda t: direction,
        length=length,
        provenance="ChartSegment",
    )


def _default_timelike_field(model: ManifoldModel) -> VectorField:
    def eval_v(x: np.ndarray) -> np.ndarray:
        E, signs = orthonormal_frame(model, x)
        col = E[:, np.flatnonzero(signs == -1)[0]]
        # fix the eigenvector sign for continuity across evaluations
        k = int(np.argmax(np.abs(col)))
        return col if col[k] > 0 else -col
    return VectorField(eval_v, name="frame-timelike")


def _aux_path(model: ManifoldModel, p: np.ndarray, q: np.ndarray,
              cfg: ConnectConfig) -> TargetPath:
    """Geodesic of an auxiliary complete Riemannian metric from p to q."""
    if model.is_riemannian:
        # flat chart metric: its geodesics are chart segments
        return replace(_segment_path(p, q), provenance="AuxGeodesic")
    aux = auxiliary_riemannian(model, _default_timelike_field(model))
    sub = replace(cfg, path_kind="segment")
    outcome = connect(aux, p, q, sub)
    if not outcome.connected:
        # fall back to the chart segment rather than failing outright
        return _segment_path(p, q)
    path = integrate_geodesic(aux, p, outcome.v, sub.integrator, t_max=1.0)
    return TargetPath(
        point=lambda t: path.point(min(max(t, 0.0), 1.0)),
        deriv=lambda t: path.velocity(min(max(t, 0.0), 1.0)),
        length=1.0,
        provenance="AuxGeodesic",
    )


def _bumped_path(base: TargetPath, p: np.ndarray, q: np.ndarray, k: int,
                 bump_fraction: float) -> TargetPath:
    """Detour k: sinusoidal bump transverse to the chord, rotated/scaled per retry."""
    n = len(p)
    chord = q - p
    chord = chord / np.linalg.norm(chord)
    basis = np.linalg.qr(np.column_stack([chord, np.eye(n)]))[0][:, 1:n]
    if n >= 3:
        ang = 2.0 * np.pi * k / 8.0
        d = np.cos(ang) * basis[:, 0] + np.sin(ang) * basis[:, 1]
        scale = 1.0 + (k // 8)
    else:
        d = basis[:, 0] * (1.0 if k % 2 == 0 else -1.0)
        scale = 1.0 + (k // 2)
    ell = base.length
    delta = bump_fraction * ell * scale

    def pt(t: float) -> np.ndarray:
        return base.point(t) + delta * np.sin(np.pi * t / ell) * d

    def dv(t: float) -> np.ndarray:
        return base.deriv(t) + delta * (np.pi / ell) * np.cos(np.pi * t / ell) * d

    return TargetPath(pt, dv, ell, base.provenance)


def _newton_correct(model, p, v, target, cfg: ConnectConfig, vcap: float = np.inf):
    """Newton on exp_p(v) = target.  Returns (flag, v, frame, residual);
    flag in {'ok', 'conjugate', 'escape', 'fail'}."""
    frame = None
    residual = np.inf
    worse = 0
    for _ in range(cfg.newton_iterations):
        if float(np.linalg.norm(v)) > vcap:
            return "fail", v, frame, residual
        try:
            frame = dexp_matrix(model, p, v, cfg.integrator)
        except DomainEscape as esc:
            return "escape", v, None, {"termination": esc.termination.value, "t": esc.t}
        except (LinearizationFailure, StepSizeUnderflow):
            return "fail", v, None, residual
        r = _wrap_delta(model, frame.endpoint - target)
        prev = residual
        residual = float(np.linalg.norm(r))
        if residual <= cfg.corrector_tol:
            return "ok", v, frame, residual
        if residual > prev:
            worse += 1
            if worse >= 2:  # diverging: give the caller a smaller step instead
                return "fail", v, frame, residual
        if frame.min_singular_value < cfg.sv_floor:
            return "conjugate", v, frame, residual
        try:
            dv = np.linalg.solve(frame.matrix, r)
        except np.linalg.LinAlgError:
            return "conjugate", v, frame, residual
        v = v - dv
        if not np.all(np.isfinite(v)):
            return "fail", v, frame, residual
    return "fail", v, frame, residual


def _lift(model: ManifoldModel, p: np.ndarray, sigma: TargetPath,
          cfg: ConnectConfig, v0: np.ndarray) -> LiftOutcome:
    ell = sigma.length
    escape_bound = cfg.escape_factor * ell
    t = 0.0
    v = v0.copy()
    dt = ell / 16.0
    dt_min = ell * 1e-7
    trace: list[dict] = []
    try:
        frame = dexp_matrix(model, p, v, cfg.integrator)
    except (DomainEscape, LinearizationFailure, StepSizeUnderflow) as err:
        return LiftOutcome("DomainExit", None, trace, {"t": 0.0, "error": str(err)})
    steps = 0
    fails = 0
    while t < ell:
        if steps >= cfg.max_lift_steps:
            return LiftOutcome("Stalled", None, trace,
                               {"reason": "max lift steps", "t": t})
        steps += 1
        dt = min(dt, ell - t)
        target = sigma.point(t + dt)
        try:
            dv = np.linalg.solve(frame.matrix,
                                 -_wrap_delta(model, frame.endpoint - target))
        except np.linalg.LinAlgError:
            return LiftOutcome("ConjugateHit", None, trace,
                               {"t_hit": t, "min_singular_value": frame.min_singular_value})
        flag, v_new, frame_new, res = _newton_correct(
            model, p, v + dv, target, cfg, vcap=2.0 * escape_bound
        )
        if flag == "escape":
            witness = {"t": t + dt}
            if isinstance(res, dict):
                witness.update(res)
            return LiftOutcome("DomainExit", None, trace, witness)
        if flag == "conjugate":
            return LiftOutcome("ConjugateHit", None, trace, {
                "t_hit": t + dt,
                "v_at_hit": v_new.tolist(),
                "min_singular_value": frame_new.min_singular_value if frame_new else 0.0,
            })
        if flag == "fail":
            dt *= 0.5
            fails += 1
            if dt < dt_min or fails > 12:
                return LiftOutcome("Stalled", None, trace,
                                   {"reason": "corrector step underflow", "t": t})
            continue
        fails = 0
        t += dt
        v = v_new
        frame = frame_new
        trace.append({
            "t": t,
            "v": v.tolist(),
            "residual": res,
            "min_singular_value": frame.min_singular_value,
        })
        if float(np.linalg.norm(v)) > escape_bound:
            norms = [float(np.linalg.norm(row["v"])) for row in trace]
            return LiftOutcome("EscapeWitness", None, trace, {
                "escape_bound": escape_bound,
                "lift_norms": norms,
                "residuals": [row["residual"] for row in trace],
            })
        dt = min(dt * 1.4, ell / 8.0)
    return LiftOutcome("Connected", v, trace, {})


def _ray_is_regular(model: ManifoldModel, p: np.ndarray, v: np.ndarray,
                    cfg: ConnectConfig, samples: int = 32) -> bool:
    """Check min singular value of dexp along the straight ray to v."""
    if not np.any(v):
        return True
    if cfg.integrator.prefer_oracle and model.oracle is not None:
        prev_det = 1.0  # dexp at 0 is the identity
        try:
            for t in np.linspace(1.0 / samples, 1.0, samples):
                frame = dexp_matrix(model, p, t * v, cfg.integrator)
                if frame.min_singular_value < cfg.sv_floor \
                        or frame.det * prev_det < 0.0:
                    return False
                prev_det = frame.det
        except (DomainEscape, LinearizationFailure, StepSizeUnderflow):
            return False
        return True
    try:
        var = integrate_variational(model, p, v, t_max=1.0, cfg=cfg.integrator)
    except (LinearizationFailure, StepSizeUnderflow):
        return False
    if var.termination is not Termination.REACHED_TMAX:
        return False
    prev_det = 1.0
    for t in np.linspace(1.0 / samples, 1.0, samples):
        J = var.dexp_at(t)
        det = float(np.linalg.det(J))
        # a determinant sign flip between samples means a singularity was
        # crossed even if no sample landed inside the (narrow) sv dip
        if det * prev_det < 0.0:
            return False
        if np.linalg.svd(J, compute_uv=False)[-1] < cfg.sv_floor:
            return False
        prev_det = det
    return True


def connect(model: ManifoldModel, p, q, cfg: ConnectConfig | None = None) -> LiftOutcome:
    """Find v with exp_p(v) = q by path lifting; typed failure otherwise."""
    cfg = cfg or ConnectConfig()
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float).copy()
    # periodic chart coordinates: lift to the representative nearest p, else
    # the target path may force the lift around a chart seam with no
    # continuous preimage
    for idx, per in model.metadata.get("periodic", {}).items():
        q[idx] = p[idx] + (q[idx] - p[idx] + 0.5 * per) % per - 0.5 * per
    if np.allclose(p, q, atol=cfg.connect_tol * 1e-3):
        return LiftOutcome("Connected", np.zeros_like(p), [], {})
    # fast path: q inside the normal neighborhood of p
    try:
        v = local_log(model, p, q, cfg)
    except NoConvergence:
        pass
    else:
        if _ray_is_regular(model, p, v, cfg):
            return LiftOutcome("Connected", v, [{
                "t": float(np.linalg.norm(q - p)),
                "v": v.tolist(),
                "residual": 0.0,
                "min_singular_value": float("nan"),
            }], {"method": "local_log"})
    base = _aux_path(model, p, q, cfg) if cfg.path_kind == "aux" else _segment_path(p, q)
    attempts: list[dict] = []
    outcome = None
    for k in range(cfg.max_retries + 1):
        sigma = base if k == 0 else _bumped_path(base, p, q, k - 1, cfg.bump_fraction)
        outcome = _lift(model, p, sigma, cfg, np.zeros_like(p))
        if outcome.status != "ConjugateHit":
            break
        attempts.append({"retry": k, **outcome.witness})
    if outcome.status == "ConjugateHit":
        outcome.witness["attempted_detours"] = attempts
        outcome.witness["note"] = (
            "detour schedule exhausted: either the sampled conjugate locus "
            "disconnects the target from p, or the detour schedule is inadequate; "
            "the two cases are not distinguishable from this run"
        )
    if outcome.connected:
        residual = float(np.linalg.norm(_wrap_delta(
            model, dexp_matrix(model, p, outcome.v, cfg.integrator).endpoint - q
        )))
        if residual > cfg.connect_tol:
            return LiftOutcome("Stalled", None, outcome.lift_trace,
                               {"reason": "final residual above connect_tol",
                                "residual": residual})
    return outcome


def connect_report(
    model: ManifoldModel,
    outcome: LiftOutcome,
    p,
    q,
    locus: ConjugateLocusSample | None = None,
) -> dict:
    """Machine-readable summary of a connection attempt."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    report: dict = {
        "status": outcome.status,
        "lift_steps": len(outcome.lift_trace),
        "witness": outcome.witness,
    }
    if outcome.lift_trace:
        report["max_residual"] = max(
            row["residual"] for row in outcome.lift_trace
            if np.isfinite(row["residual"])
        )
    if outcome.connected:
        v = outcome.v
        g = np.asarray(model.metric(p), dtype=float)
        report["v"] = v.tolist()
        report["geodesic_length"] = float(np.sqrt(abs(v @ g @ v)))
        report["energy_class"] = causal_class(model, p, v)
    if locus is not None:
        report["target_component"] = component_of_point(model, locus, q)
        report["locus_caveat"] = locus.diagnostics.get("caveat", "")
    return report


def render_report(report: dict) -> str:
    """Human-readable rendering of a connect report."""
    lines = [f"status: {report['status']}", f"lift steps: {report['lift_steps']}"]
    if "v" in report:
        lines.append("v: " + ", ".join(f"{c:.17g}" for c in report["v"]))
        lines.append(f"geodesic length: {report['geodesic_length']:.17g}"
                     f" ({report['energy_class']})")
    if "max_residual" in report:
        lines.append(f"max residual: {report['max_residual']:.3e}")
    if report.get("witness"):
        lines.append(f"witness: {report['witness']}")
    if "target_component" in report:
        lines.append(f"target in sampled complement component: "
                     f"{report['target_component']}")
        lines.append(f"caveat: {report['locus_caveat']}")
    return "\n".join(lines)
