"""
Outer restoration loop.

Each global step builds the cost field ``b = L**2``, solves the elliptic
subproblem for ``u``, forms the potential ``V = -2 sigma**2 ln u`` and the
momentum ``p = -grad(V) / 2``, then moves the illumination explicitly:

* ``UpdateRule.DIVERGENCE``:    ``L <- L + dt * div(p)``
* ``UpdateRule.COMPONENT_SUM``: ``L <- L + dt * (p_x + p_y)`` (prototype form)
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .elliptic import (
    DivergenceError,
    EllipticMode,
    EllipticProblem,
    SolverConfig,
    SolveReport,
    solve_richardson,
)
from .grid import BoundaryRule, GridField, divergence_array, gradient_array

__all__ = [
    "UpdateRule",
    "RestoreParams",
    "StepRecord",
    "RestoreTrace",
    "RestoreError",
    "cost_field",
    "log_potential",
    "momentum",
    "update_illumination",
    "restore",
]


class UpdateRule(str, enum.Enum):
    DIVERGENCE = "divergence"
    COMPONENT_SUM = "sum"


@dataclass(frozen=True)
class RestoreParams:
    sigma: float = 1e-6
    dt: float = 1e-4
    global_steps: int = 20
    solver: SolverConfig = field(default_factory=SolverConfig)
    mode: EllipticMode = EllipticMode.ANCHORED
    update_rule: UpdateRule = UpdateRule.DIVERGENCE
    boundary: BoundaryRule = BoundaryRule.INTERIOR_ZERO
    clamp_illumination: bool = True
    warm_start: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        # dt = 0 is accepted: it is the identity regime used for checks.
        if not (math.isfinite(self.dt) and self.dt >= 0):
            raise ValueError(f"dt must be nonnegative, got {self.dt!r}")
        if int(self.global_steps) != self.global_steps or self.global_steps < 1:
            raise ValueError(f"global_steps must be a positive integer, got {self.global_steps!r}")
        object.__setattr__(self, "mode", EllipticMode(self.mode))
        object.__setattr__(self, "update_rule", UpdateRule(self.update_rule))
        object.__setattr__(self, "boundary", BoundaryRule(self.boundary))


def _stats(a: np.ndarray) -> dict:
    return {"min": float(a.min()), "max": float(a.max()), "mean": float(a.mean())}


@dataclass
class StepRecord:
    step: int
    solve: SolveReport
    u: dict
    V: dict
    L: dict
    increment_l2: float

    def to_dict(self) -> dict:
        return {
            "step": self.step,
            "solve": self.solve.to_dict(),
            "u": self.u,
            "V": self.V,
            "L": self.L,
            "increment_l2": self.increment_l2,
        }


_CSV_COLUMNS = [
    "step", "iterations", "converged", "final_step_inf_norm", "final_residual_l2", "clip_events",
    "u_min", "u_max", "u_mean", "V_min", "V_max", "V_mean", "L_min", "L_max", "L_mean",
    "increment_l2",
]


@dataclass
class RestoreTrace:
    """Per-step history of a restoration run."""

    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(r.to_dict()) + "\n" for r in self.records)

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(_CSV_COLUMNS)
        for r in self.records:
            s = r.solve
            writer.writerow([
                r.step, s.iterations, int(s.converged), repr(s.final_step_inf_norm),
                repr(s.final_residual_l2), s.clip_events,
                *(repr(d[k]) for d in (r.u, r.V, r.L) for k in ("min", "max", "mean")),
                repr(r.increment_l2),
            ])
        return buf.getvalue()


class RestoreError(RuntimeError):
    """A global step failed; ``trace`` holds every completed step."""

    def __init__(self, step: int, trace: RestoreTrace, cause: Exception):
        self.step = step
        self.trace = trace
        self.cause = cause
        super().__init__(f"restoration aborted at global step {step}: {cause}")


def cost_field(L: GridField, clamp: bool = False) -> GridField:
    """Data cost ``b = L**2``.

    With ``clamp`` the luminance is first clipped into ``[0, 1]``; otherwise
    values outside that range are rejected.
    """
    vals = L.values
    if clamp:
        vals = np.clip(vals, 0.0, 1.0)
    elif vals.min() < 0.0 or vals.max() > 1.0:
        raise ValueError(
            f"luminance outside [0, 1] (range [{vals.min():.6g}, {vals.max():.6g}])"
        )
    return L.with_values(vals * vals)


def log_potential(u: GridField, sigma: float) -> GridField:
    """Logarithmic potential ``V = -2 sigma**2 ln(u)``; requires ``u > 0``."""
    if not np.all(u.values > 0):
        raise ValueError("log potential needs a strictly positive field")
    return u.with_values(-2.0 * sigma**2 * np.log(u.values))


def momentum(V: GridField, boundary: BoundaryRule = BoundaryRule.INTERIOR_ZERO) -> tuple[GridField, GridField]:
    """``p = -grad(V) / 2`` as ``(p_x, p_y)``."""
    gx, gy = gradient_array(V.values, V.h, BoundaryRule(boundary))
    return V.with_values(-0.5 * gx), V.with_values(-0.5 * gy)


def update_illumination(
    L: GridField,
    p: tuple[GridField, GridField],
    dt: float,
    rule: UpdateRule = UpdateRule.DIVERGENCE,
    boundary: BoundaryRule = BoundaryRule.INTERIOR_ZERO,
    clamp: bool = False,
) -> GridField:
    """One explicit illumination step driven by the momentum ``p``."""
    px, py = p
    if px.shape != L.shape or py.shape != L.shape:
        raise ValueError(f"momentum shapes {px.shape}, {py.shape} do not match {L.shape}")
    rule = UpdateRule(rule)
    if rule is UpdateRule.DIVERGENCE:
        drive = divergence_array(px.values, py.values, L.h, BoundaryRule(boundary))
    else:
        drive = px.values + py.values
    out = L.values + dt * drive
    if clamp:
        out = np.clip(out, 0.0, 1.0)
    return L.with_values(out)


def restore(L0: GridField, params: RestoreParams | None = None) -> tuple[GridField, RestoreTrace]:
    """Run ``params.global_steps`` restoration steps from ``L0``.

    Raises
    ------
    RestoreError
        When a step fails (solver divergence, out-of-range luminance with
        clamping disabled). The completed part of the trace is attached.
    """
    params = params or RestoreParams()
    if L0.values.min() < 0.0 or L0.values.max() > 1.0:
        raise ValueError("initial luminance must lie in [0, 1]")

    trace = RestoreTrace()
    L = L0
    u_prev = None
    for t in range(params.global_steps):
        try:
            b = cost_field(L, clamp=params.clamp_illumination)
            problem = EllipticProblem(b, params.sigma, params.mode)
            u, report = solve_richardson(
                problem,
                config=params.solver,
                u0=u_prev if params.warm_start else None,
                boundary=params.boundary,
            )
            V = log_potential(u, params.sigma)
            p = momentum(V, params.boundary)
            L_new = update_illumination(
                L, p, params.dt, params.update_rule, params.boundary, clamp=params.clamp_illumination
            )
        except (DivergenceError, ValueError) as exc:
            raise RestoreError(t, trace, exc) from exc

        trace.records.append(
            StepRecord(
                step=t,
                solve=report,
                u=_stats(u.values),
                V=_stats(V.values),
                L=_stats(L_new.values),
                increment_l2=float(np.linalg.norm(L_new.values - L.values)),
            )
        )
        L = L_new
        u_prev = u
    return L, trace
