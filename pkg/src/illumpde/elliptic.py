"""
The reaction-diffusion subproblem ``lap_h u - sigma**-4 * b * u = 0``.

Two formulations are supported:

* ``ANCHORED`` -- Dirichlet data ``u = 1`` on every boundary node. The
  interior unknowns satisfy ``A_II u_I = rhs`` with ``A_II`` a symmetric
  M-matrix, so the solution exists, is unique and lies in ``(0, 1]``.
  This is the default and the only mode with a dense direct solve.
* ``NEUMANN`` -- the residual is iterated on the full grid, boundary nodes
  included, exactly as the reference prototype does. With ``b > 0`` the
  exact solution of that system is ``u = 0``; the clip floor is what keeps
  the iterate positive.

The damped Richardson update is ``u <- u - omega * (A u - rhs)`` where
``A = -lap_h + sigma**-4 * b``. ``SolverConfig.literal_sign`` flips the
residual sign in Neumann mode to reproduce ``u <- u - omega*(lap_h u - c u)``.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Union

import numpy as np

from .grid import BoundaryRule, GridField, laplacian_array

__all__ = [
    "EllipticMode",
    "EllipticProblem",
    "SolverConfig",
    "SolveReport",
    "DenseOperator",
    "DivergenceError",
    "SpectrumEstimate",
    "MAX_DENSE_UNKNOWNS",
    "assemble_dense",
    "solve_direct",
    "solve_richardson",
    "gershgorin_bound",
    "estimate_lambda_max",
    "auto_omega",
]

MAX_DENSE_UNKNOWNS = 4096


class EllipticMode(str, enum.Enum):
    ANCHORED = "anchored"
    NEUMANN = "neumann"


class DivergenceError(RuntimeError):
    """An iterate became non-finite."""

    def __init__(self, iteration: int, message: str | None = None):
        self.iteration = iteration
        super().__init__(message or f"Richardson iterate became non-finite at iteration {iteration}")


@dataclass(frozen=True)
class EllipticProblem:
    """One instance of the subproblem: cost field ``b``, ``sigma`` and mode."""

    b: GridField
    sigma: float
    mode: EllipticMode = EllipticMode.ANCHORED

    def __post_init__(self):
        if not (math.isfinite(self.sigma) and self.sigma > 0):
            raise ValueError(f"sigma must be positive, got {self.sigma!r}")
        if np.any(self.b.values < 0):
            raise ValueError("cost field must be nonnegative")
        object.__setattr__(self, "mode", EllipticMode(self.mode))

    @property
    def reaction(self) -> np.ndarray:
        """Pointwise reaction coefficient ``b / sigma**4``."""
        return self.b.values / self.sigma**4


@dataclass(frozen=True)
class SolverConfig:
    """Controls for the damped Richardson iteration.

    ``omega="auto"`` picks ``1 / gershgorin_bound``.
    """

    omega: Union[float, str] = "auto"
    tol: float = 1e-8
    max_iter: int = 500
    u_min: float = 1e-8
    u_max: float = 1e8
    literal_sign: bool = False

    def __post_init__(self):
        if isinstance(self.omega, str):
            if self.omega != "auto":
                raise ValueError(f"omega must be a positive number or 'auto', got {self.omega!r}")
        elif not (math.isfinite(self.omega) and self.omega > 0):
            raise ValueError(f"omega must be positive, got {self.omega!r}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol!r}")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter!r}")
        if not (0 < self.u_min < self.u_max):
            raise ValueError(f"need 0 < u_min < u_max, got [{self.u_min}, {self.u_max}]")


@dataclass
class SolveReport:
    """Convergence diagnostics of one Richardson solve.

    ``contraction_samples[n]`` is ``|e(n+1)| / |e(n)|`` in the l2 norm when a
    reference solution was given, else the ratio of consecutive step norms
    (``nan`` for the first step or when the denominator vanishes).
    ``clipped_steps`` lists the iteration indices at which clipping changed
    at least one entry.
    """

    iterations: int = 0
    final_step_inf_norm: float = math.inf
    final_residual_l2: float = math.inf
    converged: bool = False
    omega: float = math.nan
    contraction_samples: list = field(default_factory=list)
    clip_events: int = 0
    clipped_steps: list = field(default_factory=list)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["contraction_samples"] = [_json_float(x) for x in self.contraction_samples]
        for key in ("final_step_inf_norm", "final_residual_l2", "omega"):
            d[key] = _json_float(d[key])
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _json_float(x):
    x = float(x)
    if math.isnan(x):
        return None
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


@dataclass(frozen=True)
class DenseOperator:
    """Interior block ``A_II`` and right-hand side ``-A_IB u_B`` (``u_B = 1``)."""

    n: int
    matrix: np.ndarray
    rhs: np.ndarray


def _spacing(problem: EllipticProblem, h) -> float:
    h = problem.b.h if h is None else float(h)
    if not (math.isfinite(h) and h > 0):
        raise ValueError(f"mesh spacing must be positive, got {h!r}")
    return h


def assemble_dense(problem: EllipticProblem, h: float | None = None) -> DenseOperator:
    """Assemble the anchored interior system as a dense matrix.

    Interior nodes are numbered row-major. ``rhs[k]`` equals the number of
    boundary neighbours of node ``k`` divided by ``h**2``.
    """
    if problem.mode is not EllipticMode.ANCHORED:
        raise ValueError("a dense form is only defined for the anchored (Dirichlet) mode")
    h = _spacing(problem, h)
    rows, cols = problem.b.shape
    ni, nj = rows - 2, cols - 2
    m = ni * nj
    if m > MAX_DENSE_UNKNOWNS:
        raise ValueError(f"{m} interior unknowns exceeds the dense limit of {MAX_DENSE_UNKNOWNS}")

    inv_h2 = 1.0 / h**2
    c = problem.reaction[1:-1, 1:-1].ravel()
    A = np.zeros((m, m))
    A[np.arange(m), np.arange(m)] = 4.0 * inv_h2 + c
    rhs = np.zeros(m)
    idx = np.arange(m).reshape(ni, nj)
    for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        for i in range(ni):
            for j in range(nj):
                ii, jj = i + di, j + dj
                if 0 <= ii < ni and 0 <= jj < nj:
                    A[idx[i, j], idx[ii, jj]] = -inv_h2
                else:
                    rhs[idx[i, j]] += inv_h2
    return DenseOperator(m, A, rhs)


def solve_direct(problem: EllipticProblem, h: float | None = None) -> GridField:
    """Dense direct solve of the anchored system; boundary values are 1."""
    op = assemble_dense(problem, h)
    rows, cols = problem.b.shape
    u = np.ones((rows, cols))
    if not np.any(problem.b.values[1:-1, 1:-1]):
        # constant 1 is the exact discrete-harmonic solution for unit data
        return GridField(u, _spacing(problem, h))
    try:
        u_int = np.linalg.solve(op.matrix, op.rhs)
        # one step of iterative refinement
        u_int += np.linalg.solve(op.matrix, op.rhs - op.matrix @ u_int)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - M-matrix is never singular
        raise RuntimeError("anchored operator is singular; this violates the M-matrix property") from exc
    u[1:-1, 1:-1] = u_int.reshape(rows - 2, cols - 2)
    if not np.all(u > 0):  # pragma: no cover
        raise RuntimeError("direct solution is not strictly positive")
    return GridField(u, _spacing(problem, h))


def _residual(u, c, h, mode, boundary, literal_sign):
    # A u - rhs in anchored mode (interior only); A u in Neumann mode.
    lap = laplacian_array(u, h, boundary if mode is EllipticMode.NEUMANN else BoundaryRule.INTERIOR_ZERO)
    r = c * u - lap
    if mode is EllipticMode.ANCHORED:
        r[0, :] = r[-1, :] = 0.0
        r[:, 0] = r[:, -1] = 0.0
    elif literal_sign:
        r = -r
    return r


def solve_richardson(
    problem: EllipticProblem,
    h: float | None = None,
    config: SolverConfig | None = None,
    u0: GridField | None = None,
    boundary: BoundaryRule = BoundaryRule.INTERIOR_ZERO,
    reference: GridField | None = None,
) -> tuple[GridField, SolveReport]:
    """Damped fixed-point (Richardson) iteration with positivity clipping.

    Parameters
    ----------
    problem : EllipticProblem
    h : float, optional
        Mesh spacing; defaults to ``problem.b.h``.
    config : SolverConfig, optional
    u0 : GridField, optional
        Starting iterate, all ones by default. In anchored mode its boundary
        is overwritten with 1.
    boundary : BoundaryRule
        Laplacian boundary treatment in Neumann mode. Ignored when anchored.
    reference : GridField, optional
        Exact solution used to record true error contraction ratios.

    Returns
    -------
    u : GridField
    report : SolveReport

    Raises
    ------
    DivergenceError
        If an iterate becomes non-finite before clipping.
    """
    config = config or SolverConfig()
    h = _spacing(problem, h)
    boundary = BoundaryRule(boundary)
    mode = problem.mode
    c = problem.reaction
    omega = auto_omega(problem, h) if config.omega == "auto" else float(config.omega)

    u = np.ones(problem.b.shape) if u0 is None else np.array(u0.values, dtype=np.float64)
    if u.shape != problem.b.shape:
        raise ValueError(f"initial guess shape {u.shape} does not match grid {problem.b.shape}")
    if mode is EllipticMode.ANCHORED:
        u[0, :] = u[-1, :] = 1.0
        u[:, 0] = u[:, -1] = 1.0
        free = np.zeros(u.shape, dtype=bool)
        free[1:-1, 1:-1] = True
    else:
        free = np.ones(u.shape, dtype=bool)
    u_ref = None if reference is None else reference.values

    report = SolveReport(omega=omega)
    prev_step = math.nan
    for n in range(config.max_iter):
        r = _residual(u, c, h, mode, boundary, config.literal_sign)
        with np.errstate(over="ignore", invalid="ignore"):
            raw = u - omega * r
        if not np.all(np.isfinite(raw)):
            raise DivergenceError(n)
        outside = ((raw < config.u_min) | (raw > config.u_max)) & free
        clipped = int(np.count_nonzero(outside))
        u_new = np.clip(raw, config.u_min, config.u_max)
        if clipped:
            report.clip_events += clipped
            report.clipped_steps.append(n)
        step = float(np.max(np.abs(u_new - u)))

        if u_ref is not None:
            e_old = float(np.linalg.norm(u - u_ref))
            e_new = float(np.linalg.norm(u_new - u_ref))
            report.contraction_samples.append(e_new / e_old if e_old > 0 else math.nan)
        else:
            report.contraction_samples.append(step / prev_step if prev_step > 0 else math.nan)
        prev_step = step

        u = u_new
        report.iterations = n + 1
        report.final_step_inf_norm = step
        if step < config.tol:
            report.converged = True
            break

    r = _residual(u, c, h, mode, boundary, False)
    report.final_residual_l2 = float(np.linalg.norm(r[free]))
    return GridField(u, h), report


class SpectrumEstimate(NamedTuple):
    estimate: float
    gershgorin_bound: float


def gershgorin_bound(problem: EllipticProblem, h: float | None = None) -> float:
    """Row-sum upper bound ``8/h**2 + max(b)/sigma**4`` on ``lambda_max``."""
    h = _spacing(problem, h)
    return 8.0 / h**2 + float(np.max(problem.b.values)) / problem.sigma**4


def _apply_interior(v: np.ndarray, c: np.ndarray, h: float) -> np.ndarray:
    # Matrix-free A_II: zero Dirichlet data around the interior block.
    g = np.pad(v, 1)
    return (4.0 * v - g[2:, 1:-1] - g[:-2, 1:-1] - g[1:-1, 2:] - g[1:-1, :-2]) / h**2 + c * v


def estimate_lambda_max(
    problem: EllipticProblem, h: float | None = None, iters: int = 100, seed: int = 0
) -> SpectrumEstimate:
    """Power-iteration estimate of the largest eigenvalue of ``A_II``.

    Returns the Rayleigh quotient after ``iters`` steps together with the
    Gershgorin bound, which the estimate never exceeds.
    """
    if int(iters) != iters or iters < 1:
        raise ValueError(f"iters must be a positive integer, got {iters!r}")
    h = _spacing(problem, h)
    bound = gershgorin_bound(problem, h)
    c = problem.reaction[1:-1, 1:-1]
    v = np.random.default_rng(seed).standard_normal(c.shape)
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = _apply_interior(v, c, h)
        v = w / np.linalg.norm(w)
    estimate = float(np.vdot(v, _apply_interior(v, c, h)))
    return SpectrumEstimate(estimate, bound)


def auto_omega(problem: EllipticProblem, h: float | None = None) -> float:
    """Relaxation ``1 / gershgorin_bound``; always inside ``(0, 2/lambda_max)``."""
    return 1.0 / gershgorin_bound(problem, h)
