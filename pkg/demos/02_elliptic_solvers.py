# The elliptic subproblem: direct oracle vs damped Richardson
#
# With u = 1 on the boundary, the interior system is a symmetric M-matrix:
# the solution is unique and lies in (0, 1].

import numpy as np

from illumpde import (
    EllipticMode,
    EllipticProblem,
    GridField,
    SolverConfig,
    assemble_dense,
    auto_omega,
    estimate_lambda_max,
    solve_direct,
    solve_richardson,
)

rng = np.random.default_rng(1)
sigma = 0.5
b = GridField(rng.uniform(0, sigma**4 * 10, (10, 10)), h=2.0)
problem = EllipticProblem(b, sigma)

u_direct = solve_direct(problem)
print("direct solution range:", u_direct.values.min(), u_direct.values.max())

op = assemble_dense(problem)
print("min entry of the inverse (nonnegative):", np.linalg.inv(op.matrix).min())

# Richardson with omega = 1/Gershgorin bound, recording true error ratios
u, report = solve_richardson(problem, reference=u_direct)
lam = np.linalg.eigvalsh(op.matrix)
rho = np.max(np.abs(1 - report.omega * lam))
print(f"iterations {report.iterations}, converged {report.converged}")
print(f"linf gap to oracle {np.max(np.abs(u.values - u_direct.values)):.2e}")
print(f"largest error ratio {max(report.contraction_samples):.6f} vs rho {rho:.6f}")

est, bound = estimate_lambda_max(problem, iters=200)
print(f"lambda_max: eigensolver {lam.max():.4f}, power {est:.4f}, Gershgorin {bound:.4f}")

# At sigma = 1e-6 the reaction term is ~1e24, so a relaxation of 1e-5
# is far outside 0 < omega < 2/lambda_max.
reactive = EllipticProblem(GridField(np.ones((10, 10)), 2.0), 1e-6)
print(f"auto omega at sigma=1e-6: {auto_omega(reactive):.3e}")

# The prototype's Neumann iteration with omega=1e-5 collapses to the clip floor
neumann = EllipticProblem(GridField(rng.uniform(0.1, 1, (10, 10)), 2.0), 1e-6, EllipticMode.NEUMANN)
u_n, rep_n = solve_richardson(neumann, config=SolverConfig(omega=1e-5))
print("Neumann iterate range:", u_n.values.min(), u_n.values.max(), "clip events:", rep_n.clip_events)
