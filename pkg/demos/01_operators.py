# Discrete operators on a uniform grid
#
# x runs along columns, y along rows. Every operator takes a boundary rule:
# "interior-zero" leaves the outer ring at 0, "reflect" uses zero-flux ghosts.

import numpy as np

from illumpde import BoundaryRule, GridField, divergence, gradient, laplacian

h = 0.5
y, x = np.mgrid[0:7, 0:9] * h

# The five-point Laplacian is exact on quadratics: lap(x^2 + y^2) = 4
q = GridField(x**2 + y**2, h)
print("laplacian of x^2+y^2 (interior):")
print(laplacian(q).values[1:-1, 1:-1])

# Central differences are exact on linear fields
gx, gy = gradient(GridField(3 * x + 5 * y, h))
print("gradient of 3x+5y:", gx.values[3, 4], gy.values[3, 4])

# div(grad f) is the wide 2h stencil, not the compact Laplacian
rng = np.random.default_rng(0)
f = GridField(rng.standard_normal((9, 9)), 1.0)
d = divergence(*gradient(f)).values
print("div(grad f) - lap f at centre:", d[4, 4] - laplacian(f).values[4, 4])

# Under zero-flux boundaries the Laplacian sums to zero (nothing leaves the grid)
print("sum of reflect laplacian:", laplacian(f, BoundaryRule.REFLECT).values.sum())
