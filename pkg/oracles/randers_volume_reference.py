"""Independent reference value for the Randers volume density in the plane.

The density at a point is the Euclidean ball volume divided by the area of
the unit ball {y : F(y) <= 1} of the norm in the tangent plane.  For the
drift norm F = |y| + <b, y> with |b| = 1/2 the area is counted directly on
a uniform grid (1.6e7 cells), with no quadrature code shared with the
package.  The printed density is frozen into the test suite; the counting
error scales like the cell perimeter fraction, well below 1e-4 relative.

Run:  python3 oracles/randers_volume_reference.py
"""

import numpy as np

B = np.array([0.5, 0.0])
HALF_WIDTH = 2.0   # the unit ball fits inside |y| <= 1/(1 - |b|) = 2
CELLS = 4000

if __name__ == "__main__":
    centers = (np.arange(CELLS) + 0.5) / CELLS * 2 * HALF_WIDTH - HALF_WIDTH
    u, v = np.meshgrid(centers, centers, indexing="ij")
    norm = np.hypot(u, v) + B[0] * u + B[1] * v
    cell_area = (2 * HALF_WIDTH / CELLS) ** 2
    area = np.count_nonzero(norm <= 1.0) * cell_area
    density = np.pi / area
    print(f"cells inside: {np.count_nonzero(norm <= 1.0)}")
    print(f"unit-ball area: {area:.10f}")
    print(f"volume density: {density:.10f}")
