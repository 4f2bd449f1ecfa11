"""Lattice construction, nearest-point decoding, and duality checks.

Builds the standard lattices used throughout the package, decodes a few
noisy points, and confirms the basic identities (volume of the dual,
self-duality of E8, Voronoi relevance of the closest point).
"""

import numpy as np

from latgauss import closest_point, dual, new_lattice, scale_lattice, standard_lattice

rng = np.random.default_rng(0)

print("== standard lattices ==")
for name in ["Z1", "Z2", "A2", "D4", "E8"]:
    lat = standard_lattice(name)
    print(f"{name}: n={lat.n} volume={lat.volume:.6f}")

# Nearest-point decoding: perturb a lattice point, decode, compare.
print("\n== closest point recovery ==")
for name in ["Z4", "D4", "E8"]:
    lat = standard_lattice(name)
    coords = rng.integers(-3, 4, size=lat.n)
    x = lat.embed(coords)
    y = x + 0.05 * rng.standard_normal(lat.n)
    hit = closest_point(lat, y)
    ok = np.array_equal(hit.coords, coords)
    print(f"{name}: perturbed by 0.05 noise, recovered coords exactly: {ok}")

# Duality: vol(dual) = 1/vol, and E8 is its own dual up to basis change.
print("\n== duality ==")
a2 = standard_lattice("A2")
a2_dual = dual(a2)
print(f"A2 volume {a2.volume:.6f}, dual volume {a2_dual.volume:.6f}, "
      f"product {a2.volume * a2_dual.volume:.12f}")

e8 = standard_lattice("E8")
e8_dual = dual(e8)
# Same lattice iff the change of basis between them is unimodular integer.
m = np.linalg.solve(e8.basis, e8_dual.basis)
is_integer = np.allclose(m, np.round(m), atol=1e-9)
det = abs(np.linalg.det(np.round(m)))
print(f"E8 self-dual: integer basis change {is_integer}, |det|={det:.1f}")

# Scaling: volume goes like c^n.
d4 = standard_lattice("D4")
d4s = scale_lattice(d4, 0.5)
print(f"\nD4 volume {d4.volume:.1f}, 0.5*D4 volume {d4s.volume:.4f} "
      f"(expected {d4.volume * 0.5**4:.4f})")

# Arbitrary basis: a sheared Z^2 is still Z^2 as a point set.
sheared = new_lattice([[1.0, 1.0], [0.0, 1.0]], name="sheared")
pt = closest_point(sheared, [2.3, -0.4])
print(f"\nsheared Z2 decode of (2.3,-0.4): point {pt.point}, coords {pt.coords}")
