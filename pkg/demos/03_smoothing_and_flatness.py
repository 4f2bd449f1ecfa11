# Smoothing parameter, flatness factor, and how both sandwich the
# noise level at which Voronoi decoding starts to fail.
#
# For a lattice L and eps in (0, 1/2), the smoothing parameter of the dual
# brackets the inverse error function: once sigma exceeds smoothing, the
# folded Gaussian on R^n/L is nearly flat and the decoder must fail with
# probability about eps.

from latgauss import RngStream, dual, standard_lattice
from latgauss import analysis, measures

EPS = 0.05

for name in ["Z1", "Z2", "A2", "E8"]:
    lat = standard_lattice(name)
    eta = measures.smoothing_parameter(dual(lat), EPS)
    print(f"{name}: eta_eps(dual) = {eta.s:.6f} (residual {eta.residual:.1e})")

# Flatness factor of Z at sigma=1: the folded density deviates from uniform
# by less than 6e-9, so one unit of noise already smooths the integers.
z1 = standard_lattice("Z1")
flat = measures.flatness_factor(z1, 1.0)
print(f"\nflatness(Z, sigma=1): [{flat.lower:.6e}, {flat.upper:.6e}]")

# Sandwich check: dual-smoothing lower bound <= measured inverse error
# function <= twice the dual smoothing, on Z2 with a seeded estimate.
rng = RngStream(7)
report = analysis.cdlp_sandwich(standard_lattice("Z2"), EPS, trials=100_000, rng=rng)
print(f"\nZ2 sandwich at eps={EPS}:")
print(f"  lower  {report['lower']:.4f}")
print(f"  middle {report['mid']:.4f}  (measured err_inv)")
print(f"  upper  {report['upper']:.4f}")
print(f"  ordering holds: {report['ok']}")
