# Finite blocklength rate calculators: capacity, dispersion, the normal
# approximation, and the shaping gaps at small n.

from latgauss import analysis

EPS = 0.001

print(f"target error {EPS}")
print(f"{'snr':>6} {'n':>6} {'capacity':>9} {'normal':>8} {'t1_gap':>7} {'intro':>7}")
for snr in (0.5, 1.0, 4.0):
    for n in (100, 1000, 10_000):
        rep = analysis.finite_blocklength(snr, n, EPS, gamma=1.0)
        print(f"{snr:6.1f} {n:6d} {rep.capacity:9.4f} "
              f"{rep.normal_approx_rate:8.4f} {rep.theorem1_gap:7.4f} "
              f"{rep.intro_gap:7.4f}")

# The gap terms vanish as n grows, so the achievable rate approaches
# capacity. Quantizer goodness gamma=1 is the best case; real lattices
# at small n sit a bit above it.
print()
for n in (10, 100, 1000, 10_000, 100_000):
    gap = analysis.theorem1_gap(1.0, n)
    print(f"n={n:>6}: rate gap at gamma=1 is {gap:.5f} nats/dim")

# Below snr = e - 1 the dither itself costs rate; above it there is no
# penalty for making the dither public.
print()
for snr in (0.2, 0.5, 1.0, 1.7, 2.0):
    b = analysis.dither_rate_bound(snr)
    print(f"snr={snr:.1f}: dither rate bound {b['bound']:.5f} "
          f"(no dither needed: {b['no_dither_needed']})")
