"""Why one lattice point is not enough below 0 dB.

At snr < 1 the single most likely point of the shaped distribution
carries mass P0 close to 1/theta, the input entropy stays below an
explicit ceiling, and a decoder that always answers with that point is
still wrong about half the time the input is anything else. The
experiment measures all three quantities for Z at snr = 1/2 and checks
them against the closed forms.
"""

from latgauss import RngStream, standard_lattice
from latgauss import montecarlo

lat = standard_lattice("Z1")
rng = RngStream(99)

rep = montecarlo.converse_experiment(lat, sigma_s=1.0, sigma_w=2.0 ** 0.5,
                                     trials=100_000, rng=rng)

print(f"snr {rep.snr:.3f} (converse regime: {rep.converse_applies})")
print(f"P0 (mass of the heaviest point)    {rep.p0:.6f}")
print(f"entropy rate of the input          {rep.entropy_rate:.5f} nats")
print(f"entropy ceiling from P0            {rep.entropy_upper:.5f} nats")
print(f"entropy under ceiling: {rep.entropy_ok}")
print()
print(f"best-point decoder error rate      {rep.p_err.p_hat:.5f} "
      f"(99% CI [{rep.p_err.lo:.5f}, {rep.p_err.hi:.5f}])")
print(f"required lower bound (1 - P0)/2    {rep.half_gap:.5f}")
print(f"error rate above bound: {rep.error_ok}")
