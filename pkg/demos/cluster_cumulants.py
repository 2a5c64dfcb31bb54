"""Third and fourth cumulant densities of a stationary Hawkes process.

Prints the class-by-class split of the densities at a few configurations,
the smallest envelope constants that cover a random grid, and compares the
third cumulant of a window count with simulation.
"""

import numpy as np
from scipy.stats import kstat

from spikeperm.dendrograms import (calibrate_envelope, class_contributions, class_summary,
                                   class_bound_constant, window_third_cumulant)
from spikeperm.simulate import hawkes_batch, trial_keys

mu, a, b = 10.0, 3.0, 4.0
for l, times in ((3, [0.0, 0.2, 0.9]), (4, [0.0, 0.2, 0.5, 1.3])):
    parts = np.ravel(class_contributions(l, times, mu, a, b))
    print(f"l={l} at {times}")
    for (label, shape, mult), v in zip(class_summary(l), parts):
        print(f"  ({label}) {shape:<16} x{mult:<3} {v:12.3f}")
    print(f"  total {parts.sum():.3f}")

rng = np.random.default_rng(0)
for l in (3, 4):
    C = calibrate_envelope(l, rng.uniform(0, 3, (1000, l)), mu, a, b)
    print(f"C{l}: grid {C:.3f}, per-class bound {class_bound_constant(l, a / b):.3f}")

c = hawkes_batch(mu, a, b, -20.0, 2.0, trial_keys(1, 100000), count_window=(0.0, 2.0))
print(f"window third cumulant: simulated {kstat(c.astype(float), 3):.0f}, "
      f"integrated {window_third_cumulant(2.0, mu, a, b):.0f}")
