"""How many trials does the test need as the network grows?

For each network size M we search the smallest n reaching power 1 - beta and
fit n* against M^2. The analytic sufficient size n_min is printed alongside;
it carries an unknown absolute constant, so only its growth is comparable.

    python3 demos/hawkes_network_size.py [N_sim]
"""

import sys
import warnings

from spikeperm import HawkesParams, TestConfig
from spikeperm.harness import NStarSearch, find_n_star, fit_quadratic
from spikeperm.hawkes import HawkesAnalyticsInput, n_min_hawkes

N_sim = int(sys.argv[1]) if len(sys.argv) > 1 else 300
Ms = [4, 6, 8, 10]
cfg = TestConfig(0.05, 0.1, 300, 3)
search = NStarSearch(n_lo=2, step=2, n_max=600, N_sim=N_sim)

ns = []
for M in Ms:
    res = find_n_star(HawkesParams(1, 10, 20, M, 2.0), cfg, 0.2, search)
    ns.append(res.n_star)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        nmin = n_min_hawkes(HawkesAnalyticsInput(1, 10, 20, M, 0.1, 2.0), 0.05, 0.2, strict=False)
    print(f"M={M:3d}  n*={res.n_star:4d}  n_min/C'={nmin:10.1f}  probes {res.probe_text()}")

fit = fit_quadratic(Ms, ns)
print(f"n* ~ {fit['c0']:.1f} + {fit['c1']:.3f} M^2")
