"""Discrete continuation of a validated front in the wave speed.

Re-proves the connection at each parameter step with frozen discretization
sizes; a near-resonant eigenvalue configuration rejects the step with a
witness multi-index, which is what terminates the sweep before the known
resonance at kappa = -sqrt(2)/2.

Run:  python3 demos/05_continuation.py            (short LV slice)
      python3 demos/05_continuation.py resonance  (walk toward the resonance)
"""

import json
import sys

from connorb import driver
from connorb.problems import lotka_volterra_config

if len(sys.argv) > 1 and sys.argv[1] == "resonance":
    # approach kappa = -sqrt(2)/2 ~ -0.7071: the near-resonance gate trips
    cfg = lotka_volterra_config("-0.7095")
    plan = {"parameter": "kappa", "step": 0.0005, "steps": 8,
            "resonance_tolerance": 1e-3}
else:
    cfg = lotka_volterra_config("-1")
    plan = {"parameter": "kappa", "step": 0.004, "steps": 2}

results = driver.run_continuation(cfg, plan, verbose=True)
print("\n================ sweep summary ================")
print(json.dumps(results, indent=1))
