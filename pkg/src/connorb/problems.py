"""Built-in problem configurations.

Each function returns a plain config dict of the schema consumed by the
driver; every number that enters a rigorous bound is a decimal string so the
loader can enclose it instead of trusting the parse.
"""

from __future__ import annotations


def cubic_1d_config() -> dict:
    """Scalar desk benchmark: u' = u - u^3, connection from 0 to 1."""
    return {
        "name": "cubic1d",
        "field": {
            "n": 1,
            "parameters": {},
            "terms": [
                {"component": 1, "exponent": [1], "coefficient": "1"},
                {"component": 1, "exponent": [3], "coefficient": "-1"},
            ],
        },
        "source": {"guess": [0.0], "n_unstable": 1},
        "target": {"guess": [1.0], "n_stable": 1},
        "L": "8",
        "m": "auto",
        "N": "auto",
        "K_unstable": "auto",
        "K_stable": "auto",
        "nu": "auto",
        "nu_chart_unstable": "1",
        "nu_chart_stable": "1",
        "r_star": "0.002",
        "theta_radius": 0.5,
        "phase_convention": "paper",
        "seed": 0,
    }


def lotka_volterra_config(kappa: str = "-1") -> dict:
    """Traveling fronts of the diffusive Lotka-Volterra system.

    The 4-D first-order reduction of the wave equations; connections run from
    (b, 0, 1-b, 0) to (1, 0, 0, 0).
    """
    return {
        "name": "lotka_volterra",
        "field": {
            "n": 4,
            "parameters": {"a": "5", "b": "0.5", "D": "3", "kappa": kappa},
            "terms": [
                {"component": 1, "exponent": [0, 1, 0, 0], "coefficient": "-1"},
                {"component": 2, "exponent": [0, 1, 0, 0], "coefficient": "kappa/D"},
                {"component": 2, "exponent": [1, 0, 0, 0], "coefficient": "1/D"},
                {"component": 2, "exponent": [2, 0, 0, 0], "coefficient": "-1/D"},
                {"component": 2, "exponent": [1, 0, 1, 0], "coefficient": "-1/D"},
                {"component": 3, "exponent": [0, 0, 0, 1], "coefficient": "-1"},
                {"component": 4, "exponent": [0, 0, 0, 1], "coefficient": "kappa"},
                {"component": 4, "exponent": [1, 0, 1, 0], "coefficient": "a"},
                {"component": 4, "exponent": [0, 0, 1, 0], "coefficient": "-a*b"},
            ],
        },
        "source": {"guess": [0.5, 0.0, 0.5, 0.0], "n_unstable": 2},
        "target": {"guess": [1.0, 0.0, 0.0, 0.0], "n_stable": 3},
        "L": "15",
        "m": 3,
        "N": [50, 47, 50],
        "K_unstable": [13, 13],
        "K_stable": [9, 9, 9],
        "nu": "1.1967",
        "nu_chart_unstable": "1",
        "nu_chart_stable": "1",
        "eps_unstable": "0.0565",
        "eps_stable": "0.0635",
        "r_star": "1e-5",
        "theta_radius": 0.7,
        "phase_convention": "paper",
        "seed": 0,
    }


def fourth_order_config(gamma: str = "0.4557") -> dict:
    """Traveling fronts of a fourth order parabolic equation.

    4-D reduction (time rescaled by gamma); connections from (-1, 0, 0, 0)
    to (a, 0, 0, 0) with -1 < a <= 0.
    """
    return {
        "name": "fourth_order",
        "field": {
            "n": 4,
            "parameters": {"a": "-0.1", "kappa": "-2", "gamma": gamma},
            "terms": [
                {"component": 1, "exponent": [0, 1, 0, 0], "coefficient": "-gamma"},
                {"component": 2, "exponent": [0, 0, 1, 0], "coefficient": "-gamma"},
                {"component": 3, "exponent": [0, 0, 0, 1], "coefficient": "-gamma"},
                {"component": 4, "exponent": [0, 1, 0, 0], "coefficient": "-kappa"},
                {"component": 4, "exponent": [0, 0, 1, 0], "coefficient": "-1"},
                {"component": 4, "exponent": [1, 0, 0, 0], "coefficient": "-1"},
                {"component": 4, "exponent": [0, 0, 0, 0], "coefficient": "a"},
                {"component": 4, "exponent": [3, 0, 0, 0], "coefficient": "1"},
                {"component": 4, "exponent": [2, 0, 0, 0], "coefficient": "-a"},
            ],
        },
        "source": {"guess": [-1.0, 0.0, 0.0, 0.0], "n_unstable": 2},
        "target": {"guess": [-0.1, 0.0, 0.0, 0.0], "n_stable": 3},
        "L": "30",
        "m": 2,
        "N": [62, 61],
        "K_unstable": [15, 15],
        "K_stable": [12, 12, 12],
        "nu": "1.1491",
        "nu_chart_unstable": "1",
        "nu_chart_stable": "1",
        "eps_unstable": "5.4476e-2",
        "eps_stable": "5.3337e-3",
        "r_star": "1e-5",
        "theta_radius": 0.7,
        "phase_convention": "paper",
        "seed": 0,
    }


def fourth_order_large_gamma_config(gamma: str = "4.202") -> dict:
    """The large-gamma regime: short flight time, single subdomain."""
    cfg = fourth_order_config(gamma)
    cfg["L"] = "4"
    cfg["m"] = 1
    cfg["N"] = [51]
    cfg["K_stable"] = [7, 7, 7]
    cfg["nu"] = "1.15"
    return cfg
