"""Response-surface constants for Dickey-Fuller tau p-values.

Coefficients follow MacKinnon's published response-surface regressions for a
single-variable unit-root regression.  ``SMALL_P`` applies below ``TAU_STAR``
(left tail), ``LARGE_P`` above it; outside [TAU_MIN, TAU_MAX] the surface is
unreliable and callers clamp the p-value instead.

Keys: "n" no deterministic term, "c" constant, "ct" constant plus trend.
"""

TAU_STAR = {"n": -1.04, "c": -1.61, "ct": -2.89}

TAU_MIN = {"n": -19.04, "c": -18.83, "ct": -16.18}

TAU_MAX = {"n": float("inf"), "c": 2.74, "ct": 0.70}

# polynomial coefficients, ascending order, evaluated at the tau statistic
SMALL_P = {
    "n": (0.6344, 1.2378, 3.2496e-2),
    "c": (2.1659, 1.4412, 3.8269e-2),
    "ct": (3.2512, 1.6047, 4.9588e-2),
}

LARGE_P = {
    "n": (0.4797, 9.3557e-1, -6.999e-2, 3.3066e-2),
    "c": (1.7339, 9.3202e-1, -1.2745e-1, -1.0368e-2),
    "ct": (2.5261, 6.1654e-1, -3.7956e-1, -6.0285e-2),
}
