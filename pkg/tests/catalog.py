"""Graphs exercised across the test suite, one or more per family."""
from porous_soc.graphs import CoerciveSign, Heaviside, LipschitzSpec, PowerSign, Sign, Stefan

TABLE = LipschitzSpec.from_table([-1.0, 0.0, 0.5, 2.0], [-0.3, 0.0, 0.1, 1.6])

GRAPHS = [
    Sign(1.0),
    Sign(2.5),
    Heaviside(),
    Heaviside(0.5),
    Stefan(0.0, 1.0, 1.0, 1.0),
    Stefan(1.0, 1.0, 1.0, 1.0),
    Stefan(-0.5, 2.0, 0.5, 3.0),
    PowerSign(0.5, 1.2),
    PowerSign(2.0, 1.0),
    CoerciveSign(1.0, LipschitzSpec.linear(0.1)),
    CoerciveSign(0.5, TABLE),
]

# graphs with 0 in g(0); the zero state is stationary only for these
ORIGIN_GRAPHS = [g for g in GRAPHS if g.contains_origin]

# one representative per family for the more expensive dynamic checks
FAMILY_REPS = {
    "sign": Sign(1.0),
    "heaviside": Heaviside(0.5),
    "stefan": Stefan(0.0, 1.0, 1.0, 2.0),
    "power_sign": PowerSign(0.5, 1.0),
    "coercive_sign": CoerciveSign(1.0, LipschitzSpec.linear(0.1)),
}

LAMS = [1e-3, 1e-2, 0.1, 0.5, 1.0]
