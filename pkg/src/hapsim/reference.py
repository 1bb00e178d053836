"""Reference constants from the human-participant study this package
simulates.

These numbers describe how ten human operators performed on real hardware.
They are shipped for documentation and side-by-side display only: the
virtual participant is a parametric stand-in, not a model fitted to people,
so nothing in this package reproduces these values and no test treats them
as expected outputs.  Everything the simulator is checked against is
property-based (exact algebra, protocol structure, statistical machinery on
synthetic data).
"""

from __future__ import annotations

NON_REPRODUCIBILITY_STATEMENT = (
    "Human-study results are findings about human participants and are not "
    "reproducible by this simulator; they are documented reference constants, "
    "never acceptance targets."
)

# task, method -> (mean success %, variance, standard deviation)
HUMAN_SUCCESS_SUMMARY = {
    ("ABX", 1): (74.16, 64.83, 8.05),
    ("ABX", 2): (74.58, 21.04, 4.59),
    ("S", 1): (67.91, 81.20, 9.01),
    ("S", 2): (64.58, 159.14, 12.62),
}

# source -> (sum of squares, df, F, p); residual has no F/p
HUMAN_ANOVA = {
    "Group": (10.47, 1, 1.48, 0.437),
    "Day": (94.60, 1, 13.42, 0.170),
    "Task": (132.11, 1, 18.74, 0.145),
    "Group:Day": (4.25, 1, 0.60, 0.580),
    "Group:Task": (94.60, 1, 13.42, 0.170),
    "Day:Task": (4.25, 1, 0.60, 0.580),
    "Residual": (7.05, 1, None, None),
}

# The single method difference that reached significance for humans:
# the (1-US, 4-LH) pair in the softer task.
HUMAN_SIGNIFICANT_PAIR = {"task": "S", "pair": "1-4|X1", "p_value": 0.048}

# group -> task -> (day 1 mean %, day 2 mean %)
HUMAN_DAY_IMPROVEMENT = {
    1: {"ABX": (69.16, 75.00), "S": (68.33, 73.33)},
    2: {"ABX": (74.17, 79.17), "S": (55.83, 67.50)},
}
