"""Random digraph mixing-time simulations."""

import json

from ._mixlab import (
    DegreeSequence,
    Digraph,
    MixlabError,
    double_row,
    generate_degrees,
    run,
    sample_digraph,
    stationary,
    theory_curve,
    tv_distance,
    validate_degrees,
)

__all__ = [
    "DegreeSequence",
    "Digraph",
    "MixlabError",
    "double_row",
    "generate_degrees",
    "run",
    "run_experiment",
    "sample_digraph",
    "stationary",
    "theory_curve",
    "tv_distance",
    "validate_degrees",
]


def run_experiment(experiment, output_dir, **flags):
    """Run one experiment; keyword names map to flags (beta_grid -> --beta-grid)."""
    args = ["--experiment", experiment, "--output-dir", str(output_dir)]
    for key, value in flags.items():
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        args += ["--" + key.replace("_", "-"), str(value)]
    out = run(args)
    out["resolved"] = json.loads(out["resolved"])
    return out
