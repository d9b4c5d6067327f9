"""Registered reproduction scenarios.

Each scenario is a function returning a :class:`Report`. Keyword arguments
that a scenario does not accept are ignored by :func:`run`, so a single
command-line configuration can drive every scenario.
"""
from __future__ import annotations

import inspect

from . import causal_compactness, discontinuity, duality, interpolation, lightcone, unbounded_subdiff
from .report import Assertion, Report

SCENARIOS = {
    "discontinuity": discontinuity.run,
    "unbounded-subdiff": unbounded_subdiff.run,
    "lightcone-coupling": lightcone.run,
    "causal-compactness": causal_compactness.run,
    "duality-battery": duality.run,
    "c11-interpolation": interpolation.run,
}


class UnknownScenarioError(KeyError):
    pass


def accepted_options(name: str) -> set[str]:
    if name not in SCENARIOS:
        raise UnknownScenarioError(name)
    return set(inspect.signature(SCENARIOS[name]).parameters)


def run(name: str, **options) -> Report:
    """Run a registered scenario with the options it understands."""
    accepted = accepted_options(name)
    kwargs = {k: v for k, v in options.items() if k in accepted and v is not None}
    return SCENARIOS[name](**kwargs)


__all__ = ["SCENARIOS", "Assertion", "Report", "UnknownScenarioError", "accepted_options", "run"]
