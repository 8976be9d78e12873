"""Controller synthesis for resource-independent process recipes over
concurrent basic action theories."""

from . import arena, controller, fol, mapping, model, mucheck, program, quotient  # noqa: F401

__all__ = [
    "arena",
    "controller",
    "fol",
    "mapping",
    "model",
    "mucheck",
    "program",
    "quotient",
]
