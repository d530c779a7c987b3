"""Ready-made scenario generators for the CLI `example` subcommand.

Each recipe is deterministic in its seed: the same (recipe, seed) pair
produces a byte-identical scenario document.
"""

from __future__ import annotations

from .errors import PreconditionError
from .scenario import SCHEMA

RECIPES = (
    "trivial-group",
    "z2-m2-dilation",
    "z2-swap-crossed",
    "s3-group-algebra",
    "random-covariant-cp",
    "tower-two-level",
)


def generate_example(recipe: str, seed: int = 0) -> dict:
    """A complete scenario document for a named worked example."""
    if recipe == "trivial-group":
        return {
            "schema": SCHEMA,
            "seed": seed,
            "algebras": {"A": [2], "B": [1]},
            "groups": {"G": "trivial"},
            "modules": {"E": {"algebra": "B", "rank": 2}},
            "actions": {"alpha": {"group": "G", "algebra": "A", "kind": "trivial"}},
            "representations": {"u": {"group": "G", "module": "E", "kind": "trivial"}},
            "cp_maps": {
                "rho": {
                    "source": "A",
                    "module": "E",
                    "generator": {
                        "recipe": "random-covariant",
                        "seed": seed,
                        "action": "alpha",
                        "representation": "u",
                    },
                }
            },
            "tasks": [
                {"name": "certify", "kind": "verify-all"},
                {
                    "name": "dilate",
                    "kind": "dilate",
                    "cp_map": "rho",
                    "action": "alpha",
                    "representation": "u",
                },
                {
                    "name": "extend-phi-equals-rho",
                    "kind": "extend",
                    "cp_map": "rho",
                    "action": "alpha",
                    "representation": "u",
                },
            ],
        }
    if recipe == "z2-m2-dilation":
        return {
            "schema": SCHEMA,
            "seed": seed,
            "algebras": {"A": [2], "B": [1]},
            "groups": {"G": "z2"},
            "modules": {"E": {"algebra": "B", "rank": 2}},
            "actions": {
                "alpha": {"group": "G", "algebra": "A", "kind": "standard", "preset_group": "z2"}
            },
            "representations": {
                "u": {"group": "G", "module": "E", "kind": "standard", "preset_group": "z2"}
            },
            "cp_maps": {"rho": {"source": "A", "module": "E", "shorthand": "identity"}},
            "tasks": [
                {
                    "name": "dilate",
                    "kind": "dilate",
                    "cp_map": "rho",
                    "action": "alpha",
                    "representation": "u",
                    "uniqueness": True,
                    "uniqueness_seed": seed + 1,
                },
                {
                    "name": "extend",
                    "kind": "extend",
                    "cp_map": "rho",
                    "action": "alpha",
                    "representation": "u",
                },
            ],
        }
    if recipe == "z2-swap-crossed":
        return {
            "schema": SCHEMA,
            "seed": seed,
            "algebras": {"A": [1, 1]},
            "groups": {"G": "z2"},
            "actions": {
                "alpha": {"group": "G", "algebra": "A", "kind": "standard", "preset_group": "z2"}
            },
            "tasks": [
                {
                    "name": "swap-crossed-product",
                    "kind": "crossed-product",
                    "action": "alpha",
                    "expected_blocks": [2],
                }
            ],
        }
    if recipe == "s3-group-algebra":
        return {
            "schema": SCHEMA,
            "seed": seed,
            "algebras": {"A": [1]},
            "groups": {"G": "s3"},
            "actions": {"alpha": {"group": "G", "algebra": "A", "kind": "trivial"}},
            "tasks": [
                {
                    "name": "s3-group-algebra",
                    "kind": "crossed-product",
                    "action": "alpha",
                    "expected_blocks": [1, 1, 2],
                }
            ],
        }
    if recipe == "random-covariant-cp":
        return {
            "schema": SCHEMA,
            "seed": seed,
            "algebras": {"A": [2], "B": [1]},
            "groups": {"G": "z2"},
            "modules": {"E": {"algebra": "B", "rank": 2}},
            "actions": {
                "alpha": {"group": "G", "algebra": "A", "kind": "standard", "preset_group": "z2"}
            },
            "representations": {
                "u": {"group": "G", "module": "E", "kind": "standard", "preset_group": "z2"}
            },
            "cp_maps": {
                "rho": {
                    "source": "A",
                    "module": "E",
                    "generator": {
                        "recipe": "random-covariant",
                        "seed": seed,
                        "action": "alpha",
                        "representation": "u",
                    },
                }
            },
            "tasks": [
                {"name": "certify", "kind": "verify-all"},
                {
                    "name": "dilate",
                    "kind": "dilate",
                    "cp_map": "rho",
                    "action": "alpha",
                    "representation": "u",
                    "uniqueness": True,
                    "uniqueness_seed": seed + 1,
                },
                {
                    "name": "extend",
                    "kind": "extend",
                    "cp_map": "rho",
                    "action": "alpha",
                    "representation": "u",
                },
            ],
        }
    if recipe == "tower-two-level":
        return {
            "schema": SCHEMA,
            "seed": seed,
            "algebras": {"A": [2], "Bp": [1, 1]},
            "groups": {"G": "z2"},
            "modules": {"Ep": {"algebra": "Bp", "rank": 1}},
            "actions": {
                "alpha": {"group": "G", "algebra": "A", "kind": "standard", "preset_group": "z2"}
            },
            "representations": {
                "u": {"group": "G", "module": "Ep", "kind": "standard", "preset_group": "z2"}
            },
            "cp_maps": {
                "rho": {
                    "source": "A",
                    "module": "Ep",
                    "generator": {
                        "recipe": "random-covariant",
                        "seed": seed,
                        "action": "alpha",
                        "representation": "u",
                    },
                }
            },
            "towers": {
                "T": {
                    "levels": ["q", "p"],
                    "relations": [["q", "p"]],
                    "algebras": {"q": [1], "p": [1, 1]},
                    "maps": {"p>q": [[[1.0, 0.0], [0.0, 0.0]]]},
                    "module_rank": 1,
                }
            },
            "tasks": [
                {
                    "name": "tower-laws",
                    "kind": "tower-check",
                    "tower": "T",
                },
                {
                    "name": "dilation-coherence",
                    "kind": "tower-check",
                    "tower": "T",
                    "coherence": "dilation",
                    "cp_map": "rho",
                    "action": "alpha",
                    "representation": "u",
                },
            ],
        }
    raise PreconditionError(f"unknown example recipe {recipe!r}")
