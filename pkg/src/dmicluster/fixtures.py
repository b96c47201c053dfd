"""Built-in numeric fixtures, stored as decimal strings.

The matrices are kept as strings so the CSV emission is byte-exact and the
float values used in computation are the parse of exactly those digits.
"""
from __future__ import annotations

import numpy as np

from .errors import UnknownFixtureError

AFFINE_7X2 = (
    ("0.96536243", "0.83582504"),
    ("0.02223537", "0.97962069"),
    ("0.18576474", "0.09306992"),
    ("0.60073919", "0.06909198"),
    ("0.21115965", "0.04303247"),
    ("0.24518684", "0.46305449"),
    ("0.0045001", "0.73335878"),
)

# first two rows are the linear map, the last row the translation
TRANSFORM_T_B = (
    ("0.7384872", "0.39051911"),
    ("0.75115812", "0.90684574"),
    ("0.05", "0.02"),
)

KCOFACTORS_30X2 = (
    ("0.32786192", "0.75198752"),
    ("0.24789876", "0.40110656"),
    ("0.64860833", "0.05877561"),
    ("0.13688932", "0.89837639"),
    ("0.51958647", "0.69553312"),
    ("0.57106034", "0.39534018"),
    ("0.25602628", "0.5299542"),
    ("0.66521762", "0.25370157"),
    ("0.49647253", "0.51707767"),
    ("0.00649304", "0.78141629"),
    ("0.93642378", "0.00550147"),
    ("0.08014735", "0.94850578"),
    ("0.54978178", "0.66296321"),
    ("0.57201864", "0.7952191"),
    ("0.11499522", "0.59186407"),
    ("0.11681198", "0.90701099"),
    ("0.01623413", "0.59313684"),
    ("0.31841007", "0.43924738"),
    ("0.60377183", "0.96489354"),
    ("0.48738826", "0.17097179"),
    ("0.49460288", "0.81759015"),
    ("0.27831212", "0.76869342"),
    ("0.22953897", "0.43809347"),
    ("0.03654411", "0.6203217"),
    ("0.90628651", "0.45924219"),
    ("0.92525839", "0.69213278"),
    ("0.17723574", "0.12487727"),
    ("0.21277346", "0.34931579"),
    ("0.84758762", "0.05452689"),
    ("0.65204294", "0.82808225"),
)

DMI_20X3 = (
    ("0.20727033", "0.56209307", "0.2306366"),
    ("0.55235357", "0.26311054", "0.18453589"),
    ("0.06826729", "0.51504916", "0.41668355"),
    ("0.40863481", "0.45383908", "0.13752611"),
    ("0.30463115", "0.19875226", "0.49661659"),
    ("0.40387463", "0.1261351", "0.46999028"),
    ("0.30097293", "0.32668147", "0.3723456"),
    ("0.0530016", "0.41863456", "0.52836383"),
    ("0.53632014", "0.08514494", "0.37853491"),
    ("0.34180366", "0.57497414", "0.08322221"),
    ("0.20603456", "0.67360041", "0.12036503"),
    ("0.35331477", "0.28461216", "0.36207308"),
    ("0.23868633", "0.38453375", "0.37677992"),
    ("0.098419", "0.67327932", "0.22830168"),
    ("0.33219443", "0.0159078", "0.65189777"),
    ("0.40376774", "0.39908311", "0.19714915"),
    ("0.08966334", "0.40876422", "0.50157244"),
    ("0.51224362", "0.01623191", "0.47152447"),
    ("0.04907822", "0.30059226", "0.65032952"),
    ("0.50445751", "0.20957023", "0.28597227"),
)

_REGISTRY = {
    "affine_7x2": AFFINE_7X2,
    "transform_T_b": TRANSFORM_T_B,
    "kcofactors_30x2": KCOFACTORS_30X2,
    "dmi_20x3": DMI_20X3,
}


def fixture_names() -> tuple[str, ...]:
    return tuple(_REGISTRY)


def fixture_csv(name: str) -> str:
    """CSV text for a fixture, one trailing newline, digits as stored."""
    if name not in _REGISTRY:
        raise UnknownFixtureError(
            f"unknown fixture {name!r}; known: {', '.join(_REGISTRY)}"
        )
    rows = _REGISTRY[name]
    return "\n".join(",".join(row) for row in rows) + "\n"


def fixture_array(name: str) -> np.ndarray:
    if name not in _REGISTRY:
        raise UnknownFixtureError(
            f"unknown fixture {name!r}; known: {', '.join(_REGISTRY)}"
        )
    return np.array([[float(x) for x in row] for row in _REGISTRY[name]])


def transform_parts() -> tuple[np.ndarray, np.ndarray]:
    """The 2x2 linear map and 1x2 translation of the affine fixture."""
    full = fixture_array("transform_T_b")
    return full[:2], full[2:3]
