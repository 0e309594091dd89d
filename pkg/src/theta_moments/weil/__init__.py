"""Exact finite models of the local Weil representation and orbit catalogs."""

from .cyclotomic import Cyclotomic
from .local import (
    FiniteModel,
    FiniteWeilFunction,
    UnsupportedError,
    dual_order_indicator,
    extend,
    indicator,
    inverse_fourier,
    order_indicator,
    phase_function,
    quadratic_data,
    reflect,
    weil_diag,
    weil_fourier,
    weil_lower_unipotent,
    weil_unipotent,
)
from .orbits import (
    OrbitCatalog,
    OrbitGuardError,
    global_orbit,
    jmap,
    local_orbit,
    norm_character_sum,
    nu,
    orbit_closure,
    orbit_from_json,
    orbit_index,
    orbit_to_json,
    predicted_orbit,
)

__all__ = [
    "Cyclotomic", "FiniteModel", "FiniteWeilFunction", "UnsupportedError", "dual_order_indicator", "extend",
    "indicator", "inverse_fourier", "order_indicator", "phase_function", "quadratic_data", "reflect",
    "weil_diag", "weil_fourier", "weil_lower_unipotent", "weil_unipotent", "OrbitCatalog", "OrbitGuardError",
    "global_orbit", "jmap", "local_orbit", "norm_character_sum", "nu", "orbit_closure", "orbit_from_json",
    "orbit_index", "orbit_to_json", "predicted_orbit",
]
