"""Shock propagation through the multilayer food trade and production network.

The package turns supply, use and demand tables into a calibrated multilayer
model (one trade layer per product, coupled through production processes) and
simulates how localized production losses cascade through trade and
conversion, measured as relative losses of product availability.
"""

from foodshock.analysis import (
    LayerDecomposition,
    LossReport,
    ReexportShares,
    TrajectoryMismatchError,
    decompose_layer_effects,
    exposure_profile,
    reexport_shares,
    relative_loss,
    top_exposures,
)
from foodshock.calibration import (
    CalibratedModel,
    ModelInvariantError,
    calibrate,
    load_model,
    model_fingerprint,
    save_model,
    validate_model,
)
from foodshock.engine import (
    ShockEngine,
    ShockSpec,
    Trajectory,
    run_scenario,
)
from foodshock.metrics import (
    LayerMetrics,
    herfindahl,
    layer_metrics,
    layer_weights,
    metrics_to_csv,
)
from foodshock.sweep import (
    SweepManifestError,
    SweepResult,
    full_sweep,
    load_sweep,
    sweep_to_csv,
)
from foodshock.tables import (
    BalancingTerms,
    DemandTable,
    Registry,
    SupplyTable,
    SupplyUseTables,
    TableSchemaError,
    TableValidationError,
    UseTable,
    compute_balancing,
    generate_synthetic_world,
    load_tables,
    write_tables,
)

__version__ = "0.1.0"

__all__ = [
    "BalancingTerms",
    "CalibratedModel",
    "DemandTable",
    "LayerDecomposition",
    "LayerMetrics",
    "LossReport",
    "ModelInvariantError",
    "ReexportShares",
    "Registry",
    "ShockEngine",
    "ShockSpec",
    "SupplyTable",
    "SupplyUseTables",
    "SweepManifestError",
    "SweepResult",
    "TableSchemaError",
    "TableValidationError",
    "Trajectory",
    "TrajectoryMismatchError",
    "UseTable",
    "calibrate",
    "compute_balancing",
    "decompose_layer_effects",
    "exposure_profile",
    "full_sweep",
    "generate_synthetic_world",
    "herfindahl",
    "layer_metrics",
    "layer_weights",
    "load_model",
    "load_sweep",
    "load_tables",
    "metrics_to_csv",
    "model_fingerprint",
    "reexport_shares",
    "relative_loss",
    "run_scenario",
    "save_model",
    "sweep_to_csv",
    "top_exposures",
    "validate_model",
    "write_tables",
    "__version__",
]
