"""Bilayer plate bending: DKT discretization and constrained gradient flows."""

from ._bilayer import (
    ConfigError,
    DeformationField,
    EnergyModel,
    FlowMode,
    GradientFlow,
    HistoryRecord,
    MeshError,
    Pattern,
    RunConfig,
    RunReport,
    SimulationParams,
    Termination,
    TriangleMesh,
    __version__,
    build_mesh,
    build_params,
    clamp_oshape_corner,
    clamp_rectangle,
    flat_embedding,
    isometry_defect,
    nodal_isometry_defect,
    oshape_mesh,
    parse_config,
    preset,
    read_history_csv,
    read_report,
    rectangle_mesh,
    run_experiment,
)

__all__ = [name for name in dir() if not name.startswith("_")]
