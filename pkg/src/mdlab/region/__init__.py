"""Rate-region systems for layered multiple-description codes and their projection."""

from .builder import (
    CodebookLayout,
    Decoder,
    Setup,
    SumSpec,
    build_cms_system,
    build_linear_system,
)
from .fm import FEASIBLE, INFEASIBLE, MARGINAL, RateRegion, fm_eliminate, is_member, project, sample_slice
from .oracle import lp_member
from .system import IneqSystem, Row, combine, dump_systems, load_systems

__all__ = [
    "CodebookLayout",
    "Decoder",
    "Setup",
    "SumSpec",
    "build_cms_system",
    "build_linear_system",
    "FEASIBLE",
    "INFEASIBLE",
    "MARGINAL",
    "RateRegion",
    "fm_eliminate",
    "is_member",
    "project",
    "sample_slice",
    "lp_member",
    "IneqSystem",
    "Row",
    "combine",
    "dump_systems",
    "load_systems",
]
