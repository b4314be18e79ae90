"""Reduction algorithms: snapshot POD, BPOD, eigen-reconstruction, RPOD."""

from .eigenrecon import (
    PodBasis,
    biorthogonalize,
    bpod,
    bpod_modal,
    eigenrecon_auto,
    eigenrecon_cross,
    modal_from_bases,
    snapshot_pod,
)
from .modal import (
    ModalRom,
    RealModalForm,
    default_match_tol,
    hausdorff,
    load_rom,
    match_eigenvalues,
    mode_order,
    realify,
    rom_simulate,
    save_rom,
)
from .randomized import ConsistencyReport, RpodResult, rpod, rpod_ensembles, rpod_repeated

__all__ = [
    "ConsistencyReport", "ModalRom", "PodBasis", "RealModalForm", "RpodResult",
    "biorthogonalize", "bpod", "bpod_modal", "default_match_tol", "eigenrecon_auto",
    "eigenrecon_cross", "hausdorff", "load_rom", "match_eigenvalues", "modal_from_bases",
    "mode_order", "realify", "rom_simulate", "rpod", "rpod_ensembles", "rpod_repeated",
    "save_rom", "snapshot_pod",
]
