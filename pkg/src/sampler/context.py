from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

from src.design.kernels import KernelDesign, build_design
from src.gmrf.precision import PrecisionMatrix, assemble_precision
from src.mesh.boundaries import BoundaryGeometry
from src.mesh.constants import Fields
from src.mesh.grain_mesh import GrainMesh
from src.mesh.neighborhoods import FieldGraphs
from src.model.priors import PriorConfig
from src.model.state import ModelState
from src.sampler.config import ChainConfig
from src.sampler.subblocks import Subblock, make_subblocks


@dataclass
class ChainContext:
    """
    Everything the updates read besides the state. `design` and `precisions`
    track the state's current phi and (theta, kappa, rho); the joint field
    update swaps them on acceptance only.
    """
    y: np.ndarray
    mesh: GrainMesh
    bg: BoundaryGeometry
    graphs: FieldGraphs
    priors: PriorConfig
    cfg: ChainConfig
    design: KernelDesign
    subblocks: Dict[str, List[Subblock]]
    precisions: Dict[str, PrecisionMatrix] = field(default_factory=dict)

    def precision(self, which: str, state: ModelState) -> PrecisionMatrix:
        cached = self.precisions.get(which)
        hp = state.hp(which)
        if cached is None or (cached.hp.theta, cached.hp.kappa, cached.hp.rho) != (hp.theta, hp.kappa, hp.rho):
            cached = assemble_precision(self.graphs.of(which), hp, self.cfg.factorization_backend)
            self.precisions[which] = cached
        return cached

    def set_precision(self, which: str, precision: PrecisionMatrix) -> None:
        self.precisions[which] = precision


def build_context(y: np.ndarray, mesh: GrainMesh, bg: BoundaryGeometry, graphs: FieldGraphs,
                  priors: PriorConfig, cfg: ChainConfig, phi_beta: float, phi_gamma: float) -> ChainContext:
    design = build_design(mesh, bg, phi_beta, phi_gamma, cache_distances=cfg.cache_distances,
                          truncation=cfg.kernel_truncation)
    subblocks = {which: make_subblocks(design.layout(which), which, cfg.subblock_scheme, cfg.subblock_size)
                 for which in Fields.ALL}
    return ChainContext(y=np.asarray(y, dtype=float), mesh=mesh, bg=bg, graphs=graphs,
                        priors=priors.with_data_mean(y), cfg=cfg, design=design, subblocks=subblocks)
