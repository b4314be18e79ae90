"""Randomized POD: eigen-reconstruction from a randomly sampled sub-Hankel."""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from ..errors import ConfigError, RankShortfallError
from ..hankel import apply_selection, build_hankel
from ..numerics import RANK_TOL
from ..snapshots import ADJOINT, PRIMAL, simulate_impulse
from .eigenrecon import eigenrecon_cross
from .modal import default_match_tol, hausdorff


@dataclass(eq=False)
class RpodResult:
    """ROM together with the sampled ensembles and sub-Hankel."""

    rom: object
    hankel: object
    primal: object
    adjoint: object


def rpod_ensembles(sys, selection):
    """Primal and adjoint snapshots for the picked inputs, outputs and steps."""
    b_hat, c_hat = apply_selection(sys, selection)
    primal = simulate_impulse(sys, PRIMAL, selection.primal_steps, b_hat,
                              trajectory_ids=selection.input_pick)
    adjoint = simulate_impulse(sys, ADJOINT, selection.adjoint_steps,
                               np.ascontiguousarray(c_hat.T),
                               trajectory_ids=selection.output_pick)
    return primal, adjoint


def rpod(sys, plan, order=None, rank_tol=RANK_TOL, discard_unstable=False,
         return_details=False):
    """Randomized POD modal ROM for the selection carried by `plan`.

    `plan` may be a :class:`SamplingPlan` or a bare :class:`Selection`.
    Returns a :class:`ModalRom`; with ``return_details=True`` an
    :class:`RpodResult` that also holds the sub-Hankel and ensembles.

    Raises
    ------
    RankShortfallError
        If `order` exceeds the snapshot budget or the rank of the
        sub-Hankel.
    """
    sel = getattr(plan, "selection", plan)
    budget = min(sel.r * sel.m1, sel.s * sel.m2)
    if order is not None and order > budget:
        raise RankShortfallError(
            f"order {order} exceeds the sub-Hankel size bound "
            f"min(r*m1, s*m2) = {budget}", rank=budget, order=order)
    primal, adjoint = rpod_ensembles(sys, sel)
    hankel = build_hankel(primal, adjoint)
    rom = eigenrecon_cross(primal, adjoint, sys, order, rank_tol, hankel,
                           discard_unstable, source="rpod")
    rom.diagnostics["selection"] = sel.to_dict()
    rom.diagnostics["bound_satisfying"] = bool(getattr(plan, "bound_satisfying", False))
    if return_details:
        return RpodResult(rom, hankel, primal, adjoint)
    return rom


@dataclass(eq=False)
class ConsistencyReport:
    """Outcome of repeated sub-Hankel sampling.

    Runs are listed by seed.  ``distances[(a, b)]`` is the Hausdorff
    distance between the eigenvalue sets of runs ``a`` and ``b``.
    """

    seeds: list
    ranks: list
    orders: list
    deficient: list
    distances: dict = field(default_factory=dict)
    match_tol: float = 0.0
    best: int = 0

    @property
    def max_distance(self):
        return max(self.distances.values(), default=0.0)

    @property
    def unstable(self):
        """True when some pair of runs disagrees by more than `match_tol`."""
        return self.max_distance > self.match_tol

    def to_dict(self):
        return {"seeds": list(self.seeds), "ranks": list(self.ranks),
                "orders": list(self.orders), "deficient": list(self.deficient),
                "distances": [[a, b, d] for (a, b), d in sorted(self.distances.items())],
                "match_tol": self.match_tol, "max_distance": self.max_distance,
                "unstable": self.unstable, "best": self.best}


def rpod_repeated(sys, base_plan, order=None, K=None, match_tol=None,
                  rank_tol=RANK_TOL, seeds=None, discard_unstable=False):
    """Run RPOD on `K` independent selections and compare their spectra.

    Run ``k`` uses seed ``base_seed + k`` (run 0 reuses `base_plan`)
    unless explicit `seeds` are given.  A run whose sub-Hankel rank falls
    short of `order` is redone at its numerical rank and marked deficient.
    The returned ROM is the one with the largest retained rank, ties going
    to the lowest seed.
    """
    base_sel = base_plan.selection
    if seeds is None:
        k = base_plan.K if K is None else K
        seeds = [base_sel.seed + i for i in range(k)]
    seeds = [int(s) for s in seeds]
    if len(seeds) < 2:
        raise ConfigError("repeated sampling needs K >= 2", field="K")
    roms, ranks, deficient = [], [], []
    for seed in seeds:
        plan = base_plan if seed == base_sel.seed else base_plan.redraw(seed)
        try:
            rom = rpod(sys, plan, order, rank_tol, discard_unstable)
            short = False
        except RankShortfallError:
            rom = rpod(sys, plan, None, rank_tol, discard_unstable)
            short = True
        rom.diagnostics["rank_deficient"] = short
        roms.append(rom)
        ranks.append(int(rom.diagnostics["hankel_rank"]))
        deficient.append(short)
    if all(deficient):
        raise RankShortfallError(
            f"all {len(seeds)} sampled sub-Hankels have rank below order {order}",
            rank=max(ranks), order=order)
    if match_tol is None:
        match_tol = default_match_tol(*[r.eigenvalues for r in roms])
    distances = {(a, b): hausdorff(roms[a].eigenvalues, roms[b].eigenvalues)
                 for a, b in combinations(range(len(roms)), 2)}
    orders = [r.order for r in roms]
    # stable argmax: first maximal retained order, seeds are in run order
    key = [(o, -s) for o, s in zip(orders, seeds)]
    best = max(range(len(roms)), key=key.__getitem__)
    report = ConsistencyReport(seeds, ranks, orders, deficient, distances,
                               float(match_tol), best)
    return roms[best], report
