"""Analytic error budget of the gate protocol.

Branch probabilities are Poisson jump probabilities per protocol segment,
organized in layers: single events during the drive and swap, second-order
double transitions, ancilla relaxation during the readout, and
state-independent readout errors.  Every node carries the probability of
reaching it with the logical qubit still coherent and the probability of
reaching it dephased; each layer of the tree partitions unity.
"""

from __future__ import annotations

import dataclasses
import json
import math

import numpy as np

from .. import device as dv
from .. import protocol as pr


@dataclasses.dataclass(frozen=True)
class ErrorBudgetNode:
    label: str
    p_coherent: float
    p_dephased: float
    children: tuple = ()

    @property
    def total(self) -> float:
        return self.p_coherent + self.p_dephased

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "p_coherent": self.p_coherent,
            "p_dephased": self.p_dephased,
            "children": [c.to_dict() for c in self.children],
        }


@dataclasses.dataclass(frozen=True)
class BudgetReport:
    root: ErrorBudgetNode
    total_dephased: float
    nc_fidelity: float

    def to_json(self) -> str:
        payload = {
            "tree": self.root.to_dict(),
            "total_dephased": self.total_dephased,
            "nc_fidelity": self.nc_fidelity,
        }
        return json.dumps(payload, indent=2, sort_keys=True)


def layer_sums(root: ErrorBudgetNode, depth: int = 6) -> list:
    """Total probability per layer; leaves carry through to deeper layers."""
    sums = []
    layer = [root]
    for _ in range(depth):
        sums.append(sum(n.total for n in layer))
        nxt = []
        for n in layer:
            nxt.extend(n.children if n.children else
                       [ErrorBudgetNode(n.label, n.p_coherent, n.p_dephased)])
        layer = nxt
    return sums


def leaves(root: ErrorBudgetNode) -> list:
    if not root.children:
        return [root]
    out = []
    for c in root.children:
        out.extend(leaves(c))
    return out


def _split(node_total: float, fraction_dephased: float) -> tuple:
    return node_total * (1 - fraction_dephased), node_total * fraction_dephased


def build_error_budget(params: dv.DeviceParams, config: pr.ProtocolConfig,
                       *, backaction_fraction: float = 0.0) -> BudgetReport:
    """First- and second-order analytic branch probabilities of one attempt.

    backaction_fraction is the probability that an otherwise protected
    ancilla event dephases the logical qubit through the residual Fock
    dependence of the drive.  Cross-Kerr readout dephasing, assignment
    errors and the sideband-hybridization probability are read from config.
    """
    t_snap, t_swap = config.snap_duration, config.swap_duration
    t_meas = config.measurement_duration if config.variant == "C" else 0.0
    corrected = config.variant == "C"
    nbar_code = 2.0  # mean photon number of the kitten code words

    tau_f = t_snap / 2 + t_swap / 2
    gamma_ef = dv.total_ef_relaxation_rate(params)
    gamma_gf = dv.total_gf_dephasing_rate(params)
    p_relax = 1 - math.exp(-tau_f * gamma_ef)
    p_deph = 1 - math.exp(-t_snap * gamma_gf)
    p_loss = 1 - math.exp(-nbar_code * (t_snap + t_swap) / params.t1_cavity)
    # excitation picked up during the attempt; the initial thermal population
    # is a preparation cost shared by a whole sequence, not a per-gate error
    p_thermal = (params.nbar_thermal / params.t1_ge) * (t_snap + t_swap + t_meas)

    singles = {"relaxation": p_relax, "dephasing": p_deph, "cavity_loss": p_loss,
               "thermal": p_thermal}
    p_none = 1.0
    for p in singles.values():
        p_none *= 1 - p
    firsts = {k: p * p_none / (1 - p) for k, p in singles.items()}
    p_multi = 1.0 - p_none - sum(firsts.values())

    # second-order structure
    p_eg_given_relax = 1 - math.exp(-(t_snap / 2 + t_swap) / params.t1_ge)
    h_mix = config.h_mixing_prob if (corrected and config.et_drive_on) else 0.0
    ba = backaction_fraction

    def relax_children(total: float) -> tuple:
        # coherent when corrected (error transparency); two dephasing drains
        if not corrected:
            return (ErrorBudgetNode("relaxation, uncorrected", *_split(total, 1.0)),)
        p_bad = min(1.0, p_eg_given_relax + h_mix + ba)
        kids = [
            ErrorBudgetNode("detected in e", *_split(total * (1 - p_bad), 0.0)),
            ErrorBudgetNode("double decay e->g", *_split(total * p_eg_given_relax, 1.0)),
        ]
        if h_mix > 0:
            kids.append(ErrorBudgetNode("hybridized with the fourth level",
                                        *_split(total * h_mix, 1.0)))
        if ba > 0:
            kids.append(ErrorBudgetNode("relaxation back-action", *_split(total * ba, 1.0)))
        return tuple(kids)

    def dephasing_children(total: float) -> tuple:
        if not corrected:
            return (ErrorBudgetNode("dephasing, uncorrected", *_split(total, 1.0)),)
        return (
            ErrorBudgetNode("recovered by record", *_split(total * (1 - ba), 0.0)),
            ErrorBudgetNode("dephasing back-action", *_split(total * ba, 1.0)),
        )

    first_layer = [ErrorBudgetNode("no error", p_none, 0.0)]
    first_layer.append(ErrorBudgetNode("ancilla relaxation", firsts["relaxation"], 0.0,
                                       children=relax_children(firsts["relaxation"])))
    first_layer.append(ErrorBudgetNode("ancilla dephasing", firsts["dephasing"], 0.0,
                                       children=dephasing_children(firsts["dephasing"])))
    first_layer.append(ErrorBudgetNode("cavity photon loss", *_split(firsts["cavity_loss"], 1.0)))
    first_layer.append(ErrorBudgetNode("thermal excitation", *_split(firsts["thermal"], 1.0)))
    # double dephasing stays protected; every mixed double event dephases
    p_double_deph = min(p_multi, (p_deph ** 2) / 2)
    multi = ErrorBudgetNode(
        "multiple events", p_multi, 0.0,
        children=(
            ErrorBudgetNode("double dephasing", *_split(p_double_deph, ba)),
            ErrorBudgetNode("mixed double events", *_split(p_multi - p_double_deph, 1.0)),
        ))
    first_layer.append(multi)

    # readout layers apply to the corrected variant only
    def readout_children(node: ErrorBudgetNode) -> ErrorBudgetNode:
        if not corrected or node.p_coherent == 0:
            return node
        coh = node.p_coherent
        dwell_level = "e" if "relax" in node.label or "detected" in node.label else "g"
        p_rd_relax = (1 - math.exp(-t_meas / params.t1_ge)) if dwell_level == "e" else 0.0
        p_rd_loss = 1 - math.exp(-nbar_code * t_meas / params.t1_cavity)
        assign = 1.0 - float(np.min(np.diag(config.measurement_fidelity)))
        p_xk = config.readout_dephasing_prob
        p_bad = min(1.0, p_rd_relax + p_rd_loss + p_xk + assign)
        kids = [ErrorBudgetNode("readout clean", coh * (1 - p_bad), node.p_dephased)]
        if p_rd_relax > 0:
            kids.append(ErrorBudgetNode("relaxation during readout", *_split(coh * p_rd_relax, 1.0)))
        if p_rd_loss > 0:
            kids.append(ErrorBudgetNode("photon loss during readout", *_split(coh * p_rd_loss, 1.0)))
        if p_xk > 0:
            kids.append(ErrorBudgetNode("readout cross-Kerr dephasing", *_split(coh * p_xk, 1.0)))
        if assign > 0:
            kids.append(ErrorBudgetNode("assignment error", *_split(coh * assign, 1.0)))
        return ErrorBudgetNode(node.label, node.p_coherent, node.p_dephased, children=tuple(kids))

    def attach_readout(node: ErrorBudgetNode) -> ErrorBudgetNode:
        if node.children:
            return ErrorBudgetNode(node.label, node.p_coherent, node.p_dephased,
                                   children=tuple(attach_readout(c) for c in node.children))
        return readout_children(node)

    first_layer = [attach_readout(n) for n in first_layer]
    root = ErrorBudgetNode("gate attempt", 1.0, 0.0, children=tuple(first_layer))

    total_dephased = sum(leaf.p_dephased for leaf in leaves(root))
    nc_fidelity = 1.0
    for p in singles.values():
        nc_fidelity *= 1 - p
    return BudgetReport(root=root, total_dephased=total_dephased, nc_fidelity=nc_fidelity)
