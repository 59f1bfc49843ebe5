"""PLC model variants that go beyond what a fault tree can express."""

from __future__ import annotations

from typing import Mapping, Optional

from ftbn.bn_model import BayesianNetwork, NoisyAnd, NoisyMax, NoisyOr, TableCpt, set_dependency
from ftbn.compiler import compile_tree
from ftbn.ft_model import CHANNELS, plc_case_study, plc_published_priors

# spare supply covers a PS outage 30% of the time
SPARE_SUPPLY_MISS = 0.7
COMMON_CAUSE_LEAK = 1e-4
# failed wiring from one supplier takes the PS subsystem down on its own
PS_WIRING_FAILURE = 0.01

PS_STATES = ("working", "over-voltage", "dead")
OVERVOLTAGE_DAMAGE = 0.66667
# share of a supplier's failure probability that shows up as over-voltage
OVERVOLTAGE_SHARE = 0.5


def _base(priors: Optional[Mapping[str, float]]) -> BayesianNetwork:
    ft = plc_case_study()
    bn, _ = compile_tree(ft, priors if priors is not None else plc_published_priors(ft))
    return bn


def plc_noisy_network(priors: Optional[Mapping[str, float]] = None) -> BayesianNetwork:
    """TE becomes a leaky noisy-or of (PSS, Voter, CH); PSS a noisy-and of the supplies."""
    bn = _base(priors)
    top = bn["TE"]
    c = tuple(SPARE_SUPPLY_MISS if p == "PSS" else 1.0 for p in top.parents)
    bn = set_dependency(bn, "TE", top.parents, NoisyOr(c, COMMON_CAUSE_LEAK))
    return set_dependency(bn, "PSS", ("PS1", "PS2"), NoisyAnd((PS_WIRING_FAILURE, PS_WIRING_FAILURE)))


def plc_seqdep_network(priors: Optional[Mapping[str, float]] = None) -> BayesianNetwork:
    """Three-state supplies that can damage every CPU through over-voltage.

    Each CPU keeps its own failure probability as the noisy-max leak.
    """
    bn = _base(priors)
    for ps in ("PS1", "PS2"):
        p_fail = bn.cpt_array(ps)[1]
        over = p_fail * OVERVOLTAGE_SHARE
        row = (1.0 - p_fail, over, p_fail - over)
        # PS nodes become 3-state roots; PSS keeps treating any non-working state as failed
        bn = set_dependency(bn, ps, (), TableCpt((row,)), states=PS_STATES)
    cpt_params = ((OVERVOLTAGE_DAMAGE, 1.0), (OVERVOLTAGE_DAMAGE, 1.0))
    for x in CHANNELS:
        cpu = f"CPU_{x}"
        leak = float(bn.cpt_array(cpu)[1])
        bn = set_dependency(bn, cpu, ("PS1", "PS2"), NoisyMax(cpt_params, leak))
    return bn
