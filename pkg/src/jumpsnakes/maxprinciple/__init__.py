"""Empirical checks of the maximum principle: spikes, variations, orders and the Hamiltonian gap."""

from jumpsnakes.maxprinciple.expansion import ExpansionConfig, ExpansionReport, expansion_check
from jumpsnakes.maxprinciple.hamiltonian import delta_fixed_point, hamiltonian_gap, hamiltonian_H, script_hamiltonian
from jumpsnakes.maxprinciple.orders import OrderConfig, OrderFit, order_experiment
from jumpsnakes.maxprinciple.spike import SpikeConfig, SpikeGap, build_spike_control, spike_cost_gap
from jumpsnakes.maxprinciple.variations import first_variation_backward, first_variation_simulate, gamma_simulate, second_variation_simulate
from jumpsnakes.maxprinciple.verify import MPConfig, MPReport, verify_mp

__all__: list[str] = [
    "ExpansionConfig",
    "ExpansionReport",
    "expansion_check",
    "delta_fixed_point",
    "hamiltonian_gap",
    "hamiltonian_H",
    "script_hamiltonian",
    "OrderConfig",
    "OrderFit",
    "order_experiment",
    "SpikeConfig",
    "SpikeGap",
    "build_spike_control",
    "spike_cost_gap",
    "first_variation_backward",
    "first_variation_simulate",
    "gamma_simulate",
    "second_variation_simulate",
    "MPConfig",
    "MPReport",
    "verify_mp",
]
