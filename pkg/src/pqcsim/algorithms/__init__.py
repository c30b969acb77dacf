"""Circuit generators, the Shor pipeline and its closed-form oracles."""
from .generators import accumulator_value, adder_sum, gen_adder, gen_hadamard_sweep, gen_qft
from .sampling import sample_on_rank, sample_states
from .shor import (
    PeriodResult,
    ShorParams,
    analytic_expectation,
    analytic_expectations,
    analytic_pk,
    apply_modexp_oracle,
    choose_registers,
    recover_order,
    run_shor,
)

__all__ = [
    "PeriodResult",
    "ShorParams",
    "accumulator_value",
    "adder_sum",
    "analytic_expectation",
    "analytic_expectations",
    "analytic_pk",
    "apply_modexp_oracle",
    "choose_registers",
    "gen_adder",
    "gen_hadamard_sweep",
    "gen_qft",
    "recover_order",
    "run_shor",
    "sample_on_rank",
    "sample_states",
]
