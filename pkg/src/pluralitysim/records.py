"""Per-replica run records and their CSV encoding."""

from __future__ import annotations

from dataclasses import dataclass

__all__ = ["RunRecord", "CSV_HEADER", "csv_row"]

# Column order is part of the output contract; do not reorder.
CSV_HEADER = "seed,n,k,alpha,gamma,model,protocol,t_mix,rounds,consensus_round,all_correct,memory_bits"


@dataclass(frozen=True)
class RunRecord:
    """Summary of one protocol replica.

    consensus_round is the first round after which every node's plurality
    guess is correct and stays correct for the rest of the run; -1 when
    that never happens. t_mix is 0 for protocols that do not use one.
    """

    seed: int
    n: int
    k: int
    alpha: float
    gamma: int
    model: str
    protocol: str
    t_mix: int
    rounds: int
    consensus_round: int
    all_correct: bool
    memory_bits: int


def csv_row(r: RunRecord) -> str:
    return (
        f"{r.seed},{r.n},{r.k},{r.alpha},{r.gamma},{r.model},{r.protocol},"
        f"{r.t_mix},{r.rounds},{r.consensus_round},{int(r.all_correct)},{r.memory_bits}"
    )
