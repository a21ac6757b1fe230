"""Python front end for the pidkit C++ core."""

from ._pidkit import (
    GameSpec,
    Pid,
    Pmd,
    dumps,
    game_value,
    is_simple,
    load,
    loads,
    pguess_simple,
    random_pid,
    random_simple_pid,
    roi_dual,
    roi_pmd,
    roi_primal,
    sem,
    sem_monotone_value,
    validate_pid,
    verify_robustness_bound,
    witness_game,
)

__all__ = [
    "GameSpec",
    "Pid",
    "Pmd",
    "dumps",
    "game_value",
    "is_simple",
    "load",
    "loads",
    "pguess_simple",
    "random_pid",
    "random_simple_pid",
    "roi_dual",
    "roi_pmd",
    "roi_primal",
    "sem",
    "sem_monotone_value",
    "validate_pid",
    "verify_robustness_bound",
    "witness_game",
]
