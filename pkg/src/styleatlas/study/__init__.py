"""Rating-study service: experiment definition, durable response log, session
scheduling, and the HTTP layer."""

from .models import (
    ExpertProfile,
    ProgressionResponse,
    RankingResponse,
    Stimulus,
    TuringResponse,
)
from .store import JsonlStore
from .experiment import Experiment, build_ranking_sets
from .sessions import SessionManager
from .service import create_app

__all__ = [
    "ExpertProfile",
    "Stimulus",
    "TuringResponse",
    "RankingResponse",
    "ProgressionResponse",
    "JsonlStore",
    "Experiment",
    "build_ranking_sets",
    "SessionManager",
    "create_app",
]
