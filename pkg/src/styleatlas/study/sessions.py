"""Session lifecycle over an experiment and its durable log.

Sessions are resumable by token: every session and response is appended to
the store, and a fresh manager over the same store replays the log to
recover exactly the same state (schedules are rebuilt from the recorded
seed, not re-randomized).
"""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass, field

from ..errors import Conflict, NotFound, Unauthorized, ValidationError
from .experiment import Experiment
from .models import (
    ExpertProfile,
    ProgressionResponse,
    RankingResponse,
    TuringResponse,
    TASKS,
)
from .store import JsonlStore

_SCHEDULE_SEED_STRIDE = 100_003


@dataclass
class Session:
    token: str
    task: str
    profile: ExpertProfile
    schedule: list
    target: int
    answered: dict = field(default_factory=dict)

    @property
    def done(self) -> bool:
        return len(self.answered) >= self.target


class SessionManager:
    def __init__(self, experiment: Experiment, store: JsonlStore):
        self.experiment = experiment
        self.store = store
        self._sessions = {}
        self._session_count = 0
        self._replay()

    def _replay(self):
        for rec in self.store.records():
            kind = rec.get("type")
            if kind == "session":
                self._restore_session(rec)
            elif kind == "response":
                sess = self._sessions.get(rec["session"])
                if sess is not None:
                    sess.answered[rec["stimulus"]] = rec

    def _restore_session(self, rec: dict):
        profile = ExpertProfile(**rec["profile"])
        schedule = self.experiment.schedule(rec["task"], rec["schedule_seed"])
        self._sessions[rec["token"]] = Session(
            token=rec["token"], task=rec["task"], profile=profile,
            schedule=schedule, target=rec["target"],
        )
        self._session_count += 1

    def create_session(self, profile: ExpertProfile, experiment_id: str, task: str,
                       requested_images: int | None = None) -> dict:
        """Open a new session and persist it; returns token and schedule size."""
        if experiment_id != self.experiment.id:
            raise NotFound(f"unknown experiment {experiment_id!r}")
        if task not in TASKS:
            raise ValidationError(f"task must be one of {TASKS}, got {task!r}")
        schedule_seed = self.experiment.seed * _SCHEDULE_SEED_STRIDE + self._session_count
        schedule = self.experiment.schedule(task, schedule_seed)
        if task == "turing":
            target = self.experiment.min_images if requested_images is None else int(requested_images)
            if not self.experiment.min_images <= target <= len(schedule):
                raise ValidationError(
                    f"requested_images must lie in [{self.experiment.min_images}, {len(schedule)}]"
                )
        else:
            target = len(schedule)
        token = uuid.uuid4().hex
        self.store.append({
            "type": "session", "token": token, "experiment": experiment_id,
            "task": task, "profile": profile.to_dict(),
            "schedule_seed": schedule_seed, "target": target,
            "created": time.time(),
        })
        self._sessions[token] = Session(token=token, task=task, profile=profile,
                                        schedule=schedule, target=target)
        self._session_count += 1
        return {"token": token, "task": task, "target": target,
                "n_scheduled": len(schedule)}

    def _session(self, token: str) -> Session:
        sess = self._sessions.get(token)
        if sess is None:
            raise Unauthorized("unknown session token")
        return sess

    def session_progress(self, token: str) -> dict:
        sess = self._session(token)
        return {"task": sess.task, "answered": len(sess.answered),
                "target": sess.target, "done": sess.done}

    def next_stimulus(self, token: str):
        """First unanswered stimulus in schedule order, or None when done."""
        sess = self._session(token)
        if sess.done:
            return None
        for stim in sess.schedule:
            if stim.id not in sess.answered:
                return stim
        return None

    def submit(self, token: str, response) -> dict:
        """Record one response; duplicates for the same stimulus conflict."""
        sess = self._session(token)
        if not isinstance(response, (TuringResponse, RankingResponse, ProgressionResponse)):
            raise ValidationError(f"unsupported response object {type(response).__name__}")
        record = response.to_record()
        if record["task"] != sess.task:
            raise ValidationError(
                f"a {record['task']} response does not fit a {sess.task} session"
            )
        stim_ids = {s.id for s in sess.schedule}
        if response.stimulus not in stim_ids:
            raise ValidationError(f"stimulus {response.stimulus!r} is not part of this session")
        if response.stimulus in sess.answered:
            raise Conflict(f"stimulus {response.stimulus!r} already answered in this session")
        if sess.done:
            raise Conflict("session already reached its target")
        stim = self.experiment.stimulus(response.stimulus)
        if sess.task == "ranking":
            if set(response.order) != set(stim.payload["images"]):
                raise ValidationError("order must permute exactly the stimulus's 4 image ids")
        if sess.task == "progression" and len(response.severities) != len(stim.payload["images"]):
            raise ValidationError("one severity rating per image is required")

        record.update({
            "type": "response",
            "user": sess.profile.user_id,
            "ground_truth": dict(stim.ground_truth),
            "ts": time.time(),
        })
        self.store.append(record)
        sess.answered[response.stimulus] = record
        return {"status": "recorded", "stimulus": response.stimulus,
                "answered": len(sess.answered), "target": sess.target,
                "done": sess.done}

    def export(self, experiment_id: str) -> bytes:
        if experiment_id != self.experiment.id:
            raise NotFound(f"unknown experiment {experiment_id!r}")
        return self.store.export_bytes()
