"""Domain records for the rating study."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ValidationError

FAMILIARITY = ("expert", "very familiar", "somewhat familiar", "not familiar")
TASKS = ("turing", "ranking", "progression")
SEVERITY_MIN, SEVERITY_MAX = 1, 4
LIKERT_MIN, LIKERT_MAX = 1, 5


@dataclass(frozen=True)
class ExpertProfile:
    user_id: str
    years_experience: int
    wce_familiarity: str
    institution: str | None = None

    def __post_init__(self):
        if not self.user_id:
            raise ValidationError("user_id must be nonempty")
        if int(self.years_experience) < 0:
            raise ValidationError(f"years_experience must be nonnegative, got {self.years_experience}")
        if self.wce_familiarity not in FAMILIARITY:
            raise ValidationError(
                f"wce_familiarity must be one of {FAMILIARITY}, got {self.wce_familiarity!r}"
            )
        object.__setattr__(self, "years_experience", int(self.years_experience))

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "years_experience": self.years_experience,
            "wce_familiarity": self.wce_familiarity,
            "institution": self.institution,
        }


@dataclass(frozen=True)
class Stimulus:
    """One unit of work for a rater.

    payload carries only opaque image ids; ground_truth holds the hidden
    provenance data and must never be serialized toward a rater.
    """

    id: str
    task: str
    payload: dict
    ground_truth: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValidationError(f"task must be one of {TASKS}, got {self.task!r}")
        if self.task == "ranking":
            images = self.payload.get("images", ())
            if len(images) != 4 or len(set(images)) != 4:
                raise ValidationError("ranking payload must list 4 distinct image ids")
            provs = [self.ground_truth.get(i) for i in images]
            if provs.count("real") != 2 or provs.count("generated") != 2:
                raise ValidationError("ranking set must hold exactly 2 real and 2 generated images")
        elif self.task == "progression":
            images = self.payload.get("images", ())
            if len(images) != 5:
                raise ValidationError("progression payload must list 5 image ids")
        elif "image" not in self.payload:
            raise ValidationError("turing payload must carry an image id")

    def public_payload(self) -> dict:
        """What a rater is allowed to see."""
        return {"id": self.id, "task": self.task, "payload": dict(self.payload)}


def _require_likert(value, name):
    v = int(value)
    if not LIKERT_MIN <= v <= LIKERT_MAX:
        raise ValidationError(f"{name} must lie in {LIKERT_MIN}..{LIKERT_MAX}, got {value}")
    return v


@dataclass(frozen=True)
class TuringResponse:
    session: str
    stimulus: str
    verdict: str
    difficulty: int
    elapsed_ms: int | None = None

    def __post_init__(self):
        if self.verdict not in ("real", "generated"):
            raise ValidationError(f"verdict must be real or generated, got {self.verdict!r}")
        object.__setattr__(self, "difficulty", _require_likert(self.difficulty, "difficulty"))

    def to_record(self) -> dict:
        return {"task": "turing", "session": self.session, "stimulus": self.stimulus,
                "verdict": self.verdict, "difficulty": self.difficulty,
                "elapsed_ms": self.elapsed_ms}


@dataclass(frozen=True)
class RankingResponse:
    session: str
    stimulus: str
    order: tuple  # image ids, most realistic first
    elapsed_ms: int | None = None

    def __post_init__(self):
        order = tuple(self.order)
        if len(order) != 4 or len(set(order)) != 4:
            raise ValidationError("order must be a permutation of the 4 image ids")
        object.__setattr__(self, "order", order)

    def to_record(self) -> dict:
        return {"task": "ranking", "session": self.session, "stimulus": self.stimulus,
                "order": list(self.order), "elapsed_ms": self.elapsed_ms}


@dataclass(frozen=True)
class ProgressionResponse:
    session: str
    stimulus: str
    severities: tuple  # one 1..4 rating per image, ties allowed
    plausibility: int
    elapsed_ms: int | None = None

    def __post_init__(self):
        sev = tuple(int(s) for s in self.severities)
        if len(sev) != 5:
            raise ValidationError(f"need 5 severity ratings, got {len(sev)}")
        for s in sev:
            if not SEVERITY_MIN <= s <= SEVERITY_MAX:
                raise ValidationError(f"severity {s} outside {SEVERITY_MIN}..{SEVERITY_MAX}")
        object.__setattr__(self, "severities", sev)
        object.__setattr__(self, "plausibility", _require_likert(self.plausibility, "plausibility"))

    def to_record(self) -> dict:
        return {"task": "progression", "session": self.session, "stimulus": self.stimulus,
                "severities": list(self.severities), "plausibility": self.plausibility,
                "elapsed_ms": self.elapsed_ms}
