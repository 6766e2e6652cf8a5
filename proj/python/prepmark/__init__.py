"""Python access to the prepmark grading engine, question bank and store."""

import json as _json

from . import _core
from ._core import PrepmarkError, differentiate, equivalent, evaluate, pearson, render

__all__ = [
    "PrepmarkError",
    "differentiate",
    "equivalent",
    "evaluate",
    "followup",
    "grade",
    "instantiate",
    "pearson",
    "render",
    "replay_verify",
    "simulate",
    "status",
    "validate_bank",
]


def grade(kind, spec, response):
    """Grade one response; spec and response use the bank's wire format."""
    return _json.loads(_core.grade_json(kind, _json.dumps(spec), _json.dumps(response)))


def validate_bank(path):
    return _json.loads(_core.validate_bank_json(str(path)))


def instantiate(bank_path, template_id, seed):
    return _json.loads(_core.instantiate_json(str(bank_path), template_id, seed))


def simulate(bank, cohort, store, students=110, seed=1):
    """Populate a fresh store; returns the number of submitted attempts."""
    return _core.simulate(str(bank), str(cohort), str(store), students, seed)


def replay_verify(store):
    """True iff replaying the event log reproduces the snapshot byte for byte."""
    return _core.replay_verify(str(store))


def followup(store, now):
    return _json.loads(_core.followup_json(str(store), now))


def status(store):
    return _json.loads(_core.status_json(str(store)))
