"""
Synthetic news corpus for fixtures, demos and smoke training.

Every article belongs to one theme; its opening sentence states the story and
the gold summary restates it with a different verb form, so LEAD and
EXT-ORACLE are strong and the gold summary still has a few novel n-grams.
"""
from __future__ import annotations

from typing import Dict, List

import numpy as np

THEMES: Dict[str, Dict[str, list]] = {
    "politics": {
        "subjects": ["The minister", "The council", "The prime minister", "Labour", "The Senedd"],
        "verbs": [("announced", "announces"), ("rejected", "rejects"), ("backed", "backs"), ("delayed", "delays")],
        "objects": ["a new budget", "the housing plan", "the tax reform", "an inquiry into spending"],
        "fillers": [
            "Opposition parties said the decision came too late.",
            "A vote is expected in parliament next month.",
            "Campaigners welcomed the move but called for more detail.",
            "The plan will be debated by MPs after the recess.",
        ],
    },
    "sport": {
        "subjects": ["Wales", "Celtic", "The England captain", "Andy Murray", "Leicester City"],
        "verbs": [("won", "wins"), ("lost", "loses"), ("signed", "signs"), ("drew", "draws")],
        "objects": ["the cup final", "a two-year contract", "the opening match", "the league title"],
        "fillers": [
            "The manager praised the performance of his young squad.",
            "Fans travelled in large numbers for the game.",
            "The result leaves them third in the table.",
            "Injuries had disrupted their preparation all week.",
        ],
    },
    "business": {
        "subjects": ["The bank", "Tesco", "The carmaker", "Shareholders", "The energy firm"],
        "verbs": [("cut", "cuts"), ("reported", "reports"), ("raised", "raises"), ("sold", "sells")],
        "objects": ["hundreds of jobs", "record profits", "prices for customers", "its retail division"],
        "fillers": [
            "Shares rose sharply in early trading.",
            "Analysts had expected weaker results this quarter.",
            "Unions said they would seek urgent talks.",
            "The company blamed rising costs and falling demand.",
        ],
    },
    "weather": {
        "subjects": ["Storm Doris", "Heavy rain", "The Met Office", "Flooding", "Snow"],
        "verbs": [("closed", "closes"), ("disrupted", "disrupts"), ("hit", "hits"), ("warned", "warns")],
        "objects": ["roads across the region", "rail services", "hundreds of homes", "of further travel chaos"],
        "fillers": [
            "Forecasters said conditions would ease by the weekend.",
            "Emergency services were called to several incidents.",
            "Drivers were urged to avoid unnecessary journeys.",
            "Some schools remained closed on Friday.",
        ],
    },
    "health": {
        "subjects": ["The NHS trust", "Doctors", "A new study", "The health board", "Nurses"],
        "verbs": [("treated", "treats"), ("found", "finds"), ("opened", "opens"), ("criticised", "criticises")],
        "objects": ["a new cancer unit", "longer waiting times", "a link between diet and sleep", "staff shortages"],
        "fillers": [
            "Patients groups said the findings were worrying.",
            "The research was published in a medical journal.",
            "Officials promised extra funding for the service.",
            "Waiting lists have grown over the past year.",
        ],
    },
    "science": {
        "subjects": ["Astronomers", "Researchers", "The space agency", "Scientists", "A university team"],
        "verbs": [("discovered", "discovers"), ("launched", "launches"), ("tested", "tests"), ("mapped", "maps")],
        "objects": ["a distant planet", "a new satellite", "a faster battery", "the ocean floor"],
        "fillers": [
            "The results could change how the field works.",
            "The project took almost a decade to complete.",
            "Other experts said more data was needed.",
            "The team hopes to publish further results next year.",
        ],
    },
}

PLACES = ["in London", "in Cardiff", "in Glasgow", "in Belfast", "in Manchester", "in Leeds"]
DAYS = ["on Monday", "on Tuesday", "on Wednesday", "on Thursday", "on Friday"]


def _pick(rng: np.random.Generator, items):
    return items[int(rng.integers(len(items)))]


def make_toy_record(index: int, rng: np.random.Generator) -> dict:
    theme_name = _pick(rng, sorted(THEMES))
    theme = THEMES[theme_name]
    subject = _pick(rng, theme["subjects"])
    past, present = _pick(rng, theme["verbs"])
    obj = _pick(rng, theme["objects"])
    place = _pick(rng, PLACES)

    lead = f"{subject} {past} {obj} {place} {_pick(rng, DAYS)}."
    n_fillers = 2 + int(rng.integers(3))
    fillers = [theme["fillers"][i] for i in rng.permutation(len(theme["fillers"]))[:n_fillers]]
    return {
        "id": f"toy-{index:05d}",
        "theme": theme_name,
        "document": [lead, *fillers],
        "summary": f"{subject} {present} {obj} {place}.",
    }


def make_toy_corpus(n_docs: int = 100, seed: int = 0) -> List[dict]:
    """``n_docs`` raw records in the corpus JSONL layout (plus a ``theme`` field)."""
    if n_docs < 1:
        raise ValueError(f"n_docs must be >= 1, got {n_docs}")
    rng = np.random.default_rng(seed)
    return [make_toy_record(i, rng) for i in range(n_docs)]
