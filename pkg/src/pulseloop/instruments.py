"""Scoring of the subjective instruments and median-split grouping.

NASA-TLX global is the unweighted (raw) sum of the six subscales out of 120.
The Big Five item-key map ships as a versioned data file (45 items, French
inventory layout); item text is out of scope.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from statistics import median

TLX_SUBSCALES = ("mental", "physical", "temporal", "performance",
                 "effort", "frustration")

GEW_NEGATIVE = ("impatience", "frustration", "sadness", "social_worry",
                "dissatisfaction")
GEW_POSITIVE = ("alertness", "motivation", "self_confidence", "serenity", "joy")

BIG_FIVE_TRAITS = ("extraversion", "agreeableness", "conscientiousness",
                   "neuroticism", "openness")


class ResponseError(ValueError):
    """Raised on out-of-range or incomplete questionnaire responses."""


@dataclass(frozen=True)
class TlxResponse:
    """Six subscale ratings, each 0..20."""

    mental: float
    physical: float
    temporal: float
    performance: float
    effort: float
    frustration: float

    def __post_init__(self):
        for name in TLX_SUBSCALES:
            v = getattr(self, name)
            if not 0 <= v <= 20:
                raise ResponseError(f"TLX {name} rating {v} outside 0..20")


def score_tlx(r: TlxResponse):
    """Global workload (0..120, unweighted sum) and the frustration/stress
    subscale (0..20)."""
    total = sum(getattr(r, name) for name in TLX_SUBSCALES)
    return float(total), float(r.frustration)


@dataclass(frozen=True)
class GewResponse:
    """Feeling ratings 1..5 on the emotional wheel."""

    negatives: dict  # feeling name -> 1..5
    positives: dict = field(default_factory=dict)

    def __post_init__(self):
        if set(self.negatives) != set(GEW_NEGATIVE):
            raise ResponseError(
                f"negative feelings must be exactly {GEW_NEGATIVE}")
        for items in (self.negatives, self.positives):
            for name, v in items.items():
                if not 1 <= v <= 5:
                    raise ResponseError(f"GEW {name} rating {v} outside 1..5")


def score_gew_negative(r: GewResponse) -> float:
    """Global negative-feelings score: mean of the five negative items."""
    return sum(r.negatives.values()) / len(r.negatives)


def load_bfi_key() -> dict:
    """Item-key map: item id (str) -> {"trait": ..., "reverse": bool}."""
    text = resources.files("pulseloop").joinpath("data/bfi_fr_items.json").read_text()
    return json.loads(text)["items"]


@dataclass(frozen=True)
class BfiResponse:
    """Item ratings 1..5, keyed by item id from the shipped item map."""

    ratings: dict  # item id (str or int) -> 1..5

    def __post_init__(self):
        for item, v in self.ratings.items():
            if not 1 <= v <= 5:
                raise ResponseError(f"BFI item {item} rating {v} outside 1..5")


def score_bfi(r: BfiResponse, key: dict = None) -> dict:
    """Trait means 1..5; reverse-keyed items are mapped x -> 6 - x."""
    key = key or load_bfi_key()
    sums = {t: 0.0 for t in BIG_FIVE_TRAITS}
    counts = {t: 0 for t in BIG_FIVE_TRAITS}
    ratings = {str(k): v for k, v in r.ratings.items()}
    for item, spec in key.items():
        if item not in ratings:
            raise ResponseError(f"missing BFI item {item}")
        v = ratings[item]
        if spec["reverse"]:
            v = 6 - v
        sums[spec["trait"]] += v
        counts[spec["trait"]] += 1
    return {t: sums[t] / counts[t] for t in BIG_FIVE_TRAITS}


def median_split(scores: dict):
    """Split participants into (Low, High) sets at the sample median.

    Strictly-below goes Low, strictly-above goes High; ties at the median are
    assigned deterministically (sorted by participant id) to keep group sizes
    as balanced as possible, preferring Low on exact balance.
    """
    if len(scores) < 2:
        raise ValueError("median split needs at least 2 participants")
    m = median(scores.values())
    low = {p for p, v in scores.items() if v < m}
    high = {p for p, v in scores.items() if v > m}
    ties = sorted(p for p, v in scores.items() if v == m)
    for p in ties:
        if len(low) <= len(high):
            low.add(p)
        else:
            high.add(p)
    return low, high
