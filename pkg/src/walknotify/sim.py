"""Deterministic walker simulator, synthetic dataset generator, and
evaluation harness.

The generator draws records from a fully specified generative network
(independent context/barrier priors, reaction a function of them) and
optionally flips each label to a random other candidate.  With the
default deterministic reaction rule, a model that recovers the rule
scores exactly ``1 - noise``, so the noise knob directly targets an
accuracy regime.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import vocab
from .bayes import (
    BayesNet,
    CandidateMap,
    Cpt,
    CvReport,
    NetworkStructure,
    ReactionRecord,
    default_candidates,
    k_fold_cv,
)
from .geo import GeoPoint, haversine_distance
from .selector import SelectionPipeline, UserContext, classify_timing
from .store import Fix, HeadingEstimate


class ServiceUnreachable(RuntimeError):
    """The replay target server could not be reached."""


# ---------------------------------------------------------------------------
# Routes


@dataclass(frozen=True)
class Route:
    """A walk: ordered waypoints, a speed, and a polling interval."""

    waypoints: tuple[GeoPoint, ...]
    speed: float = 1.1
    poll_interval: float = 150.0

    def __post_init__(self) -> None:
        if len(self.waypoints) < 2:
            raise ValueError("route needs at least 2 waypoints")
        for a, b in zip(self.waypoints, self.waypoints[1:]):
            if (a.lat, a.lon) == (b.lat, b.lon):
                raise ValueError("consecutive waypoints must be distinct")
        if self.speed <= 0 or self.poll_interval <= 0:
            raise ValueError("speed and poll_interval must be positive")

    def length(self) -> float:
        return sum(haversine_distance(a, b) for a, b in zip(self.waypoints, self.waypoints[1:]))

    def position_at(self, t: float) -> GeoPoint:
        """Position after walking for ``t`` seconds (clamped to the end),
        linearly interpolating between waypoints."""
        remaining = max(t, 0.0) * self.speed
        for a, b in zip(self.waypoints, self.waypoints[1:]):
            leg = haversine_distance(a, b)
            if remaining <= leg:
                frac = remaining / leg
                return GeoPoint(a.lat + (b.lat - a.lat) * frac, a.lon + (b.lon - a.lon) * frac)
            remaining -= leg
        return self.waypoints[-1]

    def to_json_dict(self) -> dict:
        return {
            "waypoints": [{"lat": p.lat, "lon": p.lon} for p in self.waypoints],
            "speed": self.speed,
            "poll_interval": self.poll_interval,
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "Route":
        return cls(
            waypoints=tuple(GeoPoint(w["lat"], w["lon"]) for w in data["waypoints"]),
            speed=data.get("speed", 1.1),
            poll_interval=data.get("poll_interval", 150.0),
        )


def load_route(path: str | Path) -> Route:
    return Route.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def save_route(route: Route, path: str | Path) -> None:
    Path(path).write_text(json.dumps(route.to_json_dict(), indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Ground truth and dataset generation


@dataclass(frozen=True)
class GroundTruthSpec:
    """A generative model for synthetic datasets: a full network over the
    dataset variables, the candidate map, and a label-noise rate."""

    net: BayesNet
    candidates: CandidateMap
    noise: float = 0.0

    def __post_init__(self) -> None:
        if not 0.0 <= self.noise <= 0.5:
            raise ValueError("noise must lie in [0, 0.5]")
        for name in vocab.DATASET_COLUMNS:
            if name not in self.net.variables:
                raise ValueError(f"ground-truth net lacks variable {name!r}")

    def bayes_optimal_accuracy(self) -> float:
        """Accuracy of the best possible predictor on generated data.

        With a deterministic reaction rule, a label survives un-flipped
        with probability 1 - noise, and the optimal predictor always
        predicts the rule's output, so this is exactly 1 - noise.
        """
        return 1.0 - self.noise


#: Context/barrier priors for the default generator.
DEFAULT_FEATURE_PRIORS: dict[str, tuple[float, ...]] = {
    "weather": (0.5, 0.3, 0.2),
    "temperature": (0.25, 0.25, 0.5),
    "locality": (0.4, 0.3, 0.3),
    "willingness": (0.4, 0.35, 0.25),
    "barrier": tuple([1.0 / len(vocab.BARRIER_CLASSES)] * len(vocab.BARRIER_CLASSES)),
}


#: Barriers whose (non-neglected) way around is a detour.
_DETOUR_GROUP = (
    "bicycles_on_sidewalk",
    "street_people",
    "road_under_sun",
    "steep_stairs",
    "no_resting_place",
    "hawkers",
)


def default_reaction_rule(weather: str, temperature: str, locality: str, willingness: str, barrier: str) -> str:
    """The default deterministic ground truth: one reaction per context,
    always drawn from the barrier's candidate list.

    Walkers out for exercise shrug barriers off (stairs included — they
    climb them); a pedestrian bridge is the exception, where the fit
    walker goes across while everyone else detours.  Anyone else gets the
    barrier's usual way around, with cold weather steering stair users to
    the elevator.
    """
    exercise = willingness == "walk for exercise"
    if barrier == "stairs_in_station":
        if exercise:
            return "neglect"
        return "elevator" if temperature == "5C-" else "escalator"
    if barrier == "pedestrian_bridge":
        return "across" if exercise else "detour"
    if exercise:
        return "neglect"
    if barrier in ("crowd_in_station", "space_without_people_night"):
        return "change time slot"
    if barrier in _DETOUR_GROUP:
        return "detour"
    return "proceed with caution"


def default_ground_truth(noise: float = 0.2) -> GroundTruthSpec:
    """The shipped generator: independent feature priors and the
    deterministic reaction rule above, as one generative network."""
    feature_names = ("weather", "temperature", "locality", "willingness", "barrier")
    variables = [vocab.VARIABLES[name] for name in feature_names] + [vocab.REACTION]
    cpts = {
        name: Cpt(name, (), np.array(DEFAULT_FEATURE_PRIORS[name])) for name in feature_names
    }
    cards = tuple(len(vocab.VARIABLES[name].states) for name in feature_names)
    table = np.zeros(cards + (len(vocab.REACTIONS),))
    for combo in itertools.product(*(range(c) for c in cards)):
        states = [vocab.VARIABLES[name].states[i] for name, i in zip(feature_names, combo)]
        reaction = default_reaction_rule(*states)
        table[combo + (vocab.REACTION.index(reaction),)] = 1.0
    cpts["reaction"] = Cpt("reaction", feature_names, table)
    return GroundTruthSpec(BayesNet(variables, cpts), default_candidates(), noise)


def _sample_state(rng: random.Random, states: Sequence[str], probs: Sequence[float]) -> str:
    x = rng.random()
    cumulative = 0.0
    for state, p in zip(states, probs):
        cumulative += p
        if x < cumulative:
            return state
    return states[-1]


def gen_dataset(spec: GroundTruthSpec, n: int, seed: int = 0) -> list[ReactionRecord]:
    """Sample ``n`` records from the spec's joint, then flip each label to
    a uniformly random *other* candidate with probability ``spec.noise``.
    Deterministic given the seed."""
    if n < 0:
        raise ValueError("n must be >= 0")
    rng = random.Random(seed)
    order = spec.net.structure.topological_order()
    records = []
    for _ in range(n):
        assignment: dict[str, str] = {}
        for name in order:
            cpt = spec.net.cpts[name]
            parent_idx = tuple(spec.net.variables[p].index(assignment[p]) for p in cpt.parents)
            row = cpt.probs[parent_idx]
            assignment[name] = _sample_state(rng, spec.net.variables[name].states, row)
        reaction = assignment["reaction"]
        if spec.noise > 0 and rng.random() < spec.noise:
            others = [c for c in spec.candidates[assignment["barrier"]] if c != reaction]
            reaction = rng.choice(others)
        records.append(
            ReactionRecord(
                weather=assignment["weather"],
                temperature=assignment["temperature"],
                locality=assignment["locality"],
                willingness=assignment["willingness"],
                barrier=assignment["barrier"],
                reaction=reaction,
            )
        )
    return records


# ---------------------------------------------------------------------------
# Replay


@dataclass(frozen=True)
class ReplaySummary:
    polls: int
    notifications: int
    suppressions: int
    timing_counts: dict[str, int]


@dataclass(frozen=True)
class ReplayResult:
    """Chronological event log of one simulated walk."""

    events: tuple[dict, ...]

    def summary(self) -> ReplaySummary:
        timing_counts = {t: 0 for t in ("front", "same", "behind", "misaligned")}
        polls = notifications = suppressions = 0
        for event in self.events:
            if event["type"] == "fix":
                polls += 1
            elif event["type"] == "notification":
                notifications += 1
                timing_counts[event["timing"]] += 1
            elif event["type"] == "suppression":
                suppressions += 1
        return ReplaySummary(polls, notifications, suppressions, timing_counts)

    def to_jsonl(self) -> str:
        return "".join(json.dumps(e, ensure_ascii=False) + "\n" for e in self.events)


def write_event_log(result: ReplayResult, path: str | Path) -> None:
    Path(path).write_text(result.to_jsonl(), encoding="utf-8")


def read_event_log(path: str | Path) -> ReplayResult:
    """Reload a saved event log for re-summarizing."""
    events = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                events.append(json.loads(line))
    return ReplayResult(tuple(events))


def _poll_times(route: Route) -> list[float]:
    duration = route.length() / route.speed
    times = []
    t = 0.0
    while t <= duration + 1e-9:
        times.append(t)
        t += route.poll_interval
    return times


def replay(
    route: Route,
    ctx: UserContext,
    pipeline: Optional[SelectionPipeline] = None,
    server_url: Optional[str] = None,
    user_id: str = "walker",
    start_at: float = 0.0,
) -> ReplayResult:
    """Walk the route, polling at the route's interval, and log every
    fix, heading, notification (with its timing class), and suppression.

    Exactly one of ``pipeline`` (in-process) or ``server_url`` (wire)
    must be given.
    """
    if (pipeline is None) == (server_url is None):
        raise ValueError("provide exactly one of pipeline or server_url")
    if pipeline is not None:
        return _replay_in_process(route, ctx, pipeline, user_id, start_at)
    return _replay_against_server(route, ctx, server_url, start_at)


def _heading_dict(heading: Optional[HeadingEstimate]) -> tuple[Optional[float], float]:
    if heading is None:
        return None, 0.0
    return heading.heading, heading.speed


def _log_poll_events(
    events: list[dict],
    t: float,
    point: GeoPoint,
    heading_deg: Optional[float],
    speed: float,
    suppressed: Sequence[tuple[str, str]],
    notification: Optional[dict],
) -> None:
    events.append(
        {
            "type": "fix",
            "t": t,
            "lat": point.lat,
            "lon": point.lon,
            "heading": heading_deg,
            "speed": speed,
        }
    )
    for content_id, reason in suppressed:
        events.append({"type": "suppression", "t": t, "content_id": content_id, "reason": reason})
    if notification is not None:
        events.append({"type": "notification", "t": t, **notification})


def _replay_in_process(
    route: Route, ctx: UserContext, pipeline: SelectionPipeline, user_id: str, start_at: float
) -> ReplayResult:
    events: list[dict] = []
    for t in _poll_times(route):
        point = route.position_at(t)
        fix = Fix(user_id=user_id, point=point, at=start_at + t)
        heading = pipeline.store.append_fix(fix)
        decision = pipeline.poll(fix, heading, ctx)
        heading_deg, speed = _heading_dict(heading)
        notification = None
        if decision.notification is not None:
            n = decision.notification
            timing = classify_timing(n.content.location, fix, heading, pipeline.config)
            notification = {
                "content_id": n.content.id,
                "distance": n.distance,
                "bearing": n.bearing,
                "importance": n.importance,
                "reactions": [[r, p] for r, p in n.reactions],
                "neglect_probability": n.neglect_probability,
                "timing": timing,
            }
        _log_poll_events(
            events,
            t,
            point,
            heading_deg,
            speed,
            [(s.content_id, s.reason) for s in decision.suppressed],
            notification,
        )
    return ReplayResult(tuple(events))


def _replay_against_server(route: Route, ctx: UserContext, server_url: str, start_at: float) -> ReplayResult:
    import httpx

    base = server_url.rstrip("/")
    profile = {k: v for k, v in ctx.evidence().items() if k not in ("weather", "temperature")}
    try:
        with httpx.Client(base_url=base, timeout=10.0) as client:
            created = client.post("/users", json=profile)
            created.raise_for_status()
            user_id = created.json()["user_id"]
            events: list[dict] = []
            for t in _poll_times(route):
                point = route.position_at(t)
                response = client.post(
                    f"/users/{user_id}/fix",
                    json={
                        "lat": point.lat,
                        "lon": point.lon,
                        "ts": start_at + t,
                        "weather": ctx.weather,
                        "temperature": ctx.temperature,
                    },
                )
                response.raise_for_status()
                body = response.json()
                heading_deg = body.get("heading")
                speed = body.get("speed", 0.0)
                notification = None
                if body.get("notification") is not None:
                    n = body["notification"]
                    content_point = GeoPoint(n["content"]["location"]["lat"], n["content"]["location"]["lon"])
                    fix = Fix(user_id=user_id, point=point, at=start_at + t)
                    estimate = (
                        HeadingEstimate(heading=heading_deg, speed=speed) if heading_deg is not None else None
                    )
                    notification = {
                        "content_id": n["content"]["id"],
                        "distance": n["distance"],
                        "bearing": n["bearing"],
                        "importance": n["importance"],
                        "reactions": n["reactions"],
                        "neglect_probability": n["neglect_probability"],
                        "timing": classify_timing(content_point, fix, estimate),
                    }
                suppressed = [(s["content_id"], s["reason"]) for s in body.get("suppressed", [])]
                _log_poll_events(events, t, point, heading_deg, speed, suppressed, notification)
    except httpx.TransportError as exc:
        raise ServiceUnreachable(f"cannot reach {server_url}: {exc}") from exc
    return ReplayResult(tuple(events))


# ---------------------------------------------------------------------------
# Evaluation report


@dataclass(frozen=True)
class BarrierBreakdown:
    barrier: str
    correct: int
    incorrect: int

    @property
    def accuracy(self) -> float:
        return self.correct / (self.correct + self.incorrect)


@dataclass(frozen=True)
class EvalReport:
    """Cross-validation report plus per-barrier accuracy breakdown."""

    cv: CvReport
    per_barrier: tuple[BarrierBreakdown, ...]
    n_records: int
    k: int

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "n_records": self.n_records,
            "seed": self.cv.seed,
            "alpha": self.cv.alpha,
            "folds": [
                {"correct": f.correct, "incorrect": f.incorrect, "accuracy": f.accuracy}
                for f in self.cv.folds
            ],
            "average_accuracy": self.cv.average_accuracy,
            "random_baseline": self.cv.baseline,
            "per_barrier": [
                {
                    "barrier": b.barrier,
                    "correct": b.correct,
                    "incorrect": b.incorrect,
                    "accuracy": b.accuracy,
                }
                for b in self.per_barrier
            ],
        }

    def render_text(self) -> str:
        lines = [
            f"{self.k}-fold cross-validation on {self.n_records} records "
            f"(seed {self.cv.seed}, alpha {self.cv.alpha:g})",
            "",
            f"{'fold':<6}{'correct':>8}{'incorrect':>11}{'accuracy':>10}",
        ]
        for i, fold in enumerate(self.cv.folds, start=1):
            lines.append(f"{i:<6}{fold.correct:>8}{fold.incorrect:>11}{fold.accuracy:>9.1%}")
        lines.append(f"{'average':<25}{self.cv.average_accuracy:>9.1%}")
        lines.append(f"{'random baseline':<25}{self.cv.baseline:>9.1%}")
        lines.append("")
        lines.append(f"{'barrier':<28}{'correct':>8}{'incorrect':>11}{'accuracy':>10}")
        for b in self.per_barrier:
            lines.append(f"{b.barrier:<28}{b.correct:>8}{b.incorrect:>11}{b.accuracy:>9.1%}")
        return "\n".join(lines) + "\n"


def eval_report(
    dataset: Sequence[ReactionRecord],
    k: int,
    structure: Optional[NetworkStructure] = None,
    alpha: float = 1.0,
    candidates: Optional[CandidateMap] = None,
    seed: int = 0,
) -> EvalReport:
    """Run k-fold cross-validation and break accuracy down per barrier."""
    cv = k_fold_cv(dataset, k, structure=structure, alpha=alpha, candidates=candidates, seed=seed)
    tallies: dict[str, list[int]] = {}
    for record, predicted in cv.outcomes:
        tally = tallies.setdefault(record.barrier, [0, 0])
        tally[0 if predicted == record.reaction else 1] += 1
    per_barrier = tuple(
        BarrierBreakdown(barrier, correct, incorrect)
        for barrier, (correct, incorrect) in sorted(tallies.items())
    )
    return EvalReport(cv=cv, per_barrier=per_barrier, n_records=len(dataset), k=k)
