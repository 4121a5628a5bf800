"""Content-selection pipeline: time filter, proximity, direction filter,
reaction prediction, and the notify-or-suppress decision, plus the
notification-timing classifier.

A barrier whose top-ranked candidate reaction is ``neglect`` is treated
as unnecessary for this user and suppressed.  Useful spots (police box,
toilets, ...) have no learned reactions; they are scored against a small
per-class prior keyed on how well the user knows the area.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass, replace
from typing import Mapping, Optional

from . import vocab
from .bayes import BayesNet, CandidateMap, UnknownBarrier, predict_reaction
from .geo import GeoPoint, in_sector, initial_bearing
from .store import ContentRecord, ContentStore, Fix, HeadingEstimate

NOTIFY = "notify"

TIMING_FRONT = "front"
TIMING_SAME = "same"
TIMING_BEHIND = "behind"
TIMING_MISALIGNED = "misaligned"
TIMING_CLASSES = (TIMING_FRONT, TIMING_SAME, TIMING_BEHIND, TIMING_MISALIGNED)

SUPPRESS_OUT_OF_SECTOR = "out_of_sector"
SUPPRESS_COOLDOWN = "cooldown"
SUPPRESS_NEGLECT = "neglect"
SUPPRESS_NOT_NEAREST = "not_nearest"

#: Probability that a useful spot is worth notifying, per class and per
#: locality answer ("does the user know this area?").  Extrapolation
#: beyond the trained barrier model: unfamiliar users get pointed at
#: police boxes and park maps, familiar users mostly are not.
DEFAULT_USEFUL_PRIORS: dict[str, dict[str, float]] = {
    "police_box": {"No": 0.9, "Little": 0.6, "Yes": 0.1},
    "park_map": {"No": 0.9, "Little": 0.55, "Yes": 0.1},
    "toilet": {"No": 0.8, "Little": 0.7, "Yes": 0.55},
    "bench_in_shade": {"No": 0.7, "Little": 0.6, "Yes": 0.45},
    "resting_place": {"No": 0.8, "Little": 0.65, "Yes": 0.45},
    "restaurant": {"No": 0.7, "Little": 0.5, "Yes": 0.2},
    "vending_machine": {"No": 0.6, "Little": 0.55, "Yes": 0.3},
    "other": {"No": 0.5, "Little": 0.5, "Yes": 0.5},
}


@dataclass(frozen=True)
class SelectorConfig:
    """Tunables for the selection pipeline (distances in meters)."""

    radius_m: float = 50.0
    sector_half_angle_deg: float = 50.0
    cooldown_min: float = 30.0
    same_threshold_m: float = 10.0
    stationary_threshold_m: float = 3.0
    poll_interval_s: float = 150.0
    max_query_radius_m: float = 2000.0
    utc_offset_min: int = 0

    def validate(self) -> None:
        for name in ("radius_m", "cooldown_min", "same_threshold_m", "poll_interval_s", "max_query_radius_m"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0 < self.sector_half_angle_deg <= 180:
            raise ValueError("sector_half_angle_deg must be in (0, 180]")
        if self.stationary_threshold_m < 0:
            raise ValueError("stationary_threshold_m must be >= 0")

    def with_overrides(self, overrides: Mapping[str, object]) -> "SelectorConfig":
        unknown = set(overrides) - {f for f in self.__dataclass_fields__}
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return replace(self, **overrides)


@dataclass(frozen=True)
class UserContext:
    """Evidence about the walker: environment plus profile."""

    weather: str
    temperature: str
    locality: str
    willingness: str
    purpose: Optional[str] = None
    walk_ability: Optional[str] = None

    def __post_init__(self) -> None:
        for name in ("weather", "temperature", "locality", "willingness", "purpose", "walk_ability"):
            state = getattr(self, name)
            if state is None:
                continue
            if state not in vocab.VARIABLES[name].states:
                raise ValueError(f"{state!r} is not a state of {name!r}")

    def evidence(self) -> dict[str, str]:
        """Non-empty fields as evidence for the reaction model."""
        pairs = {
            "weather": self.weather,
            "temperature": self.temperature,
            "locality": self.locality,
            "willingness": self.willingness,
            "purpose": self.purpose,
            "walk_ability": self.walk_ability,
        }
        return {k: v for k, v in pairs.items() if v is not None}


@dataclass(frozen=True)
class Notification:
    """A content selected for delivery, with ranked proposed reactions.

    ``reactions`` excludes neglect (it is not a way around anything);
    its probability is carried in ``neglect_probability`` and
    ``importance`` is its complement.
    """

    content: ContentRecord
    distance: float
    bearing: float
    importance: float
    reactions: tuple[tuple[str, float], ...]
    neglect_probability: float


@dataclass(frozen=True)
class Suppression:
    content_id: str
    reason: str


@dataclass(frozen=True)
class PollDecision:
    """Outcome of one poll: at most one notification, plus every content
    that was considered but suppressed, with the reason."""

    notification: Optional[Notification]
    suppressed: tuple[Suppression, ...]


def minute_of_day(at: float, utc_offset_min: int = 0) -> int:
    """Local minutes-from-midnight for a UTC epoch timestamp."""
    return int(((at + utc_offset_min * 60) % 86400) // 60)


def score(
    net: BayesNet,
    ctx: UserContext,
    content: ContentRecord,
    candidates: CandidateMap,
    useful_priors: Optional[Mapping[str, Mapping[str, float]]] = None,
) -> tuple[float, tuple[tuple[str, float], ...], float]:
    """Score one content for one user.

    Returns ``(importance, ranked_reactions_without_neglect,
    neglect_probability)`` where importance is 1 - P(neglect).
    """
    ranking = _full_ranking(net, ctx, content, candidates, useful_priors)
    neglect_probability = dict(ranking)[vocab.NEGLECT]
    reactions = tuple((r, p) for r, p in ranking if r != vocab.NEGLECT)
    return 1.0 - neglect_probability, reactions, neglect_probability


def _full_ranking(
    net: BayesNet,
    ctx: UserContext,
    content: ContentRecord,
    candidates: CandidateMap,
    useful_priors: Optional[Mapping[str, Mapping[str, float]]],
) -> list[tuple[str, float]]:
    """Candidate ranking including neglect; the top entry drives the
    notify-or-suppress decision."""
    if content.kind == vocab.KIND_USEFUL:
        priors = useful_priors if useful_priors is not None else DEFAULT_USEFUL_PRIORS
        try:
            p_notify = priors[content.barrier_class][ctx.locality]
        except KeyError:
            raise UnknownBarrier(content.barrier_class) from None
        pairs = [(NOTIFY, p_notify), (vocab.NEGLECT, 1.0 - p_notify)]
        return sorted(pairs, key=lambda rp: (-rp[1], rp[0]))
    features = dict(ctx.evidence())
    features["barrier"] = content.barrier_class
    return predict_reaction(net, features, candidates)


def classify_timing(
    content_point: GeoPoint,
    fix: Fix,
    heading: Optional[HeadingEstimate],
    config: SelectorConfig = SelectorConfig(),
) -> str:
    """Where the content lies relative to the walker: ``same`` within the
    same-location threshold, else ``front``/``behind`` by sector around
    the heading (or its reverse), else ``misaligned``.  Without a heading
    only ``same``/``misaligned`` are possible."""
    distance, bearing = _distance_and_bearing(fix.point, content_point)
    if distance <= config.same_threshold_m:
        return TIMING_SAME
    if heading is None or heading.heading is None:
        return TIMING_MISALIGNED
    if in_sector(heading.heading, bearing, config.sector_half_angle_deg):
        return TIMING_FRONT
    if in_sector((heading.heading + 180.0) % 360.0, bearing, config.sector_half_angle_deg):
        return TIMING_BEHIND
    return TIMING_MISALIGNED


def _distance_and_bearing(origin: GeoPoint, target: GeoPoint) -> tuple[float, float]:
    from .geo import haversine_distance

    distance = haversine_distance(origin, target)
    if (origin.lat, origin.lon) == (target.lat, target.lon):
        return 0.0, 0.0  # content exactly here counts as dead ahead
    return distance, initial_bearing(origin, target)


class SelectionPipeline:
    """Binds a store, a trained reaction model, and config into the poll
    pipeline shared by the HTTP service and the in-process simulator.

    The served model is an immutable snapshot; ``set_net`` swaps it
    atomically.  The cooldown table is the only mutable state and is
    guarded by a lock.
    """

    def __init__(
        self,
        store: ContentStore,
        net: BayesNet,
        candidates: Optional[CandidateMap] = None,
        config: SelectorConfig = SelectorConfig(),
        useful_priors: Optional[Mapping[str, Mapping[str, float]]] = None,
    ):
        from .bayes import default_candidates

        config.validate()
        self.store = store
        self.config = config
        self.candidates = candidates if candidates is not None else default_candidates()
        self.useful_priors = useful_priors
        self._net = net
        self._cooldown: dict[tuple[str, str], float] = {}
        self._lock = threading.Lock()

    @property
    def net(self) -> BayesNet:
        return self._net

    def set_net(self, net: BayesNet) -> None:
        """Swap the served model; in-flight polls keep their snapshot."""
        self._net = net

    # -- pipeline stages -------------------------------------------------

    def candidate_contents(
        self, fix: Fix, heading: Optional[HeadingEstimate], now_minute: Optional[int] = None
    ) -> list[tuple[ContentRecord, float, float]]:
        """Active contents in radius (and, when a heading is known, in the
        forward sector) that are not cooling down, nearest first."""
        candidates, _ = self._gather(fix, heading, now_minute)
        return candidates

    def _gather(
        self, fix: Fix, heading: Optional[HeadingEstimate], now_minute: Optional[int]
    ) -> tuple[list[tuple[ContentRecord, float, float]], list[Suppression]]:
        if now_minute is None:
            now_minute = minute_of_day(fix.at, self.config.utc_offset_min)
        heading_deg = heading.heading if heading is not None else None
        kept: list[tuple[ContentRecord, float, float]] = []
        excluded: list[Suppression] = []
        for record, distance in self.store.contents_near(fix.point, self.config.radius_m):
            if not record.active_at(now_minute):
                continue
            bearing = _distance_and_bearing(fix.point, record.location)[1]
            if heading_deg is not None and not in_sector(
                heading_deg, bearing, self.config.sector_half_angle_deg
            ):
                excluded.append(Suppression(record.id, SUPPRESS_OUT_OF_SECTOR))
                continue
            if self._cooling_down(fix.user_id, record.id, fix.at):
                excluded.append(Suppression(record.id, SUPPRESS_COOLDOWN))
                continue
            kept.append((record, distance, bearing))
        return kept, excluded

    def _cooling_down(self, user_id: str, content_id: str, at: float) -> bool:
        last = self._cooldown.get((user_id, content_id))
        return last is not None and (at - last) < self.config.cooldown_min * 60.0

    def poll(
        self,
        fix: Fix,
        heading: Optional[HeadingEstimate],
        ctx: UserContext,
        now_minute: Optional[int] = None,
    ) -> PollDecision:
        """Run the full pipeline for one fix and record the outcome.

        The nearest scored candidate whose top reaction is not neglect
        becomes the notification (and starts its cooldown); everything
        else considered is reported with a suppression reason.
        """
        net = self._net  # snapshot: a concurrent model swap must not mix nets within one poll
        candidates, suppressed = self._gather(fix, heading, now_minute)
        notification: Optional[Notification] = None
        for record, distance, bearing in candidates:
            ranking = _full_ranking(net, ctx, record, self.candidates, self.useful_priors)
            if ranking[0][0] == vocab.NEGLECT:
                suppressed.append(Suppression(record.id, SUPPRESS_NEGLECT))
                continue
            if notification is not None:
                suppressed.append(Suppression(record.id, SUPPRESS_NOT_NEAREST))
                continue
            neglect_probability = dict(ranking)[vocab.NEGLECT]
            notification = Notification(
                content=record,
                distance=distance,
                bearing=bearing,
                importance=1.0 - neglect_probability,
                reactions=tuple((r, p) for r, p in ranking if r != vocab.NEGLECT),
                neglect_probability=neglect_probability,
            )
        if notification is not None:
            with self._lock:
                self._cooldown[(fix.user_id, notification.content.id)] = fix.at
        return PollDecision(notification, tuple(suppressed))

    def decide(
        self,
        fix: Fix,
        heading: Optional[HeadingEstimate],
        ctx: UserContext,
        now_minute: Optional[int] = None,
    ) -> Optional[Notification]:
        """The poll outcome reduced to its notification (if any)."""
        return self.poll(fix, heading, ctx, now_minute).notification
