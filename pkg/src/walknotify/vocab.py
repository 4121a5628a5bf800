"""Controlled vocabularies: content classes, reaction names, and the
discrete variables used by the reaction model.

Every state name that appears in stored records, dataset files, or model
files is defined here so that validation has a single source of truth.
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Variable:
    """A named discrete variable with an ordered list of states."""

    name: str
    states: tuple[str, ...]

    def __post_init__(self) -> None:
        if len(self.states) < 2:
            raise ValueError(f"variable {self.name!r} needs at least 2 states")
        if len(set(self.states)) != len(self.states):
            raise ValueError(f"variable {self.name!r} has duplicate states")

    def index(self, state: str) -> int:
        try:
            return self.states.index(state)
        except ValueError:
            raise KeyError(f"{state!r} is not a state of {self.name!r}") from None


KIND_BARRIER = "barrier"
KIND_USEFUL = "useful"
KINDS = (KIND_BARRIER, KIND_USEFUL)

CATEGORIES = ("static", "dynamic")

BARRIER_CLASSES = (
    "stairs_in_station",
    "pedestrian_bridge",
    "bicycles_on_sidewalk",
    "bicycles_on_street",
    "road_without_sidewalk",
    "crowd_in_station",
    "street_people",
    "road_construction",
    "road_under_sun",
    "steep_stairs",
    "no_resting_place",
    "hawkers",
    "children_in_public_space",
    "space_without_people_night",
    "other",
)

USEFUL_CLASSES = (
    "police_box",
    "bench_in_shade",
    "park_map",
    "toilet",
    "resting_place",
    "restaurant",
    "vending_machine",
    "other",
)

NEGLECT = "neglect"

REACTIONS = (
    "proceed with caution",
    "detour",
    "escalator",
    "elevator",
    "change time slot",
    "across",
    NEGLECT,
)

WEATHER = Variable("weather", ("Fine", "Cloudy", "Rain"))
TEMPERATURE = Variable("temperature", ("30C+", "5C-", "other"))
LOCALITY = Variable("locality", ("Yes", "No", "Little"))
WILLINGNESS = Variable("willingness", ("walk for exercise", "not walk", "other"))
PURPOSE = Variable("purpose", ("errand", "stroll", "rehabilitation", "other"))
WALK_ABILITY = Variable("walk_ability", ("long", "short"))
BARRIER = Variable("barrier", BARRIER_CLASSES)
REACTION = Variable("reaction", REACTIONS)

#: All variables the model layer knows about, by name.  A network structure
#: may use any subset; the default training schema uses the six dataset
#: columns (weather, temperature, locality, willingness, barrier, reaction).
VARIABLES: dict[str, Variable] = {
    v.name: v
    for v in (WEATHER, TEMPERATURE, LOCALITY, WILLINGNESS, PURPOSE, WALK_ABILITY, BARRIER, REACTION)
}

#: Dataset file column order (header row of the CSV dataset format).
DATASET_COLUMNS = ("weather", "temperature", "locality", "willingness", "barrier", "reaction")

#: Conventional static/dynamic category for each barrier class.  This is a
#: convenience default for generators and fixtures; stored records carry
#: whatever category the submitter chose.
DEFAULT_CATEGORY: dict[str, str] = {
    "stairs_in_station": "static",
    "pedestrian_bridge": "static",
    "road_without_sidewalk": "static",
    "steep_stairs": "static",
    "no_resting_place": "static",
    "bicycles_on_sidewalk": "dynamic",
    "bicycles_on_street": "dynamic",
    "crowd_in_station": "dynamic",
    "street_people": "dynamic",
    "road_construction": "dynamic",
    "road_under_sun": "dynamic",
    "hawkers": "dynamic",
    "children_in_public_space": "dynamic",
    "space_without_people_night": "dynamic",
    "other": "dynamic",
}
