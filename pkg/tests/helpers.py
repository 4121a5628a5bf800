"""Shared fixture builders and independent oracles for the test suite."""

import itertools
import random

import numpy as np

from walknotify import vocab
from walknotify.bayes import BayesNet, Cpt
from walknotify.geo import GeoPoint
from walknotify.store import ContentRecord, Fix, TimeWindow
from walknotify.vocab import Variable

#: Degrees of latitude per meter on the reference sphere (approx).
DEG_PER_M_LAT = 1.0 / 111_194.92664455873


def random_content_record(rng: random.Random, ident: str) -> ContentRecord:
    kind = rng.choice(vocab.KINDS)
    classes = vocab.BARRIER_CLASSES if kind == "barrier" else vocab.USEFUL_CLASSES
    window = None
    if rng.random() < 0.5:
        start = rng.randrange(0, 1439)
        window = TimeWindow(start, rng.randrange(start + 1, 1441))
    return ContentRecord(
        id=ident,
        kind=kind,
        category=rng.choice(vocab.CATEGORIES),
        barrier_class=rng.choice(classes),
        title=f"spot {ident}",
        comment=rng.choice(["", "steep and narrow", "crowded after 17:00", "広い歩道"]),
        tags=tuple(rng.sample(["station", "park", "shade", "night"], k=rng.randrange(0, 3))),
        photo_ref=rng.choice(["", f"photo-{ident}.jpg"]),
        time_window=window,
        location=GeoPoint(rng.uniform(-60, 60), rng.uniform(-180, 180)),
        submitter=f"user-{rng.randrange(5)}",
        created_at=float(rng.randrange(1_700_000_000, 1_800_000_000)),
    )


def barrier_at(ident: str, point: GeoPoint, barrier_class: str = "bicycles_on_sidewalk", **kwargs) -> ContentRecord:
    fields = dict(
        id=ident,
        kind="barrier",
        category=vocab.DEFAULT_CATEGORY.get(barrier_class, "dynamic"),
        barrier_class=barrier_class,
        title=f"barrier {ident}",
        comment="",
        tags=(),
        photo_ref="",
        time_window=None,
        location=point,
        submitter="tester",
        created_at=1_700_000_000.0,
    )
    fields.update(kwargs)
    return ContentRecord(**fields)


def fix_at(user_id: str, point: GeoPoint, at: float) -> Fix:
    return Fix(user_id=user_id, point=point, at=at)


def offset_point(origin: GeoPoint, north_m: float, east_m: float) -> GeoPoint:
    """Move approximately north_m/east_m meters from origin (flat-earth
    approximation, fine at test scales)."""
    import math

    lat = origin.lat + north_m * DEG_PER_M_LAT
    lon = origin.lon + east_m * DEG_PER_M_LAT / math.cos(math.radians(origin.lat))
    return GeoPoint(lat, lon)


# ---------------------------------------------------------------------------
# Bayesian-network oracles (independent of the variable-elimination path)


def random_net(rng: random.Random, max_vars: int = 8, max_states: int = 4, max_parents: int = 3) -> BayesNet:
    """A random DAG with random strictly-positive CPTs."""
    n_vars = rng.randint(2, max_vars)
    variables = [
        Variable(f"v{i}", tuple(f"s{j}" for j in range(rng.randint(2, max_states))))
        for i in range(n_vars)
    ]
    by_name = {v.name: v for v in variables}
    order = [v.name for v in variables]
    rng.shuffle(order)
    cpts = {}
    for pos, name in enumerate(order):
        pool = order[:pos]
        parents = tuple(sorted(rng.sample(pool, min(len(pool), rng.randint(0, max_parents)))))
        shape = tuple(len(by_name[p].states) for p in parents) + (len(by_name[name].states),)
        size = int(np.prod(shape))
        raw = np.array([rng.uniform(0.05, 1.0) for _ in range(size)]).reshape(shape)
        cpts[name] = Cpt(name, parents, raw / raw.sum(axis=-1, keepdims=True))
    return BayesNet(variables, cpts)


def build_joint(net: BayesNet) -> np.ndarray:
    """Materialize the full joint by explicit enumeration of every
    assignment (brute force; no factor machinery)."""
    names = list(net.variables)
    pos = {name: i for i, name in enumerate(names)}
    cards = [len(net.variables[name].states) for name in names]
    tables = {name: net.cpts[name].probs.tolist() for name in names}
    parents = {name: net.cpts[name].parents for name in names}
    joint = np.empty(cards)
    for combo in itertools.product(*(range(c) for c in cards)):
        p = 1.0
        for name in names:
            entry = tables[name]
            for parent in parents[name]:
                entry = entry[combo[pos[parent]]]
            p *= entry[combo[pos[name]]]
        joint[combo] = p
    return joint


def posterior_from_joint(net: BayesNet, joint: np.ndarray, evidence: dict, query: str) -> dict:
    """Posterior over ``query`` by slicing the enumerated joint."""
    names = list(net.variables)
    sliced = joint
    for axis, name in enumerate(names):
        if name in evidence:
            idx = net.variables[name].states.index(evidence[name])
            sliced = np.take(sliced, [idx], axis=axis)
    query_axis = names.index(query)
    other_axes = tuple(i for i in range(len(names)) if i != query_axis)
    vector = sliced.sum(axis=other_axes)
    vector = vector / vector.sum()
    return {state: float(vector[i]) for i, state in enumerate(net.variables[query].states)}


def enumerate_posterior(net: BayesNet, evidence: dict, query: str) -> dict:
    return posterior_from_joint(net, build_joint(net), evidence, query)


def random_evidence(rng: random.Random, net: BayesNet, query: str) -> dict:
    pool = [name for name in net.variables if name != query]
    chosen = rng.sample(pool, rng.randint(0, len(pool)))
    return {name: rng.choice(net.variables[name].states) for name in chosen}


# ---------------------------------------------------------------------------
# Shared end-to-end replay scenario


REPLAY_ORIGIN = GeoPoint(35.7100, 139.7700)


def fixture_net(noise: float = 0.05, n: int = 1500, seed: int = 101) -> BayesNet:
    """Deterministically trained model for end-to-end scenarios."""
    from walknotify.bayes import default_structure, learn_parameters
    from walknotify.sim import default_ground_truth, gen_dataset

    return learn_parameters(default_structure(), gen_dataset(default_ground_truth(noise), n, seed), alpha=1.0)


def replay_scenario():
    """1 km straight walk north with three barriers: a pedestrian bridge
    20 m off-path ahead (notifiable for an exercise walker), bicycles
    20 m off-path that are behind the walker whenever in range, and
    station stairs ahead that the exercise context neglects.

    Returns (route, contents, ctx).
    """
    from walknotify.selector import UserContext
    from walknotify.sim import Route

    route = Route((REPLAY_ORIGIN, offset_point(REPLAY_ORIGIN, 1000.0, 0.0)))
    contents = [
        barrier_at("bridge-ahead", offset_point(REPLAY_ORIGIN, 370.0, 20.0), barrier_class="pedestrian_bridge"),
        barrier_at("bicycles-behind", offset_point(REPLAY_ORIGIN, 125.0, -20.0), barrier_class="bicycles_on_sidewalk"),
        barrier_at("stairs-neglected", offset_point(REPLAY_ORIGIN, 700.0, 20.0), barrier_class="stairs_in_station"),
    ]
    ctx = UserContext("Fine", "other", "Little", "walk for exercise")
    return route, contents, ctx
