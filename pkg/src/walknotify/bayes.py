"""Discrete Bayesian network over the reaction-model variables.

Provides structure parsing, Laplace-smoothed parameter learning, exact
inference by variable elimination, candidate-masked reaction prediction,
and a k-fold cross-validation harness.

Networks are small (a handful of variables, a few states each), so CPTs
and intermediate factors are dense numpy arrays with one axis per
variable.
"""

from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from . import vocab
from .vocab import Variable


class UnknownState(ValueError):
    """A value is not in its variable's state list."""


class IncompleteAssignment(ValueError):
    """A full-joint query is missing variables."""


class ZeroEvidence(ValueError):
    """The supplied evidence has probability zero under the network."""


class UnknownBarrier(KeyError):
    """A barrier class has no candidate-reaction entry."""


class TooFewRecords(ValueError):
    """Not enough data (or folds) for cross-validation."""


# ---------------------------------------------------------------------------
# Structure


@dataclass(frozen=True)
class NetworkStructure:
    """A DAG skeleton: variables plus a parent list per variable."""

    variables: tuple[Variable, ...]
    parents: dict[str, tuple[str, ...]]

    def __post_init__(self) -> None:
        names = {v.name for v in self.variables}
        if len(names) != len(self.variables):
            raise ValueError("duplicate variable in structure")
        for child, parents in self.parents.items():
            if child not in names:
                raise ValueError(f"parent list for unknown variable {child!r}")
            for p in parents:
                if p not in names:
                    raise ValueError(f"{child!r} has unknown parent {p!r}")
            if len(set(parents)) != len(parents):
                raise ValueError(f"{child!r} has duplicate parents")
        missing = names - set(self.parents)
        if missing:
            raise ValueError(f"variables without parent entry: {sorted(missing)}")
        self.topological_order()  # raises on cycles

    def variable(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise KeyError(name)

    def topological_order(self) -> list[str]:
        remaining = {v.name: set(self.parents[v.name]) for v in self.variables}
        order: list[str] = []
        while remaining:
            ready = sorted(name for name, deps in remaining.items() if not deps)
            if not ready:
                raise ValueError(f"structure has a cycle among {sorted(remaining)}")
            for name in ready:
                order.append(name)
                del remaining[name]
            for deps in remaining.values():
                deps.difference_update(ready)
        return order


def parse_structure(text: str, registry: Mapping[str, Variable] = vocab.VARIABLES) -> NetworkStructure:
    """Parse a structure spec: one variable per line, optionally with
    parents after ``<-``::

        reaction
        weather <- reaction
        barrier <- reaction

    Variable names must exist in ``registry``.  ``#`` starts a comment.
    """
    variables: list[Variable] = []
    parents: dict[str, tuple[str, ...]] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "<-" in line:
            child_part, parent_part = line.split("<-", 1)
            child = child_part.strip()
            parent_names = tuple(p.strip() for p in parent_part.split(",") if p.strip())
        else:
            child = line
            parent_names = ()
        if child not in registry:
            raise ValueError(f"unknown variable {child!r} in structure spec")
        if child in parents:
            raise ValueError(f"variable {child!r} declared twice")
        variables.append(registry[child])
        parents[child] = parent_names
    return NetworkStructure(tuple(variables), parents)


def default_structure() -> NetworkStructure:
    """The shipped reaction-as-class structure (reaction is the parent of
    every observed variable)."""
    return parse_structure(_read_data_file("structure.txt"))


def _read_data_file(name: str) -> str:
    return resources.files("walknotify.data").joinpath(name).read_text(encoding="utf-8")


# ---------------------------------------------------------------------------
# Network


@dataclass(frozen=True)
class Cpt:
    """Conditional probability table for one variable.

    ``probs`` has one axis per parent (in ``parents`` order) plus a final
    axis over the child's states; every row along that final axis sums
    to 1.
    """

    child: str
    parents: tuple[str, ...]
    probs: np.ndarray

    def __post_init__(self) -> None:
        if np.any(self.probs < 0):
            raise ValueError(f"Cpt for {self.child!r} has negative entries")
        sums = self.probs.sum(axis=-1)
        if not np.allclose(sums, 1.0, atol=1e-9):
            raise ValueError(f"Cpt rows for {self.child!r} do not sum to 1")


class BayesNet:
    """An immutable trained network: variables, DAG, and one Cpt each."""

    def __init__(self, variables: Sequence[Variable], cpts: Mapping[str, Cpt]):
        self.variables: dict[str, Variable] = {v.name: v for v in variables}
        if len(self.variables) != len(variables):
            raise ValueError("duplicate variable names")
        if set(cpts) != set(self.variables):
            raise ValueError("every variable needs exactly one Cpt")
        for name, cpt in cpts.items():
            if cpt.child != name:
                raise ValueError(f"Cpt child {cpt.child!r} filed under {name!r}")
            expected = tuple(len(self.variables[p].states) for p in cpt.parents) + (
                len(self.variables[name].states),
            )
            if cpt.probs.shape != expected:
                raise ValueError(f"Cpt for {name!r} has shape {cpt.probs.shape}, expected {expected}")
        self.cpts: dict[str, Cpt] = dict(cpts)
        self.structure = NetworkStructure(
            tuple(variables), {name: cpt.parents for name, cpt in cpts.items()}
        )

    def state_index(self, var: str, state: str) -> int:
        if var not in self.variables:
            raise UnknownState(f"unknown variable {var!r}")
        try:
            return self.variables[var].index(state)
        except KeyError:
            raise UnknownState(f"{state!r} is not a state of {var!r}") from None

    def to_json_dict(self) -> dict:
        return {
            "variables": [{"name": v.name, "states": list(v.states)} for v in self.variables.values()],
            "cpts": [
                {"child": c.child, "parents": list(c.parents), "probs": c.probs.tolist()}
                for c in self.cpts.values()
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "BayesNet":
        variables = [Variable(v["name"], tuple(v["states"])) for v in data["variables"]]
        cpts = {
            c["child"]: Cpt(c["child"], tuple(c["parents"]), np.asarray(c["probs"], dtype=float))
            for c in data["cpts"]
        }
        return cls(variables, cpts)


def save_model(net: BayesNet, path: str | Path) -> None:
    Path(path).write_text(json.dumps(net.to_json_dict()), encoding="utf-8")


def load_model(path: str | Path) -> BayesNet:
    return BayesNet.from_json_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# Learning


def _record_assignment(record) -> Mapping[str, str]:
    if isinstance(record, Mapping):
        return record
    return record.to_assignment()


def learn_parameters(structure: NetworkStructure, records: Iterable, alpha: float = 1.0) -> BayesNet:
    """Estimate all CPTs from ``records`` with additive smoothing.

    Every row is ``(count + alpha) / (row_total + alpha * n_child_states)``.
    With ``alpha=0``, parent configurations that never occur get a uniform
    row (the data says nothing about them).

    Raises:
        UnknownState: a record value is outside its variable's states.
        IncompleteAssignment: a record lacks a structure variable.
    """
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    by_name = {v.name: v for v in structure.variables}
    counts = {
        name: np.zeros(
            tuple(len(by_name[p].states) for p in structure.parents[name]) + (len(by_name[name].states),)
        )
        for name in by_name
    }
    for record in records:
        assignment = _record_assignment(record)
        indices: dict[str, int] = {}
        for name, var in by_name.items():
            if name not in assignment:
                raise IncompleteAssignment(f"record lacks variable {name!r}")
            state = assignment[name]
            try:
                indices[name] = var.index(state)
            except KeyError:
                raise UnknownState(f"{state!r} is not a state of {name!r}") from None
        for name in by_name:
            idx = tuple(indices[p] for p in structure.parents[name]) + (indices[name],)
            counts[name][idx] += 1.0

    cpts = {}
    for name, table in counts.items():
        k = len(by_name[name].states)
        totals = table.sum(axis=-1, keepdims=True)
        denom = totals + alpha * k
        with np.errstate(invalid="ignore"):
            probs = (table + alpha) / denom
        probs = np.where(denom > 0, probs, 1.0 / k)
        cpts[name] = Cpt(name, structure.parents[name], probs)
    return BayesNet(structure.variables, cpts)


# ---------------------------------------------------------------------------
# Inference


def joint_probability(net: BayesNet, assignment: Mapping[str, str]) -> float:
    """Probability of one full assignment: the product over variables of
    the matching Cpt entries."""
    missing = set(net.variables) - set(assignment)
    if missing:
        raise IncompleteAssignment(f"assignment lacks {sorted(missing)}")
    indices = {var: net.state_index(var, assignment[var]) for var in net.variables}
    prob = 1.0
    for name, cpt in net.cpts.items():
        idx = tuple(indices[p] for p in cpt.parents) + (indices[name],)
        prob *= float(cpt.probs[idx])
    return prob


@dataclass
class _Factor:
    vars: tuple[str, ...]
    values: np.ndarray


def _factor_from_cpt(cpt: Cpt) -> _Factor:
    return _Factor(cpt.parents + (cpt.child,), cpt.probs)


def _restrict(factor: _Factor, var: str, state_idx: int) -> _Factor:
    axis = factor.vars.index(var)
    values = np.take(factor.values, state_idx, axis=axis)
    remaining = factor.vars[:axis] + factor.vars[axis + 1 :]
    return _Factor(remaining, values)


def _product(a: _Factor, b: _Factor) -> _Factor:
    out_vars = a.vars + tuple(v for v in b.vars if v not in a.vars)
    a_shape = a.values.shape + (1,) * (len(out_vars) - len(a.vars))
    a_vals = a.values.reshape(a_shape)
    perm = [b.vars.index(v) if v in b.vars else None for v in out_vars]
    b_axes = [p for p in perm if p is not None]
    b_vals = np.transpose(b.values, b_axes) if b.vars else b.values
    b_shape = tuple(
        b.values.shape[p] if p is not None else 1 for p in perm
    )
    b_vals = b_vals.reshape(b_shape)
    return _Factor(out_vars, a_vals * b_vals)


def _marginalize(factor: _Factor, var: str) -> _Factor:
    axis = factor.vars.index(var)
    return _Factor(factor.vars[:axis] + factor.vars[axis + 1 :], factor.values.sum(axis=axis))


def _greedy_order(hidden: set[str], factors: list[_Factor], net: BayesNet) -> list[str]:
    """Cheapest-next elimination order: repeatedly pick the hidden variable
    whose elimination produces the smallest intermediate factor, breaking
    ties by name for determinism."""
    scopes = [set(f.vars) for f in factors]
    remaining = set(hidden)
    order = []
    while remaining:
        best = None
        for var in sorted(remaining):
            joined: set[str] = set()
            for scope in scopes:
                if var in scope:
                    joined |= scope
            joined.discard(var)
            size = 1
            for v in joined:
                size *= len(net.variables[v].states)
            if best is None or size < best[0]:
                best = (size, var, joined)
        _, var, joined = best
        order.append(var)
        remaining.discard(var)
        scopes = [s for s in scopes if var not in s] + [joined]
    return order


def infer_posterior(
    net: BayesNet,
    evidence: Mapping[str, str],
    query: str,
    elimination_order: Optional[Sequence[str]] = None,
) -> dict[str, float]:
    """Exact posterior over ``query``'s states given ``evidence``, computed
    by variable elimination.

    ``elimination_order`` optionally fixes the order in which the hidden
    (non-query, non-evidence) variables are summed out; any permutation
    of exactly that set is accepted.

    Raises:
        UnknownState: unknown variable or state in the query/evidence.
        ZeroEvidence: the evidence has probability 0 under the network.
    """
    if query not in net.variables:
        raise UnknownState(f"unknown query variable {query!r}")
    if query in evidence:
        raise ValueError(f"query {query!r} is part of the evidence")
    evidence_idx = {var: net.state_index(var, state) for var, state in evidence.items()}

    factors = []
    for cpt in net.cpts.values():
        factor = _factor_from_cpt(cpt)
        for var, idx in evidence_idx.items():
            if var in factor.vars:
                factor = _restrict(factor, var, idx)
        factors.append(factor)

    hidden = set(net.variables) - set(evidence_idx) - {query}
    if elimination_order is None:
        order = _greedy_order(hidden, factors, net)
    else:
        if set(elimination_order) != hidden or len(elimination_order) != len(hidden):
            raise ValueError("elimination_order must be a permutation of the hidden variables")
        order = list(elimination_order)

    for var in order:
        related = [f for f in factors if var in f.vars]
        factors = [f for f in factors if var not in f.vars]
        if not related:
            continue
        product = related[0]
        for other in related[1:]:
            product = _product(product, other)
        factors.append(_marginalize(product, var))

    result = _Factor((), np.array(1.0))
    for factor in factors:
        result = _product(result, factor)
    values = result.values.reshape(-1) if result.vars else np.array([float(result.values)])
    if result.vars not in ((query,), ()):
        raise AssertionError(f"unexpected residual scope {result.vars}")
    total = float(values.sum())
    if total <= 0.0:
        raise ZeroEvidence("evidence has probability 0 under this network")
    states = net.variables[query].states
    return {state: float(values[i]) / total for i, state in enumerate(states)}


# ---------------------------------------------------------------------------
# Candidate map and reaction prediction


class CandidateMap:
    """Per-barrier admissible reactions, each list including neglect."""

    def __init__(self, mapping: Mapping[str, Sequence[str]]):
        self._map: dict[str, tuple[str, ...]] = {}
        for barrier, reactions in mapping.items():
            if barrier not in vocab.BARRIER_CLASSES:
                raise ValueError(f"unknown barrier class {barrier!r}")
            reactions = tuple(reactions)
            if len(reactions) < 2:
                raise ValueError(f"{barrier!r} needs at least 2 candidate reactions")
            if len(set(reactions)) != len(reactions):
                raise ValueError(f"{barrier!r} has duplicate candidates")
            if vocab.NEGLECT not in reactions:
                raise ValueError(f"{barrier!r} candidates must include {vocab.NEGLECT!r}")
            for r in reactions:
                if r not in vocab.REACTIONS:
                    raise ValueError(f"unknown reaction {r!r} for {barrier!r}")
            self._map[barrier] = reactions

    def __getitem__(self, barrier: str) -> tuple[str, ...]:
        try:
            return self._map[barrier]
        except KeyError:
            raise UnknownBarrier(barrier) from None

    def __contains__(self, barrier: str) -> bool:
        return barrier in self._map

    def __iter__(self):
        return iter(self._map)

    def __len__(self) -> int:
        return len(self._map)

    def items(self):
        return self._map.items()


def parse_candidates(text: str) -> CandidateMap:
    """Parse a candidate map: ``barrier_class: reaction, reaction, ...``
    per line, ``#`` comments allowed."""
    mapping: dict[str, list[str]] = {}
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if ":" not in line:
            raise ValueError(f"bad candidate line {raw!r}")
        barrier, reactions = line.split(":", 1)
        barrier = barrier.strip()
        if barrier in mapping:
            raise ValueError(f"barrier {barrier!r} listed twice")
        mapping[barrier] = [r.strip() for r in reactions.split(",") if r.strip()]
    return CandidateMap(mapping)


def default_candidates() -> CandidateMap:
    """The shipped per-barrier candidate sets."""
    return parse_candidates(_read_data_file("candidates.txt"))


def predict_reaction(
    net: BayesNet, features: Mapping[str, str], candidates: CandidateMap
) -> list[tuple[str, float]]:
    """Rank the admissible reactions for a feature record (no reaction).

    The posterior over reactions is masked to the barrier's candidate
    list, renormalized, and sorted by descending probability with
    lexicographic tie-breaking.
    """
    if "barrier" not in features:
        raise IncompleteAssignment("features lack 'barrier'")
    candidate_reactions = candidates[features["barrier"]]
    evidence = {
        var: state for var, state in features.items() if var in net.variables and var != "reaction"
    }
    posterior = infer_posterior(net, evidence, "reaction")
    masked = {r: posterior[r] for r in candidate_reactions}
    total = sum(masked.values())
    if total <= 0.0:
        raise ZeroEvidence("no posterior mass on any candidate reaction")
    return sorted(((r, p / total) for r, p in masked.items()), key=lambda rp: (-rp[1], rp[0]))


# ---------------------------------------------------------------------------
# Dataset records and files


@dataclass(frozen=True)
class ReactionRecord:
    """One labeled observation: context, barrier, and the user's reaction."""

    weather: str
    temperature: str
    locality: str
    willingness: str
    barrier: str
    reaction: str

    def __post_init__(self) -> None:
        for name in vocab.DATASET_COLUMNS:
            state = getattr(self, name)
            if state not in vocab.VARIABLES[name].states:
                raise UnknownState(f"{state!r} is not a state of {name!r}")

    def to_assignment(self) -> dict[str, str]:
        return {name: getattr(self, name) for name in vocab.DATASET_COLUMNS}

    def features(self) -> dict[str, str]:
        return {name: getattr(self, name) for name in vocab.DATASET_COLUMNS if name != "reaction"}


def write_dataset(records: Iterable[ReactionRecord], path: str | Path) -> None:
    """Write records as CSV with the canonical header row."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(vocab.DATASET_COLUMNS)
        for record in records:
            writer.writerow([getattr(record, name) for name in vocab.DATASET_COLUMNS])


def read_dataset(source: str | Path | io.TextIOBase) -> list[ReactionRecord]:
    """Read a CSV dataset (header row required, columns in any order)."""
    if isinstance(source, (str, Path)):
        with open(source, encoding="utf-8", newline="") as fh:
            return read_dataset(fh)
    reader = csv.DictReader(source)
    if reader.fieldnames is None or set(reader.fieldnames) != set(vocab.DATASET_COLUMNS):
        raise ValueError(f"dataset header must be exactly {','.join(vocab.DATASET_COLUMNS)}")
    records = []
    for row in reader:
        if any(v is None for v in row.values()) or None in row:
            raise ValueError(f"malformed dataset row {row!r}")
        records.append(ReactionRecord(**{k: v for k, v in row.items()}))
    return records


# ---------------------------------------------------------------------------
# Cross-validation


@dataclass(frozen=True)
class FoldResult:
    correct: int
    incorrect: int

    @property
    def accuracy(self) -> float:
        return self.correct / (self.correct + self.incorrect)


@dataclass(frozen=True)
class CvReport:
    """k-fold cross-validation outcome.

    ``outcomes`` holds every held-out (record, predicted reaction) pair,
    which downstream reports use for per-barrier breakdowns.
    """

    folds: tuple[FoldResult, ...]
    baseline: float
    seed: int
    alpha: float
    outcomes: tuple[tuple[ReactionRecord, str], ...] = ()

    @property
    def average_accuracy(self) -> float:
        return sum(f.accuracy for f in self.folds) / len(self.folds)


def random_baseline(records: Sequence[ReactionRecord], candidates: CandidateMap) -> float:
    """Expected accuracy of uniform guessing over each record's candidate
    set, computed exactly (mean of 1/|candidates|)."""
    if not records:
        raise TooFewRecords("no records")
    total = sum((Fraction(1, len(candidates[r.barrier])) for r in records), Fraction(0))
    return float(total / len(records))


def k_fold_cv(
    data: Sequence[ReactionRecord],
    k: int,
    structure: Optional[NetworkStructure] = None,
    alpha: float = 1.0,
    candidates: Optional[CandidateMap] = None,
    seed: int = 0,
) -> CvReport:
    """Shuffle (seeded), split into k contiguous folds (remainder to the
    last), train on each complement, and score top-candidate accuracy on
    the held-out fold."""
    if k < 2:
        raise TooFewRecords(f"k must be at least 2, got {k}")
    if len(data) < k:
        raise TooFewRecords(f"need at least {k} records for {k} folds, got {len(data)}")
    structure = structure or default_structure()
    candidates = candidates or default_candidates()

    shuffled = list(data)
    random.Random(seed).shuffle(shuffled)
    fold_size = len(shuffled) // k
    folds = [shuffled[i * fold_size : (i + 1) * fold_size] for i in range(k - 1)]
    folds.append(shuffled[(k - 1) * fold_size :])

    results = []
    outcomes: list[tuple[ReactionRecord, str]] = []
    for i, held_out in enumerate(folds):
        training = [r for j, fold in enumerate(folds) if j != i for r in fold]
        net = learn_parameters(structure, training, alpha=alpha)
        correct = 0
        for record in held_out:
            top, _ = predict_reaction(net, record.features(), candidates)[0]
            outcomes.append((record, top))
            if top == record.reaction:
                correct += 1
        results.append(FoldResult(correct, len(held_out) - correct))

    return CvReport(
        folds=tuple(results),
        baseline=random_baseline(shuffled, candidates),
        seed=seed,
        alpha=alpha,
        outcomes=tuple(outcomes),
    )
