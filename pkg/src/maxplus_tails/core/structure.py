"""Precedence graph, communication classes and assumption checks."""

import heapq
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from src.maxplus_tails.models.network import NetworkModel, merge_normalized
from src.maxplus_tails.models.reports import AssumptionVerdict, StructureReport
from src.maxplus_tails.utils.logging import setup_logger

logger = setup_logger("maxplus-tails.structure")


@dataclass(frozen=True)
class PrecedenceGraph:
    """Directed graph on coordinates 0..s-1: edge (i, j) iff A[j][i] is not BOTTOM."""

    size: int
    successors: tuple

    @classmethod
    def from_support(cls, support: Sequence[Sequence[bool]]) -> "PrecedenceGraph":
        size = len(support)
        successors = tuple(
            tuple(j for j in range(size) if support[j][i]) for i in range(size)
        )
        return cls(size, successors)

    def has_edge(self, i: int, j: int) -> bool:
        return j in self.successors[i]

    @property
    def edges(self) -> List[tuple]:
        return [(i, j) for i in range(self.size) for j in self.successors[i]]

    def support(self) -> tuple:
        return tuple(
            tuple(self.has_edge(j, i) for j in range(self.size)) for i in range(self.size)
        )


def build_graph(model: NetworkModel) -> PrecedenceGraph:
    """
    Build the precedence graph of A.

    Diagonal entries are never BOTTOM, so every vertex carries a self-loop.
    """
    return PrecedenceGraph.from_support(model.support())


def _tarjan(graph: PrecedenceGraph) -> List[List[int]]:
    """Iterative Tarjan; components come out in reverse topological order."""
    index: Dict[int, int] = {}
    lowlink: Dict[int, int] = {}
    on_stack: Dict[int, int] = {}
    stack: List[int] = []
    components: List[List[int]] = []
    counter = 0

    for root in range(graph.size):
        if root in index:
            continue
        work = [(root, 0)]
        while work:
            v, next_child = work.pop()
            if next_child == 0:
                index[v] = lowlink[v] = counter
                counter += 1
                on_stack[v] = len(stack)
                stack.append(v)
            successors = graph.successors[v]
            descended = False
            for position in range(next_child, len(successors)):
                w = successors[position]
                if w not in index:
                    work.append((v, position + 1))
                    work.append((w, 0))
                    descended = True
                    break
                if w in on_stack:
                    lowlink[v] = min(lowlink[v], index[w])
            if descended:
                continue
            if lowlink[v] == index[v]:
                start = on_stack[v]
                component = stack[start:]
                del stack[start:]
                for node in component:
                    del on_stack[node]
                components.append(sorted(component))
            if work:
                parent = work[-1][0]
                lowlink[parent] = min(lowlink[parent], lowlink[v])
    return components


def communication_classes(graph: PrecedenceGraph) -> StructureReport:
    """
    Strongly connected components ordered so that C_l ⋖ C_m implies l <= m.

    Among classes ready at the same time the one holding the smallest coordinate
    comes first, so the numbering is deterministic.
    """
    components = _tarjan(graph)
    owner = [0] * graph.size
    for c, component in enumerate(components):
        for v in component:
            owner[v] = c

    downstream: List[set] = [set() for _ in components]
    indegree = [0] * len(components)
    for i, j in graph.edges:
        a, b = owner[i], owner[j]
        if a != b and b not in downstream[a]:
            downstream[a].add(b)
            indegree[b] += 1

    ready = [(components[c][0], c) for c in range(len(components)) if indegree[c] == 0]
    heapq.heapify(ready)
    topological: List[int] = []
    while ready:
        _, c = heapq.heappop(ready)
        topological.append(c)
        for b in downstream[c]:
            indegree[b] -= 1
            if indegree[b] == 0:
                heapq.heappush(ready, (components[b][0], b))

    renumber = {old: new for new, old in enumerate(topological)}
    classes = tuple(tuple(components[old]) for old in topological)
    class_of = tuple(renumber[owner[v]] for v in range(graph.size))

    d = len(classes)
    order = [[l == m for m in range(d)] for l in range(d)]
    for l in reversed(range(d)):
        for b in downstream[topological[l]]:
            m = renumber[b]
            order[l][m] = True
            for k in range(d):
                if order[m][k]:
                    order[l][k] = True

    permutation = tuple(v for cls in classes for v in cls)
    return StructureReport(
        support=graph.support(),
        classes=classes,
        class_of=class_of,
        order=tuple(tuple(row) for row in order),
        permutation=permutation,
    )


def analyze_structure(model: NetworkModel) -> StructureReport:
    return communication_classes(build_graph(model))


def _check_st(model: NetworkModel) -> AssumptionVerdict:
    bad = [i for i in range(model.s) if model.a[i][i].is_bottom]
    if bad:
        return AssumptionVerdict(
            "ST",
            False,
            "structural",
            "diagonal entries are -inf",
            {"coordinates": [i + 1 for i in bad]},
        )
    return AssumptionVerdict(
        "ST",
        True,
        "structural",
        "fixed support from symbolic entries; every diagonal entry is non-negative",
    )


def _check_sp(
    model: NetworkModel, samples: int, rng: np.random.Generator
) -> AssumptionVerdict:
    symbolic_rows = []
    for i in range(model.s):
        left = merge_normalized([entry.normalized() for entry in model.a[i]])
        right = merge_normalized([model.b[i].normalized(), frozenset({()})])
        symbolic_rows.append(left == right)
    if all(symbolic_rows):
        return AssumptionVerdict("SP", True, "symbolic", "A ⊗ 0 = B ⊕ 0 as expressions")

    sigma = model.sample_components(rng, samples)
    realized = model.evaluate_batch(sigma)
    for i in range(model.s):
        left = np.maximum.reduce([values for _, values in realized.a_rows[i]])
        b_values = realized.b[i]
        right = np.zeros(samples) if b_values is None else np.maximum(b_values, 0.0)
        mismatch = np.flatnonzero(left != right)
        if mismatch.size:
            k = int(mismatch[0])
            return AssumptionVerdict(
                "SP",
                False,
                "sampling",
                f"A ⊗ 0 differs from B ⊕ 0 in row {i + 1}",
                {
                    "row": i + 1,
                    "draw": k,
                    "sigma": sigma[k].tolist(),
                    "a_times_zero": float(left[k]),
                    "b_plus_zero": float(right[k]),
                },
            )
    return AssumptionVerdict(
        "SP",
        True,
        "sampling",
        f"A ⊗ 0 = B ⊕ 0 on {samples} draws (symbolic forms differ)",
    )


def _check_lt(model: NetworkModel) -> AssumptionVerdict:
    from src.maxplus_tails.core.decay import eta_of

    eta = eta_of(model)
    return AssumptionVerdict(
        "LT",
        eta > 0,
        "analytic",
        "eta = sup{theta : max_i E[exp(theta B_i)] < inf}",
        {"eta": "inf" if math.isinf(eta) else eta},
    )


def check_assumptions(
    model: NetworkModel,
    samples: int = 1000,
    rng: Optional[np.random.Generator] = None,
) -> Dict[str, AssumptionVerdict]:
    """
    Verdicts for (ST), (SP) and (LT).

    Failures are reported in the verdicts, never raised.

    Args:
        model: Validated network model
        samples: Draws used when (SP) cannot be decided symbolically
        rng: Generator for those draws

    Returns:
        Mapping assumption name -> verdict
    """
    if rng is None:
        rng = np.random.default_rng(0)
    verdicts = {
        "ST": _check_st(model),
        "SP": _check_sp(model, samples, rng),
        "LT": _check_lt(model),
    }
    for name, verdict in verdicts.items():
        if not verdict.passed:
            logger.warning(f"Assumption ({name}) fails for {model.name}: {verdict.detail}")
    return verdicts
