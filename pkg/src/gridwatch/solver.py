"""Minimum-cost full-coverage placement: exact branch-and-bound solver with a
greedy baseline and an exhaustive oracle.

The problem is weighted set cover: pick (sensor type, site) candidates so that
every in-area block is covered by at least one choice, minimizing the summed
install cost.  Covered sets are bitmasks over positions in the instance's
universe tuple, which keeps node expansion to integer AND/OR/popcount work.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

import numpy as np

from .catalog import SensorCatalog
from .coverage import CoverageTable
from .errors import Infeasible, TooLarge, ValidationError
from .mesh import DETECTABLE_TERRAINS

#: Default cap on explored branch-and-bound nodes.  Hitting it returns the
#: incumbent plan with proven_optimal=False instead of raising.
DEFAULT_NODE_BUDGET = 10_000_000

# Pruning slack: a node is cut only when its lower bound exceeds the incumbent
# by more than accumulated float drift could explain.  Equal-cost subtrees are
# therefore explored, which also lets the incumbent improve its tie-break key.
_PRUNE_REL = 1e-9


@dataclass(frozen=True)
class Candidate:
    """One selectable (sensor type, site) pairing, or an abstract covering set."""

    cid: str
    covered: int = field(repr=False)
    cost: float
    sensor: Optional[str] = None
    site: Optional[int] = None
    units: int = 1


@dataclass(frozen=True)
class PlacementInstance:
    """Universe of block ids plus the candidate covering sets over them."""

    universe: tuple
    candidates: tuple
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def n_elements(self) -> int:
        return len(self.universe)

    @property
    def full_mask(self) -> int:
        return (1 << len(self.universe)) - 1

    @classmethod
    def from_sets(cls, universe: Iterable, sets: Iterable, metadata: Optional[dict] = None) -> "PlacementInstance":
        """Build an instance from (cid, elements, cost) triples over an explicit universe."""
        uni = tuple(sorted(universe))
        pos = {u: i for i, u in enumerate(uni)}
        cands = []
        seen = set()
        for cid, elements, cost in sets:
            if cid in seen:
                raise ValidationError(f"duplicate candidate id {cid!r}")
            seen.add(cid)
            if not cost > 0:
                raise ValidationError(f"candidate {cid!r} has non-positive cost {cost}")
            mask = 0
            for el in elements:
                if el not in pos:
                    raise ValidationError(f"candidate {cid!r} covers {el!r} outside the universe")
                mask |= 1 << pos[el]
            cands.append(Candidate(cid=str(cid), covered=mask, cost=float(cost)))
        cands.sort(key=lambda c: c.cid)
        return cls(universe=uni, candidates=tuple(cands), metadata=dict(metadata or {}))

    @classmethod
    def from_coverage(cls, table: CoverageTable, sensor_names: Optional[Sequence[str]] = None) -> "PlacementInstance":
        """Instance over a coverage table's in-area blocks, optionally restricted to some sensor types."""
        mesh = table.mesh
        admitted = tuple(sorted(sensor_names)) if sensor_names is not None else tuple(sorted(table.catalog.names))
        unknown = set(admitted) - set(table.catalog.names)
        if unknown:
            raise ValidationError(f"sensor filter names not in catalog: {sorted(unknown)}")
        in_area = mesh.in_area
        uni = tuple(int(z) for z in np.nonzero(in_area)[0])
        n_blocks = mesh.n_blocks
        cands = []
        for entry in table.entries:
            if entry.sensor not in admitted:
                continue
            flags = _unpack_mask(entry.mask, n_blocks)
            packed = np.packbits(flags[in_area], bitorder="little")
            cands.append(
                Candidate(
                    cid=f"{entry.sensor}@{entry.site:06d}",
                    covered=int.from_bytes(packed.tobytes(), "little"),
                    cost=entry.install_cost,
                    sensor=entry.sensor,
                    site=entry.site,
                    units=entry.units,
                )
            )
        cands.sort(key=lambda c: c.cid)
        return cls(universe=uni, candidates=tuple(cands), metadata={"sensor_filter": admitted})


@dataclass(frozen=True)
class PlacementPlan:
    """A feasible assignment: chosen candidates, cost, and solver provenance."""

    chosen: tuple
    total_cost: float
    total_units: int
    multiplicity: tuple
    mode: str
    nodes_explored: int
    proven_optimal: bool
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def n_sites(self) -> int:
        return len(self.chosen)

    @property
    def covers_universe(self) -> bool:
        return all(m >= 1 for m in self.multiplicity)


def _bits(mask: int) -> list:
    out = []
    while mask:
        lsb = mask & -mask
        out.append(lsb.bit_length() - 1)
        mask ^= lsb
    return out


def _unpack_mask(mask: int, n: int) -> np.ndarray:
    raw = np.frombuffer(mask.to_bytes((n + 7) // 8, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].astype(bool)


def _make_plan(instance: PlacementInstance, chosen: Sequence[Candidate], mode: str, nodes: int, proven: bool, metadata=None) -> PlacementPlan:
    chosen = tuple(sorted(chosen, key=lambda c: c.cid))
    n = instance.n_elements
    multiplicity = [0] * n
    for c in chosen:
        for p in _bits(c.covered):
            multiplicity[p] += 1
    return PlacementPlan(
        chosen=chosen,
        total_cost=float(math.fsum(c.cost for c in chosen)),
        total_units=sum(c.units for c in chosen),
        multiplicity=tuple(multiplicity),
        mode=mode,
        nodes_explored=nodes,
        proven_optimal=proven,
        metadata=dict(metadata or {}),
    )


def _check_coverable(instance: PlacementInstance) -> None:
    union = 0
    for c in instance.candidates:
        union |= c.covered
    if union != instance.full_mask:
        missing = [instance.universe[p] for p in _bits(instance.full_mask & ~union)]
        raise Infeasible(f"no candidate covers block(s) {missing[:10]}{'...' if len(missing) > 10 else ''}")


def solve_greedy(instance: PlacementInstance) -> PlacementPlan:
    """Repeatedly pick the candidate with the lowest cost per newly covered block."""
    _check_coverable(instance)
    uncovered = instance.full_mask
    chosen = []
    while uncovered:
        best = None
        best_key = None
        for c in instance.candidates:
            gain = (c.covered & uncovered).bit_count()
            if gain == 0:
                continue
            key = (c.cost / gain, c.cid)
            if best_key is None or key < best_key:
                best, best_key = c, key
        if best is None:
            raise Infeasible("greedy selection stalled with blocks still uncovered")
        chosen.append(best)
        uncovered &= ~best.covered
    return _make_plan(instance, chosen, mode="greedy", nodes=0, proven=False)


def solve_brute(instance: PlacementInstance, max_candidates: int = 20) -> PlacementPlan:
    """Exhaustively scan all candidate subsets; the provenance oracle for solve_exact.

    Ties are broken by (fewer candidates, lexicographic candidate ids).
    """
    n = len(instance.candidates)
    if n > max_candidates:
        raise TooLarge(f"{n} candidates exceeds the exhaustive scan limit of {max_candidates}")
    _check_coverable(instance)
    if not instance.universe:
        return _make_plan(instance, (), mode="brute", nodes=1, proven=True)

    n_elem = instance.n_elements
    words = (n_elem + 63) // 64
    size = 1 << n
    subset = np.arange(size, dtype=np.uint64)
    cost = np.zeros(size, dtype=np.float64)
    cover = np.zeros((size, words), dtype=np.uint64)
    word_mask = (1 << 64) - 1
    for i, c in enumerate(instance.candidates):
        picked = (subset >> np.uint64(i)) & np.uint64(1) == 1
        cost[picked] += c.cost
        cand_words = np.array([(c.covered >> (64 * w)) & word_mask for w in range(words)], dtype=np.uint64)
        cover[picked] |= cand_words
    full_words = np.array([(instance.full_mask >> (64 * w)) & word_mask for w in range(words)], dtype=np.uint64)
    feasible = (cover == full_words).all(axis=1)
    best_cost = cost[feasible].min()
    ties = np.nonzero(feasible & (cost == best_cost))[0]

    def subset_key(mask):
        ids = [instance.candidates[i].cid for i in _bits(int(mask))]
        return (len(ids), ids)

    best_mask = min(ties.tolist(), key=subset_key)
    chosen = [instance.candidates[i] for i in _bits(int(best_mask))]
    return _make_plan(instance, chosen, mode="brute", nodes=size, proven=True)


def _dedup_identical(candidates: Sequence[Candidate]):
    """Keep only the cheapest (then lexicographically first) candidate per covered set."""
    best = {}
    for c in candidates:
        prev = best.get(c.covered)
        if prev is None or (c.cost, c.cid) < (prev.cost, prev.cid):
            best[c.covered] = c
    kept = sorted(best.values(), key=lambda c: c.cid)
    return kept, len(candidates) - len(kept)


def _drop_dominated(candidates: Sequence[Candidate], limit: int = 600):
    """Drop candidates whose covered set is contained in a no-more-expensive one.

    Quadratic, so only applied to moderately sized candidate pools.
    """
    if len(candidates) > limit:
        return list(candidates), 0
    order = sorted(candidates, key=lambda c: (c.cost, -c.covered.bit_count(), c.cid))
    kept = []
    for c in order:
        dominated = any(k.cost <= c.cost and (k.covered | c.covered) == k.covered for k in kept)
        if not dominated:
            kept.append(c)
    kept.sort(key=lambda c: c.cid)
    return kept, len(candidates) - len(kept)


def solve_exact(instance: PlacementInstance, node_budget: int = DEFAULT_NODE_BUDGET) -> PlacementPlan:
    """Cost-minimal placement via depth-first branch and bound.

    The incumbent is seeded by the greedy solution.  Each node branches on the
    uncovered block with the fewest covering candidates, trying coverers in
    order of marginal cost per newly covered block; sibling subtrees exclude
    the coverers already tried so the search partitions the space.  The lower
    bound is the larger of a per-block cheapest-marginal-cost sum and, at the
    root, a greedy dual bound.  Exceeding ``node_budget`` returns the incumbent
    with proven_optimal=False.
    """
    _check_coverable(instance)
    if not instance.universe:
        return _make_plan(instance, (), mode="exact", nodes=0, proven=True)
    n = instance.n_elements

    # Root reductions: duplicate covered sets, dominated sets, forced singletons.
    active, n_dupes = _dedup_identical(instance.candidates)
    active, n_dominated = _drop_dominated(active)
    forced = []
    remaining = instance.full_mask
    counts = None
    remaining_bools = None
    while remaining:
        active = [c for c in active if c.covered & remaining]
        counts = np.zeros(n, dtype=np.int64)
        for c in active:
            counts += _unpack_mask(c.covered & remaining, n)
        remaining_bools = _unpack_mask(remaining, n)
        singles = np.nonzero(remaining_bools & (counts == 1))[0]
        if singles.size == 0:
            break
        singles_mask = 0
        for p in singles.tolist():
            singles_mask |= 1 << p
        # A candidate touching a singleton block is its unique coverer.
        for c in active:
            if c.covered & singles_mask:
                forced.append(c)
                remaining &= ~c.covered

    nodes = 0
    budget_exceeded = False
    forced_cost = math.fsum(c.cost for c in forced)

    if remaining == 0:
        return _make_plan(instance, forced, mode="exact", nodes=0, proven=True,
                          metadata={"dedup_removed": n_dupes + n_dominated, "forced": len(forced)})

    # Residual greedy incumbent.
    incumbent = list(forced)
    uncovered = remaining
    while uncovered:
        best, best_key = None, None
        for c in active:
            gain = (c.covered & uncovered).bit_count()
            if gain:
                key = (c.cost / gain, c.cid)
                if best_key is None or key < best_key:
                    best, best_key = c, key
        incumbent.append(best)
        uncovered &= ~best.covered
    inc_cost = math.fsum(c.cost for c in incumbent)
    inc_key = (inc_cost, len(incumbent), tuple(sorted(c.cid for c in incumbent)))

    # Static per-block price: cheapest cost share among coverers of the block.
    price = np.full(n, np.inf)
    for c in active:
        eff = c.covered & remaining
        share = c.cost / eff.bit_count()
        flags = _unpack_mask(eff, n)
        price[flags] = np.minimum(price[flags], share)
    price = np.where(np.isfinite(price), price, 0.0)

    def bound_of(mask: int) -> float:
        return float(price[_unpack_mask(mask, n)].sum())

    root_bound = bound_of(remaining)

    # Greedy dual bound: greedy cost divided by the harmonic number of the
    # largest covering set is a valid lower bound on the residual optimum.
    h_max = sum(1.0 / k for k in range(1, max(c.covered.bit_count() for c in active) + 1))
    dual_bound = (inc_cost - forced_cost) / h_max
    root_lower = forced_cost + max(root_bound, dual_bound)

    order_positions = np.nonzero(remaining_bools)[0].tolist()
    branch_order = sorted(order_positions, key=lambda p: (int(counts[p]), p))
    coverer_cache = {}

    def coverers_of(p: int) -> list:
        got = coverer_cache.get(p)
        if got is None:
            bit = 1 << p
            got = [ci for ci, c in enumerate(active) if c.covered & bit]
            coverer_cache[p] = got
        return got

    def margin() -> float:
        return _PRUNE_REL * max(1.0, abs(inc_cost))

    stack = []
    if root_lower < inc_cost + margin():
        stack.append((remaining, 0, 0.0, ()))

    while stack:
        uncovered, excluded, cost, chosen_idx = stack.pop()
        nodes += 1
        if nodes > node_budget:
            budget_exceeded = True
            break
        if forced_cost + cost + bound_of(uncovered) >= inc_cost + margin():
            continue
        branch_pos = None
        for p in branch_order:
            if (uncovered >> p) & 1:
                branch_pos = p
                break
        children = []
        tried = 0
        for ci in coverers_of(branch_pos):
            if (excluded >> ci) & 1:
                continue
            c = active[ci]
            newly = c.covered & uncovered
            child_cost = cost + c.cost
            child_uncovered = uncovered & ~c.covered
            child_excluded = excluded | tried
            tried |= 1 << ci
            if child_uncovered == 0:
                total = forced_cost + child_cost
                cand_ids = tuple(sorted([active[i].cid for i in chosen_idx] + [c.cid] + [f.cid for f in forced]))
                key = (total, len(chosen_idx) + 1 + len(forced), cand_ids)
                if key < inc_key:
                    incumbent = list(forced) + [active[i] for i in chosen_idx] + [c]
                    inc_cost, inc_key = total, key
                continue
            if forced_cost + child_cost + bound_of(child_uncovered) >= inc_cost + margin():
                continue
            ratio = c.cost / newly.bit_count()
            children.append(((ratio, c.cid), (child_uncovered, child_excluded, child_cost, chosen_idx + (ci,))))
        children.sort(key=lambda item: item[0], reverse=True)
        stack.extend(node for _, node in children)

    return _make_plan(
        instance,
        incumbent,
        mode="exact",
        nodes=nodes,
        proven=not budget_exceeded,
        metadata={
            "dedup_removed": n_dupes + n_dominated,
            "forced": len(forced),
            "budget_exceeded": budget_exceeded,
            "root_lower_bound": root_lower,
        },
    )


def _site_cost_rate(spec) -> float:
    # Cost of a full 360-degree install per unit of reachable area.
    return spec.unit_price_usd * spec.fov_multiplier / (spec.range_km ** 2)


def _dominates(v, u) -> bool:
    if v.range_km < u.range_km:
        return False
    if any(v.detect[t] < u.detect[t] for t in DETECTABLE_TERRAINS):
        return False
    if _site_cost_rate(v) > _site_cost_rate(u):
        return False
    strict = (
        v.range_km > u.range_km
        or any(v.detect[t] > u.detect[t] for t in DETECTABLE_TERRAINS)
        or _site_cost_rate(v) < _site_cost_rate(u)
    )
    # Identical specs under different names: keep the lexicographically first.
    return strict or v.name < u.name


def dominance_filter(instance: PlacementInstance, catalog: SensorCatalog) -> PlacementInstance:
    """Drop candidates of sensor types strictly beaten on range, detection, and cost rate.

    A type is removed when another admitted type reaches at least as far, detects
    at least as well on every terrain, and equips a 360-degree site at no higher
    cost per unit of reachable area, with at least one of those strict.  Removed
    names are recorded in the returned instance's metadata.
    """
    present = sorted({c.sensor for c in instance.candidates if c.sensor is not None})
    specs = {name: catalog.get(name) for name in present}
    removed = {
        u for u in present
        if any(v != u and _dominates(specs[v], specs[u]) for v in present)
    }
    kept = tuple(c for c in instance.candidates if c.sensor is None or c.sensor not in removed)
    metadata = dict(instance.metadata)
    metadata["dominance_removed"] = tuple(sorted(removed))
    return PlacementInstance(universe=instance.universe, candidates=kept, metadata=metadata)
