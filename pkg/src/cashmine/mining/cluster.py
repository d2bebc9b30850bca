"""Clustering: Lloyd k-means, agglomerative merging, density-based DBSCAN.

All three work over the shared mixed-type distance and return a
``ClusterModel`` with dense cluster ids (DBSCAN additionally labels noise
-1).  Fits are deterministic: seeded initialization, fixed tie-breaking
rules, no reliance on set iteration order.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from ..errors import CutError, FitError
from ..tables import Table
from .features import NUMERIC, FeatureSpace, distance

KMEANS = "kmeans"
AGGLOMERATIVE_CUT = "agglomerative-cut"
DBSCAN = "dbscan"


@dataclass
class ClusterModel:
    method: str
    k: int
    space: FeatureSpace | None
    centroids: list[dict]          # centroid per cluster (medoids for DBSCAN)
    sizes: list[int]
    labels: list[int]              # training assignment per row, -1 = noise
    sse: float | None = None
    sse_history: list[float] = field(default_factory=list)
    noise: int = 0


def records_from_table(table: Table, space: FeatureSpace) -> list[dict]:
    """Rows as attribute dicts, numeric values coerced to float."""
    records = []
    numeric = set(space.numeric_names())
    indices = [(a.name, table.index_of(a.name)) for a in space.attributes]
    for row in table.rows:
        records.append({name: float(row[i]) if name in numeric else row[i]
                        for name, i in indices})
    return records


def _centroid(members: list[dict], space: FeatureSpace) -> dict:
    """Attribute-wise mean for numerics, mode for categoricals.

    Mode ties break on the lexicographically smallest value so the update
    step is deterministic.
    """
    centroid = {}
    for attr in space.attributes:
        values = [m[attr.name] for m in members]
        if attr.kind == NUMERIC:
            centroid[attr.name] = sum(values) / len(values)
        else:
            counts: dict = {}
            for v in values:
                counts[v] = counts.get(v, 0) + 1
            top = max(counts.values())
            centroid[attr.name] = min(v for v, c in counts.items() if c == top)
    return centroid


def _nearest(record: dict, centroids: list[dict], space: FeatureSpace) -> tuple[int, float]:
    """(cluster id, distance) of the closest centroid; ties to the lowest id."""
    best_id, best_d = 0, distance(record, centroids[0], space)
    for cid in range(1, len(centroids)):
        d = distance(record, centroids[cid], space)
        if d < best_d:
            best_id, best_d = cid, d
    return best_id, best_d


def _sse(records: list[dict], labels: list[int], centroids: list[dict],
         space: FeatureSpace) -> float:
    total = 0.0
    for record, label in zip(records, labels):
        d = distance(record, centroids[label], space)
        total += d * d
    return total


def _distinct(records: list[dict], space: FeatureSpace) -> list[dict]:
    seen = set()
    out = []
    for record in records:
        key = tuple(record[a.name] for a in space.attributes)
        if key not in seen:
            seen.add(key)
            out.append(record)
    return out


def _lloyd(records: list[dict], space: FeatureSpace, k: int, seed: int,
           max_iter: int) -> tuple[list[int], list[dict], float, list[float]]:
    rng = random.Random(seed)
    pool = _distinct(records, space)
    if len(pool) < k:
        raise FitError(f"need {k} distinct records for k-means init, "
                       f"have {len(pool)}")
    centroids = [dict(c) for c in rng.sample(pool, k)]

    labels: list[int] | None = None
    history: list[float] = []
    previous_sse: float | None = None
    for _ in range(max_iter):
        new_labels = [_nearest(r, centroids, space)[0] for r in records]

        # re-seed empty clusters with the point farthest from its centroid
        reseeded = False
        counts = [0] * k
        for label in new_labels:
            counts[label] += 1
        for empty in range(k):
            if counts[empty]:
                continue
            farthest, farthest_d = -1, -1.0
            for i, record in enumerate(records):
                if counts[new_labels[i]] <= 1:
                    continue
                d = distance(record, centroids[new_labels[i]], space)
                if d > farthest_d:
                    farthest, farthest_d = i, d
            if farthest < 0:
                continue
            counts[new_labels[farthest]] -= 1
            new_labels[farthest] = empty
            counts[empty] = 1
            reseeded = True

        converged = (new_labels == labels) and not reseeded
        labels = new_labels
        centroids = []
        for cid in range(k):
            members = [records[i] for i, lab in enumerate(labels) if lab == cid]
            centroids.append(_centroid(members, space))
        sse = _sse(records, labels, centroids, space)
        history.append(sse)
        # Lloyd iterations may never increase the objective
        assert previous_sse is None or sse <= previous_sse + 1e-9 * max(1.0, previous_sse)
        previous_sse = sse
        if converged:
            break
    return labels, centroids, previous_sse, history


def kmeans_fit(table: Table, space: FeatureSpace, k: int, seed: int = 0,
               max_iter: int = 100, n_restarts: int = 10) -> ClusterModel:
    """Best-of-``n_restarts`` Lloyd runs; the lowest final SSE wins.

    Deterministic per seed: restart seeds are drawn from one seeded stream
    and ties keep the earlier restart.
    """
    records = records_from_table(table, space)
    if k < 1:
        raise FitError(f"k must be >= 1: {k}")
    if k > len(records):
        raise FitError(f"k={k} exceeds n={len(records)}")
    if n_restarts < 1:
        raise FitError(f"n_restarts must be >= 1: {n_restarts}")

    rng = random.Random(seed)
    restart_seeds = [rng.getrandbits(63) for _ in range(n_restarts)]
    best = None
    for restart_seed in restart_seeds:
        labels, centroids, sse, history = _lloyd(records, space, k,
                                                 restart_seed, max_iter)
        if best is None or sse < best[2]:
            best = (labels, centroids, sse, history)
    labels, centroids, sse, history = best
    sizes = [0] * k
    for label in labels:
        sizes[label] += 1
    return ClusterModel(KMEANS, k, space, centroids, sizes, labels,
                        sse=sse, sse_history=history)


def cluster_assign(model: ClusterModel, record: dict) -> int:
    """Nearest centroid / representative; ties go to the lowest cluster id."""
    if not model.centroids:
        raise FitError("model has no centroids or representatives")
    numeric = set(model.space.numeric_names())
    coerced = {k: float(v) if k in numeric else v for k, v in record.items()}
    return _nearest(coerced, model.centroids, model.space)[0]


# --- agglomerative hierarchy -------------------------------------------------

@dataclass(frozen=True)
class Dendrogram:
    """Binary merge tree; leaves are row indices 0..n-1, merge i creates node n+i."""

    n_leaves: int
    merges: tuple[tuple[int, int, float], ...]   # (left node, right node, distance)


LINKAGES = ("single", "complete", "average")


def agglomerative_fit(table: Table, space: FeatureSpace,
                      linkage: str = "single") -> Dendrogram:
    """Bottom-up merging of the closest pair under the linkage rule.

    Ties break on the lowest (left, right) node-id pair.
    """
    if linkage not in LINKAGES:
        raise FitError(f"unknown linkage: {linkage}")
    records = records_from_table(table, space)
    n = len(records)
    if n < 1:
        raise FitError("cannot cluster an empty table")

    point_d = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            d = distance(records[i], records[j], space)
            point_d[i][j] = point_d[j][i] = d

    clusters: dict[int, list[int]] = {i: [i] for i in range(n)}
    merges: list[tuple[int, int, float]] = []
    next_node = n
    while len(clusters) > 1:
        best_pair, best_d = None, None
        active = sorted(clusters)
        for ai, left in enumerate(active):
            for right in active[ai + 1:]:
                cross = [point_d[p][q]
                         for p in clusters[left] for q in clusters[right]]
                if linkage == "single":
                    d = min(cross)
                elif linkage == "complete":
                    d = max(cross)
                else:
                    d = sum(cross) / len(cross)
                if best_d is None or d < best_d:
                    best_pair, best_d = (left, right), d
        left, right = best_pair
        merges.append((left, right, best_d))
        clusters[next_node] = clusters.pop(left) + clusters.pop(right)
        next_node += 1
    return Dendrogram(n, tuple(merges))


def dendrogram_cut(dendrogram: Dendrogram, k: int,
                   table: Table | None = None,
                   space: FeatureSpace | None = None) -> ClusterModel:
    """Stop after n-k merges; the remaining components are the clusters.

    Cluster ids are dense 0..k-1, ordered by each component's smallest leaf.
    Centroids are computed when the training table and space are supplied.
    """
    n = dendrogram.n_leaves
    if not 1 <= k <= n:
        raise CutError(f"k={k} out of range 1..{n}")
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    next_node = n
    for left, right, _ in dendrogram.merges[:n - k]:
        members[next_node] = members.pop(left) + members.pop(right)
        next_node += 1

    components = sorted(members.values(), key=min)
    labels = [0] * n
    for cid, component in enumerate(components):
        for leaf in component:
            labels[leaf] = cid
    sizes = [len(c) for c in components]

    centroids: list[dict] = []
    if table is not None and space is not None:
        records = records_from_table(table, space)
        for component in components:
            centroids.append(_centroid([records[i] for i in component], space))
    return ClusterModel(AGGLOMERATIVE_CUT, k, space, centroids, sizes, labels)


# --- DBSCAN -------------------------------------------------------------------

def dbscan_fit(table: Table, space: FeatureSpace, eps: float,
               min_pts: int) -> ClusterModel:
    """Density clustering: clusters are eps-connected components of core
    points plus reachable border points; everything else is noise (-1).

    A border point within eps of cores from several clusters attaches to the
    lowest cluster id, which makes the result independent of input order.
    """
    if eps <= 0:
        raise FitError(f"eps must be > 0: {eps}")
    if min_pts < 1:
        raise FitError(f"min_pts must be >= 1: {min_pts}")
    records = records_from_table(table, space)
    n = len(records)
    if n == 0:
        return ClusterModel(DBSCAN, 0, space, [], [], [])

    dist = [[0.0] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            d = distance(records[i], records[j], space)
            dist[i][j] = dist[j][i] = d
    neighbors = [[j for j in range(n) if dist[i][j] <= eps] for i in range(n)]
    core = [len(neighbors[i]) >= min_pts for i in range(n)]

    # connected components over core points
    component = [-1] * n
    comp_count = 0
    for start in range(n):
        if not core[start] or component[start] >= 0:
            continue
        stack = [start]
        component[start] = comp_count
        while stack:
            p = stack.pop()
            for q in neighbors[p]:
                if core[q] and component[q] < 0:
                    component[q] = comp_count
                    stack.append(q)
        comp_count += 1

    # components numbered by smallest core member for order independence
    order = sorted(range(comp_count),
                   key=lambda c: min(i for i in range(n) if component[i] == c))
    renumber = {old: new for new, old in enumerate(order)}

    labels = [-1] * n
    for i in range(n):
        if core[i]:
            labels[i] = renumber[component[i]]
    for i in range(n):
        if core[i]:
            continue
        reachable = [renumber[component[q]] for q in neighbors[i] if core[q]]
        if reachable:
            labels[i] = min(reachable)

    k = comp_count
    sizes = [0] * k
    for label in labels:
        if label >= 0:
            sizes[label] += 1
    noise = sum(1 for label in labels if label < 0)

    # medoid representative per cluster: least total distance, lowest index
    representatives = []
    for cid in range(k):
        member_ids = [i for i in range(n) if labels[i] == cid]
        best_i, best_total = member_ids[0], None
        for i in member_ids:
            total = sum(dist[i][j] for j in member_ids)
            if best_total is None or total < best_total:
                best_i, best_total = i, total
        representatives.append(dict(records[best_i]))

    return ClusterModel(DBSCAN, k, space, representatives, sizes, labels,
                        noise=noise)
