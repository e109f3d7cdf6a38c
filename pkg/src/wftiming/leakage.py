"""Feature information-leakage estimation via kernel density modeling.

Per-site feature distributions are modeled with Gaussian-kernel KDEs
(Silverman bandwidths with a small floor). Leakage of a feature F about the
visited site W is I(F;W) = H(W) - E_f[H(W|f)] in bits under a uniform site
prior, with the expectation taken by Monte Carlo over the equal-weight
mixture of the per-site densities.

Redundancy between features is scored with a normalized mutual information
in [0, 1]: I(A;B) / min(I(A;A), I(B;B)), every term estimated by Monte
Carlo against 2-D KDEs over the paired samples. Normalizing by the self-MI
(the KDE analogue of the entropy H(A) = I(A;A), estimated with the same
smoothing and the same draws) keeps an exact duplicate at score 1.0 at any
sample size, which a differential-entropy denominator does not. Scores feed
a greedy duplicate filter (threshold 0.90) and single-linkage clustering
(threshold 0.40); clustered features enter joint category estimates through
multivariate KDEs while the rest are modeled independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

DEFAULT_MC_SAMPLES = 5000
REDUNDANCY_THRESHOLD = 0.90
CLUSTERING_THRESHOLD = 0.40
BANDWIDTH_FLOOR = 1e-6
CLUSTER_DIM_CAP = 8

# Entropy floor (bits) for the redundancy-score denominator.
_ENTROPY_FLOOR = 1e-2
_LOG2E = math.log2(math.e)


class ClusterSizeError(ValueError):
    """A cluster exceeds the multivariate KDE dimension cap."""


def _silverman_1d(data: np.ndarray, floor: float) -> tuple[float, bool]:
    n = len(data)
    sigma = float(np.std(data, ddof=1))
    iqr = float(np.subtract(*np.percentile(data, [75, 25])))
    scales = [s for s in (sigma, iqr / 1.34) if s > 0]
    if not scales:
        return floor, True
    return max(0.9 * min(scales) * n ** (-1 / 5), floor), False


class Kde:
    """Gaussian product-kernel density over n samples in d dimensions."""

    def __init__(self, data: np.ndarray, bandwidths: np.ndarray, degenerate: bool):
        self.data = data
        self.bandwidths = bandwidths
        self.degenerate = degenerate

    @classmethod
    def fit(cls, samples, floor: float = BANDWIDTH_FLOOR) -> "Kde":
        data = np.asarray(samples, dtype=np.float64)
        squeeze = data.ndim == 1
        if squeeze:
            data = data[:, None]
        n, d = data.shape
        if n < 2:
            raise ValueError(f"KDE needs at least 2 samples, got {n}")
        degenerate = False
        bw = np.empty(d)
        if d == 1:
            bw[0], degenerate = _silverman_1d(data[:, 0], floor)
        else:
            factor = (4.0 / (d + 2)) ** (1.0 / (d + 4)) * n ** (-1.0 / (d + 4))
            for j in range(d):
                sigma = float(np.std(data[:, j], ddof=1))
                if sigma <= 0:
                    degenerate = True
                    bw[j] = floor
                else:
                    bw[j] = max(sigma * factor, floor)
        kde = cls(data=data, bandwidths=bw, degenerate=degenerate)
        kde._squeeze = squeeze
        return kde

    @property
    def dim(self) -> int:
        return self.data.shape[1]

    def logpdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.ndim == 1 and self.dim == 1:
            x = x[:, None]
        n, d = self.data.shape
        const = -np.sum(np.log(self.bandwidths)) - 0.5 * d * math.log(2 * math.pi)
        out = np.empty(len(x))
        step = max(1, int(2**20 // max(n, 1)))
        for lo in range(0, len(x), step):
            block = x[lo : lo + step]
            z = (block[:, None, :] - self.data[None, :, :]) / self.bandwidths
            logk = -0.5 * np.sum(z * z, axis=2)
            m = logk.max(axis=1)
            out[lo : lo + step] = (
                m + np.log(np.exp(logk - m[:, None]).sum(axis=1))
            ) + const - math.log(n)
        return out

    def sample(self, rng: np.random.Generator, m: int) -> np.ndarray:
        idx = rng.integers(len(self.data), size=m)
        out = self.data[idx] + rng.standard_normal((m, self.dim)) * self.bandwidths
        return out[:, 0] if getattr(self, "_squeeze", False) else out


def kde_fit(samples, floor: float = BANDWIDTH_FLOOR) -> Kde:
    """Fit a density to one feature's samples (flags all-equal input)."""
    return Kde.fit(samples, floor)


def _as_rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def _conditional_entropy_bits(log_dens: np.ndarray) -> np.ndarray:
    """Per-sample H(W|f) in bits from an (n_sites, mc) log-density matrix."""
    m = log_dens.max(axis=0)
    shifted = np.exp(log_dens - m)
    post = shifted / shifted.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(post > 0, post * np.log2(post), 0.0)
    return -terms.sum(axis=0)


def individual_leakage(
    samples_by_site: Mapping[int, Sequence[float]],
    mc_samples: int = DEFAULT_MC_SAMPLES,
    seed=0,
) -> float:
    """Bits of information one feature leaks about the visited site.

    Sites get a uniform prior; the Monte Carlo expectation draws from the
    equal-weight mixture of the per-site KDEs. The estimate is clamped to
    [0, log2(number of sites)].
    """
    sites = sorted(samples_by_site)
    if len(sites) < 2:
        raise ValueError("leakage needs at least 2 sites")
    for site in sites:
        if len(samples_by_site[site]) < 2:
            raise ValueError(f"site {site} has fewer than 2 samples")
    rng = _as_rng(seed)
    kdes = [Kde.fit(np.asarray(samples_by_site[s], dtype=np.float64)) for s in sites]
    draws = _mixture_draws(kdes, rng, mc_samples)
    log_dens = np.stack([k.logpdf(draws) for k in kdes])
    h_given_f = _conditional_entropy_bits(log_dens)
    bits = math.log2(len(sites)) - float(h_given_f.mean())
    return float(np.clip(bits, 0.0, math.log2(len(sites))))


def _mixture_draws(kdes: list[Kde], rng: np.random.Generator, mc: int) -> np.ndarray:
    counts = np.bincount(rng.integers(len(kdes), size=mc), minlength=len(kdes))
    parts = [k.sample(rng, int(c)) for k, c in zip(kdes, counts) if c]
    return np.concatenate(parts)


# --- pairwise redundancy scoring ----------------------------------------
#
# All pairs in one filter/cluster run share the same Monte Carlo draws: a
# resample index t and two standard-normal offsets per draw. A draw from
# the 2-D KDE of pair (i, j) is then (x_i[t] + h_i*e1, x_j[t] + h_j*e2),
# and every density term reduces to row means of per-feature kernel
# matrices, which makes scoring one feature against many cheap.


@dataclass
class _SharedDraws:
    t: np.ndarray
    e1: np.ndarray
    e2: np.ndarray


@dataclass
class _FeaturePack:
    """Kernel matrices of one feature against the shared draws."""

    k1: np.ndarray  # (mc, n) float32, first-member kernels
    k2: np.ndarray  # (mc, n) float32, second-member kernels
    log_m1: np.ndarray  # log row means of k1
    log_m2: np.ndarray
    self_mi: float
    degenerate: bool


def _kernel_matrix(x: np.ndarray, h: float, points: np.ndarray) -> np.ndarray:
    z = (points[:, None] - x[None, :]) / h
    return np.exp(-0.5 * z * z).astype(np.float32)


def _pack_feature(x: np.ndarray, draws: _SharedDraws, floor: float) -> _FeaturePack:
    h, degenerate = _silverman_1d(x, floor)
    a = x[draws.t] + h * draws.e1
    b = x[draws.t] + h * draws.e2
    k1 = _kernel_matrix(x, h, a)
    k2 = _kernel_matrix(x, h, b)
    log_m1 = np.log(k1.mean(axis=1, dtype=np.float64))
    log_m2 = np.log(k2.mean(axis=1, dtype=np.float64))
    pack = _FeaturePack(k1, k2, log_m1, log_m2, 0.0, degenerate)
    pack.self_mi = _mi_bits(pack, pack)
    return pack


def _mi_bits(first: _FeaturePack, second: _FeaturePack) -> float:
    joint = np.einsum("su,su->s", first.k1, second.k2, dtype=np.float64)
    joint /= first.k1.shape[1]
    with np.errstate(divide="ignore"):
        log_joint = np.log(joint)
    mi_nats = float(np.mean(log_joint - first.log_m1 - second.log_m2))
    return mi_nats * _LOG2E


def _score(first: _FeaturePack, second: _FeaturePack) -> float:
    denom = max(min(first.self_mi, second.self_mi), _ENTROPY_FLOOR)
    return float(np.clip(_mi_bits(first, second) / denom, 0.0, 1.0))


def pairwise_mi(
    a: Sequence[float],
    b: Sequence[float],
    mc_samples: int = DEFAULT_MC_SAMPLES,
    seed=0,
) -> float:
    """Normalized redundancy score in [0, 1] between two paired features."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"paired samples differ in length: {a.shape} vs {b.shape}")
    if a.ndim != 1 or len(a) < 2:
        raise ValueError("need 1-D paired samples of length >= 2")
    rng = _as_rng(seed)
    draws = _SharedDraws(
        t=rng.integers(len(a), size=mc_samples),
        e1=rng.standard_normal(mc_samples),
        e2=rng.standard_normal(mc_samples),
    )
    pack_a = _pack_feature(a, draws, BANDWIDTH_FLOOR)
    pack_b = _pack_feature(b, draws, BANDWIDTH_FLOOR)
    return _score(pack_a, pack_b)


@dataclass(frozen=True)
class RedundancyResult:
    kept: tuple[int, ...]
    removed: tuple[tuple[int, int, float], ...]  # (removed, matched kept, score)


def redundancy_filter(
    matrix: np.ndarray,
    threshold: float = REDUNDANCY_THRESHOLD,
    mc_samples: int = DEFAULT_MC_SAMPLES,
    seed=0,
) -> RedundancyResult:
    """Greedily drop features that share >= threshold information with a kept one.

    Features are visited in column order; each candidate is scored against
    the kept set (in kept order) and removed on the first match, so removal
    order is the input order.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    n, n_feat = matrix.shape
    rng = _as_rng(seed)
    draws = _SharedDraws(
        t=rng.integers(n, size=mc_samples),
        e1=rng.standard_normal(mc_samples),
        e2=rng.standard_normal(mc_samples),
    )
    kept: list[int] = []
    packs: dict[int, _FeaturePack] = {}
    removed: list[tuple[int, int, float]] = []
    for j in range(n_feat):
        pack_j = _pack_feature(matrix[:, j], draws, BANDWIDTH_FLOOR)
        match = None
        for i in kept:
            score = _score(packs[i], pack_j)
            if score >= threshold:
                match = (j, i, score)
                break
        if match is None:
            kept.append(j)
            pack_j.k2 = np.empty(0, dtype=np.float32)  # only k1 is reused
            packs[j] = pack_j
        else:
            removed.append(match)
    return RedundancyResult(kept=tuple(kept), removed=tuple(removed))


def pairwise_score_matrix(
    matrix: np.ndarray,
    columns: Sequence[int] | None = None,
    mc_samples: int = DEFAULT_MC_SAMPLES,
    seed=0,
) -> np.ndarray:
    """Full redundancy score matrix over the selected columns (shared draws)."""
    matrix = np.asarray(matrix, dtype=np.float64)
    cols = list(range(matrix.shape[1])) if columns is None else list(columns)
    rng = _as_rng(seed)
    draws = _SharedDraws(
        t=rng.integers(matrix.shape[0], size=mc_samples),
        e1=rng.standard_normal(mc_samples),
        e2=rng.standard_normal(mc_samples),
    )
    packs = [_pack_feature(matrix[:, c], draws, BANDWIDTH_FLOOR) for c in cols]
    m = len(cols)
    scores = np.eye(m)
    for a in range(m):
        for b in range(a + 1, m):
            scores[a, b] = scores[b, a] = _score(packs[a], packs[b])
    return scores


def cluster_features(
    matrix: np.ndarray,
    columns: Sequence[int],
    threshold: float = CLUSTERING_THRESHOLD,
    mc_samples: int = DEFAULT_MC_SAMPLES,
    seed=0,
) -> tuple[list[list[int]], list[int]]:
    """Single-linkage grouping of features with pairwise score >= threshold.

    Returns (clusters of size >= 2, independent singletons), both in terms
    of the original column indices.
    """
    cols = list(columns)
    scores = pairwise_score_matrix(matrix, cols, mc_samples, seed)
    parent = list(range(len(cols)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a in range(len(cols)):
        for b in range(a + 1, len(cols)):
            if scores[a, b] >= threshold:
                parent[find(a)] = find(b)
    groups: dict[int, list[int]] = {}
    for i, col in enumerate(cols):
        groups.setdefault(find(i), []).append(col)
    clusters = sorted(
        [sorted(g) for g in groups.values() if len(g) > 1], key=lambda g: g[0]
    )
    independents = sorted(g[0] for g in groups.values() if len(g) == 1)
    return clusters, independents


def joint_leakage(
    samples_by_site: Mapping[int, np.ndarray],
    clusters: Iterable[Sequence[int]] = (),
    mc_samples: int = DEFAULT_MC_SAMPLES,
    seed=0,
    dim_cap: int = CLUSTER_DIM_CAP,
    individual_bits: Sequence[float] | None = None,
) -> float:
    """Bits a feature set jointly leaks about the visited site.

    samples_by_site maps site -> (instances, features) arrays with a shared
    column layout. Columns grouped in `clusters` are modeled with one
    multivariate KDE per site; the remaining columns are modeled as
    independent 1-D densities. Clusters wider than dim_cap are reduced to
    their highest-leaking representatives when individual_bits is supplied
    and rejected otherwise.
    """
    sites = sorted(samples_by_site)
    if len(sites) < 2:
        raise ValueError("leakage needs at least 2 sites")
    mats = {}
    for s in sites:
        arr = np.asarray(samples_by_site[s], dtype=np.float64)
        mats[s] = arr[:, None] if arr.ndim == 1 else arr
    n_cols = mats[sites[0]].shape[1]
    if n_cols == 0:
        raise ValueError("empty feature category")
    if any(m.shape[1] != n_cols for m in mats.values()):
        raise ValueError("sites disagree on the number of feature columns")
    cluster_list = [list(c) for c in clusters]
    for idx, cluster in enumerate(cluster_list):
        if len(cluster) > dim_cap:
            if individual_bits is None:
                raise ClusterSizeError(
                    f"cluster of {len(cluster)} features exceeds the KDE dimension "
                    f"cap ({dim_cap}); reduce dimensionality by supplying "
                    "individual_bits so the top-leaking representatives are kept"
                )
            ranked = sorted(cluster, key=lambda c: (-individual_bits[c], c))
            cluster_list[idx] = sorted(ranked[:dim_cap])
    clustered = {c for cluster in cluster_list for c in cluster}
    components: list[list[int]] = list(cluster_list)
    components.extend([c] for c in range(n_cols) if c not in clustered)

    rng = _as_rng(seed)
    n_sites = len(sites)
    site_kdes = [
        [Kde.fit(mats[s][:, comp]) for comp in components] for s in sites
    ]
    counts = np.bincount(rng.integers(n_sites, size=mc_samples), minlength=n_sites)
    comp_draws = [
        np.concatenate(
            [site_kdes[w][ci].sample(rng, int(c)) for w, c in enumerate(counts) if c]
        )
        for ci in range(len(components))
    ]
    log_dens = np.zeros((n_sites, mc_samples))
    for w in range(n_sites):
        for ci in range(len(components)):
            log_dens[w] += site_kdes[w][ci].logpdf(comp_draws[ci])
    h_given_f = _conditional_entropy_bits(log_dens)
    bits = math.log2(n_sites) - float(h_given_f.mean())
    return float(np.clip(bits, 0.0, math.log2(n_sites)))


# --- whole-matrix analysis ------------------------------------------------


@dataclass(frozen=True)
class LeakageConfig:
    mc_samples: int = DEFAULT_MC_SAMPLES
    redundancy_threshold: float = REDUNDANCY_THRESHOLD
    clustering_threshold: float = CLUSTERING_THRESHOLD
    dim_cap: int = CLUSTER_DIM_CAP
    seed: int = 0


@dataclass
class LeakageReport:
    feature_bits: list[float]
    feature_category: list[str]
    degenerate: list[bool]
    kept: list[int]
    removed: list[tuple[int, int, float]]
    clusters: list[list[int]]
    independents: list[int]
    category_bits: dict[str, float]
    config: LeakageConfig = field(default_factory=LeakageConfig)

    def to_dict(self) -> dict:
        return {
            "individual": [
                {
                    "feature": i,
                    "category": self.feature_category[i],
                    "bits": self.feature_bits[i],
                    "degenerate": self.degenerate[i],
                }
                for i in range(len(self.feature_bits))
            ],
            "redundant": [
                {"removed": r, "matched": m, "score": s}
                for r, m, s in self.removed
            ],
            "clusters": self.clusters,
            "independents": self.independents,
            "joint": self.category_bits,
            "config": {
                "mc_samples": self.config.mc_samples,
                "redundancy_threshold": self.config.redundancy_threshold,
                "clustering_threshold": self.config.clustering_threshold,
                "dim_cap": self.config.dim_cap,
                "seed": self.config.seed,
            },
        }


def _group_by_site(
    matrix: np.ndarray, labels: np.ndarray, cols: Sequence[int]
) -> dict[int, np.ndarray]:
    return {
        int(site): matrix[np.flatnonzero(labels == site)][:, list(cols)]
        for site in np.unique(labels)
    }


def analyze_matrix(
    matrix: np.ndarray,
    labels: Sequence[int],
    categories: Mapping[str, Sequence[int]],
    config: LeakageConfig = LeakageConfig(),
) -> LeakageReport:
    """Run the full pipeline: individual leakage, redundancy, clusters, joints.

    Every per-feature estimate draws from its own stream seeded by
    (config.seed, feature index), so results do not depend on evaluation
    order.
    """
    matrix = np.asarray(matrix, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n_feat = matrix.shape[1]
    col_category = ["" for _ in range(n_feat)]
    for name, cols in categories.items():
        for c in cols:
            col_category[c] = name

    feature_bits: list[float] = []
    degenerate: list[bool] = []
    for j in range(n_feat):
        by_site = {
            int(s): matrix[labels == s, j] for s in np.unique(labels)
        }
        degenerate.append(
            all(np.ptp(v) == 0 for v in by_site.values())
        )
        feature_bits.append(
            individual_leakage(
                by_site,
                mc_samples=config.mc_samples,
                seed=np.random.default_rng((config.seed, 1, j)),
            )
        )

    filt = redundancy_filter(
        matrix,
        threshold=config.redundancy_threshold,
        mc_samples=config.mc_samples,
        seed=np.random.default_rng((config.seed, 2)),
    )
    clusters, independents = cluster_features(
        matrix,
        filt.kept,
        threshold=config.clustering_threshold,
        mc_samples=config.mc_samples,
        seed=np.random.default_rng((config.seed, 3)),
    )

    category_bits: dict[str, float] = {}
    for ci, (name, cols) in enumerate(sorted(categories.items())):
        kept_cols = [c for c in cols if c in set(filt.kept)]
        if not kept_cols:
            category_bits[name] = 0.0
            continue
        local = {c: i for i, c in enumerate(kept_cols)}
        local_clusters = [
            [local[c] for c in cluster if c in local]
            for cluster in clusters
        ]
        local_clusters = [c for c in local_clusters if len(c) > 1]
        category_bits[name] = joint_leakage(
            _group_by_site(matrix, labels, kept_cols),
            clusters=local_clusters,
            mc_samples=config.mc_samples,
            seed=np.random.default_rng((config.seed, 4, ci)),
            dim_cap=config.dim_cap,
            individual_bits=[feature_bits[c] for c in kept_cols],
        )

    return LeakageReport(
        feature_bits=feature_bits,
        feature_category=col_category,
        degenerate=degenerate,
        kept=list(filt.kept),
        removed=list(filt.removed),
        clusters=clusters,
        independents=independents,
        category_bits=category_bits,
        config=config,
    )
