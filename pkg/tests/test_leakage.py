import math

import numpy as np
import pytest

from wftiming.leakage import (
    ClusterSizeError,
    LeakageConfig,
    analyze_matrix,
    cluster_features,
    individual_leakage,
    joint_leakage,
    kde_fit,
    pairwise_mi,
    pairwise_score_matrix,
    redundancy_filter,
)


# --- kernel density -------------------------------------------------------


def test_kde_density_of_standard_normal():
    rng = np.random.default_rng(0)
    kde = kde_fit(rng.normal(size=1000))
    at_zero = math.exp(kde.logpdf(np.array([0.0]))[0])
    assert abs(at_zero - 0.3989) < 0.2 * 0.3989


def test_kde_integrates_to_one():
    rng = np.random.default_rng(1)
    kde = kde_fit(rng.normal(size=400))
    grid = np.linspace(-8, 8, 4001)
    dens = np.exp(kde.logpdf(grid))
    assert np.trapezoid(dens, grid) == pytest.approx(1.0, abs=1e-2)


def test_kde_degenerate_point_mass_flagged():
    kde = kde_fit(np.array([2.0, 2.0]))
    assert kde.degenerate
    assert kde.bandwidths[0] == pytest.approx(1e-6)


def test_kde_needs_two_samples():
    with pytest.raises(ValueError):
        kde_fit(np.array([1.0]))


def test_kde_sampling_is_seeded():
    kde = kde_fit(np.random.default_rng(3).normal(size=100))
    a = kde.sample(np.random.default_rng(5), 50)
    b = kde.sample(np.random.default_rng(5), 50)
    assert np.array_equal(a, b)


# --- individual leakage -----------------------------------------------------


def test_identical_distributions_leak_nothing():
    rng = np.random.default_rng(10)
    samples = {0: rng.normal(size=400), 1: rng.normal(size=400)}
    bits = individual_leakage(samples, mc_samples=5000, seed=0)
    assert bits <= 0.05


def test_four_disjoint_sites_leak_two_bits():
    rng = np.random.default_rng(11)
    samples = {
        w: rng.uniform(10.0 * w, 10.0 * w + 1.0, size=200) for w in range(4)
    }
    bits = individual_leakage(samples, mc_samples=5000, seed=0)
    assert bits == pytest.approx(2.0, abs=0.1)


def test_leakage_respects_entropy_bound():
    rng = np.random.default_rng(12)
    for n_sites in (2, 3, 5):
        samples = {w: rng.normal(loc=w * 0.5, size=60) for w in range(n_sites)}
        bits = individual_leakage(samples, mc_samples=2000, seed=1)
        assert 0.0 <= bits <= math.log2(n_sites) + 1e-9


def test_leakage_needs_two_sites():
    with pytest.raises(ValueError):
        individual_leakage({0: [1.0, 2.0]}, mc_samples=100)


def test_leakage_needs_two_samples_per_site():
    with pytest.raises(ValueError, match="fewer than 2"):
        individual_leakage({0: [1.0], 1: [1.0, 2.0]}, mc_samples=100)


def test_leakage_deterministic_under_seed():
    rng = np.random.default_rng(13)
    samples = {0: rng.normal(size=80), 1: rng.normal(loc=1.0, size=80)}
    a = individual_leakage(samples, mc_samples=1500, seed=9)
    b = individual_leakage(samples, mc_samples=1500, seed=9)
    c = individual_leakage(samples, mc_samples=1500, seed=10)
    assert a == b
    assert a != c


# --- pairwise redundancy -----------------------------------------------------


def test_copy_scores_one():
    rng = np.random.default_rng(20)
    a = rng.normal(size=300)
    assert pairwise_mi(a, a.copy(), mc_samples=3000, seed=0) == pytest.approx(
        1.0, abs=0.05
    )


def test_independent_features_score_zero():
    rng = np.random.default_rng(21)
    a = rng.uniform(0, 4, size=400)
    b = rng.uniform(0, 4, size=400)
    assert pairwise_mi(a, b, mc_samples=3000, seed=0) == pytest.approx(0.0, abs=0.05)


def test_noise_degrades_score_monotonically():
    rng = np.random.default_rng(22)
    a = rng.normal(size=400)
    scores = []
    for noise in (0.1, 0.5, 2.0):
        b = a + rng.normal(scale=noise, size=400)
        scores.append(pairwise_mi(a, b, mc_samples=3000, seed=0))
    assert scores[0] > scores[1] > scores[2]
    assert all(0.0 <= s <= 1.0 for s in scores)


def test_pairwise_symmetry_within_tolerance():
    rng = np.random.default_rng(23)
    a = rng.normal(size=300)
    b = 0.7 * a + rng.normal(scale=0.5, size=300)
    ab = pairwise_mi(a, b, mc_samples=4000, seed=3)
    ba = pairwise_mi(b, a, mc_samples=4000, seed=3)
    assert ab == pytest.approx(ba, abs=0.08)


def test_pairwise_rejects_unpaired_lengths():
    with pytest.raises(ValueError, match="paired"):
        pairwise_mi([1.0, 2.0, 3.0], [1.0, 2.0], mc_samples=100)


# --- redundancy filter -------------------------------------------------------


def test_filter_removes_planted_duplicates():
    rng = np.random.default_rng(30)
    base = rng.normal(size=(120, 27)) * rng.uniform(0.5, 2.0, size=27)
    dup_of = [0, 5, 11, 20]
    matrix = np.concatenate([base, base[:, dup_of]], axis=1)
    result = redundancy_filter(matrix, mc_samples=2000, seed=0)
    assert list(result.kept) == list(range(27))
    assert [r for r, _, _ in result.removed] == [27, 28, 29, 30]
    assert [m for _, m, _ in result.removed] == dup_of


def test_filter_keeps_independent_features():
    rng = np.random.default_rng(31)
    matrix = rng.normal(size=(150, 12))
    result = redundancy_filter(matrix, mc_samples=2000, seed=0)
    assert list(result.kept) == list(range(12))
    assert result.removed == ()


def test_filter_deterministic():
    rng = np.random.default_rng(32)
    matrix = rng.normal(size=(80, 8))
    matrix[:, 7] = matrix[:, 2]
    a = redundancy_filter(matrix, mc_samples=1500, seed=4)
    b = redundancy_filter(matrix, mc_samples=1500, seed=4)
    assert a == b


# --- clustering --------------------------------------------------------------


def test_three_correlated_features_form_one_cluster():
    rng = np.random.default_rng(40)
    base = rng.normal(size=250)
    matrix = np.column_stack(
        [base + rng.normal(scale=0.3, size=250) for _ in range(3)]
        + [rng.normal(size=250)]
    )
    clusters, independents = cluster_features(
        matrix, range(4), threshold=0.4, mc_samples=2000, seed=0
    )
    assert clusters == [[0, 1, 2]]
    assert independents == [3]


def test_single_linkage_chains():
    # b correlates with both ends while a and c stay independent; the link
    # strength is capped by that construction, so the threshold sits below it.
    rng = np.random.default_rng(41)
    a = rng.normal(size=400)
    c = rng.normal(size=400)
    b = (a + c) / np.sqrt(2)
    matrix = np.column_stack([a, b, c])
    threshold = 0.2
    scores = pairwise_score_matrix(matrix, range(3), mc_samples=3000, seed=0)
    assert scores[0, 1] >= threshold and scores[1, 2] >= threshold
    assert scores[0, 2] < threshold
    clusters, independents = cluster_features(
        matrix, range(3), threshold=threshold, mc_samples=3000, seed=0
    )
    assert clusters == [[0, 1, 2]]
    assert independents == []


def test_planted_cluster_count_recovered():
    rng = np.random.default_rng(42)
    n = 300
    cols = []
    for _ in range(5):
        shared = rng.normal(size=n)
        for _ in range(3):
            cols.append(shared + rng.normal(scale=0.25, size=n))
    matrix = np.column_stack(cols)
    clusters, independents = cluster_features(
        matrix, range(15), threshold=0.4, mc_samples=2000, seed=0
    )
    assert len(clusters) == 5
    assert sorted(c for cluster in clusters for c in cluster) == list(range(15))
    assert independents == []


def test_score_matrix_is_symmetric():
    rng = np.random.default_rng(43)
    matrix = rng.normal(size=(100, 4))
    scores = pairwise_score_matrix(matrix, range(4), mc_samples=1500, seed=0)
    assert np.array_equal(scores, scores.T)
    assert np.all(np.diag(scores) == 1.0)


# --- joint leakage -----------------------------------------------------------


def _parity_samples(rng, n_sites, n_per_site, partition, noise=0.15):
    """site -> column vector following a binary partition of the sites."""
    return {
        w: partition(w) * 3.0 + rng.normal(scale=noise, size=n_per_site)
        for w in range(n_sites)
    }


def test_joint_single_feature_matches_individual():
    rng = np.random.default_rng(50)
    flat = {w: rng.normal(loc=2.0 * w, scale=0.4, size=100) for w in range(3)}
    ind = individual_leakage(flat, mc_samples=4000, seed=7)
    joint = joint_leakage(
        {w: v[:, None] for w, v in flat.items()}, clusters=[], mc_samples=4000, seed=7
    )
    assert joint == pytest.approx(ind, abs=0.1)
    # 1-D per-site arrays are treated as single-feature columns
    assert joint_leakage(flat, clusters=[], mc_samples=4000, seed=7) == joint


def test_joint_rejects_mismatched_columns():
    rng = np.random.default_rng(56)
    by_site = {0: rng.normal(size=(20, 2)), 1: rng.normal(size=(20, 3))}
    with pytest.raises(ValueError, match="columns"):
        joint_leakage(by_site, mc_samples=200)


def test_joint_two_copies_of_same_bit_leak_one_bit():
    rng = np.random.default_rng(51)
    a = _parity_samples(rng, 4, 120, lambda w: w % 2)
    b = _parity_samples(rng, 4, 120, lambda w: w % 2)
    by_site = {w: np.column_stack([a[w], b[w]]) for w in range(4)}
    bits = joint_leakage(by_site, clusters=[], mc_samples=4000, seed=0)
    assert bits == pytest.approx(1.0, abs=0.15)


def test_joint_complementary_bits_leak_two_bits():
    rng = np.random.default_rng(52)
    a = _parity_samples(rng, 4, 120, lambda w: w % 2)
    b = _parity_samples(rng, 4, 120, lambda w: w // 2)
    by_site = {w: np.column_stack([a[w], b[w]]) for w in range(4)}
    bits = joint_leakage(by_site, clusters=[], mc_samples=4000, seed=0)
    assert bits == pytest.approx(2.0, abs=0.15)


def test_joint_clustered_matches_independent_when_truly_independent():
    rng = np.random.default_rng(53)
    a = _parity_samples(rng, 4, 120, lambda w: w % 2)
    b = _parity_samples(rng, 4, 120, lambda w: w // 2)
    by_site = {w: np.column_stack([a[w], b[w]]) for w in range(4)}
    clustered = joint_leakage(by_site, clusters=[[0, 1]], mc_samples=4000, seed=0)
    assert clustered == pytest.approx(2.0, abs=0.15)


def test_joint_dimension_cap():
    rng = np.random.default_rng(54)
    by_site = {w: rng.normal(size=(40, 10)) for w in range(2)}
    with pytest.raises(ClusterSizeError, match="dimensionality"):
        joint_leakage(by_site, clusters=[list(range(10))], mc_samples=500, seed=0)
    # with individual bits supplied the cluster is reduced, not rejected
    bits = joint_leakage(
        by_site,
        clusters=[list(range(10))],
        mc_samples=500,
        seed=0,
        individual_bits=list(range(10)),
    )
    assert 0.0 <= bits <= 1.0


def test_joint_at_least_best_individual():
    rng = np.random.default_rng(57)
    strong = _parity_samples(rng, 4, 120, lambda w: w % 2, noise=0.1)
    weak = {w: rng.normal(size=120) for w in range(4)}
    best_individual = max(
        individual_leakage(strong, mc_samples=3000, seed=1),
        individual_leakage(weak, mc_samples=3000, seed=2),
    )
    by_site = {w: np.column_stack([strong[w], weak[w]]) for w in range(4)}
    joint = joint_leakage(by_site, clusters=[], mc_samples=3000, seed=3)
    assert joint >= best_individual - 0.1


def test_joint_bounded_by_log2_sites():
    rng = np.random.default_rng(55)
    by_site = {w: rng.normal(loc=5.0 * w, scale=0.1, size=(60, 2)) for w in range(4)}
    bits = joint_leakage(by_site, clusters=[[0, 1]], mc_samples=2000, seed=0)
    assert bits <= 2.0 + 1e-9


# --- whole-matrix analysis ---------------------------------------------------


def test_analyze_matrix_pipeline():
    rng = np.random.default_rng(60)
    n_per, sites = 40, 4
    labels = np.repeat(np.arange(sites), n_per)
    informative = np.concatenate([(w % 2) * 3.0 + rng.normal(scale=0.2, size=n_per) for w in range(sites)])
    noise = rng.normal(size=len(labels))
    dup = informative.copy()
    matrix = np.column_stack([informative, noise, dup])
    report = analyze_matrix(
        matrix,
        labels,
        categories={"signal": [0, 2], "noise": [1]},
        config=LeakageConfig(mc_samples=1500, seed=0),
    )
    assert report.kept == [0, 1]
    assert [r for r, _, _ in report.removed] == [2]
    assert report.feature_bits[0] > 0.8
    assert report.feature_bits[1] < 0.2
    assert report.category_bits["signal"] == pytest.approx(1.0, abs=0.2)
    assert report.category_bits["noise"] < 0.2
    payload = report.to_dict()
    assert payload["joint"]["signal"] == report.category_bits["signal"]
    assert len(payload["individual"]) == 3
