import pytest

from simplex_hh._parallel import derive_seed, pmap, thread_count
from simplex_hh.partitions import Partition, bell, enumerate_partitions, refines
from simplex_hh.verify import catalog_for_trial, covering_refinements, disjoint_pairs, run_campaign


def test_covering_refinements_split_one_block():
    P = Partition.parse("0,1,2|3")
    covers = covering_refinements(P)
    assert len(covers) == 3  # 2^(3-1) - 1 splits of the 3-block
    for L in covers:
        assert refines(L, P) and len(L) == len(P) + 1
    assert covering_refinements(Partition.parse("0|1")) == []


@pytest.mark.parametrize("n", range(1, 6))
def test_covers_generate_the_refinement_order(n):
    # every strict refinement is reachable by a chain of covering splits
    parts = list(enumerate_partitions(n))
    reach = {K.rgs: {L.rgs for L in covering_refinements(K)} for K in parts}
    for K in parts:
        seen, frontier = set(), set(reach[K.rgs])
        while frontier:
            seen |= frontier
            frontier = {r for x in frontier for r in reach[x]} - seen
        strict = {L.rgs for L in parts if L != K and refines(L, K)}
        assert seen == strict


@pytest.mark.parametrize("n", range(1, 6))
def test_disjoint_pair_count(n):
    # unordered pairs of disjoint nonempty subsets of n+1 elements: (3^m - 2^(m+1) + 1) / 2
    m = n + 1
    pairs = list(disjoint_pairs(n))
    assert len(pairs) == (3**m - 2 ** (m + 1) + 1) // 2
    assert all(not set(K) & set(L) for K, L in pairs)
    assert len({frozenset([K, L]) for K, L in pairs}) == len(pairs)


def test_campaign_summary_shape():
    data = run_campaign(2, 2, seed=0)
    assert data["failed"] == 0 and data["passed"] == data["checked"]
    # equality cases leave rounding-level negative slack, well inside the tolerance
    assert 0.0 <= data["max_negative_margin"] < 1e-12
    assert set(data["by_check"]) >= {"monotonicity", "lemma", "sandwich_lower", "classic_upper", "mixed_group"}
    parts = bell(3)
    # five catalog functions plus one affine function per trial
    assert data["by_check"]["sandwich_upper"]["checked"] == 2 * 6 * parts
    assert data["functions"] == ["polynomial", "exp_affine", "max_affine", "log_sum_exp", "norm_power", "affine"]


def test_campaign_argument_checks():
    with pytest.raises(ValueError):
        run_campaign(0, 1, 0)
    with pytest.raises(ValueError):
        run_campaign(2, 0, 0)


def test_catalog_depends_only_on_seed_and_trial():
    assert catalog_for_trial(3, 5, 2) == catalog_for_trial(3, 5, 2)
    assert catalog_for_trial(3, 5, 2) != catalog_for_trial(3, 5, 3)
    assert len(catalog_for_trial(3, 5, 2, inject_nonconvex=True)) == 7


def test_derive_seed():
    a = derive_seed(1, "simplex", 0)
    assert a == derive_seed(1, "simplex", 0)
    assert len({a, derive_seed(1, "simplex", 1), derive_seed(2, "simplex", 0), derive_seed(1, "partitions", 0)}) == 4
    assert 0 <= a < 2**64


def test_pmap_preserves_order(monkeypatch):
    assert pmap(lambda x: x * x, range(50), 8) == [x * x for x in range(50)]
    monkeypatch.setenv("SIMPLEX_HH_THREADS", "3")
    assert thread_count(None) == 3
    assert thread_count(2) == 2
    monkeypatch.setenv("SIMPLEX_HH_THREADS", "zero")
    assert thread_count(None) == 1
