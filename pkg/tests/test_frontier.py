import random
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uiharvest.errors import MalformedUrlError, RejectedSchemeError
from uiharvest.frontier import (
    Frontier,
    FrontierConfig,
    normalize_url,
    path_similarity,
    url_weight,
)

from oracles import PolicySimOracle


def rec(url, base=None):
    return normalize_url(url, base)


class TestNormalizeUrl:
    def test_lowercases_and_strips_fragment(self):
        assert rec("HTTP://Example.COM/A#x").url == "http://example.com/A"

    def test_relative_resolution(self):
        r = rec("/user/beta", base="http://example.com/user/alpha")
        assert r.url == "http://example.com/user/beta"

    def test_rejected_scheme(self):
        with pytest.raises(RejectedSchemeError):
            rec("javascript:void(0)")

    def test_mailto_rejected(self):
        with pytest.raises(RejectedSchemeError):
            rec("mailto:a@b.c")

    def test_malformed(self):
        with pytest.raises(MalformedUrlError):
            rec("http://")

    def test_empty(self):
        with pytest.raises(MalformedUrlError):
            rec("   ")

    def test_relative_without_base(self):
        with pytest.raises(MalformedUrlError):
            rec("foo/bar")

    def test_default_port_stripped(self):
        assert rec("http://example.com:80/x").url == "http://example.com/x"
        assert rec("https://example.com:443/x").url == "https://example.com/x"
        assert rec("http://example.com:8080/x").url == "http://example.com:8080/x"

    def test_empty_path_normalized_to_slash(self):
        assert rec("http://example.com").url == "http://example.com/"
        assert rec("http://example.com").path_segments == ()

    def test_query_sorted_and_kept_as_trailing_segment(self):
        r = rec("http://example.com/s?b=2&a=1")
        assert r.url == "http://example.com/s?a=1&b=2"
        assert r.path_segments == ("s", "a=1&b=2")

    def test_path_case_preserved(self):
        assert rec("http://example.com/CaseSensitive").path_segments == ("CaseSensitive",)

    def test_registrable_domain(self):
        assert rec("http://shop.example.com/a").registrable_domain == "example.com"

    @given(
        st.lists(
            st.text(
                alphabet=st.characters(whitelist_categories=("Ll", "Nd")), min_size=1, max_size=6
            ),
            max_size=5,
        )
    )
    def test_path_segments_are_nonempty_path_split(self, segs):
        url = "http://example.com/" + "/".join(segs)
        assert rec(url).path_segments == tuple(s for s in segs if s)


class TestPathSimilarity:
    def test_shared_prefix_half(self):
        cand = rec("http://example.com/user/alpha")
        visited = [rec("http://example.com/user/beta")]
        assert path_similarity(cand, visited) == pytest.approx(0.5)

    def test_identical_path(self):
        cand = rec("http://example.com/a/b")
        assert path_similarity(cand, [rec("http://example.com/a/b")]) == 1.0

    def test_disjoint_first_segment(self):
        assert path_similarity(rec("http://e.com/x"), [rec("http://e.com/y")]) == 0.0

    def test_empty_visited(self):
        assert path_similarity(rec("http://e.com/x"), []) == 0.0

    def test_two_empty_paths(self):
        assert path_similarity(rec("http://e.com/"), [rec("http://e.com")]) == 1.0

    def test_max_pooling_over_visited(self):
        cand = rec("http://e.com/a/b/c")
        visited = [rec("http://e.com/z"), rec("http://e.com/a/b/d")]
        assert path_similarity(cand, visited) == pytest.approx(2 / 3)


class TestUrlWeight:
    def test_floor_engages(self):
        assert url_weight(1.0, FrontierConfig(p_min=0.05)) == 0.05

    def test_novel_path_full_weight(self):
        assert url_weight(0.0, FrontierConfig(p_min=0.05)) == 1.0

    def test_midpoint(self):
        assert url_weight(0.5, FrontierConfig(p_min=0.05)) == 0.5

    @given(st.floats(0.0, 1.0), st.floats(0.001, 1.0))
    def test_bounds(self, sim, p_min):
        cfg = FrontierConfig(p_min=p_min)
        w = url_weight(sim, cfg)
        assert p_min <= w <= 1.0


class TestEnqueue:
    def test_first_url_of_new_host(self):
        f = Frontier(FrontierConfig(), random.Random(1))
        r = rec("http://example.com/a")
        assert f.enqueue(r) is True
        assert r.weight == 1.0

    def test_duplicate_queued_rejected(self):
        f = Frontier(FrontierConfig(), random.Random(1))
        assert f.enqueue(rec("http://example.com/a")) is True
        assert f.enqueue(rec("http://example.com/a")) is False

    def test_per_host_cap(self):
        cap = 10
        f = Frontier(FrontierConfig(max_queued_per_host=cap), random.Random(1))
        accepted = [f.enqueue(rec(f"http://e.com/p{i}")) for i in range(cap + 1)]
        assert accepted[:-1] == [True] * cap
        assert accepted[-1] is False

    def test_revisit_lottery_rate_near_p_min(self):
        # An exact revisit has similarity 1, so weight = p_min and the
        # lottery accepts with probability p_min.
        p_min = 0.05
        rng = random.Random(42)
        accepted = 0
        trials = 4000
        for _ in range(trials):
            f = Frontier(FrontierConfig(p_min=p_min), rng)
            f.enqueue(rec("http://e.com/a"))
            f.next_url()
            f.mark_visited("http://e.com/a")
            if f.enqueue(rec("http://e.com/a")):
                accepted += 1
        assert accepted / trials == pytest.approx(p_min, abs=0.02)

    def test_weight_reflects_similarity_to_visited(self):
        f = Frontier(FrontierConfig(), random.Random(1))
        f.enqueue(rec("http://e.com/user/alpha"))
        f.next_url()
        f.mark_visited("http://e.com/user/alpha")
        r = rec("http://e.com/user/beta")
        assert f.enqueue(r) is True
        assert r.weight == pytest.approx(0.5)

    @given(st.lists(st.integers(0, 30), min_size=1, max_size=60), st.integers(0, 2**32))
    @settings(max_examples=50, deadline=None)
    def test_weight_floor_invariant(self, picks, seed):
        # Interleave enqueues, leases, visits on a family of similar URLs;
        # every stored weight stays within [p_min, 1].
        cfg = FrontierConfig(p_min=0.1)
        f = Frontier(cfg, random.Random(seed))
        for i, pick in enumerate(picks):
            f.enqueue(rec(f"http://e.com/page/{pick}"))
            if i % 3 == 2:
                leased = f.next_url()
                if leased is not None:
                    f.mark_visited(leased.url)
            for url in list(f.per_host_queued()):
                pass
            for record in [f.record(f"http://e.com/page/{p}") for p in set(picks[: i + 1])]:
                if record is not None:
                    assert cfg.p_min <= record.weight <= 1.0


class TestNextUrl:
    def test_empty_frontier(self):
        f = Frontier(FrontierConfig(), random.Random(1))
        assert f.next_url() is None

    def test_host_marginal_uniform(self):
        f = Frontier(FrontierConfig(), random.Random(7))
        for i in range(3):
            f.enqueue(rec(f"http://a.com/a{i}"))
        f.enqueue(rec("http://b.com/only"))
        counts = Counter()
        draws = 10_000
        for _ in range(draws):
            record = f.next_url()
            counts[record.host] += 1
            f.release(record.url)
        assert counts["b.com"] / draws == pytest.approx(0.5, abs=0.02)

    def test_within_host_weight_proportional(self):
        f = Frontier(FrontierConfig(p_min=0.05), random.Random(11))
        urls = ["http://e.com/u1", "http://e.com/u2", "http://e.com/u3"]
        for url in urls:
            f.enqueue(rec(url))
        # Force the documented weights {1, 1, 0.05}.
        f.record(urls[2]).weight = 0.05
        counts = Counter()
        draws = 10_000
        for _ in range(draws):
            record = f.next_url()
            counts[record.url] += 1
            f.release(record.url)
        expected = 0.05 / 2.05
        assert counts[urls[2]] / draws == pytest.approx(expected, abs=0.02)

    def test_lease_transitions_state(self):
        f = Frontier(FrontierConfig(), random.Random(1))
        f.enqueue(rec("http://e.com/a"))
        record = f.next_url()
        assert record.state == "leased"
        assert f.counts() == {"queued": 0, "leased": 1, "visited": 0}


def drive_trap_scenario(frontier_or_oracle, leases, *, is_oracle):
    """Run the shared trap scenario: host T self-similar, host U diverse.

    After each lease the visited URL 'discovers' two new links on its own
    host. Returns the fraction of leases that went to the trap host.
    """
    trap_counter = [100]
    fresh_counter = [100]

    def trap_path():
        trap_counter[0] += 1
        return ("page", str(trap_counter[0]))

    def fresh_path():
        fresh_counter[0] += 1
        return (f"u{fresh_counter[0]}",)

    if is_oracle:
        sim = frontier_or_oracle
        for i in range(8):
            sim.enqueue("trap.com", ("page", str(i)))
            sim.enqueue("normal.com", (f"u{i}",))
        trap_leases = 0
        for _ in range(leases):
            host, _segments = sim.lease()
            if host == "trap.com":
                trap_leases += 1
                sim.enqueue("trap.com", trap_path())
                sim.enqueue("trap.com", trap_path())
            else:
                sim.enqueue("normal.com", fresh_path())
                sim.enqueue("normal.com", fresh_path())
        return trap_leases / leases

    f = frontier_or_oracle
    for i in range(8):
        f.enqueue(rec(f"http://trap.com/page/{i}"))
        f.enqueue(rec(f"http://normal.com/u{i}"))
    trap_leases = 0
    for _ in range(leases):
        record = f.next_url()
        f.mark_visited(record.url)
        if record.host == "trap.com":
            trap_leases += 1
            for _ in range(2):
                segs = trap_path()
                f.enqueue(rec(f"http://trap.com/{'/'.join(segs)}"))
        else:
            for _ in range(2):
                segs = fresh_path()
                f.enqueue(rec(f"http://normal.com/{'/'.join(segs)}"))
    return trap_leases / leases


class TestTrapResistance:
    def test_trap_host_bounded_and_matches_oracle(self):
        seed = 2024
        frontier = Frontier(FrontierConfig(p_min=0.05), random.Random(seed))
        impl_fraction = drive_trap_scenario(frontier, 1000, is_oracle=False)

        oracle = PolicySimOracle(p_min=0.05, rng=random.Random(seed))
        oracle_fraction = drive_trap_scenario(oracle, 1000, is_oracle=True)

        assert impl_fraction <= 0.55
        assert abs(impl_fraction - oracle_fraction) <= 0.02

    def test_trap_urls_carry_reduced_weight(self):
        f = Frontier(FrontierConfig(p_min=0.05), random.Random(3))
        drive_trap_scenario(f, 200, is_oracle=False)
        queued = [
            record
            for record in (f.record(f"http://trap.com/page/{i}") for i in range(100, 300))
            if record is not None and record.state == "queued"
        ]
        assert queued, "scenario should leave queued trap URLs"
        assert all(w <= 0.5 + 1e-9 for w in (r.weight for r in queued))


class TestDeterminism:
    def test_identical_seeds_identical_lease_sequence(self):
        def build():
            f = Frontier(FrontierConfig(p_min=0.05), random.Random(99))
            for i in range(20):
                f.enqueue(rec(f"http://h{i % 4}.com/p/{i}"))
            return f

        a, b = build(), build()
        seq_a = [a.next_url().url for _ in range(15)]
        seq_b = [b.next_url().url for _ in range(15)]
        assert seq_a == seq_b


class TestSnapshot:
    def test_roundtrip_preserves_state_weights_order(self, tmp_path):
        f = Frontier(FrontierConfig(p_min=0.05), random.Random(5))
        for i in range(6):
            f.enqueue(rec(f"http://a.com/x{i}"))
            f.enqueue(rec(f"http://b.com/y{i}"))
        leased = f.next_url()
        f.mark_visited(f.next_url().url)
        path = tmp_path / "frontier.tsv"
        f.snapshot(path)

        g = Frontier.load(path, FrontierConfig(p_min=0.05))
        assert g.counts() == f.counts()
        assert {r for r in g.leased_urls()} == {leased.url}
        for url in [f"http://a.com/x{i}" for i in range(6)]:
            ra, rb = f.record(url), g.record(url)
            if ra is None:
                assert rb is None
            else:
                assert rb is not None and (ra.state, ra.weight) == (rb.state, rb.weight)

    def test_reload_replays_identically(self, tmp_path):
        f = Frontier(FrontierConfig(), random.Random(13))
        for i in range(10):
            f.enqueue(rec(f"http://h{i % 3}.com/p{i}"))
        path = tmp_path / "snap.tsv"
        f.snapshot(path)
        g = Frontier.load(path, FrontierConfig(), rng=random.Random(555))
        seq_g = [g.next_url().url for _ in range(5)]
        h = Frontier.load(path, FrontierConfig(), rng=random.Random(555))
        seq_h = [h.next_url().url for _ in range(5)]
        assert seq_g == seq_h

    def test_empty_snapshot_loads_empty(self, tmp_path):
        f = Frontier(FrontierConfig(), random.Random(1))
        path = tmp_path / "empty.tsv"
        f.snapshot(path)
        g = Frontier.load(path)
        assert g.next_url() is None

    def test_snapshot_line_format(self, tmp_path):
        f = Frontier(FrontierConfig(), random.Random(1))
        f.enqueue(rec("http://e.com/a"))
        path = tmp_path / "snap.tsv"
        f.snapshot(path)
        line = path.read_text().strip()
        state, weight, url = line.split("\t")
        assert state == "queued"
        assert float(weight) == 1.0
        assert url == "http://e.com/a"
