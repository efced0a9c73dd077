import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uiharvest.analysis import (
    AxTreeIndex,
    composition_stats,
    element_labels,
    occlusion_report,
    percentile_profile,
    quality_report,
    responsiveness_report,
    small_target_report,
)
from uiharvest.errors import EmptyCorpusError
from uiharvest.store import ProbeReport

from conftest import flat_screen, make_node, make_sample
from oracles import brute_force_occlusion


def linked_image_screen(extra_child=False):
    """Root > [link > img, text]; the sibling keeps the root non-singleton."""
    nodes = [
        make_node(0, None, "RootWebArea", rect=(0, 0, 390, 844)),
        make_node(1, 0, "link", rect=(10, 10, 60, 60), clickable=True),
        make_node(2, 1, "image", rect=(10, 10, 60, 60)),
        make_node(3, 0, "text", rect=(10, 90, 60, 12)),
    ]
    if extra_child:
        nodes.append(make_node(4, 1, "text", rect=(10, 70, 60, 12)))
    return nodes


class TestElementLabels:
    def test_link_wrapped_image(self):
        nodes = linked_image_screen()
        labels = element_labels(nodes[2], nodes)
        assert labels == {"image", "link"}

    def test_two_child_parent_blocks_propagation(self):
        nodes = linked_image_screen(extra_child=True)
        assert element_labels(nodes[2], nodes) == {"image"}

    def test_plain_node_keeps_own_role(self):
        nodes = flat_screen([((0, 0, 10, 10), "text"), ((20, 0, 10, 10), "text")])
        assert element_labels(nodes[1], nodes) == {"text"}

    def test_chain_of_singletons(self):
        nodes = [
            make_node(0, None, "RootWebArea"),
            make_node(1, 0, "listitem"),
            make_node(2, 1, "link"),
            make_node(3, 2, "image"),
        ]
        assert element_labels(nodes[3], nodes) == {"image", "link", "listitem", "RootWebArea"}

    def test_own_role_always_present(self):
        nodes = linked_image_screen(extra_child=True)
        index = AxTreeIndex(nodes)
        for node in nodes:
            assert node.role in element_labels(node, index)


class TestSmallTargets:
    def build(self, w, h, role="link"):
        return make_sample(
            "http://e.com/a",
            axtree=flat_screen([((0, 0, w, h), role)]),
        )

    def test_43x44_flagged(self):
        report = small_target_report(self.build(43, 44))
        assert report.flagged == [1]

    def test_44x44_not_flagged(self):
        report = small_target_report(self.build(44, 44))
        assert report.flagged == []

    def test_44x43_flagged(self):
        assert small_target_report(self.build(44, 43)).flagged == [1]

    def test_decorative_image_ignored(self):
        report = small_target_report(self.build(10, 10, role="image"))
        assert report.flagged == []
        assert report.interactable == 0

    def test_boxless_interactable_counted_unmeasured(self):
        nodes = [
            make_node(0, None, "RootWebArea", rect=(0, 0, 390, 844)),
            make_node(1, 0, "button"),
        ]
        report = small_target_report(make_sample("http://e.com/a", axtree=nodes))
        assert report.unmeasured == 1
        assert report.flagged == []

    def test_border_box_is_the_measured_box(self):
        # 40x40 content grows to 44x44 with 2px border: passes.
        nodes = [
            make_node(0, None, "RootWebArea", rect=(0, 0, 390, 844)),
            make_node(1, 0, "button", rect=(5, 5, 40, 40), border=2.0),
        ]
        assert small_target_report(make_sample("http://e.com/a", axtree=nodes)).flagged == []


def sample_from_leaves(leaves):
    """leaves: list of (rect, z_or_None); node ids and dom order follow list order."""
    entries = []
    for rect, z in leaves:
        style = {"z-index": str(z)} if z is not None else {}
        entries.append((rect, "text", style))
    return make_sample("http://e.com/r", axtree=flat_screen(entries))


def oracle_rows(sample):
    rows = []
    for node in sample.axtree[1:]:
        raw = node.style.get("z-index")
        z = float(raw) if raw is not None else None
        rows.append((node.node_id, node.dom_index, node.boxes.border, z))
    return rows


class TestOcclusion:
    def test_quarter_overlap_fixture(self):
        # A painted first at (0,0), B second at (50,50): intersection 2500,
        # A's own area 10000 -> fraction 0.25 > 0.20 so A is occluded.
        sample = sample_from_leaves([((0, 0, 100, 100), None), ((50, 50, 100, 100), None)])
        report = occlusion_report(sample, threshold=0.20)
        assert report.overlap_pairs == [(1, 2)]
        assert report.occluded == [1]

    def test_exactly_20_percent_not_flagged(self):
        sample = sample_from_leaves([((0, 0, 100, 100), None), ((80, 0, 100, 100), None)])
        report = occlusion_report(sample)
        assert report.overlap_pairs == [(1, 2)]
        assert report.occluded == []

    def test_disjoint_rects(self):
        sample = sample_from_leaves([((0, 0, 10, 10), None), ((20, 20, 10, 10), None)])
        report = occlusion_report(sample)
        assert report.overlap_pairs == []
        assert report.occluded == []

    def test_edge_touching_is_not_overlap(self):
        sample = sample_from_leaves([((0, 0, 10, 10), None), ((10, 0, 10, 10), None)])
        assert occlusion_report(sample).overlap_pairs == []

    def test_zindex_overrides_dom_order(self):
        # Later leaf has LOWER z-index, so it is the occludee despite dom order.
        sample = sample_from_leaves([((0, 0, 100, 100), 5), ((50, 50, 100, 100), 1)])
        report = occlusion_report(sample)
        assert report.occluded == [2]

    def test_matches_brute_force_on_random_screens(self):
        rng = random.Random(404)
        for _ in range(200):
            n = rng.randrange(2, 51)
            leaves = []
            for _i in range(n):
                rect = (
                    rng.randrange(0, 400),
                    rng.randrange(0, 400),
                    rng.randrange(0, 120),
                    rng.randrange(0, 120),
                )
                z = float(rng.randrange(0, 4)) if rng.random() < 0.3 else None
                leaves.append((rect, z))
            sample = sample_from_leaves(leaves)
            report = occlusion_report(sample)
            pairs, occluded = brute_force_occlusion(oracle_rows(sample))
            assert set(report.overlap_pairs) == pairs
            assert set(report.occluded) == occluded

    @given(
        st.lists(
            st.tuples(
                st.integers(0, 60),
                st.integers(0, 60),
                st.integers(0, 40),
                st.integers(0, 40),
            ),
            min_size=2,
            max_size=12,
        )
    )
    @settings(max_examples=60, deadline=None)
    def test_property_equivalence_with_oracle(self, rects):
        sample = sample_from_leaves([(tuple(map(float, r)), None) for r in rects])
        report = occlusion_report(sample)
        pairs, occluded = brute_force_occlusion(oracle_rows(sample))
        assert set(report.overlap_pairs) == pairs
        assert set(report.occluded) == occluded

    def test_each_pair_has_single_occludee(self):
        sample = sample_from_leaves([((0, 0, 100, 100), None), ((10, 10, 100, 100), None)])
        report = occlusion_report(sample)
        assert len(report.overlap_pairs) == 1
        assert len(report.occluded) <= 1


class TestComposition:
    def corpus(self):
        s1 = make_sample(
            "http://a.com/1",
            axtree=[
                make_node(0, None, "RootWebArea", rect=(0, 0, 390, 844)),
                make_node(1, 0, "text", rect=(0, 0, 100, 20)),
                make_node(2, 0, "link", rect=(0, 30, 100, 20), clickable=True),
                make_node(3, 0, "image", rect=(0, 2000, 100, 100)),  # below fold
            ],
        )
        s2 = make_sample(
            "http://b.com/2",
            axtree=[
                make_node(0, None, "RootWebArea", rect=(0, 0, 390, 844)),
                make_node(1, 0, "link", rect=(0, 0, 50, 20), clickable=True),
                make_node(2, 0, "text", rect=(0, 30, 50, 20)),
            ],
        )
        return [s1, s2]

    def test_hand_counted_class_table(self):
        stats = composition_stats(self.corpus())
        assert stats.class_counts["text"] == 2
        assert stats.class_counts["link"] == 2
        assert stats.class_counts["image"] == 1
        assert stats.class_counts["RootWebArea"] == 2

    def test_averages(self):
        stats = composition_stats(self.corpus())
        assert stats.avg_elements == pytest.approx((4 + 3) / 2)
        # below-the-fold image not visible; roots + in-viewport children are.
        assert stats.avg_visible == pytest.approx((3 + 3) / 2)
        assert stats.avg_clickable == pytest.approx((1 + 1) / 2)

    def test_all_below_fold(self):
        s = make_sample(
            "http://c.com/3",
            axtree=[
                make_node(0, None, "RootWebArea", rect=(0, 900, 390, 400)),
                make_node(1, 0, "text", rect=(0, 900, 50, 20)),
                make_node(2, 0, "text", rect=(0, 950, 50, 20)),
            ],
        )
        stats = composition_stats([s])
        assert stats.avg_visible == 0.0

    def test_single_link_screen_clickable_average(self):
        s = make_sample(
            "http://c.com/3",
            axtree=[
                make_node(0, None, "RootWebArea", rect=(0, 2000, 390, 100)),
                make_node(1, 0, "link", rect=(0, 2000, 50, 20)),
                make_node(2, 0, "text", rect=(0, 2030, 50, 20)),
            ],
        )
        # exactly one clickable element on the screen
        assert composition_stats([s]).avg_clickable == 1.0

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpusError):
            composition_stats([])


class TestResponsiveness:
    def test_fraction_counting(self):
        corpus = []
        for i in range(10):
            probe = ProbeReport(0, i < 7, i < 8, [])
            corpus.append(make_sample(f"http://r{i}.com/x", probe=probe))
        report = responsiveness_report(corpus)
        assert report.content_width_ok == pytest.approx(0.70)
        assert report.has_viewport_meta == pytest.approx(0.80)

    def test_all_null_is_unmeasured_not_zero(self):
        corpus = [make_sample(f"http://r{i}.com/x", probe=None) for i in range(3)]
        report = responsiveness_report(corpus)
        assert report.content_width_ok is None
        assert report.has_viewport_meta is None
        assert report.unmeasured == 3

    def test_single_screen(self):
        corpus = [make_sample("http://r.com/x", probe=ProbeReport(0, True, False, []))]
        report = responsiveness_report(corpus)
        assert report.content_width_ok == 1.0
        assert report.has_viewport_meta == 0.0


class TestPercentiles:
    def corpus_with_button_max(self):
        corpus = []
        # 9 screens with no buttons, 1 screen (the last) all buttons
        for i in range(9):
            corpus.append(
                make_sample(
                    f"http://p{i}.com/x",
                    axtree=flat_screen([((0, 0, 10, 10), "text")]),
                )
            )
        corpus.append(
            make_sample(
                "http://p9.com/x",
                axtree=flat_screen([((0, 0, 50, 20), "button")]),
            )
        )
        return corpus

    def test_corpus_max_ranks_90_over_10_screens(self):
        corpus = self.corpus_with_button_max()
        profile = percentile_profile(corpus[-1], corpus)
        assert profile.ranks["button"] == pytest.approx(90.0)

    def test_absent_class_everywhere_ranks_0(self):
        corpus = self.corpus_with_button_max()
        profile = percentile_profile(corpus[0], corpus)
        assert profile.ranks["textbox"] == 0.0

    def test_identical_screens_identical_profiles(self):
        corpus = self.corpus_with_button_max()
        a = percentile_profile(corpus[0], corpus)
        b = percentile_profile(corpus[1], corpus)
        assert a.ranks == b.ranks
        assert a.frequencies == b.frequencies

    def test_rank_invariant_under_corpus_duplication(self):
        corpus = self.corpus_with_button_max()
        once = percentile_profile(corpus[-1], corpus)
        twice = percentile_profile(corpus[-1], corpus + corpus)
        assert once.ranks == twice.ranks

    def test_frequencies_sum_to_one(self):
        corpus = self.corpus_with_button_max()
        profile = percentile_profile(corpus[-1], corpus)
        assert sum(profile.frequencies.values()) == pytest.approx(1.0)


class TestQualityReport:
    def test_aggregates(self):
        overlapping = sample_from_leaves(
            [((0, 0, 100, 100), None), ((50, 50, 100, 100), None)]
        )
        clean = make_sample(
            "http://q.com/a",
            axtree=flat_screen([((0, 0, 43, 20), "link"), ((100, 0, 80, 80), "link")]),
        )
        report = quality_report([overlapping, clean])
        assert report.fraction_screens_with_overlap == pytest.approx(0.5)
        assert report.fraction_small_interactables == pytest.approx(0.5)
        row = report.per_screen[0]
        assert row.overlap_pair_count == 1
        assert row.occluded_gt20_count == 1

    def test_json_shape(self):
        sample = sample_from_leaves([((0, 0, 10, 10), None)])
        payload = quality_report([sample]).to_json()
        assert "aggregates" in payload and "per_screen" in payload
        assert payload["aggregates"]["screens"] == 1
