import itertools
import json

import pytest

from soliclone.categorize import (
    CategoryRule,
    ClassEvidence,
    DomainCategory,
    accumulate_categories,
    build_class_evidence,
    categorize_class,
    fragment_keywords,
    load_rules,
    load_sidecar,
    signature_fingerprint,
)
from soliclone.engine import CloneClass, CloneConfig
from soliclone.errors import InvalidRuleFile
from soliclone.frontend import SourceFile, parse_source, extract_fragments
from soliclone.normalize import NormalizationMode
from soliclone.pipeline import categorize_classes, run_detection
from soliclone.signatures import canonical_signature, canonical_type


def cls(cid, members, lo, hi, rep=None):
    members = tuple(members)
    return CloneClass(cid, members, lo, hi, rep or members[0])


def evidence(sigs=(), kws=()):
    return ClassEvidence(frozenset(sigs), frozenset(kws))


ERC20_CORE = {
    "totalsupply()",
    "balanceof(address)",
    "transfer(address,uint256)",
    "transferfrom(address,address,uint256)",
    "approve(address,uint256)",
    "allowance(address,address)",
}


class TestCanonicalSignatures:
    def test_type_aliases(self):
        assert canonical_type("uint") == "uint256"
        assert canonical_type("uint[] calldata") == "uint256[]"
        assert canonical_type("address payable") == "address"
        assert canonical_type("byte") == "bytes1"
        assert canonical_type("IERC721") == "ierc721"

    def test_transfer_signature(self):
        unit = parse_source(SourceFile("t.sol", (
            "contract T { function transfer(address to, uint value) public "
            "returns (bool) { return true; } }")))
        fn = unit.declarations[0].functions[0]
        assert canonical_signature(fn) == "transfer(address,uint256)"

    def test_constructor_kind_tag(self):
        unit = parse_source(SourceFile("t.sol", (
            "contract T { constructor(uint supply) public { x = supply; } }")))
        fn = unit.declarations[0].functions[0]
        assert canonical_signature(fn) == "<constructor>(uint256)"

    def test_erc20_fixture_core_set(self, fixture_index):
        unit = fixture_index.units["token.sol"]
        frag = next(f for f in fixture_index.fragments.values()
                    if f.file == "token.sol" and f.function == "transfer")
        sigs = signature_fingerprint(frag, unit)
        assert ERC20_CORE <= sigs


class TestRuleFile:
    def test_default_rules_load(self):
        rules = load_rules()
        assert [r.category.value for r in rules] == [
            "TokenManagement", "ArithmeticOperations", "Exchanges", "Finance",
            "DataOracles", "Marketplace", "Gaming", "Security"]
        assert all(r.required_signatures or r.keyword_hints for r in rules)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InvalidRuleFile):
            load_rules(tmp_path / "nope.txt")

    def test_duplicate_category_rejected(self, tmp_path):
        p = tmp_path / "rules.txt"
        p.write_text(
            "Gaming | 1 | kw:game kw:breed\n"
            "Gaming | 2 | kw:battle kw:gene\n")
        with pytest.raises(InvalidRuleFile, match="duplicate"):
            load_rules(p)

    def test_unknown_category_rejected(self, tmp_path):
        p = tmp_path / "rules.txt"
        p.write_text("Cooking | 1 | kw:stove kw:pan\n")
        with pytest.raises(InvalidRuleFile):
            load_rules(p)

    def test_rule_needs_some_evidence(self, tmp_path):
        p = tmp_path / "rules.txt"
        p.write_text("Gaming | 1 | hits:2\n")
        with pytest.raises(InvalidRuleFile):
            load_rules(p)

    def test_custom_rule_parsing(self, tmp_path):
        p = tmp_path / "rules.txt"
        p.write_text(
            "# comment line\n"
            "Security | 3 | sig:verify(bytes32,bytes,address) | kw:ecdsa | hits:1\n"
            "Gaming | 1 | kw:game kw:breed\n")
        rules = load_rules(p)
        assert [r.category.value for r in rules] == ["Gaming", "Security"]
        assert rules[1].min_signature_hits == 1


class TestCategorizeClass:
    RULES = load_rules()

    def test_erc20_class_is_token_management(self):
        c = cls(1, ["a", "b"], 90, 100)
        assert categorize_class(
            c, self.RULES, evidence(sigs=ERC20_CORE)
        ) is DomainCategory.TOKEN_MANAGEMENT

    def test_low_similarity_is_uncategorized(self):
        c = cls(1, ["a", "b"], 60, 95)
        assert categorize_class(
            c, self.RULES, evidence(sigs=ERC20_CORE)
        ) is DomainCategory.UNCATEGORIZED

    def test_ecrecover_keywords_reach_security(self):
        c = cls(1, ["a", "b"], 75, 80)
        got = categorize_class(
            c, self.RULES,
            evidence(kws={"ecrecover", "signer", "digest", "splitter"}))
        assert got is DomainCategory.SECURITY

    def test_single_keyword_not_enough(self):
        c = cls(1, ["a", "b"], 90, 95)
        assert categorize_class(
            c, self.RULES, evidence(kws={"game"})
        ) is DomainCategory.UNCATEGORIZED

    def test_signature_rule_order_wins(self):
        first = CategoryRule(DomainCategory.GAMING, 1,
                             frozenset({"breed(uint256,uint256)"}),
                             frozenset(), 1)
        second = CategoryRule(DomainCategory.MARKETPLACE, 2,
                              frozenset({"breed(uint256,uint256)"}),
                              frozenset(), 1)
        c = cls(1, ["a", "b"], 90, 95)
        got = categorize_class(c, [first, second],
                               evidence(sigs={"breed(uint256,uint256)"}))
        assert got is DomainCategory.GAMING

    def test_keyword_tie_breaks_by_rule_order(self):
        r1 = CategoryRule(DomainCategory.FINANCE, 1, frozenset(),
                          frozenset({"alpha", "beta"}), 3)
        r2 = CategoryRule(DomainCategory.GAMING, 2, frozenset(),
                          frozenset({"alpha", "beta"}), 3)
        c = cls(1, ["a", "b"], 90, 95)
        got = categorize_class(c, [r1, r2], evidence(kws={"alpha", "beta"}))
        assert got is DomainCategory.FINANCE

    def test_rule_order_stability_for_unmatched_rules(self):
        c = cls(1, ["a", "b"], 90, 95)
        ev = evidence(sigs={"breed(uint256,uint256)", "battle(uint256,uint256)",
                            "mintcollectible(address,uint256)"})
        baseline = categorize_class(c, self.RULES, ev)
        unmatched = [r for r in self.RULES if r.category is not baseline]
        matched = [r for r in self.RULES if r.category is baseline]
        for perm in itertools.islice(itertools.permutations(unmatched), 6):
            rules = sorted(matched + list(perm), key=lambda r: r.order)
            assert categorize_class(c, rules, ev) is baseline

    def test_floor_monotonicity(self):
        c = cls(1, ["a", "b"], 72, 90)
        ev = evidence(sigs=ERC20_CORE)
        high = categorize_class(c, self.RULES, ev, eligibility_floor=75)
        low = categorize_class(c, self.RULES, ev, eligibility_floor=60)
        assert high is DomainCategory.UNCATEGORIZED
        assert low is DomainCategory.TOKEN_MANAGEMENT


class TestAccumulate:
    RULES = load_rules()

    def test_empty(self):
        assert accumulate_categories([], self.RULES, {}) == []

    def test_min_max_accumulation(self):
        classes = [cls(1, ["a", "b"], 90, 100), cls(2, ["c", "d", "e"], 95, 98)]
        ev = {1: evidence(sigs=ERC20_CORE), 2: evidence(sigs=ERC20_CORE)}
        reports = accumulate_categories(classes, self.RULES, ev)
        assert len(reports) == 1
        r = reports[0]
        assert r.category is DomainCategory.TOKEN_MANAGEMENT
        assert (r.min_similarity, r.max_similarity) == (90, 100)
        assert r.accumulated_size == 5
        assert r.class_ids == [1, 2]

    def test_partition_every_class_once(self, fixture_index):
        cfg = CloneConfig(mode=NormalizationMode.for_type("T3_2c"),
                          max_diff_threshold=30, min_lines=3, max_lines=2500)
        det = run_detection(fixture_index, cfg)
        reports, _ = categorize_classes(fixture_index, det.classes, self.RULES)
        seen = [cid for r in reports for cid in r.class_ids]
        assert sorted(seen) == [c.id for c in det.classes]

    def test_ordered_by_accumulated_size(self, fixture_index):
        cfg = CloneConfig(mode=NormalizationMode.for_type("T3_2c"),
                          max_diff_threshold=30, min_lines=3, max_lines=2500)
        det = run_detection(fixture_index, cfg)
        reports, _ = categorize_classes(fixture_index, det.classes, self.RULES)
        sizes = [r.accumulated_size for r in reports]
        assert sizes == sorted(sizes, reverse=True)
        assert reports[0].category is DomainCategory.TOKEN_MANAGEMENT
        assert reports[1].category is DomainCategory.ARITHMETIC_OPERATIONS

    def test_determinism(self, fixture_index):
        cfg = CloneConfig(mode=NormalizationMode.for_type("T3_2c"),
                          max_diff_threshold=30, min_lines=3, max_lines=2500)
        det = run_detection(fixture_index, cfg)
        a, _ = categorize_classes(fixture_index, det.classes, self.RULES)
        b, _ = categorize_classes(fixture_index, det.classes, self.RULES)
        assert [(r.category, r.accumulated_size, r.class_ids) for r in a] == \
            [(r.category, r.accumulated_size, r.class_ids) for r in b]


class TestEvidence:
    def test_fragment_keywords_include_comment_words(self):
        unit = parse_source(SourceFile("k.sol", (
            "contract K {\n"
            "  function f() public {\n"
            "    // breeding the collectible\n"
            "    gene = gene + 1;\n"
            "    score = gene * 2;\n"
            "  }\n"
            "}")))
        frag = extract_fragments(unit, 3, 2500)[0]
        kws = fragment_keywords(frag)
        assert {"breeding", "collectible", "gene"} <= kws

    def test_sidecar_tags_add_keywords(self, tmp_path, fixture_index):
        sidecar_path = tmp_path / "meta.json"
        sidecar_path.write_text(json.dumps(
            {"pair70/pair_a.sol": ["breed battle collectible arena"]}))
        sidecar = load_sidecar(sidecar_path)
        frag = next(f for f in fixture_index.fragments.values()
                    if f.file == "pair70/pair_a.sol")
        kws = fragment_keywords(frag, sidecar)
        assert {"breed", "battle", "collectible"} <= kws

    def test_build_class_evidence_uses_representative(self, fixture_index):
        frag = next(f for f in fixture_index.fragments.values()
                    if f.file == "token.sol" and f.function == "transfer")
        c = cls(1, [frag.id], 100, 100)
        ev = build_class_evidence(c, fixture_index.fragments,
                                  fixture_index.units)
        assert ERC20_CORE <= set(ev.signatures)
