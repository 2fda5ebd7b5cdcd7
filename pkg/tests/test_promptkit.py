import hashlib
import json

import pytest

from mathstrat.core import Problem, Strategy
from mathstrat.gateway import Role
from mathstrat.promptkit import (CODE_STAGES, PROMPTS_DIR, SHOT_DELIMITER,
                                 InvalidCombination, MissingContext,
                                 StageContext, asset_hashes, build_prompt,
                                 build_selector_prompt, load_asset,
                                 load_manifest)

P = Problem(id="p1", statement="What is 2+2?", reference_answer="4")

EXPECTED_SHOTS = {"cot": 8, "pal": 8, "codenl_stage2": 4, "nlcode_stage2": 4}

STAGE_SHOTS = {
    (Strategy.COT, 1): 8,
    (Strategy.PAL, 1): 8,
    (Strategy.CODENL, 1): 4,
    (Strategy.CODENL, 2): 4,
    (Strategy.NLCODE, 1): 4,
    (Strategy.NLCODE, 2): 4,
}

FULL_CTX = StageContext(prior_reasoning="r", prior_code="```python\nc\n```",
                        prior_exec_output="6")


class TestAssets:
    @pytest.mark.parametrize("name,count", sorted(EXPECTED_SHOTS.items()))
    def test_shot_counts(self, name, count):
        assert len(load_asset(name).shots) == count

    def test_unknown_asset(self):
        with pytest.raises(FileNotFoundError):
            load_asset("nonexistent")

    def test_manifest_matches_disk(self):
        # the pinned hashes must match a fresh hash of the asset directories
        manifest = {m["asset"]: m for m in load_manifest()}
        hashes = asset_hashes()
        assert set(manifest) == set(hashes)
        for name, m in manifest.items():
            assert m["content_hash"] == hashes[name], name
        for name, count in EXPECTED_SHOTS.items():
            assert manifest[name]["shot_count"] == count

    def test_nl_system_prompt_text(self):
        system = load_asset("cot").system_prompt
        assert "Present the final result in LaTeX using a `\\boxed{}` without any units." in system
        assert "simplify all fractions and square roots" in system

    def test_code_system_prompt_text(self):
        system = load_asset("pal").system_prompt
        assert "the function name should be `solution`" in system

    def test_code_shots_carry_solution_functions(self):
        for name in ("pal", "nlcode_stage2"):
            for shot in load_asset(name).shots:
                assert "solution" in shot, name

    def test_selector_names_each_label_once(self):
        template = (PROMPTS_DIR / "selector" / "template.txt").read_text(encoding="utf-8")
        for label in ("CoT", "PAL", "CodeNL", "NLCode"):
            assert template.count(label) == 1, label


class TestBuildPrompt:
    @pytest.mark.parametrize("strategy,stage", sorted(STAGE_SHOTS, key=str))
    def test_shape_and_shot_count(self, strategy, stage):
        msgs = build_prompt(strategy, stage, P, FULL_CTX)
        assert [m.role for m in msgs] == [Role.SYSTEM, Role.USER]
        # each rendered shot and the trailing problem contribute one "Question:"
        assert msgs[1].content.count("Question:") == STAGE_SHOTS[(strategy, stage)] + 1
        assert msgs[1].content.rstrip().endswith(P.statement) \
            or P.statement in msgs[1].content

    @pytest.mark.parametrize("strategy,stage", sorted(STAGE_SHOTS, key=str))
    def test_pure_function(self, strategy, stage):
        a = build_prompt(strategy, stage, P, FULL_CTX)
        b = build_prompt(strategy, stage, P, FULL_CTX)
        assert a == b

    def test_problem_rendered_after_all_shots(self):
        user = build_prompt(Strategy.COT, 1, P)[1].content
        assert user.rindex(P.statement) > user.rindex(load_asset("cot").shots[-1][:40])

    def test_nl_stage_ends_with_answer_cue(self):
        user = build_prompt(Strategy.COT, 1, P)[1].content
        assert user.endswith(f"Question: {P.statement}\nAnswer:")

    def test_code_stage_has_no_answer_cue(self):
        user = build_prompt(Strategy.PAL, 1, P)[1].content
        assert user.endswith(f"Question: {P.statement}\n")

    def test_two_stage_first_stages_truncate_single_stage_assets(self):
        pal_user = build_prompt(Strategy.PAL, 1, P)[1].content
        codenl_user = build_prompt(Strategy.CODENL, 1, P)[1].content
        pal_shots = load_asset("pal").shots
        for shot in pal_shots[:4]:
            assert shot in codenl_user
        assert pal_shots[4] in pal_user
        assert pal_shots[4] not in codenl_user

    def test_codenl_stage2_embeds_code_and_output(self):
        user = build_prompt(Strategy.CODENL, 2, P, FULL_CTX)[1].content
        assert "Code: ```python\nc\n```" in user
        assert "Output: 6" in user
        assert user.endswith("Answer:")

    def test_nlcode_stage2_embeds_reasoning(self):
        ctx = StageContext(prior_reasoning="the count is six")
        user = build_prompt(Strategy.NLCODE, 2, P, ctx)[1].content
        assert "Reasoning Path: the count is six" in user
        assert user.endswith("Code:")

    @pytest.mark.parametrize("strategy,stage", [
        (Strategy.COT, 2), (Strategy.PAL, 2), (Strategy.COT, 0), (Strategy.NLCODE, 3),
    ])
    def test_invalid_combination(self, strategy, stage):
        with pytest.raises(InvalidCombination):
            build_prompt(strategy, stage, P, FULL_CTX)

    def test_codenl_stage2_requires_code_and_output(self):
        with pytest.raises(MissingContext):
            build_prompt(Strategy.CODENL, 2, P, StageContext(prior_code="c"))
        with pytest.raises(MissingContext):
            build_prompt(Strategy.CODENL, 2, P, StageContext(prior_exec_output="6"))

    def test_nlcode_stage2_requires_reasoning(self):
        with pytest.raises(MissingContext):
            build_prompt(Strategy.NLCODE, 2, P, StageContext())

    def test_shots_override(self):
        user = build_prompt(Strategy.COT, 1, P, shots_override=0)[1].content
        assert user.count("Question:") == 1

    def test_shots_override_beyond_asset(self):
        with pytest.raises(ValueError):
            build_prompt(Strategy.COT, 1, P, shots_override=9)

    def test_shot_delimiter_joins_parts(self):
        user = build_prompt(Strategy.COT, 1, P, shots_override=1)[1].content
        first_shot = load_asset("cot").shots[0]
        assert f"{first_shot}{SHOT_DELIMITER}Question: {P.statement}" in user

    def test_code_stage_set(self):
        assert CODE_STAGES == {(Strategy.PAL, 1), (Strategy.CODENL, 1),
                               (Strategy.NLCODE, 2)}


class TestSelectorPrompt:
    def test_shape(self):
        msgs = build_selector_prompt(P)
        assert [m.role for m in msgs] == [Role.SYSTEM, Role.USER]
        assert P.statement in msgs[1].content
        assert msgs[1].content.count("Question:") == 0  # zero-shot

    def test_labels_present(self):
        user = build_selector_prompt(P)[1].content
        for label in ("CoT", "PAL", "CodeNL", "NLCode"):
            assert label in user
