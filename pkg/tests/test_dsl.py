import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from steer import language
from steer.dsl import (
    Plan,
    PlanSyntaxError,
    SkillCall,
    parse_plan,
    render_language,
    render_plan,
)
from steer.language import parse_skill_instruction
from steer.trajectory import SkillKind

POUR = """
grasp("pink cup", "side")
lift("pink cup")
reorient("pink cup", "horizontal")
reorient("pink cup", "vertical")
place("pink cup")
"""


class TestParsePlan:
    def test_pour_program(self):
        plan = parse_plan(POUR)
        assert len(plan) == 5
        assert plan.calls[0] == SkillCall(SkillKind.GRASP, "pink cup", "side")
        assert plan.calls[2].modifier == language.TO_HORIZONTAL
        assert plan.calls[3].modifier == language.TO_UPRIGHT  # "vertical" synonym

    def test_upright_synonym(self):
        plan = parse_plan('reorient("cup", "upright")')
        assert plan.calls[0].modifier == language.TO_UPRIGHT

    def test_canonical_directions_accepted(self):
        plan = parse_plan('reorient("cup", "to_horizontal") reorient("cup", "to_upright")')
        assert [c.modifier for c in plan.calls] == [language.TO_HORIZONTAL, language.TO_UPRIGHT]

    def test_invalid_grasp_modifier(self):
        with pytest.raises(PlanSyntaxError) as err:
            parse_plan('grasp("coke can", "sideways")')
        assert err.value.code == "invalid_modifier"

    def test_empty_program(self):
        with pytest.raises(PlanSyntaxError) as err:
            parse_plan("   \n  # just a comment\n")
        assert err.value.code == "empty_program"

    def test_unknown_function(self):
        with pytest.raises(PlanSyntaxError) as err:
            parse_plan('shove("cup")')
        assert err.value.code == "unknown_function"

    def test_arity_mismatch_missing_modifier(self):
        with pytest.raises(PlanSyntaxError) as err:
            parse_plan('grasp("cup")')
        assert err.value.code == "arity"

    def test_arity_mismatch_extra_modifier(self):
        with pytest.raises(PlanSyntaxError) as err:
            parse_plan('lift("cup", "side")')
        assert err.value.code == "arity"

    def test_syntax_error_has_position(self):
        with pytest.raises(PlanSyntaxError) as err:
            parse_plan('grasp("cup" "side")')
        assert err.value.code == "syntax"
        assert err.value.line == 1
        assert err.value.column > 1

    def test_error_position_on_later_line(self):
        with pytest.raises(PlanSyntaxError) as err:
            parse_plan('lift("cup")\nbogus("cup")')
        assert err.value.line == 2

    def test_comments_and_semicolons(self):
        plan = parse_plan('# warmup\nlift("cup"); place("cup")  # done\n')
        assert [c.name for c in plan.calls] == [SkillKind.LIFT, SkillKind.PLACE]

    def test_whitespace_insensitive(self):
        plan = parse_plan('grasp (  "pink cup" ,   "side" )')
        assert plan.calls[0].object == "pink cup"


class TestRenderLanguage:
    def test_grasp(self):
        call = SkillCall(SkillKind.GRASP, "coke can", "side")
        assert render_language(call) == "grasp the coke can in a side grasp"

    def test_lift(self):
        assert render_language(SkillCall(SkillKind.LIFT, "pink cup")) == "hold and lift the pink cup"

    def test_place(self):
        assert render_language(SkillCall(SkillKind.PLACE, "pink cup")) == "place the pink cup"

    def test_reorient_both_directions(self):
        up = SkillCall(SkillKind.REORIENT, "pink cup", language.TO_UPRIGHT)
        flat = SkillCall(SkillKind.REORIENT, "pink cup", language.TO_HORIZONTAL)
        assert render_language(up) == "reorient the pink cup to be upright"
        assert render_language(flat) == "reorient the pink cup to be horizontal"


objects = st.text(
    alphabet="abcdefghijklmnopqrstuvwxyz ", min_size=1, max_size=20
).map(str.strip).filter(bool)


def call_strategy():
    return st.one_of(
        st.builds(lambda o, m: SkillCall(SkillKind.GRASP, o, m),
                  objects, st.sampled_from(language.GRASP_MODIFIERS)),
        st.builds(lambda o, m: SkillCall(SkillKind.REORIENT, o, m),
                  objects, st.sampled_from(language.REORIENT_DIRECTIONS)),
        st.builds(lambda o: SkillCall(SkillKind.LIFT, o), objects),
        st.builds(lambda o: SkillCall(SkillKind.PLACE, o), objects),
    )


class TestRoundTrips:
    @given(st.lists(call_strategy(), min_size=1, max_size=8))
    @settings(max_examples=150)
    def test_dsl_parse_render_identity(self, calls):
        plan = Plan(calls=tuple(calls), source_text="")
        assert parse_plan(render_plan(plan)).calls == plan.calls

    @given(call_strategy())
    @settings(max_examples=150)
    def test_rendered_language_parses_under_reverse_grammar(self, call):
        kind, obj, modifier = parse_skill_instruction(render_language(call))
        assert kind == call.name
        assert obj == call.object
        if call.name is SkillKind.GRASP:
            assert modifier == call.modifier
        elif call.name is SkillKind.REORIENT:
            assert modifier == call.modifier
        else:
            assert modifier is None

    def test_reverse_grammar_rejects_non_template_text(self):
        with pytest.raises(ValueError):
            parse_skill_instruction("pick coke can")
