import math

import pytest
from hypothesis import given, strategies as st

from wolly.model import (
    BACKWARD,
    EXPRESSIONS,
    FORWARD,
    LEFT,
    MAX_PROGRAM_LEN,
    RIGHT,
    STOP,
    Instruction,
    Kind,
    ParseError,
    RobotPose,
    make_expression,
    normalize_heading,
    parse_instruction,
    parse_script,
    program_of,
    serialize_instruction,
    validate_program,
    emit_script,
)


def all_instructions():
    basics = [FORWARD, RIGHT, LEFT, BACKWARD, STOP]
    return basics + [make_expression(e) for e in EXPRESSIONS]


class TestParseInstruction:
    def test_forward(self):
        assert parse_instruction("FORWARD") == FORWARD

    def test_expression(self):
        assert parse_instruction("EXPRESSION happy") == make_expression("happy")

    def test_unknown_token(self):
        with pytest.raises(ParseError) as ei:
            parse_instruction("JUMP")
        assert "unknown token" in ei.value.reason

    def test_unknown_expression(self):
        with pytest.raises(ParseError):
            parse_instruction("EXPRESSION rage")

    def test_expression_arity(self):
        with pytest.raises(ParseError):
            parse_instruction("EXPRESSION")
        with pytest.raises(ParseError):
            parse_instruction("EXPRESSION happy sad")

    def test_no_argument_commands_reject_payload(self):
        with pytest.raises(ParseError):
            parse_instruction("STOP now")

    def test_multiline_rejected(self):
        with pytest.raises(ParseError):
            parse_instruction("FORWARD\nLEFT")

    def test_line_number_attached(self):
        with pytest.raises(ParseError) as ei:
            parse_instruction("JUMP", line=7)
        assert ei.value.line == 7


class TestSerializeRoundTrip:
    @pytest.mark.parametrize("instr", all_instructions(), ids=serialize_instruction)
    def test_round_trip(self, instr):
        assert parse_instruction(serialize_instruction(instr)) == instr

    def test_examples(self):
        assert serialize_instruction(LEFT) == "LEFT"
        assert serialize_instruction(make_expression("sad")) == "EXPRESSION sad"
        assert serialize_instruction(STOP) == "STOP"


class TestInstructionInvariants:
    def test_exactly_six_kinds(self):
        assert len(Kind) == 6

    def test_exactly_eleven_expressions(self):
        assert len(EXPRESSIONS) == 11
        assert len(set(EXPRESSIONS)) == 11
        assert all(e == e.lower() for e in EXPRESSIONS)

    def test_expression_payload_required(self):
        with pytest.raises(ValueError):
            Instruction(Kind.MAKE_EXPRESSION)

    def test_other_kinds_reject_payload(self):
        with pytest.raises(ValueError):
            Instruction(Kind.STOP, "happy")


class TestValidateProgram:
    def test_empty_ok(self):
        assert validate_program(program_of([])) is None

    def test_too_long(self):
        p = program_of([FORWARD] * (MAX_PROGRAM_LEN + 1))
        err = validate_program(p)
        assert err is not None and "too long" in err.reason

    def test_at_cap_ok(self):
        assert validate_program(program_of([FORWARD] * MAX_PROGRAM_LEN)) is None

    def test_unknown_expression_flagged_with_index(self):
        p = program_of([Instruction(Kind.MAKE_EXPRESSION, "rage")])
        err = validate_program(p)
        assert err is not None and err.index == 0


class TestScript:
    def test_emit(self):
        text = emit_script([FORWARD, LEFT, STOP])
        assert text == "FORWARD\nLEFT\nSTOP\n"

    def test_emit_empty(self):
        assert emit_script([]) == ""

    def test_parse_script_round_trip(self):
        instrs = all_instructions()
        assert parse_script(emit_script(instrs)) == instrs

    def test_parse_script_line_numbers(self):
        with pytest.raises(ParseError) as ei:
            parse_script("FORWARD\nJUMP\n")
        assert ei.value.line == 2


class TestHeading:
    @given(st.floats(-1e6, 1e6), st.integers(-50, 50))
    def test_periodic(self, h, k):
        assert normalize_heading(h + 360.0 * k) == pytest.approx(normalize_heading(h), abs=1e-6)

    @given(st.floats(-1e6, 1e6))
    def test_range(self, h):
        n = normalize_heading(h)
        assert 0.0 <= n < 360.0

    def test_exact_multiples(self):
        assert normalize_heading(360.0) == 0.0
        assert normalize_heading(-90.0) == 270.0
        assert normalize_heading(450.0) == 90.0

    def test_pose_normalizes(self):
        assert RobotPose(0, 0, -90).heading == 270.0

    def test_pose_rejects_non_finite(self):
        with pytest.raises(ValueError):
            RobotPose(math.inf, 0, 0)
