import pytest

from chromac.bench import BENCHMARKS, program_source
from chromac.casts import CASTS, cast_path, path_exists
from chromac.checker import type_check
from chromac.errors import (
    DimensionMismatchError,
    DuplicateBindingError,
    IllegalCastError,
    NoOutputError,
    ParseError,
    TypeMismatchError,
    UnknownChannelError,
    UnknownTypeError,
    UnresolvedVariableError,
)
from chromac.syntax import format_program, parse
from chromac.types import PhysicalType as P
from chromac.types import ShapedType, parse_shaped


def check(src: str):
    return type_check(parse(src))


def out_type(src: str) -> str:
    tp = check(src)
    return str(tp.output_types[tp.program.outputs[-1].name])


# -- parser ------------------------------------------------------------------


class TestParser:
    def test_minimal(self):
        p = parse("input a : sRGB[2,2]\nout = a + a\noutput out")
        assert (len(p.inputs), len(p.statements), len(p.outputs)) == (1, 1, 1)
        assert p.inputs[0].type == ShapedType(P.sRGB, (2, 2))

    def test_interpolation_program(self):
        p = parse(program_source("interpolation"))
        assert len(p.inputs) == 2 and len(p.statements) == 1

    def test_comments_and_continuation(self):
        src = "# header\ninput a : XYZ[2]  # trailing\nout = matmul(a,\n   Matrix([[1,0,0],[0,1,0],[0,0,1]]))\noutput out\n"
        assert len(parse(src).statements) == 1

    def test_unbound_name(self):
        with pytest.raises(UnresolvedVariableError) as e:
            parse("out = a + a\noutput out")
        assert (e.value.line, e.value.col) == (1, 7)

    def test_unbound_output(self):
        with pytest.raises(UnresolvedVariableError):
            parse("input a : XYZ[1]\noutput b")

    def test_duplicate_binding(self):
        with pytest.raises(DuplicateBindingError) as e:
            parse("input a : XYZ[1]\nb = a\nb = a + a\noutput b")
        assert e.value.line == 3

    def test_input_rebound(self):
        with pytest.raises(DuplicateBindingError):
            parse("input a : XYZ[1]\na = a + a\noutput a")

    def test_unknown_type(self):
        with pytest.raises(UnknownTypeError) as e:
            parse("input a : RGBA[1]\noutput a")
        assert "RGBA" in str(e.value)

    def test_unknown_constructor(self):
        with pytest.raises(UnknownTypeError):
            parse("input a : XYZ[1]\nb = YUV(a)\noutput b")

    def test_syntax_error_location(self):
        with pytest.raises(ParseError) as e:
            parse("input a : XYZ[1]\nb = a +\noutput b")
        assert e.value.line == 2
        assert str(e.value).startswith("2:")

    def test_empty_program(self):
        with pytest.raises(NoOutputError, match="no output declared"):
            parse("")

    def test_zero_dimension_rejected(self):
        with pytest.raises(ParseError):
            parse("input a : XYZ[0]\noutput a")

    def test_ragged_array(self):
        with pytest.raises(ParseError):
            parse("b = Matrix([[1, 2], [3]])\noutput b")

    def test_type_name_is_reserved(self):
        with pytest.raises(ParseError):
            parse("input XYZ : XYZ[1]\noutput XYZ")

    @pytest.mark.parametrize("name", BENCHMARKS)
    def test_format_round_trip(self, name):
        p = parse(program_source(name))
        text = format_program(p)
        assert format_program(parse(text)) == text

    def test_parse_shaped(self):
        assert parse_shaped("sRGB[2,2]") == ShapedType(P.sRGB, (2, 2))
        assert str(parse_shaped("Matrix[3,3]")) == "Matrix[3,3]"


# -- casting graph -----------------------------------------------------------


class TestCasts:
    @pytest.mark.parametrize(
        "src, dst, ok",
        [
            (P.Light, P.LMS, True),
            (P.LMS, P.Light, False),
            (P.sRGB, P.opRGB, True),
            (P.Pigment, P.sRGB, False),
            (P.Reflectance, P.Pigment, False),
            (P.Chromaticity, P.XYZ, False),
            (P.HSV, P.LAB, True),
        ],
    )
    def test_path_exists(self, src, dst, ok):
        assert path_exists(src, dst) is ok

    def test_lms_to_srgb(self):
        assert [(a, b) for a, b, _ in cast_path(P.LMS, P.sRGB)] == [(P.LMS, P.XYZ), (P.XYZ, P.sRGB)]

    def test_identity(self):
        assert cast_path(P.XYZ, P.XYZ) == []

    def test_light_to_srgb(self):
        steps = [(a, b) for a, b, _ in cast_path(P.Light, P.sRGB)]
        assert steps == [(P.Light, P.LMS), (P.LMS, P.XYZ), (P.XYZ, P.sRGB)]

    def test_sRGB_to_opRGB_goes_via_XYZ(self):
        assert [b for _, b, _ in cast_path(P.sRGB, P.opRGB)] == [P.XYZ, P.opRGB]

    def test_no_path_names_both_types(self):
        with pytest.raises(IllegalCastError) as e:
            cast_path(P.LMS, P.Light)
        assert "LMS" in str(e.value) and "Light" in str(e.value)

    def test_matrix_never_on_a_path(self):
        for t in P:
            if t != P.Matrix:
                assert not path_exists(t, P.Matrix) and not path_exists(P.Matrix, t)

    def test_shortest_paths_unique(self):
        assert CASTS.ambiguous_pairs() == []


# -- typing rules: golden programs ---------------------------------------------

ACCEPT = [
    ("light-add", "input a : Light[4]\ninput b : Light[4]\nc = a + b\noutput c", "Light[4]"),
    ("light-sub", "input a : Light[4]\nc = a - a\noutput c", "Light[4]"),
    ("tristimulus-add-xyz", "input a : XYZ[2,2]\ninput b : XYZ[2,2]\nc = a + b\noutput c", "XYZ[2,2]"),
    ("tristimulus-add-srgb", "input a : sRGB[2,2]\nc = a + a\noutput c", "sRGB[2,2]"),
    ("tristimulus-sub-lms", "input a : LMS[3]\ninput b : LMS[3]\nc = a - b\noutput c", "LMS[3]"),
    ("perceptual-add-lab", "input a : LAB[2]\ninput b : LAB[2]\nc = a + b\noutput c", "LAB[2]"),
    ("perceptual-add-hsv", "input a : HSV[2]\nc = a + a\noutput c", "HSV[2]"),
    ("reflect", "input l : Light[5]\ninput r : Reflectance[5]\nc = l * r\noutput c", "Light[5]"),
    ("reflect-commuted", "input l : Light[5]\ninput r : Reflectance[5]\nc = r * l\noutput c", "Light[5]"),
    ("reflect-one-light", "input l : Light[1]\ninput r : Reflectance[4,4]\nc = l * r\noutput c", "Light[4,4]"),
    ("reflect-builtin-daylight", "input r : Reflectance[1]\nc = D65 * r\noutput c", "Light[1]"),
    ("pgmt-init", "input k : Absorption[3]\ninput s : Scattering[3]\np = Pigment(k, s)\noutput p", "Pigment[3]"),
    ("pgmt-mix", "input p : Pigment[5]\ninput q : Pigment[5]\nm = mix(0.3, p, 0.7, q)\noutput m", "Pigment[5]"),
    (
        "pgmt-mix-matrix-weights",
        "input p : Pigment[5]\ninput q : Pigment[5]\ninput w : Matrix[1]\nm = mix(w, p, w, q)\noutput m",
        "Pigment[5]",
    ),
    ("triscale-scalar", "input a : sRGB[2,2]\nc = a * 0.5\noutput c", "sRGB[2,2]"),
    ("triscale-scalar-left", "input a : LMS[2]\nc = 2 * a\noutput c", "LMS[2]"),
    ("triscale-per-channel", "input a : XYZ[2]\ninput m : Matrix[3]\nc = a * m\noutput c", "XYZ[2]"),
    ("triscale-per-pixel", "input a : XYZ[2]\ninput m : Matrix[2,3]\nc = m * a\noutput c", "XYZ[2]"),
    ("perceptual-scale", "input a : LAB[2]\nc = a * 0.5\noutput c", "LAB[2]"),
    ("cast-adjacent", "input a : LMS[4]\nc = XYZ(a)\noutput c", "XYZ[4]"),
    ("cast-path", "input a : Light[4]\nc = sRGB(a)\noutput c", "sRGB[4]"),
    ("cast-keyword", "input a : sRGB[2,2]\nc = cast LAB(a)\noutput c", "LAB[2,2]"),
    ("cast-identity", "input a : XYZ[2]\nc = XYZ(a)\noutput c", "XYZ[2]"),
    ("cast-reflectance", "input p : Pigment[3]\nr = Reflectance(p)\noutput r", "Reflectance[3]"),
    ("cast-chromaticity", "input a : sRGB[2]\nc = Chromaticity(a)\noutput c", "Chromaticity[2]"),
    ("cast-hsv-to-lab", "input a : HSV[2]\nc = LAB(a)\noutput c", "LAB[2]"),
    ("matrix-add", "input a : Matrix[3,3]\nc = a + a\noutput c", "Matrix[3,3]"),
    ("matrix-add-broadcast", "input a : Matrix[2,3]\ninput b : Matrix[3]\nc = a + b\noutput c", "Matrix[2,3]"),
    ("matrix-mul-div", "input a : Matrix[2]\nc = a * a / a\noutput c", "Matrix[2]"),
    ("matmul-lms", "input a : LMS[4,4]\ninput m : Matrix[3,3]\nc = matmul(a, m)\noutput c", "LMS[4,4]"),
    ("matmul-srgb", "input a : sRGB[2]\ninput m : Matrix[3,3]\nc = matmul(a, m)\noutput c", "sRGB[2]"),
    ("matmul-matrix", "input a : Matrix[2,3]\ninput m : Matrix[3,4]\nc = matmul(a, m)\noutput c", "Matrix[2,4]"),
    ("channel", "input a : sRGB[2,2]\nc = a.g\noutput c", "Matrix[2,2,1]"),
    ("channel-case-folded", "input a : XYZ[2]\nc = a.y\noutput c", "Matrix[2,1]"),
    ("matrix-view", "input a : XYZ[2]\nc = Matrix(a)\noutput c", "Matrix[2,3]"),
    ("matrix-reinterpret", "input m : Matrix[2,3]\nc = XYZ(m)\noutput c", "XYZ[2]"),
    ("literal-colour", "c = sRGB([255, 0, 0])\noutput c", "sRGB[1]"),
    ("literal-colour-grid", "c = XYZ([[0.1, 0.2, 0.3], [0.3, 0.2, 0.1]])\noutput c", "XYZ[2]"),
    ("literal-scalar", "c = Matrix(2)\noutput c", "Matrix[1]"),
    (
        "toy-light-mix",
        "input l1 : Light[1920,1080]\ninput l2 : Light[1920,1080]\nc = sRGB(l1) + sRGB(l2)\noutput c",
        "sRGB[1920,1080]",
    ),
]

REJECT = [
    # sRGB data fed to an operation on XYZ data (the sRGB-as-XYZ conversion bug)
    ("srgb-plus-xyz", "input a : sRGB[2,2]\ninput b : XYZ[2,2]\nc = a + b\noutput c", TypeMismatchError),
    ("srgb-as-xyz-into-lab", "input a : sRGB[2]\ninput w : XYZ[2]\nc = LAB(a + w)\noutput c", TypeMismatchError),
    # raw byte arithmetic on gamma-encoded values
    ("srgb-divided", "input a : sRGB[2]\nc = a / 255\noutput c", TypeMismatchError),
    ("srgb-times-srgb", "input a : sRGB[2]\nc = a * a\noutput c", TypeMismatchError),
    ("light-times-light", "input a : Light[4]\nc = a * a\noutput c", TypeMismatchError),
    ("light-scaled", "input a : Light[4]\nc = a * 0.5\noutput c", TypeMismatchError),
    ("light-add-dims", "input a : Light[4]\ninput b : Light[5]\nc = a + b\noutput c", DimensionMismatchError),
    ("xyz-add-dims", "input a : XYZ[2,2]\ninput b : XYZ[2,3]\nc = a + b\noutput c", DimensionMismatchError),
    ("lab-plus-hsv", "input a : LAB[2]\ninput b : HSV[2]\nc = a + b\noutput c", TypeMismatchError),
    ("lab-plus-xyz", "input a : LAB[2]\ninput b : XYZ[2]\nc = a + b\noutput c", TypeMismatchError),
    ("light-plus-reflectance", "input a : Light[2]\ninput b : Reflectance[2]\nc = a + b\noutput c", TypeMismatchError),
    ("reflect-dims", "input l : Light[4]\ninput r : Reflectance[5]\nc = l * r\noutput c", DimensionMismatchError),
    ("reflectance-squared", "input r : Reflectance[4]\nc = r * r\noutput c", TypeMismatchError),
    ("pgmt-init-swapped", "input k : Absorption[3]\ninput s : Scattering[3]\np = Pigment(s, k)\noutput p", TypeMismatchError),
    ("pgmt-init-dims", "input k : Absorption[3]\ninput s : Scattering[4]\np = Pigment(k, s)\noutput p", DimensionMismatchError),
    ("pgmt-mix-dims", "input p : Pigment[5]\ninput q : Pigment[4]\nm = mix(0.5, p, 0.5, q)\noutput m", DimensionMismatchError),
    ("pgmt-mix-light", "input p : Light[5]\nm = mix(0.5, p, 0.5, p)\noutput m", TypeMismatchError),
    ("pgmt-mix-vector-weight", "input p : Pigment[5]\ninput w : Matrix[5]\nm = mix(w, p, w, p)\noutput m", TypeMismatchError),
    ("pigment-plus-pigment", "input p : Pigment[5]\nm = p + p\noutput m", TypeMismatchError),
    ("triscale-bad-shape", "input a : XYZ[2]\ninput m : Matrix[4]\nc = a * m\noutput c", DimensionMismatchError),
    ("xyz-times-xyz", "input a : XYZ[2]\nc = a * a\noutput c", TypeMismatchError),
    ("cast-lms-to-light", "input a : LMS[4]\nc = Light(a)\noutput c", IllegalCastError),
    ("cast-xyz-to-light", "input a : XYZ[4]\nc = Light(a)\noutput c", IllegalCastError),
    ("cast-reflectance-to-pigment", "input r : Reflectance[3]\np = Pigment(r)\noutput p", IllegalCastError),
    ("cast-chromaticity-back", "input c : Chromaticity[2]\nx = XYZ(c)\noutput x", IllegalCastError),
    ("cast-pigment-to-srgb", "input p : Pigment[2]\nx = sRGB(p)\noutput x", IllegalCastError),
    ("matrix-of-pigment", "input p : Pigment[2]\nx = Matrix(p)\noutput x", IllegalCastError),
    ("matrix-reinterpret-wrong-width", "input m : Matrix[2,4]\nc = XYZ(m)\noutput c", IllegalCastError),
    ("matrix-add-dims", "input a : Matrix[2,3]\ninput b : Matrix[3,2]\nc = a + b\noutput c", DimensionMismatchError),
    ("matmul-wrong-width", "input a : LMS[4]\ninput m : Matrix[3,4]\nc = matmul(a, m)\noutput c", DimensionMismatchError),
    ("matmul-light", "input a : Light[4]\ninput m : Matrix[3,3]\nc = matmul(a, m)\noutput c", TypeMismatchError),
    ("matmul-lab", "input a : LAB[4]\ninput m : Matrix[3,3]\nc = matmul(a, m)\noutput c", TypeMismatchError),
    ("channel-unknown", "input a : sRGB[2]\nc = a.q\noutput c", UnknownChannelError),
    ("channel-of-light", "input a : Light[2]\nc = a.r\noutput c", UnknownChannelError),
    ("bare-array", "c = [1, 2, 3]\noutput c", TypeMismatchError),
    ("bare-number-as-colour", "c = sRGB(3)\noutput c", TypeMismatchError),
    ("literal-wrong-width", "c = sRGB([1, 2])\noutput c", TypeMismatchError),
    ("literal-negative-light", "c = XYZ([-1, 0, 0])\noutput c", TypeMismatchError),
]


@pytest.mark.parametrize("name, src, expected", ACCEPT, ids=[a[0] for a in ACCEPT])
def test_accepts(name, src, expected):
    assert out_type(src) == expected


@pytest.mark.parametrize("name, src, error", REJECT, ids=[r[0] for r in REJECT])
def test_rejects(name, src, error):
    with pytest.raises(error) as e:
        check(src)
    assert e.value.line is not None and e.value.line >= 1


def test_mismatch_message_names_types_and_rule():
    with pytest.raises(TypeMismatchError) as e:
        check("input a : sRGB[2,2]\ninput b : XYZ[2,2]\nc = a + b\noutput c")
    msg = str(e.value)
    assert "sRGB[2,2]" in msg and "XYZ[2,2]" in msg and "type-mismatch" in msg


def test_srgb_to_lab_cast_accepted():
    # the correct version of the sRGB -> LAB conversion
    assert out_type("input img : sRGB[2,2]\nlab = LAB(img)\noutput lab") == "LAB[2,2]"


def test_matmul_keeps_tristimulus_type():
    src = "input img : LMS[1080,1920]\ninput m : Matrix[3,3]\nc = matmul(img, m)\noutput c"
    assert out_type(src) == "LMS[1080,1920]"


@pytest.mark.parametrize("name", BENCHMARKS)
def test_benchmarks_type_check(name):
    tp = check(program_source(name))
    assert tp.output_types


def test_type_check_is_deterministic():
    src = program_source("mixing")
    a, b = check(src), check(src)
    assert [str(t) for t in a.types.values()] == [str(t) for t in b.types.values()]
    assert list(a.rules.values()) == list(b.rules.values())


def test_every_rule_covered():
    rules = set()
    for _, src, _ in ACCEPT:
        rules.update(check(src).rules.values())
    for r in ("LightAdd", "TristimulusAdd", "PerceptualAdd", "Reflect", "PgmtInit", "PgmtMix",
              "TriScale", "Cast", "MatrixAdd", "MatMul", "Channel"):
        assert r in rules
