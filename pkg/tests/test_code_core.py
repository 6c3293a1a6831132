from fractions import Fraction

import numpy as np
import pytest

from dostbc.code_core import (
    AssociatedPair,
    CodeFormatError,
    DistributedCode,
    GaussianIntMatrix,
    MonoCoeff,
    UnsupportedSizeError,
    construct,
    construct_alamouti,
    construct_paired_alamouti,
    construct_rate_halving,
    construct_repetition,
    parse_code,
    render_code_matrix,
    serialize_code,
)
from dostbc.sim import ChannelRealization


class TestMonoCoeff:
    def test_products_stay_in_the_unit_set(self):
        j, mj = MonoCoeff.PLUS_J, MonoCoeff.MINUS_J
        assert j * j is MonoCoeff.MINUS_ONE
        assert j * mj is MonoCoeff.PLUS_ONE
        assert MonoCoeff.ZERO * j is MonoCoeff.ZERO

    def test_conjugate_and_negation(self):
        assert MonoCoeff.PLUS_J.conjugate() is MonoCoeff.MINUS_J
        assert MonoCoeff.MINUS_ONE.conjugate() is MonoCoeff.MINUS_ONE
        assert -MonoCoeff.PLUS_ONE is MonoCoeff.MINUS_ONE

    def test_tokens(self):
        assert MonoCoeff.from_token("-j") is MonoCoeff.MINUS_J
        assert MonoCoeff.from_token("+1") is MonoCoeff.PLUS_ONE
        with pytest.raises(CodeFormatError):
            MonoCoeff.from_token("2")

    def test_out_of_set_parts_rejected(self):
        with pytest.raises(ValueError):
            MonoCoeff.from_parts(1, 1)


class TestGaussianIntMatrix:
    def test_hermitian_product_is_exact(self):
        m = GaussianIntMatrix([[1, 0], [0, 0]], [[0, 0], [0, 1]])  # diag(1, j)
        g = m @ m.H
        assert g.is_diagonal()
        assert g.diagonal() == [1 + 0j, 1 + 0j]

    def test_off_diagonal_positions(self):
        m = GaussianIntMatrix([[1, 2], [0, 1]])
        assert m.off_diagonal_nonzero() == [(0, 1)]
        assert not m.is_diagonal()

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            GaussianIntMatrix.zeros(2, 3) @ GaussianIntMatrix.zeros(2, 3)


class TestParsing:
    def test_alamouti_file(self, assets):
        code = parse_code((assets / "alamouti.code").read_text())
        assert code == construct_alamouti()
        assert code.data_rate == 1

    def test_rate_halving_file_matches_construction(self, assets):
        code = parse_code((assets / "rate_halving_4x4.code").read_text())
        assert code == construct_rate_halving(4, 4)

    def test_serialized_text_parses_back(self, rate_halving_44):
        assert parse_code(serialize_code(rate_halving_44)) == rate_halving_44

    def test_serialization_is_stable(self, alamouti):
        text = serialize_code(alamouti)
        assert text == serialize_code(construct_alamouti())
        assert text.startswith("dostbc 2 2 2\nrelay 1\n1 0\n0 1\n--\n")

    def test_extra_row_is_a_dimension_mismatch(self):
        text = "dostbc 2 1 2\nrelay 1\n1 0\n0 1\n0 0\n--\n0 0\n0 0\n"
        with pytest.raises(CodeFormatError, match="dimension mismatch"):
            parse_code(text)

    def test_wrong_row_width(self):
        with pytest.raises(CodeFormatError, match="dimension mismatch"):
            parse_code("dostbc 1 1 2\nrelay 1\n1\n--\n0 0\n")

    def test_missing_separator(self):
        with pytest.raises(CodeFormatError, match="missing '--'"):
            parse_code("dostbc 1 1 1\nrelay 1\n1\n0\n")

    def test_relay_count_must_match_header(self):
        with pytest.raises(CodeFormatError, match="K=2"):
            parse_code("dostbc 1 2 1\nrelay 1\n1\n--\n0\n")

    def test_bad_token_reports_line(self):
        with pytest.raises(CodeFormatError, match="line 3"):
            parse_code("dostbc 1 1 1\nrelay 1\n2\n--\n0\n")

    def test_bad_header(self):
        with pytest.raises(CodeFormatError):
            parse_code("code 1 1 1\n")
        with pytest.raises(CodeFormatError):
            parse_code("")

    def test_comments_and_blank_lines_ignored(self):
        text = "# header\n\ndostbc 1 1 1  # N K T\nrelay 1\nj\n--\n0\n"
        code = parse_code(text)
        assert code.relays[0].a[0][0] is MonoCoeff.PLUS_J


class TestRendering:
    def test_alamouti_cpi(self, alamouti):
        assert render_code_matrix(alamouti, cpi=True) == [["s1", "s2"], ["-s2*", "s1*"]]

    def test_alamouti_no_csi(self, alamouti):
        assert render_code_matrix(alamouti, cpi=False) == [["h1 s1", "h1 s2"], ["-h2* s2*", "h2* s1*"]]

    def test_rate_halving_2x2(self):
        assert render_code_matrix(construct_rate_halving(2, 2), cpi=True) == [
            ["s1", "-s2", "s1*", "-s2*"],
            ["s2", "s1", "s2*", "s1*"],
        ]

    def test_rate_halving_4x4_first_row(self, rate_halving_44):
        rows = render_code_matrix(rate_halving_44, cpi=True)
        assert rows[0] == ["s1", "-s2", "-s3", "-s4", "s1*", "-s2*", "-s3*", "-s4*"]
        assert rows[3] == ["s4", "s3", "-s2", "s1", "s4*", "s3*", "-s2*", "s1*"]

    def test_numeric_rendering(self, alamouti):
        s = np.array([1.0, 1j])
        x = render_code_matrix(alamouti, cpi=True, symbols=s)
        np.testing.assert_allclose(x, [[1, 1j], [1j, 1]])

    def test_numeric_no_csi_needs_channels(self, alamouti):
        with pytest.raises(ValueError):
            render_code_matrix(alamouti, cpi=False, symbols=[1, 1])
        ch = ChannelRealization(h=[2.0, 1j], f=[1.0, 1.0])
        x = render_code_matrix(alamouti, cpi=False, channels=ch, symbols=[1, 1])
        np.testing.assert_allclose(x, [[2, 2], [1j, -1j]])

    def test_mixed_entry(self):
        pair = AssociatedPair(((MonoCoeff.PLUS_ONE,),), ((MonoCoeff.MINUS_J,),))
        code = DistributedCode(1, 1, 1, (pair,))
        assert render_code_matrix(code, cpi=True) == [["s1 - js1*"]]


class TestConstructions:
    def test_alamouti_gram(self, alamouti):
        x = render_code_matrix(alamouti, cpi=True, symbols=[0.3 - 1j, 2 + 0.5j])
        np.testing.assert_allclose(x @ x.conj().T, (0.3**2 + 1 + 4 + 0.25) * np.eye(2), atol=1e-12)

    @pytest.mark.parametrize("n,k,t", [(2, 2, 4), (4, 3, 8), (4, 4, 8), (8, 6, 16), (8, 8, 16)])
    def test_rate_halving_sizes(self, n, k, t):
        code = construct_rate_halving(n, k)
        assert (code.n_symbols, code.n_relays, code.n_slots) == (n, k, t)
        assert code.data_rate == Fraction(1, 2)

    @pytest.mark.parametrize("n,k", [(3, 3), (4, 9), (2, 3), (4, 1)])
    def test_rate_halving_unsupported(self, n, k):
        with pytest.raises(UnsupportedSizeError):
            construct_rate_halving(n, k)

    def test_repetition(self, repetition3):
        assert repetition3.n_slots == 3
        assert render_code_matrix(repetition3, cpi=True) == [["s1", "0", "0"], ["0", "s1", "0"], ["0", "0", "s1"]]
        assert construct_repetition(1).data_rate == 1

    def test_paired_alamouti_reduces_to_alamouti(self):
        assert construct_paired_alamouti(2, 2) == construct_alamouti()

    def test_paired_alamouti_rates(self):
        assert construct_paired_alamouti(4, 4).data_rate == Fraction(1, 2)
        assert construct_paired_alamouti(8, 6).n_slots == 24
        with pytest.raises(UnsupportedSizeError):
            construct_paired_alamouti(3, 2)

    def test_dispatch(self):
        assert construct("alamouti", 2, 2) == construct_alamouti()
        assert construct("repetition", 1, 4) == construct_repetition(4)
        with pytest.raises(UnsupportedSizeError, match="unknown construction"):
            construct("golden", 2, 2)

    def test_arrays_round_trip_through_from_arrays(self, rate_halving_44):
        again = DistributedCode.from_arrays(rate_halving_44.a_arrays(), rate_halving_44.b_arrays())
        assert again == rate_halving_44
