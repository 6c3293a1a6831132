import numpy as np
import pytest

from dostbc.code_core import DistributedCode, construct_paired_alamouti, construct_rate_halving, construct_repetition, parse_code
from dostbc.sim import ChannelRealization
from dostbc.verify import (
    ChannelMismatchError,
    check_dostbc,
    check_dostbc_cpi,
    check_gram_conditions,
    is_column_monomial,
    is_row_monomial,
    noise_covariance,
    noise_is_uncorrelated,
    single_term_violation,
    slot_classes,
    verify_any,
)

UNITS = np.array([1, -1, 1j, -1j])


def random_uncorrelated_code(rng, n, k, t) -> DistributedCode:
    """Each A_k and B_k places every symbol at most once and fills every slot at most once."""
    a = np.zeros((k, n, t), dtype=complex)
    b = np.zeros_like(a)
    for relay in range(k):
        for target in (a, b):
            slots = rng.permutation(t)
            for sym in range(n):
                if sym < t and rng.random() < 0.7:
                    target[relay, sym, slots[sym]] = UNITS[rng.integers(4)]
    return DistributedCode.from_arrays(a, b)


class TestMonomialShapes:
    def test_row_monomial(self, rate_halving_44):
        assert is_row_monomial(np.eye(2))
        assert not is_row_monomial([[1, 1], [0, 0]])
        for pair in rate_halving_44.relays:
            assert is_row_monomial(pair.a) and is_row_monomial(pair.b)

    def test_column_monomial(self, alamouti):
        assert is_column_monomial(np.eye(2))
        assert not is_column_monomial([[1, 0], [1, 0]])
        for pair in alamouti.relays:
            assert is_column_monomial(pair.a_matrix()) and is_column_monomial(pair.b_matrix())

    def test_single_term_violation_is_one_based(self, alamouti):
        assert single_term_violation(alamouti) is None
        a = np.zeros((1, 1, 2), dtype=complex)
        b = np.zeros_like(a)
        a[0, 0, 1] = 1
        b[0, 0, 1] = 1j
        assert single_term_violation(DistributedCode.from_arrays(a, b)) == (1, 2)

    def test_slot_classes(self, assets):
        code = parse_code((assets / "alamouti_plus_repetition.code").read_text())
        assert slot_classes(code) == [((0, 1), [0, 1]), ((2,), [2])]


class TestGramConditions:
    def test_alamouti(self, alamouti):
        report = check_gram_conditions(alamouti)
        assert report.verdict
        assert report.profiles["E"].values == [[1, 1], [1, 1]]

    def test_paired_alamouti(self, paired_44):
        report = check_gram_conditions(paired_44)
        assert report.verdict
        assert report.profiles["E"].values == [[1] * 4] * 4

    def test_double_transmit_fails_cross_a(self, double_transmit):
        report = check_gram_conditions(double_transmit)
        assert not report.verdict
        assert report.failed_condition == "cross-A k1=1 k2=2"

    def test_verdict_is_the_only_outcome_flag(self, alamouti, double_transmit):
        assert check_gram_conditions(alamouti).to_dict()["verdict"] == "pass"
        data = check_gram_conditions(double_transmit).to_dict()
        assert data["verdict"] == "fail"
        assert "passed" not in data

    def test_rate_halving_is_not_a_no_csi_code(self, rate_halving_44):
        report = check_gram_conditions(rate_halving_44)
        assert not report.verdict
        assert report.failed_condition == "cross-A k1=1 k2=2"

    def test_missing_symbol_is_not_positive(self, assets):
        code = parse_code((assets / "alamouti_plus_repetition.code").read_text())
        report = check_gram_conditions(code)
        assert not report.verdict
        assert report.failed_condition == "self-diagonal k=3 symbol 2 not strictly positive"

    def test_all_families_evaluated(self, double_transmit):
        report = check_gram_conditions(double_transmit)
        assert {"column-monomial", "single-term", "cross-A", "self-diagonal"} <= set(report.families)


class TestDostbc:
    def test_alamouti_passes(self, alamouti):
        report = check_dostbc(alamouti, draws=20, tol=1e-9)
        assert report.verdict
        assert (np.array(report.profiles["D"].values) > 0).all()

    def test_double_transmit_fails_off_diagonal(self, double_transmit):
        report = check_dostbc(double_transmit)
        assert not report.verdict
        assert report.failed_condition.startswith("weighted-offdiagonal")

    def test_paired_alamouti_passes(self, paired_44):
        assert check_dostbc(paired_44).verdict

    def test_rejects_bad_parameters(self, alamouti):
        with pytest.raises(ValueError):
            check_dostbc(alamouti, draws=0)
        with pytest.raises(ValueError):
            check_dostbc(alamouti, tol=0.0)

    def test_same_seed_same_profile(self, alamouti):
        a = check_dostbc(alamouti, seed=3).profiles["D"].values
        b = check_dostbc(alamouti, seed=3).profiles["D"].values
        assert a == b

    def test_agrees_with_gram_conditions_on_random_codes(self):
        rng = np.random.default_rng(20240601)
        for _ in range(150):
            n, k, t = (int(x) for x in rng.integers(1, 4, size=3))
            code = random_uncorrelated_code(rng, n, k, t)
            assert noise_is_uncorrelated(code)
            gram = check_gram_conditions(code).verdict
            numeric = check_dostbc(code, draws=6).verdict
            assert gram == numeric, code
        for code in (construct_repetition(2), construct_paired_alamouti(2, 2), construct_paired_alamouti(4, 2)):
            assert check_gram_conditions(code).verdict and check_dostbc(code).verdict


class TestDostbcCpi:
    def test_rate_halving_profile(self, rate_halving_44):
        report = check_dostbc_cpi(rate_halving_44)
        assert report.verdict
        assert report.profiles["G"].values == [[2] * 4] * 4
        assert set(report.profiles) == {"G", "F"}

    def test_repetition(self, repetition3):
        report = check_dostbc_cpi(repetition3)
        assert report.verdict
        assert report.profiles["G"].values == [[1, 1, 1]]
        assert check_dostbc_cpi(construct_repetition(4)).verdict

    def test_alamouti(self, alamouti):
        report = check_dostbc_cpi(alamouti)
        assert report.verdict
        assert report.profiles["G"].values == [[1, 1], [1, 1]]

    def test_column_code_fails(self):
        a = np.ones((2, 1, 1), dtype=complex)
        report = check_dostbc_cpi(DistributedCode.from_arrays(a, np.zeros_like(a)))
        assert not report.verdict
        assert report.failed_condition.startswith("gram-offdiagonal k1=1 k2=2")

    def test_corrupted_rate_halving(self, assets):
        code = parse_code((assets / "rate_halving_4x4_corrupted.code").read_text())
        report = check_dostbc_cpi(code)
        assert not report.verdict
        assert report.failed_condition.startswith("gram-offdiagonal")
        assert "G" not in report.profiles

    def test_row_monomial_violation_reported_first(self):
        a = np.zeros((1, 1, 2), dtype=complex)
        a[0, 0, :] = 1
        report = check_dostbc_cpi(DistributedCode.from_arrays(a, np.zeros_like(a)))
        assert report.failed_condition == "row-monomial relay 1 A"

    @pytest.mark.parametrize("n,k", [(2, 2), (4, 3), (8, 6), (8, 8)])
    def test_rate_halving_family(self, n, k):
        assert check_dostbc_cpi(construct_rate_halving(n, k), draws=5).verdict

    def test_report_serializes(self, rate_halving_44):
        data = check_dostbc_cpi(rate_halving_44).to_dict()
        assert data["verdict"] == "pass"
        assert data["profiles"]["G"]["values"][0] == [2, 2, 2, 2]

    def test_verify_any_runs_all_checks(self, alamouti):
        reports = verify_any(alamouti)
        assert set(reports) == {"dostbc-cpi", "gram-conditions", "dostbc"}
        assert all(r.verdict for r in reports.values())
        assert set(verify_any(alamouti, kind="dostbc")) == {"gram-conditions", "dostbc"}


class TestNoiseCovariance:
    def test_alamouti_is_scaled_identity(self, alamouti):
        ch = ChannelRealization(h=[1, 1], f=[0.5, 1j])
        rho = 2.0
        cov = noise_covariance(alamouti, ch, rho)
        np.testing.assert_allclose(cov.matrix, (1 + 1 + 4) * np.eye(2))
        assert cov.is_diagonal()

    def test_repetition_is_diagonal(self):
        ch = ChannelRealization(h=[1, 1], f=[1.0, 0.5])
        cov = noise_covariance(construct_repetition(2), ch, rho=1.0)
        np.testing.assert_allclose(cov.matrix, np.diag([2.0, 1.25]))

    def test_vanishing_second_hop_gives_identity(self, rate_halving_44):
        ch = ChannelRealization(h=np.ones(4), f=np.zeros(4))
        np.testing.assert_allclose(noise_covariance(rate_halving_44, ch, 0.7).matrix, np.eye(8))

    def test_eigenvalues_at_least_one(self, rate_halving_44, rng):
        for _ in range(50):
            cov = noise_covariance(rate_halving_44, ChannelRealization.draw(rng, 4), rho=0.9)
            assert cov.min_eigenvalue() >= 1 - 1e-12
            np.testing.assert_allclose(cov.matrix, cov.matrix.conj().T)

    def test_channel_count_checked(self, alamouti):
        ch = ChannelRealization(h=[1, 1, 1], f=[1, 1, 1])
        with pytest.raises(ChannelMismatchError):
            noise_covariance(alamouti, ch, 1.0)

    def test_rho_must_be_positive(self, alamouti):
        ch = ChannelRealization(h=[1, 1], f=[1, 1])
        with pytest.raises(ValueError):
            noise_covariance(alamouti, ch, 0.0)

    def test_correlated_noise_detected(self):
        a = np.zeros((1, 1, 2), dtype=complex)
        a[0, 0, :] = 1
        code = DistributedCode.from_arrays(a, np.zeros_like(a))
        assert not noise_is_uncorrelated(code)
        assert noise_is_uncorrelated(construct_rate_halving(4, 4))
