import numpy as np
import pytest

import bivirus as bv
from bivirus.analysis import Outcome, TrichotomyVerdict, write_verdict_csv
from bivirus.sweep import linear_system
from test_dynamics import case3_system
from test_rates import NegatedInfection

# Mid-wedge coexistence point for C6 (virus 1) vs wheel6 (virus 2), located
# by sweeping the strip between the threshold curves; reproduced by
# test_sweep.py::test_r6_wedge_between_curves.
R6_TAU1 = 1.467
R6_TAU2 = 0.8697


@pytest.fixture(scope="module")
def r6_system():
    c6 = bv.cycle_graph(6)
    w6 = bv.wheel_graph(6)
    return linear_system(c6, w6, R6_TAU1, R6_TAU2)


@pytest.fixture(scope="module")
def r6_verdict(r6_system):
    return bv.classify(r6_system)


class TestConeOrder:
    def test_orderings(self):
        a = bv.StateD(np.array([0.1, 0.1]), np.array([0.5, 0.5]))
        b = bv.StateD(np.array([0.2, 0.3]), np.array([0.4, 0.2]))
        assert bv.southeast_le(a, b)
        assert bv.southeast_lt(a, b)
        assert bv.southeast_ll(a, b)
        assert not bv.southeast_le(b, a)
        assert bv.southeast_le(a, a)
        assert not bv.southeast_lt(a, a)
        assert not bv.southeast_ll(a, a)

    def test_incomparable(self):
        a = bv.StateD(np.array([0.1, 0.4]), np.array([0.1, 0.1]))
        b = bv.StateD(np.array([0.2, 0.3]), np.array([0.2, 0.3]))
        assert not bv.southeast_le(a, b)
        assert not bv.southeast_le(b, a)


class TestClassify:
    def test_virus_free_corner(self, c6):
        # tau * lambda(C6) = 0.8 <= 1 for both viruses
        sys = linear_system(c6, c6, 0.4, 0.4)
        verdict = bv.classify(sys)
        assert verdict.outcome is Outcome.VIRUS_FREE
        assert verdict.lambda_g0 == pytest.approx(-0.2, abs=1e-9)
        assert verdict.lambda_u == pytest.approx(verdict.lambda_g0, abs=1e-12)
        assert np.array_equal(verdict.x_star, np.zeros(6))

    def test_winner_takes_all_shared_graph(self, c6):
        sys = linear_system(c6, c6, 1.0, 0.75)
        verdict = bv.classify(sys)
        assert verdict.outcome is Outcome.VIRUS1_WINS
        assert verdict.lambda_u > 0 > verdict.lambda_v
        assert verdict.x_star == pytest.approx(np.full(6, 0.5), abs=1e-9)

    def test_solo_collapse_when_other_dies(self, c6, wheel6):
        # virus 2 below its solo threshold: y* = 0 so lambda_u == lambda_g0
        sys = linear_system(c6, wheel6, 1.0, 0.2)
        verdict = bv.classify(sys)
        assert verdict.outcome is Outcome.VIRUS1_WINS
        assert verdict.lambda_u == pytest.approx(verdict.lambda_g0, abs=1e-12)

    def test_coexistence_point(self, r6_verdict):
        assert r6_verdict.outcome is Outcome.COEXISTENCE
        assert r6_verdict.lambda_u > 0 and r6_verdict.lambda_v > 0

    def test_boundary_detection(self, c6):
        # tau1 = 0.5 puts lambda_g0 = 0.5 * 2 - 1 = 0 exactly
        sys = linear_system(c6, c6, 0.5, 0.3)
        verdict = bv.classify(sys)
        assert verdict.outcome is Outcome.BOUNDARY

    def test_assumption_failure_carries_report(self, c6):
        sys = bv.BiVirusSystem(
            graph_a=c6, graph_b=c6,
            infection1=NegatedInfection(c6, 1.0),
            recovery1=bv.LinearRecovery(6, 1.0),
            infection2=bv.LinearInfection(c6, 1.0),
            recovery2=bv.LinearRecovery(6, 1.0))
        with pytest.raises(bv.AssumptionError) as err:
            bv.classify(sys)
        assert err.value.report is not None
        assert not err.value.report.passed["A2"]

    def test_lambda_u_sign_matches_scaled_radius_threshold(self, c6, wheel6):
        # linear-rate form: sign(lambda_u) = sign(tau1 * lambda(S_y* A) - 1)
        tau2 = 2.0 / bv.pf_eigen(wheel6.adjacency).value
        y_star = bv.single_virus_fixed_point(
            bv.LinearInfection(wheel6, tau2), bv.LinearRecovery(6, 1.0)).x
        scaled = bv.pf_eigen((1.0 - y_star)[:, None] * c6.adjacency).value
        for tau1 in (0.6 / scaled, 0.95 / scaled, 1.3 / scaled, 3.0 / scaled):
            sys = linear_system(c6, wheel6, tau1, tau2)
            verdict = bv.classify(sys, verify_assumptions=False)
            assert np.sign(verdict.lambda_u) == np.sign(tau1 * scaled - 1.0)

    def test_verdict_csv_schema(self, r6_verdict, tmp_path):
        path = tmp_path / "verdict.csv"
        with open(path, "w", newline="\n") as fh:
            write_verdict_csv(r6_verdict, fh)
        header, row = path.read_text().splitlines()
        assert header == ("outcome,lambda_g0,lambda_h0,lambda_u,lambda_v,"
                          "avg_xstar,avg_ystar")
        fields = row.split(",")
        assert fields[0] == "Coexistence"
        assert float(fields[3]) == r6_verdict.lambda_u


class TestCheckKamke:
    def test_builtin_systems_pass(self, c6, wheel6):
        for sys in (linear_system(c6, wheel6, 1.4, 0.9),
                    case3_system(c6, wheel6, 2.0, 1.5)):
            report = bv.check_kamke(sys, samples=40, seed=3)
            assert report.passed, report.violations[:3]

    def test_boundary_point_passes(self, c6, wheel6):
        sys = case3_system(c6, wheel6, 2.0, 1.5)
        # x + y = 1 exactly: the scaling matrix vanishes there
        x = np.full(6, 0.6)
        state = bv.StateD(x, 1.0 - x)
        jac = bv.bivirus_jacobian(sys, state)
        off = ~np.eye(6, dtype=bool)
        assert np.all(jac[:6, :6][off] >= -1e-9)
        assert np.all(jac[6:, 6:][off] >= -1e-9)
        assert np.all(jac[:6, 6:] <= 1e-9)
        assert np.all(jac[6:, :6] <= 1e-9)

    def test_sign_flipped_model_fails_with_witness(self, c6):
        sys = bv.BiVirusSystem(
            graph_a=c6, graph_b=c6,
            infection1=NegatedInfection(c6, 1.0),
            recovery1=bv.LinearRecovery(6, 1.0),
            infection2=bv.LinearInfection(c6, 1.0),
            recovery2=bv.LinearRecovery(6, 1.0))
        report = bv.check_kamke(sys, samples=10, seed=3)
        assert not report.passed
        sample_idx, block, (i, j), value = report.violations[0]
        assert block == "top-left"
        assert value < 0


class TestMonotoneFlow:
    def test_identical_pair_trivially_ordered(self, c6, wheel6):
        sys = linear_system(c6, wheel6, 1.2, 0.9)
        report = bv.check_monotone_flow(sys, pairs=3, t_checks=(1.0,), seed=0)
        assert report.passed

    def test_corner_equilibria_stay_ordered(self, c6, wheel6):
        sys = linear_system(c6, wheel6, 1.3, 1.0)
        x_star = bv.single_virus_fixed_point(sys.infection1, sys.recovery1).x
        y_star = bv.single_virus_fixed_point(sys.infection2, sys.recovery2).x
        lo = bv.StateD(np.zeros(6), y_star)
        hi = bv.StateD(x_star, np.zeros(6))
        assert bv.southeast_le(lo, hi)
        for state, ref in ((lo, y_star), (hi, x_star)):
            traj = bv.integrate(sys, state, t_max=5.0, conv_tol=0.0)
            drift = max(np.max(np.abs(traj.final.x - state.x)),
                        np.max(np.abs(traj.final.y - state.y)))
            assert drift < 1e-8
        assert bv.southeast_le(lo, hi)

    def test_hundred_random_pairs_no_violations(self, c6, star_plus_path6):
        # integrator at tightened tolerance is the oracle here
        sys = linear_system(c6, star_plus_path6, 1.2, 1.5)
        report = bv.check_monotone_flow(sys, pairs=100,
                                        t_checks=(1.0, 5.0), seed=21,
                                        rtol=1e-12, atol=1e-14)
        assert report.passed
        assert report.pairs == 100


class TestBracketCoexistence:
    def test_bracket_invariants(self, r6_system, r6_verdict):
        bracket = bv.bracket_coexistence(r6_system, r6_verdict)
        n = r6_system.n
        corner_lo = bv.StateD(np.zeros(n), r6_verdict.y_star)
        corner_hi = bv.StateD(r6_verdict.x_star, np.zeros(n))
        assert bv.southeast_ll(corner_lo, bracket.lower, slack=1e-9)
        assert bv.southeast_le(bracket.lower, bracket.upper, slack=1e-9)
        assert bv.southeast_ll(bracket.upper, corner_hi, slack=1e-9)
        assert np.all(bracket.lower.x > 0) and np.all(bracket.lower.y > 0)
        dx, dy = bv.bivirus_field(r6_system, bracket.lower)
        assert max(np.max(np.abs(dx)), np.max(np.abs(dy))) < 1e-8
        assert np.all(bracket.eigvec_u > 0)
        assert np.all(bracket.eigvec_v < 0)

    def test_r_independence(self, r6_system, r6_verdict):
        b1 = bv.bracket_coexistence(r6_system, r6_verdict, r=1e-3)
        b2 = bv.bracket_coexistence(r6_system, r6_verdict, r=1e-4)
        assert np.max(np.abs(b1.lower.x - b2.lower.x)) < 1e-6
        assert np.max(np.abs(b1.lower.y - b2.lower.y)) < 1e-6

    def test_symmetric_system_survival_vectors_parallel(self, wheel6):
        # shared graph with equal strengths: the coexistence set is the
        # segment of profiles proportional to x*; forced verdict because the
        # honest classification is Boundary on this measure-zero diagonal
        lam = bv.pf_eigen(wheel6.adjacency).value
        tau = 1.8 / lam
        sys = linear_system(wheel6, wheel6, tau, tau)
        x_star = bv.single_virus_fixed_point(sys.infection1, sys.recovery1).x
        honest = bv.classify(sys, verify_assumptions=False)
        assert honest.outcome is Outcome.BOUNDARY
        forced = TrichotomyVerdict(
            outcome=Outcome.COEXISTENCE, lambda_u=honest.lambda_u,
            lambda_v=honest.lambda_v, lambda_g0=honest.lambda_g0,
            lambda_h0=honest.lambda_h0, x_star=x_star, y_star=x_star)
        bracket = bv.bracket_coexistence(sys, forced)

        def cosine(a, b):
            return float(a @ b / (np.linalg.norm(a) * np.linalg.norm(b)))

        for vec in (bracket.lower.x, bracket.lower.y, bracket.upper.x,
                    bracket.lower.x + bracket.lower.y):
            assert cosine(vec, x_star) == pytest.approx(1.0, abs=1e-6)

    def test_requires_coexistence_verdict(self, c6):
        sys = linear_system(c6, c6, 1.0, 0.75)
        verdict = bv.classify(sys)
        with pytest.raises(bv.BracketError):
            bv.bracket_coexistence(sys, verdict)

    def test_radius_validated(self, r6_system, r6_verdict):
        with pytest.raises(bv.BracketError):
            bv.bracket_coexistence(r6_system, r6_verdict, r=5e-3)


class TestAgreement:
    def test_virus_free(self, c6):
        sys = linear_system(c6, c6, 0.4, 0.45)
        verdict = bv.classify(sys)
        report = bv.verify_against_simulation(sys, verdict, starts=3, seed=8)
        assert report.passed

    def test_winner(self, c6, wheel6):
        sys = linear_system(c6, wheel6, 0.7, 0.8)
        verdict = bv.classify(sys)
        report = bv.verify_against_simulation(sys, verdict, starts=3, seed=8)
        assert report.passed

    def test_coexistence(self, r6_system, r6_verdict):
        report = bv.verify_against_simulation(r6_system, r6_verdict,
                                              starts=3, seed=8)
        assert report.passed
