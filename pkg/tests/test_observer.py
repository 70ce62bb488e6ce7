import dataclasses

import numpy as np
import pytest

from conftest import load_bundled
from predsmc import ObserverGains, ObserverState, observer_step, reconstruct_fault, run
from predsmc.errors import DivergenceError, DomainError
from predsmc.observer import sta_injection


@pytest.fixture
def gains():
    return ObserverGains(k1=5.0, k2=2.0, k3=5.0, k4=2.0)


@pytest.fixture
def gains_literal():
    return ObserverGains(k1=5.0, k2=2.0, k3=5.0, k4=2.0, literal_signs=True)


class TestInjection:
    def test_zero_error_zero_integral(self, gains):
        nu = sta_injection(np.zeros(1), gains, np.zeros(1))
        assert np.array_equal(nu, [0.0])

    def test_zero_error_passes_integral_through(self, gains):
        nu = sta_injection(np.zeros(2), gains, np.array([0.3, -0.1]))
        assert np.array_equal(nu, [0.3, -0.1])

    def test_scalar_values_stable_convention(self, gains):
        assert sta_injection(np.array([1.0]), gains, np.zeros(1))[0] == pytest.approx(7.0)
        # |e|^(1/2) = 0.2: 5*0.04/0.2 + 2*0.04 + 0.5
        got = sta_injection(np.array([0.04]), gains, np.array([0.5]))[0]
        assert got == pytest.approx(1.58)

    def test_scalar_values_literal_convention(self, gains_literal):
        assert sta_injection(np.array([1.0]), gains_literal, np.zeros(1))[0] == pytest.approx(-3.0)
        got = sta_injection(np.array([0.04]), gains_literal, np.array([0.5]))[0]
        assert got == pytest.approx(-0.42)

    def test_pulls_error_toward_zero(self, gains):
        # positive error must produce positive correction on the estimate
        assert sta_injection(np.array([0.5]), gains, np.zeros(1))[0] > 0.0
        assert sta_injection(np.array([-0.5]), gains, np.zeros(1))[0] < 0.0


class TestObserverStep:
    def test_equilibrium(self, model5, gains):
        state = ObserverState(np.zeros(1), np.zeros(1))
        out = observer_step(state, np.zeros(1), np.zeros(1), np.zeros(1), model5, gains, 1e-3)
        assert np.array_equal(out.x_hat_1, [0.0])
        assert np.array_equal(out.xi_hat, [0.0])

    def test_integral_follows_sign_of_error(self, model5, gains):
        state = ObserverState(np.zeros(1), np.zeros(1))
        out = observer_step(state, np.array([0.2]), np.zeros(1), np.zeros(1), model5, gains, 1e-3)
        assert out.xi_hat[0] == pytest.approx(1e-3 * (5.0 + 2.0 * 0.2))

    def test_gain_positivity_enforced(self):
        with pytest.raises(DomainError):
            ObserverGains(k1=0.0, k2=2.0, k3=5.0, k4=2.0)

    def test_step_positivity_enforced(self, model5, gains):
        state = ObserverState(np.zeros(1), np.zeros(1))
        with pytest.raises(DomainError):
            observer_step(state, np.zeros(1), np.zeros(1), np.zeros(1), model5, gains, 0.0)


class TestReconstructFault:
    def test_scalar_identity(self, model5):
        assert reconstruct_fault(np.array([0.7]), model5)[0] == pytest.approx(0.7)

    def test_zero(self, model5):
        assert reconstruct_fault(np.zeros(1), model5)[0] == 0.0

    def test_projects_input_channel(self):
        from predsmc import PlantModel

        model = PlantModel(
            A11=-np.eye(2), A12=np.zeros((2, 1)), A21=np.zeros((1, 2)), A22=[[-1.0]],
            B1=[[1.0], [0.0]], D1=np.zeros((2, 1)), D2=np.zeros((1, 1)),
        )
        d_hat = reconstruct_fault(np.array([0.3, 0.7]), model)
        assert d_hat.shape == (1,)
        assert d_hat[0] == pytest.approx(0.3)


class TestClosedLoopBehavior:
    def test_error_enters_band_and_tracks_fault(self):
        scenario = load_bundled("nominal", t_final=3.0)
        trace = run(scenario)
        k_band = int(round(1.5 / scenario.h))
        assert np.max(np.abs(trace.tilde_x1[k_band:])) <= 5e-3
        k_track = int(round(2.0 / scenario.h))
        err = np.abs(trace.xi_hat[k_track:, 0] - trace.d[k_track:, 0])
        assert float(err.max()) <= 0.05

    def test_literal_signs_destabilize(self):
        scenario = load_bundled("nominal", t_final=2.0)
        scenario = dataclasses.replace(
            scenario, gains=dataclasses.replace(scenario.gains, literal_signs=True)
        )
        try:
            trace = run(scenario)
            assert np.max(np.abs(trace.tilde_x1)) > 0.1
        except DivergenceError:
            pass
