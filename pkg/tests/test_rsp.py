import numpy as np
import pytest

from qlan import quantum as q
from qlan import rsp
from qlan.errors import ZeroProbabilityProjection
from qlan.polarization import analyzer_projector, analyzer_state, label_setting

from conftest import random_density

PSI_PLUS = q.pure_state_density(q.ket_psi_plus())


class TestRspPredict:
    def test_h_projection_prepares_v(self):
        projector = analyzer_projector(label_setting("H"))
        state, prob = rsp.rsp_predict(PSI_PLUS, projector, sender_slot=0)
        assert prob == pytest.approx(0.5, abs=1e-12)
        assert np.allclose(state, q.pure_state_density(q.KET_V), atol=1e-12)

    def test_d_projection_prepares_partner_d(self):
        # Projecting onto the compensated-D analyzer state prepares the same
        # label state at the receiver (Bell correlations in every basis).
        projector = analyzer_projector(label_setting("D", 0.0))
        state, prob = rsp.rsp_predict(PSI_PLUS, projector, sender_slot=0)
        assert prob == pytest.approx(0.5, abs=1e-12)
        chi = analyzer_state(label_setting("D", 0.0))
        assert q.fidelity_with_pure(state, chi) == pytest.approx(1.0, abs=1e-12)

    def test_maximally_mixed_input(self):
        # tr[(P x I) I/4] = 1/2 for any rank-1 P: the sender's projection
        # succeeds half the time regardless of correlations.
        projector = analyzer_projector(label_setting("R", 10.0))
        state, prob = rsp.rsp_predict(np.eye(4) / 4, projector, sender_slot=1)
        assert prob == pytest.approx(0.5, abs=1e-12)
        assert np.allclose(state, np.eye(2) / 2, atol=1e-12)

    def test_zero_probability_projection(self):
        rho_hh = q.pure_state_density(np.array([1, 0, 0, 0], dtype=complex))
        projector = analyzer_projector(label_setting("V"))
        with pytest.raises(ZeroProbabilityProjection):
            rsp.rsp_predict(rho_hh, projector, sender_slot=0)

    def test_outputs_are_valid_states(self, rng):
        for _ in range(25):
            rho = random_density(rng)
            setting = label_setting("D", float(rng.uniform(0, 90)))
            for slot in (0, 1):
                try:
                    state, prob = rsp.rsp_predict(
                        rho, analyzer_projector(setting), slot)
                except ZeroProbabilityProjection:
                    continue
                assert q.is_density_matrix(state)
                assert 0.0 < prob <= 1.0 + 1e-12

    def test_success_probabilities_sum_to_one(self, rng):
        for _ in range(20):
            rho = random_density(rng)
            x = float(rng.uniform(0, 90))
            for basis in (("H", "V"), ("D", "A"), ("R", "L")):
                total = 0.0
                for label in basis:
                    try:
                        total += rsp.rsp_predict(
                            rho, analyzer_projector(label_setting(label, x)), 0)[1]
                    except ZeroProbabilityProjection:
                        pass
                assert total == pytest.approx(1.0, abs=1e-10)

    def test_sender_slot_matters(self):
        asym = 0.7 * q.pure_state_density(np.array([0, 1, 0, 0], dtype=complex))
        asym += 0.3 * np.eye(4) / 4
        projector = analyzer_projector(label_setting("H"))
        state0, _ = rsp.rsp_predict(asym, projector, sender_slot=0)
        state1, _ = rsp.rsp_predict(asym, projector, sender_slot=1)
        assert not np.allclose(state0, state1, atol=1e-6)

    def test_noisy_link_prediction_stays_mixed(self):
        # A Werner pair prepares the target only up to the link visibility;
        # the prediction interpolates accordingly.
        v = 0.8
        projector = analyzer_projector(label_setting("H"))
        state, _ = rsp.rsp_predict(q.werner_state(v), projector, 0)
        expected = v * q.pure_state_density(q.KET_V) + (1 - v) * np.eye(2) / 2
        assert np.allclose(state, expected, atol=1e-12)
