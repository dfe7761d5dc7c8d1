import numpy as np
import pytest

from cell_twin import (
    AttributeSpec,
    NormalizedTrace,
    candidate_cycles,
    make_exp_utility,
    optimize_retirement,
    project,
)
from cell_twin.errors import EmptyCandidateSet, NotTriggered
from cell_twin.utility import Attribute
from test_prognosis import make_ensemble


def fading_trace(n=400, knee=250, pre_slope=-1e-4, post_slope=-2e-3, cell_id="c"):
    """Piecewise-linear fade with a knee; starts at 1.0, cycles 1..n."""
    ks = np.arange(1, n + 1)
    q = 1.0 + pre_slope * (ks - 1)
    past = ks > knee
    q[past] = q[knee - 1] + post_slope * (ks[past] - knee)
    return NormalizedTrace(cell_id, ks, np.maximum(q, 0.3), 1.1)


def matched_ensemble(trace, current, b=5.45):
    """Single particle whose fade curve passes through the trace at `current`."""
    q_now = float(trace.q[np.flatnonzero(trace.cycles == current)[0]])
    log10_a = np.log10(1.0 - q_now) - b * np.log10(current)
    return make_ensemble([log10_a], [b], last_cycle=current)


def specs_for(l_ah, h_ah, r_ah=200.0, l_mtbc=0.21, h_mtbc=0.25, r_mtbc=0.015):
    return [
        AttributeSpec("ah", make_exp_utility(l_ah, h_ah, r_ah), Attribute.TOTAL_AH, 0.5),
        AttributeSpec("mtbc", make_exp_utility(l_mtbc, h_mtbc, r_mtbc), Attribute.MEAN_TIME_BETWEEN_CHARGES, 0.5),
    ]


class TestCandidateCycles:
    def test_range_to_floor_crossing(self):
        ens = make_ensemble([-15.77], [5.45], last_cycle=500)
        proj = project(ens, 500, 0.5)
        cands, truncated = candidate_cycles(500, proj, 0.5)
        assert cands[0] == 500
        assert not truncated
        # crossing cycle: first projected median <= 0.5
        crossing = proj.cycles[np.flatnonzero(proj.median_q <= 0.5)[0]]
        assert cands[-1] == crossing
        assert len(cands) == crossing - 500 + 1

    def test_single_candidate_at_crossing(self):
        ens = make_ensemble([-15.77], [5.45], last_cycle=689)
        proj = project(ens, 689, 0.5)
        crossing = int(proj.cycles[np.flatnonzero(proj.median_q <= 0.5)[0]])
        cands, _ = candidate_cycles(crossing, proj, 0.5)
        assert cands.tolist() == [crossing]

    def test_truncated_at_horizon(self):
        ens = make_ensemble([-15.77], [5.45], last_cycle=100)
        proj = project(ens, 100, 0.5)
        cands, truncated = candidate_cycles(100, proj, 0.1)  # floor below any projection
        assert truncated
        assert cands[-1] == proj.horizon_cycle

    def test_empty_candidate_set(self):
        ens = make_ensemble([-15.77], [5.45], last_cycle=100)
        proj = project(ens, 100, 0.5)
        with pytest.raises(EmptyCandidateSet):
            candidate_cycles(proj.horizon_cycle + 10, proj, 0.99)


class TestOptimizeRetirement:
    def test_not_triggered(self):
        trace = fading_trace()
        ens = make_ensemble([-15.77], [5.45], last_cycle=10)
        with pytest.raises(NotTriggered):
            optimize_retirement(trace, ens, specs_for(300, 1000), current=10)

    def test_ah_saturated_retires_earliest(self):
        # throughput utility pinned at 1 for every candidate: optimum = current
        trace = fading_trace()
        current = 300
        ens = matched_ensemble(trace, current)
        decision = optimize_retirement(
            trace, ens, specs_for(l_ah=1.0, h_ah=2.0), current=current
        )
        assert decision.optimal_cycle == current
        assert decision.utility_curve[0].phi["ah"] == pytest.approx(1.0)

    def test_mtbc_saturated_retires_latest(self):
        # MTBC utility pinned at 1 (bounds far below any q): Ah strictly increasing
        trace = fading_trace()
        current = 300
        ens = make_ensemble([-15.77], [5.45], last_cycle=current)
        decision = optimize_retirement(
            trace, ens, specs_for(l_ah=300, h_ah=5000, l_mtbc=0.0001, h_mtbc=0.001), current=current
        )
        assert decision.optimal_cycle == decision.candidates[-1]

    def test_matches_brute_force(self):
        trace = fading_trace()
        current = 300
        ens = make_ensemble([-15.77, -15.5, -16.0], [5.45, 5.2, 5.7], last_cycle=current)
        specs = specs_for(200, 500)
        decision = optimize_retirement(trace, ens, specs, current=current)
        # independent brute force from the decision's own raw attribute values
        proj = project(ens, current, 0.5)
        q = np.concatenate([trace.q[:current], proj.median_q[1:]])
        best_cycle, best_lam = None, -np.inf
        for x in decision.candidates:
            ah = float(np.sum(q[:x]) * trace.q0_ah)
            v_mtbc = float(q[x - 1]) / 4.0
            lam = 0.5 * specs[0].utility.value(ah) + 0.5 * specs[1].utility.value(v_mtbc)
            if lam > best_lam:
                best_cycle, best_lam = int(x), lam
        assert decision.optimal_cycle == best_cycle
        assert decision.optimal_utility == pytest.approx(best_lam)

    def test_exhaustive_rescan(self):
        trace = fading_trace()
        ens = make_ensemble([-15.77], [5.45], last_cycle=300)
        decision = optimize_retirement(trace, ens, specs_for(200, 500), current=300)
        assert all(decision.optimal_utility >= p.combined for p in decision.utility_curve)
        assert [p.cycle for p in decision.utility_curve] == decision.candidates.tolist()

    def test_earliest_tie_rule(self):
        # constant combined utility (both saturated): earliest candidate wins
        trace = fading_trace()
        current = 300
        ens = make_ensemble([-15.77], [5.45], last_cycle=current)
        decision = optimize_retirement(
            trace, ens, specs_for(l_ah=1.0, h_ah=2.0, l_mtbc=0.0001, h_mtbc=0.001), current=current
        )
        assert decision.utility_curve[0].combined == pytest.approx(decision.optimal_utility)
        assert decision.optimal_cycle == current

    def test_optimum_at_or_after_knee(self):
        # sharp-knee fixture with interior trade-off: optimum >= knee cycle
        knee = 250
        trace = fading_trace(knee=knee)
        current = 280
        ens = matched_ensemble(trace, current)
        ah_at_knee = float(np.sum(trace.q[:knee]) * trace.q0_ah)
        decision = optimize_retirement(
            trace, ens, specs_for(l_ah=0.5 * ah_at_knee, h_ah=3.0 * ah_at_knee), current=current
        )
        assert decision.optimal_cycle >= knee
