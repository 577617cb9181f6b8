"""Calibration tests: stage-1 loss/bounds, pre-tuning, stage-2 grid search.

Oracle notes
------------
* Stage-1 loss on the published rest replay vs the rest targets:
  |4.941-4.9|/4.9 + |30.822-28|/28 + |130.249-130|/130 + |82.013-80|/80
  = 0.1362309458398743 (independent arithmetic), plus an EDV penalty of
  10*(160.517-160)/160 = 0.0323125 since the replayed EDV sits just above
  the resting upper bound.
* The synthetic grid-search pipeline dips one plateau sample of the
  clinical CIP by k*(delta - delta*)^2, so the cell loss is exactly
  separable and minimized at the generating cell (+6% rest, -3% hyper).
"""

import numpy as np
import pytest

from angiosim.calibrate import (
    GRID_LEVELS_DEFAULT,
    R_SPLIT,
    STAGE1_PARAM_NAMES,
    GridResult,
    PretuneSettings,
    Stage1Bounds,
    Stage1Targets,
    Stage2Config,
    calibrate_stage1,
    grid_label,
    grid_search,
    hyperemia_bounds,
    load_cfr_hat,
    load_rest_bounds,
    load_stage1_targets,
    loss_stage1,
    loss_stage2,
    murray_flow_targets,
    pretune_coronary,
    scale_total_resistance,
    stage1_loss_terms,
    stage1_parameter_set,
    stage1_vector,
)
from angiosim.cip import Cip
from angiosim.de import DEConfig, DEResult
from angiosim.errors import CalibrationError, ConfigError, NumericalError
from angiosim.lpm import simulate
from angiosim.metrics import HemodynamicMetrics, compute_metrics
from angiosim.units import lmin_to_mm3s

# Published optima (internal units) used as arithmetic fixtures.
REST_OPTIMUM = np.array([18.381, 0.009, 0.158, 0.190, 0.015, 0.390, 2286.880])
HYPER_OPTIMUM = np.array([16.361, 0.005, 0.087, 0.228, 0.015, 0.409, 2376.910])


def metrics_matching(targets: Stage1Targets, **overrides) -> HemodynamicMetrics:
    """Metrics that hit every target exactly with both constraints interior."""
    P_pulse = targets.P_sys_hat - targets.P_dia_hat
    EDV = 0.5 * (targets.EDV_LB + targets.EDV_UB)
    ESV = EDV - 80.0
    fields = dict(
        Q_mean=targets.Q_mean_hat,
        Q_max=targets.Q_max_hat,
        P_sys=targets.P_sys_hat,
        P_dia=targets.P_dia_hat,
        P_DN=targets.P_sys_hat - 0.35 * P_pulse,
        P_pulse=P_pulse,
        EDV=EDV,
        ESV=ESV,
        SV=EDV - ESV,
        EF=(EDV - ESV) / EDV,
    )
    fields.update(overrides)
    return HemodynamicMetrics(**fields)


class TestStage1Targets:
    def test_preset_values(self):
        rest = load_stage1_targets("rest")
        assert (rest.Q_mean_hat, rest.Q_max_hat) == (4.9, 28.0)
        assert (rest.P_sys_hat, rest.P_dia_hat) == (130.0, 80.0)
        assert (rest.EDV_LB, rest.EDV_UB) == (100.0, 160.0)
        hyper = load_stage1_targets("hyperemia")
        assert (hyper.Q_mean_hat, hyper.Q_max_hat) == (8.8, 39.0)
        assert (hyper.P_sys_hat, hyper.P_dia_hat) == (125.0, 75.0)
        assert (hyper.EDV_LB, hyper.EDV_UB) == (100.0, 170.0)
        assert load_cfr_hat() == 2.2

    def test_unknown_state(self):
        with pytest.raises(ConfigError, match="no targets"):
            load_stage1_targets("exercise")

    def test_validation(self):
        with pytest.raises(ConfigError, match="positive"):
            Stage1Targets(-4.9, 28, 130, 80, 100, 160)
        with pytest.raises(ConfigError, match="LB < UB"):
            Stage1Targets(4.9, 28, 130, 80, 160, 100)


class TestStage1Bounds:
    def test_preset_rest_box(self):
        box = load_rest_bounds().as_array()
        assert box.shape == (7, 2)
        expected = [
            (5.0, 30.0),
            (0.003, 0.015),
            (0.075, 0.3),
            (0.133, 0.266),
            (0.0053, 0.016),
            (0.35, 0.39),
            (1500.0, 2300.0),
        ]
        assert np.array_equal(box, np.array(expected))

    def test_inverted_range_rejected(self):
        with pytest.raises(ConfigError, match="low"):
            Stage1Bounds(
                C_s=(30.0, 5.0),
                R_sp=(0.003, 0.015),
                R_sd=(0.075, 0.3),
                E_max=(0.133, 0.266),
                E_min=(0.0053, 0.016),
                t_max=(0.35, 0.39),
                P_LA=(1500.0, 2300.0),
            )

    def test_hyperemia_box_from_rest_optimum(self):
        b = hyperemia_bounds(REST_OPTIMUM)
        assert b.C_s == pytest.approx((3.381, 16.381))
        assert b.R_sp == pytest.approx((0.0027, 0.0081))
        assert b.R_sd == pytest.approx((0.0474, 0.1422))
        assert b.E_max == pytest.approx((0.228, 0.533))
        assert b.E_min == (0.015, 0.015)  # pinned at the rest value
        assert b.t_max == pytest.approx((0.3705, 0.4095))
        assert b.P_LA == pytest.approx((2332.6176, 2469.8304))

    def test_published_hyper_optimum_inside_box(self):
        box = hyperemia_bounds(REST_OPTIMUM).as_array()
        assert np.all(HYPER_OPTIMUM >= box[:, 0] - 1e-9)
        assert np.all(HYPER_OPTIMUM <= box[:, 1] + 1e-9)

    def test_bad_shape(self):
        with pytest.raises(ConfigError, match="shape"):
            hyperemia_bounds(np.ones(6))


class TestLossStage1:
    def test_exact_match_zero(self):
        targets = load_stage1_targets("rest")
        assert loss_stage1(metrics_matching(targets), targets) == 0.0

    def test_single_term_relative_error(self):
        targets = load_stage1_targets("rest")
        m = metrics_matching(targets, Q_mean=targets.Q_mean_hat * 1.1)
        assert loss_stage1(m, targets) == pytest.approx(0.1, rel=1e-12)

    def test_published_rest_replay_terms(self):
        targets = load_stage1_targets("rest")
        m = metrics_matching(
            targets,
            Q_mean=4.941,
            Q_max=30.822,
            P_sys=130.249,
            P_dia=82.013,
            P_DN=130.249 - 0.35 * (130.249 - 82.013),
            P_pulse=130.249 - 82.013,
            EDV=160.517,
            ESV=78.147,
            SV=160.517 - 78.147,
            EF=(160.517 - 78.147) / 160.517,
        )
        terms = stage1_loss_terms(m, targets)
        assert terms.target_error == pytest.approx(0.1362309458398743, rel=1e-12)
        assert terms.EDV_penalty == pytest.approx(0.0323125, rel=1e-9)
        assert terms.P_DN_penalty == 0.0
        assert loss_stage1(m, targets) == pytest.approx(terms.total)

    def test_edv_below_lower_bound(self):
        targets = load_stage1_targets("rest")
        m = metrics_matching(targets, EDV=90.0, ESV=50.0, SV=40.0, EF=40.0 / 90.0)
        terms = stage1_loss_terms(m, targets)
        assert terms.EDV_penalty == pytest.approx(10.0 * 10.0 / 100.0)

    def test_notch_window_penalty(self):
        targets = load_stage1_targets("rest")
        base = metrics_matching(targets)
        lo = base.P_sys - 0.5 * base.P_pulse
        m = metrics_matching(targets, P_DN=lo - 5.0)
        terms = stage1_loss_terms(m, targets)
        assert terms.P_DN_penalty == pytest.approx(10.0 * 5.0 / lo)

    def test_missing_notch_infeasible(self):
        targets = load_stage1_targets("rest")
        m = metrics_matching(targets, P_DN=None)
        assert loss_stage1(m, targets) == np.inf


class TestStage1Vector:
    def test_round_trip(self, rest_params):
        x = np.array([18.0, 0.008, 0.15, 0.2, 0.012, 0.37, 2000.0])
        params = stage1_parameter_set(x, rest_params)
        assert np.array_equal(stage1_vector(params), x)
        e = params.heart.elastance
        assert e.t_r == pytest.approx(0.37 + 0.1)
        assert e.T == rest_params.heart.elastance.T
        # everything outside the design vector is carried over untouched
        assert params.coronary is rest_params.coronary
        assert params.heart.R_MV == rest_params.heart.R_MV

    def test_vector_of_preset(self, rest_params):
        x = stage1_vector(rest_params)
        assert x.shape == (len(STAGE1_PARAM_NAMES),)
        assert x[0] == rest_params.aorta.C_s
        assert x[6] == rest_params.heart.P_LA

    def test_bad_shape(self, rest_params):
        with pytest.raises(ConfigError, match="shape"):
            stage1_parameter_set(np.ones(5), rest_params)


class TestCalibrateStage1:
    def test_small_budget_structure(self, rest_params):
        targets = load_stage1_targets("rest")
        bounds = load_rest_bounds()
        cfg = DEConfig(population=6, max_generations=3, seed=1)
        result = calibrate_stage1(
            targets, bounds, rest_params, cfg, polish=False, fast_cycles=4
        )
        box = bounds.as_array()
        assert np.all(result.x >= box[:, 0]) and np.all(result.x <= box[:, 1])
        assert result.loss_fast == result.de.loss
        assert np.isfinite(result.loss)
        assert result.de.history.shape == (result.de.generations + 1, 3)
        # reported loss is the production-timestep re-evaluation at the optimum
        series = simulate(result.params, dt=1e-4, n_cycles=8)
        assert result.loss == pytest.approx(loss_stage1(compute_metrics(series), targets))
        rebuilt = stage1_parameter_set(result.x, rest_params)
        assert rebuilt.aorta == result.params.aorta
        assert rebuilt.heart == result.params.heart

    def test_no_feasible_design_raises(self, rest_params):
        targets = load_stage1_targets("rest")
        # t_max pinned at 0.95 puts t_r = 1.05 past the 1 s cycle, so every
        # candidate fails parameter validation and evaluates as infeasible
        bounds = Stage1Bounds(
            C_s=(5.0, 30.0),
            R_sp=(0.003, 0.015),
            R_sd=(0.075, 0.3),
            E_max=(0.133, 0.266),
            E_min=(0.0053, 0.016),
            t_max=(0.95, 0.95),
            P_LA=(1500.0, 2300.0),
        )
        cfg = DEConfig(population=5, max_generations=1, seed=0)
        with pytest.raises(CalibrationError) as err:
            calibrate_stage1(targets, bounds, rest_params, cfg, polish=False, fast_cycles=4)
        assert isinstance(err.value.last_result, DEResult)


class TestMurrayFlowTargets:
    def test_split_by_side_then_radius_cubed(self, reference_tree):
        targets = murray_flow_targets(reference_tree, 1000.0, left_fraction=0.6)
        left_ids = [s.id for s in reference_tree.terminals if s.side == "left"]
        right_ids = [s.id for s in reference_tree.terminals if s.side == "right"]
        left_total = sum(targets[tid] for tid in left_ids)
        right_total = sum(targets[tid] for tid in right_ids)
        assert left_total == pytest.approx(600.0)
        assert right_total == pytest.approx(400.0)
        # within a side, shares follow radius cubed
        r3 = {s.id: s.radius_mm**3 for s in reference_tree.terminals}
        for a, b in zip(left_ids, left_ids[1:]):
            assert targets[a] / targets[b] == pytest.approx(r3[a] / r3[b])

    def test_rejects_nonpositive_total(self, reference_tree):
        with pytest.raises(ConfigError, match="positive"):
            murray_flow_targets(reference_tree, 0.0)

    def test_single_sided_share_must_match_tree(self, reference_tree):
        left_only = [s for s in reference_tree.segments if s.side == "left"]
        from angiosim.tree import VesselTree

        tree = VesselTree(left_only)
        with pytest.raises(ConfigError, match="no terminals"):
            murray_flow_targets(tree, 1000.0, left_fraction=0.6)
        targets = murray_flow_targets(tree, 1000.0, left_fraction=1.0)
        assert sum(targets.values()) == pytest.approx(1000.0)


class TestPretune:
    def test_converges_to_murray_targets(self, reference_tree, rest_params):
        co = lmin_to_mm3s(compute_metrics(simulate(rest_params, dt=1e-3, n_cycles=6)).Q_mean)
        # left-tree total of 2.9% of cardiac output, 60:40 left:right split
        targets = murray_flow_targets(reference_tree, 0.029 * co / 0.6, left_fraction=0.6)
        result = pretune_coronary(rest_params, reference_tree, targets)
        assert all(abs(err) < 0.02 for err in result.flow_errors.values())
        # re-simulate the returned set: mean flows really match the targets
        flows = compute_metrics(
            simulate(result.params, dt=1e-3, n_cycles=6)
        ).terminal_mean_flow
        for tid, target in targets.items():
            assert lmin_to_mm3s(flows[tid]) == pytest.approx(target, rel=0.02)
        # diastole-dominant waveforms with the left tree above the right threshold
        for tid, fraction in result.dominance.items():
            side = reference_tree[tid].side
            assert fraction >= (0.6 if side == "left" else 0.5)
        # internal split of every tuned outlet follows the fixed proportions
        for c in result.params.coronary.values():
            assert c.R_a / c.R_total == pytest.approx(R_SPLIT[0], rel=1e-9)
            assert c.R_ap / c.R_total == pytest.approx(R_SPLIT[1], rel=1e-9)
            assert c.R_ad / c.R_total == pytest.approx(R_SPLIT[2], rel=1e-9)

    def test_already_converged_returns_unchanged(self, reference_tree, rest_params):
        co = lmin_to_mm3s(compute_metrics(simulate(rest_params, dt=1e-3, n_cycles=6)).Q_mean)
        targets = murray_flow_targets(reference_tree, 0.04 * co)
        first = pretune_coronary(rest_params, reference_tree, targets)
        second = pretune_coronary(first.params, reference_tree, targets)
        assert second.iterations == 0
        assert second.params is first.params

    def test_zero_target_rejected(self, reference_tree, rest_params):
        targets = {tid: 500.0 for tid in rest_params.terminal_ids}
        targets["LAD"] = 0.0
        with pytest.raises(ConfigError, match="positive"):
            pretune_coronary(rest_params, reference_tree, targets)

    def test_target_keys_must_match_terminals(self, reference_tree, rest_params):
        with pytest.raises(ConfigError, match="terminals"):
            pretune_coronary(rest_params, reference_tree, {"LAD": 500.0})

    def test_nonconvergence_carries_last_iterate(self, reference_tree, rest_params):
        targets = murray_flow_targets(reference_tree, 3000.0)
        settings = PretuneSettings(flow_tol=1e-9, max_iterations=1)
        with pytest.raises(CalibrationError) as err:
            pretune_coronary(rest_params, reference_tree, targets, settings)
        last = err.value.last_result
        assert last is not None
        assert set(last.flow_errors) == set(rest_params.terminal_ids)
        assert last.iterations == 1

    def test_settings_validation(self):
        with pytest.raises(ConfigError):
            PretuneSettings(co_fraction=0.0)
        with pytest.raises(ConfigError):
            PretuneSettings(flow_tol=-0.01)
        with pytest.raises(ConfigError):
            PretuneSettings(dominance_left=1.5)
        with pytest.raises(ConfigError):
            PretuneSettings(C_a_floor=0.0)


# --------------------------------------------------------------------------
# Stage 2
# --------------------------------------------------------------------------


def clinical_cip() -> Cip:
    times = np.linspace(0.0, 5.0, 11)
    values = np.array([0.0, 0.5, 1.0, 1.0, 1.0, 1.0, 1.0, 0.8, 0.5, 0.2, 0.1])
    return Cip(times=times, values=values)


def dipped(cip: Cip, dip: float) -> Cip:
    values = cip.values.copy()
    values[5] = 1.0 - min(dip, 0.9)
    return Cip(times=cip.times.copy(), values=values)


def make_evaluator(rest_base, hyper_base, clinical, *, k=10.0, cfr=2.2,
                   dstar_rest=0.06, dstar_hyper=-0.03, fail_at=None):
    """Synthetic pipeline: CIP distance grows as k*(delta - delta*)^2."""
    base_R = {
        "rest": rest_base.coronary["LAD"].R_total,
        "hyperemia": hyper_base.coronary["LAD"].R_total,
    }
    dstar = {"rest": dstar_rest, "hyperemia": dstar_hyper}
    q_of = {"rest": 1.0, "hyperemia": cfr}

    def evaluate(params, state):
        delta = params.coronary["LAD"].R_total / base_R[state] - 1.0
        if fail_at is not None and abs(delta - fail_at) < 1e-9:
            raise NumericalError(f"synthetic failure at delta={delta}")
        return dipped(clinical, k * (delta - dstar[state]) ** 2), q_of[state]

    return evaluate


class TestLossStage2:
    def test_identical_and_exact_cfr_is_zero(self):
        c = clinical_cip()
        assert loss_stage2(c, c, c, c, 2.2, 2.2) == 0.0

    def test_cfr_relative_term(self):
        c = clinical_cip()
        assert loss_stage2(c, c, c, c, 2.42, 2.2) == pytest.approx(0.1, rel=1e-12)

    def test_composition(self):
        c = clinical_cip()
        rest = dipped(c, 0.22)
        hyper = dipped(c, 0.11)
        expected = 0.22 / np.sqrt(11) + 0.11 / np.sqrt(11) + 0.05
        assert loss_stage2(rest, hyper, c, c, 2.2 * 1.05, 2.2) == pytest.approx(expected, rel=1e-12)

    def test_rejects_bad_cfr_hat(self):
        c = clinical_cip()
        with pytest.raises(ConfigError, match="positive"):
            loss_stage2(c, c, c, c, 2.2, 0.0)


class TestScaleTotalResistance:
    def test_scales_three_resistances_jointly(self, rest_params):
        scaled = scale_total_resistance(rest_params, 0.06)
        for tid, c in rest_params.coronary.items():
            s = scaled.coronary[tid]
            assert s.R_a == pytest.approx(1.06 * c.R_a, rel=1e-15)
            assert s.R_ap == pytest.approx(1.06 * c.R_ap, rel=1e-15)
            assert s.R_ad == pytest.approx(1.06 * c.R_ad, rel=1e-15)
            assert s.C_a == c.C_a and s.C_im == c.C_im
        assert scaled.heart == rest_params.heart
        assert scaled.terminal_path_resistance == rest_params.terminal_path_resistance

    def test_zero_delta_is_identity(self, rest_params):
        assert scale_total_resistance(rest_params, 0.0) is rest_params

    def test_rejects_negative_total(self, rest_params):
        with pytest.raises(ConfigError, match="-100%"):
            scale_total_resistance(rest_params, -1.0)


class TestStage2Config:
    def test_defaults_and_sorting(self):
        c = clinical_cip()
        cfg = Stage2Config(clinical_rest=c, clinical_hyper=c, CFR_hat=2.2,
                           levels=(0.09, -0.09, 0.0, 0.03, -0.03, 0.06, -0.06))
        assert cfg.levels == GRID_LEVELS_DEFAULT

    @pytest.mark.parametrize(
        "levels,because",
        [
            ((), "empty"),
            ((-0.03, 0.03), "include 0"),
            ((-0.03, 0.0, 0.06), "symmetric"),
            ((-0.03, 0.0, 0.0, 0.03), "duplicates"),
            ((-1.0, 0.0, 1.0), "positive"),
        ],
    )
    def test_rejects_bad_levels(self, levels, because):
        c = clinical_cip()
        with pytest.raises(ConfigError):
            Stage2Config(clinical_rest=c, clinical_hyper=c, CFR_hat=2.2, levels=levels)

    def test_rejects_bad_cfr(self):
        c = clinical_cip()
        with pytest.raises(ConfigError, match="CFR_hat"):
            Stage2Config(clinical_rest=c, clinical_hyper=c, CFR_hat=-1.0)


class TestGridLabel:
    def test_signed_percent_format(self):
        assert grid_label(0.06, -0.03) == "+6%R & -3%H"
        assert grid_label(0.0, 0.0) == "+0%R & +0%H"
        assert grid_label(-0.09, 0.09) == "-9%R & +9%H"


class TestGridSearch:
    def test_recovers_generating_cell(self, rest_params, hyper_params):
        c = clinical_cip()
        cfg = Stage2Config(clinical_rest=c, clinical_hyper=c, CFR_hat=2.2)
        evaluate = make_evaluator(rest_params, hyper_params, c)
        result = grid_search(rest_params, hyper_params, cfg, evaluate)
        assert result.best_label == "+6%R & -3%H"
        assert result.best_index == (5, 2)
        assert result.losses.shape == (7, 7)
        assert np.all(np.isfinite(result.losses))
        assert result.best_loss == result.losses.min()
        # the winning sets carry the winning resistance scalings
        lad = rest_params.coronary["LAD"].R_total
        assert result.best_rest.coronary["LAD"].R_total == pytest.approx(1.06 * lad)
        lad_h = hyper_params.coronary["LAD"].R_total
        assert result.best_hyper.coronary["LAD"].R_total == pytest.approx(0.97 * lad_h)
        # pretuned (0,0) cell is never better than the winner
        assert result.best_loss <= result.losses[3, 3]
        assert np.allclose(result.cfr, 2.2)

    def test_loss_surface_is_separable_quadratic(self, rest_params, hyper_params):
        c = clinical_cip()
        cfg = Stage2Config(clinical_rest=c, clinical_hyper=c, CFR_hat=2.2)
        evaluate = make_evaluator(rest_params, hyper_params, c, k=10.0)
        result = grid_search(rest_params, hyper_params, cfg, evaluate)
        levels = np.array(result.levels)
        expected = (
            10.0 * (levels[:, None] - 0.06) ** 2 + 10.0 * (levels[None, :] + 0.03) ** 2
        ) / np.sqrt(11)
        assert np.allclose(result.losses, expected, rtol=1e-6, atol=1e-12)

    def test_all_equal_losses_tie_break_smallest_perturbation(self, rest_params, hyper_params):
        c = clinical_cip()
        cfg = Stage2Config(clinical_rest=c, clinical_hyper=c, CFR_hat=2.2)
        evaluate = make_evaluator(rest_params, hyper_params, c, k=0.0)
        result = grid_search(rest_params, hyper_params, cfg, evaluate)
        assert np.allclose(result.losses, result.losses[0, 0])
        assert result.best_index == (3, 3)
        assert result.best_label == "+0%R & +0%H"

    def test_failed_runs_marked_infinite_and_row_major_tie_break(
        self, rest_params, hyper_params
    ):
        c = clinical_cip()
        cfg = Stage2Config(
            clinical_rest=c, clinical_hyper=c, CFR_hat=2.2, levels=(-0.03, 0.0, 0.03)
        )
        evaluate = make_evaluator(rest_params, hyper_params, c, k=0.0, fail_at=0.0)
        result = grid_search(rest_params, hyper_params, cfg, evaluate)
        assert np.all(np.isinf(result.losses[1, :]))
        assert np.all(np.isinf(result.losses[:, 1]))
        # the four surviving cells tie on loss and |dr|+|dh|; row-major wins
        assert result.best_index == (0, 0)
        assert result.best_label == "-3%R & -3%H"

    def test_identity_levels_return_pretuned_sets(self, rest_params, hyper_params):
        c = clinical_cip()
        cfg = Stage2Config(clinical_rest=c, clinical_hyper=c, CFR_hat=2.2, levels=(0.0,))
        seen = []

        def evaluate(params, state):
            seen.append((params, state))
            return c, 1.0 if state == "rest" else 2.2

        result = grid_search(rest_params, hyper_params, cfg, evaluate)
        assert result.losses.shape == (1, 1)
        assert result.best_rest is rest_params
        assert result.best_hyper is hyper_params
        assert seen == [(rest_params, "rest"), (hyper_params, "hyperemia")]

    def test_nonpositive_rest_flow_marks_cells_infinite(self, rest_params, hyper_params):
        c = clinical_cip()
        cfg = Stage2Config(
            clinical_rest=c, clinical_hyper=c, CFR_hat=2.2, levels=(-0.03, 0.0, 0.03)
        )

        def evaluate(params, state):
            return c, 0.0 if state == "rest" else 2.2

        result = grid_search(rest_params, hyper_params, cfg, evaluate)
        assert np.all(np.isinf(result.losses))
        assert np.all(np.isnan(result.cfr))

    def test_result_invariant_enforced(self, rest_params, hyper_params):
        losses = np.array([[1.0, 2.0], [3.0, 0.5]])
        with pytest.raises(NumericalError, match="minimum"):
            GridResult(
                levels=(-0.03, 0.03),
                losses=losses,
                cfr=np.full((2, 2), 2.2),
                best_index=(0, 0),
                best_label="-3%R & -3%H",
                best_rest=rest_params,
                best_hyper=hyper_params,
            )
