import math

import numpy as np
import pytest

from sandr.grid import relative_rms
from sandr.operators import BlurOperator, FrameModel
from sandr.optics import DefocusSpec, build_psf_stack, build_zone_masks
from sandr.simulate import (
    NoiseSpec,
    apply_noise,
    bandlimited_random,
    generate_frames,
    make_scene,
    resolution_target,
)
from sandr.solvers import (
    BtvConfig,
    NumericError,
    SolverConfig,
    baseline_solve,
    btv_gradient,
    fista_deconvolve,
    laplacian,
    momentum_sequence,
    pg,
    sandr,
    sm,
)

rng = np.random.default_rng(99)

QUARTER_SHIFTS = [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5)]


def delta_frames(truth, tau=2):
    lr = (truth.shape[0] // tau, truth.shape[1] // tau)
    out = []
    for v in QUARTER_SHIFTS:
        fm = FrameModel(BlurOperator(np.ones((1, 1, 1)), np.ones((1, *lr))), v, tau)
        out.append((fm, fm.forward(truth)))
    return out


def small_defocus_problem(d_max, seed, size=132, n_zones=11):
    truth = resolution_target(size)
    scene = make_scene(truth, 2, QUARTER_SHIFTS, n_zones=n_zones, d_max=d_max, seed=seed)
    frames = generate_frames(scene)
    noise = NoiseSpec(seed=seed + 1)
    noisy = [(fm, apply_noise(f, noise, i)) for i, (fm, f) in enumerate(frames)]
    return noisy, truth


# ------------------------------------------------------------ momentum


def test_momentum_first_values():
    t = momentum_sequence(1.0, 3)
    assert t[0] == 1.0
    assert t[1] == pytest.approx((1 + math.sqrt(5)) / 2, abs=1e-12)
    # direct evaluation of the recurrence at t1 = (1 + sqrt(5)) / 2
    t2 = (1 + math.sqrt(1 + 4 * ((1 + math.sqrt(5)) / 2) ** 2)) / 2
    assert t2 == pytest.approx(2.193527085331054, abs=1e-12)
    assert t[2] == pytest.approx(t2, abs=1e-12)


def test_momentum_growth_bound():
    t = momentum_sequence(1.0, 200)
    k = np.arange(200)
    assert np.all(t >= (k + 2) / 2)


# ------------------------------------------------------------- closure


def test_sandr_closure_blur_free():
    truth = bandlimited_random(32, seed=5)
    frames = delta_frames(truth)
    est, trace = sandr(frames, SolverConfig(iterations=100), truth=truth)
    assert trace.rms[-1] < 1e-3
    assert relative_rms(est, truth) < 1e-3


def test_sandr_stationary_at_optimum():
    truth = rng.random((12, 12))
    fm = FrameModel(
        BlurOperator(np.ones((1, 1, 1)), np.ones((1, 12, 12))), (0.0, 0.0), 1
    )
    # tau=1 single frame: initialization equals the optimum already
    est, trace = sandr([(fm, fm.forward(truth))], SolverConfig(iterations=5))
    assert np.array_equal(est, truth)
    assert all(g == 0.0 for g in trace.grad_norm_sum[1:])


def test_iterates_stay_in_box():
    frames, truth = small_defocus_problem(0.06, seed=2, size=48, n_zones=4)
    est, _ = sandr(frames, SolverConfig(iterations=10))
    assert est.min() >= 0.0 and est.max() <= 1.0


# ----------------------------------------------------------- pg vs sandr


def test_pg_first_iteration_matches_sandr():
    frames, truth = small_defocus_problem(0.06, seed=3, size=48, n_zones=4)
    cfg = SolverConfig(iterations=1, t0=1.0)
    est_pg, _ = pg(frames, cfg)
    est_sa, _ = sandr(frames, cfg)
    assert np.array_equal(est_pg, est_sa)


def test_sandr_without_acceleration_is_pg_bitwise():
    frames, truth = small_defocus_problem(0.09, seed=4, size=48, n_zones=4)
    cfg = SolverConfig(iterations=8)
    est_pg, tr_pg = pg(frames, cfg, truth=truth)
    est_na, tr_na = sandr(frames, SolverConfig(iterations=8, acceleration=False), truth=truth)
    assert np.array_equal(est_pg, est_na)
    assert tr_pg.rms == tr_na.rms


def test_sandr_beats_pg_at_fifty_iterations():
    frames, truth = small_defocus_problem(0.12, seed=6)
    _, tr_pg = pg(frames, SolverConfig(iterations=50), truth=truth)
    _, tr_sa = sandr(frames, SolverConfig(iterations=50), truth=truth)
    assert tr_sa.rms[-1] < tr_pg.rms[-1]


def test_trace_contract():
    frames, truth = small_defocus_problem(0.06, seed=7, size=48, n_zones=4)
    _, trace = pg(frames, SolverConfig(iterations=6), truth=truth)
    assert trace.iteration == list(range(7))
    assert math.isnan(trace.grad_norm_sum[0])
    assert all(np.isfinite(g) for g in trace.grad_norm_sum[1:])
    assert len(trace.rms) == 7 and len(trace.wall_s) == 7
    assert all(b >= a for a, b in zip(trace.wall_s, trace.wall_s[1:]))
    _, bare = pg(frames, SolverConfig(iterations=2))
    assert bare.rms is None


def test_zero_iterations_returns_projected_init():
    frames, truth = small_defocus_problem(0.06, seed=8, size=48, n_zones=4)
    est, trace = sandr(frames, SolverConfig(iterations=0), truth=truth)
    assert len(trace) == 1 and trace.iteration == [0]
    assert est.min() >= 0.0 and est.max() <= 1.0


# ----------------------------------------------------------- stopping rule


def test_gradient_sums_non_increasing_small_step():
    truth = bandlimited_random(32, seed=9)
    frames = delta_frames(truth)
    _, trace = pg(frames, SolverConfig(iterations=30, step=0.5), truth=truth)
    sums = trace.grad_norm_sum[1:]
    assert all(b <= a + 1e-12 for a, b in zip(sums, sums[1:]))


def test_stopping_rule_never_triggers_when_stable():
    truth = bandlimited_random(32, seed=10)
    frames = delta_frames(truth)
    _, trace = pg(frames, SolverConfig(iterations=25, step=0.5, stop_eps=0.0))
    assert trace.iteration[-1] == 25  # ran to completion


def test_stopping_rule_halts_unstable_run():
    frames, truth = small_defocus_problem(0.12, seed=11, size=48, n_zones=4)
    cfg_off = SolverConfig(iterations=40, step=30.0)
    _, tr_off = pg(frames, cfg_off)
    assert tr_off.iteration[-1] == 40  # disabled rule never stops
    cfg_on = SolverConfig(iterations=40, step=30.0, stop_eps=0.0)
    _, tr_on = pg(frames, cfg_on)
    assert tr_on.iteration[-1] < 40


def test_numeric_error_on_nan_frame():
    frames, truth = small_defocus_problem(0.06, seed=12, size=48, n_zones=4)
    fm, lr = frames[0]
    bad = lr.copy()
    bad[0, 0] = np.nan
    with pytest.raises(NumericError):
        sandr([(fm, bad)] + frames[1:], SolverConfig(iterations=3))


def test_frame_validation():
    with pytest.raises(ValueError):
        sandr([], SolverConfig())
    frames, _ = small_defocus_problem(0.06, seed=13, size=48, n_zones=4)
    fm, lr = frames[0]
    with pytest.raises(ValueError):
        sandr([(fm, lr[:-1, :])], SolverConfig())


# ------------------------------------------------------- single-frame FISTA


def test_fista_identity_blur_returns_projection():
    op = BlurOperator(np.ones((1, 1, 1)), np.ones((1, 10, 10)))
    inside = rng.random((10, 10))
    assert np.array_equal(fista_deconvolve(op, inside, SolverConfig(iterations=5)), inside)
    outside = inside + 0.4  # some values exceed 1
    est = fista_deconvolve(op, outside, SolverConfig(iterations=60))
    assert np.allclose(est, np.clip(outside, 0, 1), atol=1e-6)


def test_fista_zero_input_zero_output():
    op = BlurOperator(np.ones((1, 1, 1)), np.ones((1, 8, 8)))
    out = fista_deconvolve(op, np.zeros((8, 8)), SolverConfig(iterations=10))
    assert np.array_equal(out, np.zeros((8, 8)))


def test_fista_deconvolves_synthetic_frame():
    spec = DefocusSpec(d=0.06, n_zones=55, focal_index=28, zone_width=3)
    op = BlurOperator(build_psf_stack(spec), build_zone_masks(165, 165, spec))
    o_true = resolution_target(165)
    o_hat = fista_deconvolve(op, op.apply(o_true), SolverConfig(iterations=200))
    assert relative_rms(o_hat, o_true) < 0.05


# -------------------------------------------------------------------- SM


def test_sm_coincides_with_sandr_without_blur():
    # identity blur: step 1 is a no-op and the two algorithms are identical
    truth = bandlimited_random(32, seed=14)
    frames = delta_frames(truth)
    cfg = SolverConfig(iterations=20)
    est_sm, tr_sm = sm(frames, cfg, cfg, truth=truth)
    est_sa, tr_sa = sandr(frames, cfg, truth=truth)
    assert np.array_equal(est_sm, est_sa)
    assert tr_sm.rms == tr_sa.rms


def test_sm_close_to_sandr_at_zero_defocus():
    frames, truth = small_defocus_problem(0.0, seed=15)
    cfg = SolverConfig(iterations=50)
    est_sm, tr_sm = sm(frames, cfg, cfg, truth=truth)
    est_sa, tr_sa = sandr(frames, cfg, truth=truth)
    assert abs(tr_sm.rms[-1] - tr_sa.rms[-1]) <= 1e-3


def test_sm_skip_deblur_step():
    frames, truth = small_defocus_problem(0.06, seed=16, size=48, n_zones=4)
    est, trace = sm(frames, SolverConfig(iterations=0), SolverConfig(iterations=10), truth=truth)
    assert trace.iteration[-1] == 10
    assert est.shape == truth.shape


def test_sm_degrades_at_strong_defocus():
    cfg = SolverConfig(iterations=30)
    worse = 0
    for seed in (20, 21, 22):
        frames, truth = small_defocus_problem(0.24, seed=seed, n_zones=22)
        _, tr_sm = sm(frames, cfg, cfg, truth=truth)
        _, tr_sa = sandr(frames, cfg, truth=truth)
        worse += tr_sm.rms[-1] > tr_sa.rms[-1]
    assert worse == 3


# ---------------------------------------------------------- BTV baselines


def test_btv_gradient_zero_on_constant():
    g = btv_gradient(np.full((8, 8), 0.3), BtvConfig())
    assert np.array_equal(g, np.zeros((8, 8)))


def brute_btv_gradient(image, cfg):
    rows, cols = image.shape
    grad = np.zeros_like(image)
    for dl in range(-cfg.window, cfg.window + 1):
        for dk in range(-cfg.window, cfg.window + 1):
            if dl == 0 and dk == 0:
                continue
            w = cfg.decay ** (abs(dl) + abs(dk))
            for r in range(rows):
                for c in range(cols):
                    # |O(r,c) - O(r-dl,c-dk)| contributes +s at (r,c) and -s
                    # at the pixel that entered as the subtrahend
                    s = np.sign(image[r, c] - image[(r - dl) % rows, (c - dk) % cols])
                    grad[r, c] += w * s
                    grad[(r - dl) % rows, (c - dk) % cols] -= w * s
    return grad


def test_btv_gradient_matches_bruteforce():
    x = rng.random((8, 8))
    cfg = BtvConfig(decay=0.7, window=2)
    assert np.allclose(btv_gradient(x, cfg), brute_btv_gradient(x, cfg), atol=1e-12)


def test_btv_small_decay_dominated_by_four_neighbors():
    x = rng.random((10, 10))
    alpha = 1e-4
    full = btv_gradient(x, BtvConfig(decay=alpha, window=1))
    four = np.zeros_like(x)
    for dl, dk in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        s = np.sign(x - np.roll(x, (dl, dk), axis=(0, 1)))
        four += alpha * (s - np.roll(s, (-dl, -dk), axis=(0, 1)))
    # the four diagonal pairs contribute at most 2 * alpha^2 each
    assert np.abs(full - four).max() <= 8 * alpha**2 + 1e-15


def test_laplacian_self_adjoint():
    x, y = rng.random((9, 9)), rng.random((9, 9))
    assert float(np.sum(laplacian(x) * y)) == pytest.approx(
        float(np.sum(x * laplacian(y))), rel=1e-12
    )


def test_baseline_l2_no_reg_equals_pg():
    truth = bandlimited_random(32, seed=30)
    lr_shape = (16, 16)
    frames = []
    for v in QUARTER_SHIFTS:
        fm = FrameModel(None, v, 2, lr_shape=lr_shape)
        frames.append((fm, fm.sample(truth)))
    cfg = SolverConfig(iterations=12)
    est_b, tr_b = baseline_solve(frames, "l2btv", cfg, BtvConfig(reg_weight=0.0), truth=truth)
    est_p, tr_p = pg(frames, cfg, truth=truth)
    assert np.array_equal(est_b, est_p)
    assert tr_b.rms == tr_p.rms


def test_baseline_sign_antisymmetry():
    fm = FrameModel(None, (0.5, 0.0), 2, lr_shape=(6, 6))
    O = rng.random((12, 12))
    residual = fm.sample(O) - rng.random((6, 6))
    assert np.array_equal(
        fm.lift(np.sign(-residual)), -fm.lift(np.sign(residual))
    )


def test_baseline_unknown_method():
    frames, _ = small_defocus_problem(0.06, seed=31, size=48, n_zones=4)
    with pytest.raises(ValueError):
        baseline_solve(frames, "tv", SolverConfig(), BtvConfig())


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(step=0.0)
    with pytest.raises(ValueError):
        SolverConfig(iterations=-1)
    with pytest.raises(ValueError):
        SolverConfig(t0=0.5)
    with pytest.raises(ValueError):
        BtvConfig(decay=1.0)
    with pytest.raises(ValueError):
        BtvConfig(window=0)
    with pytest.raises(ValueError):
        BtvConfig(reg_weight=-1.0)
