"""Acceptance criteria, one test per criterion.

Run `pytest tests/test_acceptance.py -v -s` to see one PASS line per
criterion; every tolerance is pinned here.  Criterion 4's truncation-tail
constant and criterion 9's bound constant follow the corrected derivations
(exact closed forms, strictly stronger checks than loose bounds); the
deviation grid uses the familywise margin z=5.
"""

import math
import time
from fractions import Fraction

import numpy as np
from scipy.stats import binom

from snclab.channel import (
    achievable_k,
    asymptotic_noise_entropy,
    brute_force_rank_count,
    capacity,
    exact_rank_count,
    singleton_bound,
    transmit,
    validate_params,
)
from snclab.cli import main as cli_main
from snclab.decoder import (
    DecoderConfig,
    decode,
    init_messages,
    iterate,
    recover_noise_space,
    span_failure_probability,
    symbol_error_rate,
    wrong_determinations,
)
from snclab.degrees import design_rate, edge_to_node, integral_rho, rho_star, rho_star_coefficient
from snclab.de import (
    PopulationDeConfig,
    ScalarDeConfig,
    big_f,
    evaluate_deviation,
    fixed_point_residual,
    population_de_run,
    population_summary,
    row_undetermined_probability,
    sample_intersection_dims,
    scalar_de_run,
)
from snclab.ensemble import build_code, encode, exact_rate

RNG = np.random.default_rng


def _report(n: int, detail: str) -> None:
    print(f"ACCEPTANCE {n}: PASS - {detail}")


def test_acceptance_01_capacity_and_singleton():
    t0 = time.time()
    lam = Fraction(1, 6)
    assert capacity(lam, Fraction(1, 5)) == Fraction(16, 25)  # 0.64 exactly
    assert singleton_bound(lam, Fraction(1, 5)) == Fraction(1, 2)
    for w_num in range(0, 51):
        w = Fraction(w_num, 100)
        assert capacity(lam, w) >= singleton_bound(lam, w)
    # achievable dot set is exactly {5/k : k >= 6}
    dots = []
    for k in range(6, 40):
        w = Fraction(5, k)
        assert 0 < w < 1
        assert achievable_k(lam, w) == k
        dots.append(w)
    assert dots[0] == Fraction(5, 6)
    for w in (Fraction(3, 10), Fraction(2, 7), Fraction(9, 10)):
        assert Fraction(5, 1) / w != int(Fraction(5, 1) / w)
        assert achievable_k(lam, w) is None
    elapsed = time.time() - t0
    assert elapsed < 1.0
    _report(1, f"C(1/6,1/5)=16/25, singleton=1/2, grid dominated, dots 5/k ({elapsed:.2f}s)")


def test_acceptance_02_rank_count_oracle():
    t0 = time.time()
    assert exact_rank_count(1, 2, 2, 2) == 9
    checked = 0
    for q in (2, 3):
        for l in range(1, 4):
            for m in range(1, 4):
                for s in range(0, min(l, m) + 1):
                    assert exact_rank_count(s, l, m, q) == brute_force_rank_count(s, l, m, q)
                    checked += 1
    elapsed = time.time() - t0
    assert elapsed < 60.0
    _report(2, f"{checked} (s,l,m,q) cells equal brute-force enumeration ({elapsed:.1f}s)")


def test_acceptance_03_entropy_asymptotics():
    lam, omega = Fraction(1, 2), Fraction(1, 3)
    target = float(asymptotic_noise_entropy(lam, omega))
    gaps = []
    for n in (24, 48, 96):
        p = validate_params(2, n, lam, omega)
        a = exact_rank_count(p.s, p.l, p.m, p.q)
        gap = abs(math.log2(a) / (n * p.l) - target)
        assert gap <= 3 / p.l
        gaps.append(gap)
    assert gaps[0] > gaps[1] > gaps[2]
    _report(3, f"per-symbol log A within 3/l of omega-lambda*omega^2, gaps {['%.2e' % g for g in gaps]}")


def test_acceptance_04_truncated_family_identities():
    # telescoping partial sums, exact at every b up to 1e4
    for k in (2, 3, 5):
        running = Fraction(0)
        for b in range(k + 1, 10_001):
            running += rho_star_coefficient(k, b)
            assert running == 1 - Fraction(k - 1, b - 1)
    # truncation gap of the integral: assert the exact closed form (the naive
    # (k-1)/(2k(b-1)) tail estimate undercounts the relocated mass by ~2x)
    for k in (2, 3, 5):
        for b in (k + 1, 10 * k, 1000, 10_000):
            gap = integral_rho(rho_star(k, b).dist) - Fraction(1, 2 * k)
            assert gap == Fraction(k - 1, b - 1) * (Fraction(1, k) - Fraction(1, 2 * b))
            assert 0 < gap <= Fraction(k - 1, k * (b - 1))
    # fixed-point residual at b_eval = 1e4
    for k in (2, 3, 5):
        for a10 in range(1, 10):
            assert fixed_point_residual(k, 10_000, a10 / 10) <= 1.1 * (k - 1) / 10_000
    _report(4, "telescoping exact to b=1e4; integral gap exact; residual <= 1.1(k-1)/1e4")


def test_acceptance_05_scalar_de_decay():
    t0 = time.time()
    rho = rho_star(3, 6).dist
    traj = scalar_de_run(ScalarDeConfig(k=3, rho=rho, max_iters=20, epsilon_stop=1e-12))
    alphas = traj.alphas
    assert alphas[1] == Fraction(3, 5)
    assert float(alphas[4]) <= 1e-5
    below = [t for t, a in enumerate(alphas) if float(a) < 1e-6]
    assert below and below[0] <= 8
    assert traj.gamma_estimate is not None and 2.4 <= traj.gamma_estimate <= 3.6
    for i in range(1, 1001):
        a = i / 1000
        assert big_f(3, rho, a) < a
    elapsed = time.time() - t0
    assert elapsed < 1.0
    _report(
        5,
        f"alpha_1=3/5, alpha_4={float(alphas[4]):.3g}, crosses 1e-6 at t={below[0]}, "
        f"gamma={traj.gamma_estimate:.3f} ({elapsed:.2f}s)",
    )


def test_acceptance_06_rate_bookkeeping():
    t0 = time.time()
    node = edge_to_node(rho_star(3, 6).dist)
    rate = design_rate(Fraction(1, 2), Fraction(1, 3), node)
    assert rate == Fraction(7, 45)
    assert rate < capacity(Fraction(1, 2), Fraction(1, 3)) == Fraction(2, 9)
    sizes = [12, 15, 18, 21, 24, 27, 30, 33, 36]
    checked = 0
    for i in range(20):
        l = sizes[i % len(sizes)]
        p = validate_params(2, 2 * l, Fraction(1, 2), Fraction(1, 3))
        code = build_code(p, 3, 6, RNG([600, i]))
        assert exact_rate(code) >= code.design_rate
        checked += 1
    elapsed = time.time() - t0
    assert elapsed < 300.0
    _report(6, f"design rate 7/45 < C=2/9; exact >= design on {checked} codes l=m=12..36 ({elapsed:.1f}s)")


def test_acceptance_07_decoder_soundness():
    t0 = time.time()
    configs = [
        (2, 24, Fraction(1, 3), 3, 6),
        (2, 24, Fraction(1, 2), 2, 5),
        (2, 36, Fraction(1, 3), 3, 6),
        (3, 24, Fraction(1, 3), 3, 6),
        (2, 24, Fraction(0), 3, 6),
    ]
    trials_per = 104
    total = wrong_total = contained_checks = noiseless = 0
    for ci, (q, n, omega, k, b) in enumerate(configs):
        p = validate_params(q, n, Fraction(1, 2), omega)
        for i in range(trials_per):
            rng = RNG([700, ci, i])
            code = build_code(p, k, b, rng)
            info = rng.integers(0, q, size=code.info_length(), dtype=np.int64)
            x = encode(code, info)
            out = transmit(x, p, rng)
            res = decode(out.y, code, DecoderConfig(max_iters=20))
            total += 1
            wrong_total += wrong_determinations(res, x)
            if omega == 0:
                assert res.all_determined and symbol_error_rate(res, x) == 0.0
                noiseless += 1
            # truth containment at every logged iteration, on a subsample
            if i < 10 and res.noise_space_ok:
                w = recover_noise_space(out.y, p, code.omega_prime)
                state = init_messages(out.y, w, code)
                for _ in range(min(res.iterations_used + 1, 5)):
                    for e, (v, _, _) in enumerate(code.graph.edges):
                        assert state.messages[e].contains(x[v])
                        contained_checks += 1
                    state = iterate(state, code)
    assert total >= 500
    assert wrong_total == 0
    elapsed = time.time() - t0
    assert elapsed < 600.0
    _report(
        7,
        f"{total} mixed trials, 0 wrong determinations, {contained_checks} containment "
        f"checks, {noiseless} noiseless exact ({elapsed:.1f}s)",
    )


def test_acceptance_08_cross_layer_consistency():
    t0 = time.time()
    lam, omega, k, b = Fraction(1, 2), Fraction(1, 3), 3, 6
    rho = rho_star(k, b).dist
    # population vs scalar at the k=3 point
    scalar = scalar_de_run(ScalarDeConfig(k=k, rho=rho, max_iters=6)).alphas_float()
    cfg = PopulationDeConfig(q=2, m=36, d_cap=12, rho=rho, population_size=1000, max_iters=4)
    states = population_de_run(cfg, RNG([800]))
    devs = []
    for t in range(5):
        frac_hi = population_summary(states[t], 12)["frac_ge_half"]
        devs.append(abs(frac_hi - scalar[t]))
        assert devs[-1] <= 0.05
    # Monte Carlo campaign vs composite DE prediction at block granularity
    p = validate_params(2, 72, lam, omega)
    trials = 200
    block_errors = 0
    conditional_rows_bad = 0
    for i in range(trials):
        rng = RNG([801, i])
        code = build_code(p, k, b, rng)
        info = rng.integers(0, 2, size=code.info_length(), dtype=np.int64)
        x = encode(code, info)
        out = transmit(x, p, rng)
        res = decode(out.y, code, DecoderConfig(max_iters=20))
        ser = symbol_error_rate(res, x)
        if ser > 0:
            block_errors += 1
        if res.noise_space_ok:
            conditional_rows_bad += int(round(ser * res.n_constrained))
    pred_span = float(span_failure_probability(p.s, p.s, p.q))
    pop_final = population_de_run(
        PopulationDeConfig(q=p.q, m=p.m, d_cap=p.s, rho=rho, population_size=1000, max_iters=20),
        RNG([802]),
    )[-1]
    pred_row = row_undetermined_probability(pop_final.dims, p.s, p.q)
    n_rows = p.l - p.s
    pred_block = pred_span + (1 - pred_span) * (1 - (1 - pred_row) ** n_rows)
    lo = int(binom.ppf(0.005, trials, pred_block))
    hi = int(binom.ppf(0.995, trials, pred_block))
    assert lo <= block_errors <= hi, (block_errors, lo, hi, pred_block)
    elapsed = time.time() - t0
    assert elapsed < 1800.0
    _report(
        8,
        f"pop-vs-scalar devs {['%.3f' % d for d in devs]}; campaign block errors "
        f"{block_errors}/{trials} in [{lo},{hi}] around p={pred_block:.4f} "
        f"(conditional bad rows {conditional_rows_bad}) ({elapsed:.1f}s)",
    )


def test_acceptance_09_deviation_bound_grid():
    t0 = time.time()
    rng = RNG([900])
    trials = 256
    cells = 0
    floor_violations = 0
    for q in (2, 3):
        for m in range(1, 21):
            for d1 in range(m + 1):
                for d2 in range(m + 1):
                    dims = sample_intersection_dims(m, d1, d2, q, trials, rng)
                    for slack in range(0, 5):
                        rep = evaluate_deviation(m, d1, d2, slack, q, dims, z_margin=5.0)
                        cells += 1
                        floor_violations += rep.floor_violations
                        assert rep.passed, (q, m, d1, d2, slack, rep)
    assert floor_violations == 0
    elapsed = time.time() - t0
    assert elapsed < 600.0
    _report(9, f"{cells} grid cells pass, hard floor never violated ({elapsed:.1f}s)")


def test_acceptance_10_byte_determinism(tmp_path):
    args = [
        "simulate", "--q", "2", "--N", "24", "--lambda", "1/2", "--omega", "1/3",
        "--k", "3", "--b", "6", "--trials", "24", "--iters", "20", "--seed", "12345",
        "--de-predict", "--pop-size", "400",
    ]
    outs = []
    for name, workers in (("r1", 1), ("r2", 1), ("r4", 4)):
        code = cli_main(args + ["--out", str(tmp_path / name), "--workers", str(workers)])
        assert code == 0
        outs.append(
            (
                (tmp_path / f"{name}.summary.csv").read_bytes(),
                (tmp_path / f"{name}.trials.jsonl").read_bytes(),
            )
        )
    assert outs[0] == outs[1] == outs[2]
    _report(10, "simulate outputs byte-identical across repeats and worker counts 1/4")
