//! Calibration probe: e_Δ landscapes for the bundled scenarios and an exact
//! offline replay of the adaptive-order update law across candidate gamma
//! schedules. Not part of the test suite; run with `--release`.

use fdsic::channel::{MultipathChannel, Tap};
use fdsic::estimator::{
    gamma_schedule, order_error_landscape, update_order, Block, LsConfig, OrderState,
};
use fdsic::frontend::{
    dpmzm_downconvert, transmit_band, transmit_bandpass, upconvert_reference, FrontendParams,
    Nonlinearity,
};
use fdsic::harness::scenario_library;
use fdsic::signal::{decimate, qpsk_modulate, shape_and_upconvert, PulseShape, SampledSignal};
use rand::{Rng, SeedableRng};
use std::time::Instant;

const RF_RATE: f64 = 40.0e9;
const IF_RATE: f64 = 10.0e9;
const LO: f64 = 8.0e9;
const IF_FREQ: f64 = 2.0e9;
const L_MAX: usize = 450;
const GAP: usize = 40;

/// Mirrors the harness capture pipeline for one bundled scenario.
fn capture_scenario(idx: usize, baud: f64, duration: f64) -> (Vec<SampledSignal>, SampledSignal) {
    let lib = scenario_library();
    let sc = &lib[idx].scenario;
    let cutoff = (IF_FREQ + 4.0 * baud).min(IF_RATE / 2.0 - 0.02 * RF_RATE);
    let params = FrontendParams {
        lo_freq: LO,
        lo_phase: 0.0,
        conversion_gain: 1.0,
        if_lowpass_cutoff: cutoff,
        nonlinearity: Nonlinearity::Linear,
    };
    let (band_lo, band_hi) = transmit_band(LO, IF_RATE, RF_RATE);
    let n_sym = (duration * baud).round() as usize;
    let mut xs = Vec::new();
    let mut txs = Vec::new();
    for j in 0..sc.antennas.len() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(j as u64);
        let bits: Vec<bool> = (0..2 * n_sym).map(|_| rng.random()).collect();
        let sym = qpsk_modulate(&bits, baud).unwrap();
        let base = shape_and_upconvert(&sym, IF_FREQ, IF_RATE, &PulseShape::RectNrz).unwrap();
        let rf = upconvert_reference(&base, RF_RATE, &params).unwrap();
        let tx = transmit_bandpass(&rf, band_lo, band_hi).unwrap();
        let copy = decimate(&dpmzm_downconvert(&tx, None, &params).unwrap(), 4).unwrap();
        xs.push(copy);
        txs.push(tx);
    }
    let taps: Vec<Vec<Tap>> = sc
        .antennas
        .iter()
        .map(|a| {
            a.delays_ns
                .iter()
                .zip(&a.gains_db)
                .map(|(&d, &g)| Tap {
                    delay_s: d * 1e-9,
                    gain_db: g,
                    phase_rad: 0.0,
                })
                .collect()
        })
        .collect();
    let ch = MultipathChannel::new(taps, None).unwrap();
    let y_rf = ch.apply(&txs).unwrap();
    let y = decimate(&dpmzm_downconvert(&y_rf, None, &params).unwrap(), 4).unwrap();
    (xs, y)
}

/// e_Δ for every integer order in (GAP, L_MAX], indexed by order.
fn landscape(xs: &[SampledSignal], y: &SampledSignal, block: Block) -> Vec<f64> {
    let orders: Vec<usize> = (GAP + 1..=L_MAX).collect();
    let curve = order_error_landscape(xs, y, &orders, GAP, block).unwrap();
    let mut table = vec![0.0; L_MAX + 1];
    for (&l, &e) in orders.iter().zip(&curve) {
        table[l] = e;
    }
    table
}

/// Replays the adaptive loop against a precomputed landscape.
fn simulate(table: &[f64], cfg: &LsConfig) -> (usize, bool, usize) {
    let mut state = OrderState::new(cfg);
    let mut hold = 0usize;
    for i in 0..cfg.max_iterations {
        let prev = state.order;
        state = update_order(&state, table[state.order], gamma_schedule(i, cfg), cfg);
        if state.order == prev {
            hold += 1;
            if hold >= cfg.patience {
                return (state.order, true, i + 1);
            }
        } else {
            hold = 0;
        }
    }
    (state.order, false, cfg.max_iterations)
}

fn main() {
    let names = ["SI1", "SI2", "SI3", "SI4"];
    let expected = [320usize, 300, 420, 230];
    let block = Block {
        start: 500,
        len: 40_000,
    };

    // --- landscapes at the default plan (1 GBd, N = 40k) ---
    let mut tables = Vec::new();
    for idx in 0..4 {
        let t0 = Instant::now();
        let (xs, y) = capture_scenario(idx, 1.0e9, 4.5e-6);
        let table = landscape(&xs, &y, block);
        println!(
            "\n{} landscape ({} s): |e_delta| at sample orders",
            names[idx],
            t0.elapsed().as_secs_f32()
        );
        for l in (60..=450).step_by(15) {
            print!("  {l}:{:.2e}", table[l].abs());
            if (l - 60) % 120 == 105 {
                println!();
            }
        }
        println!();
        tables.push(table);
    }

    // --- SI1 variants: bauds 0.5 / 2 GBd and the reduced 10k block ---
    let (xs05, y05) = capture_scenario(0, 0.5e9, 4.5e-6);
    let si1_05 = landscape(&xs05, &y05, block);
    let (xs2, y2) = capture_scenario(0, 2.0e9, 4.5e-6);
    let si1_2 = landscape(&xs2, &y2, block);
    let small = Block {
        start: 500,
        len: 10_000,
    };
    let (xs1, y1) = capture_scenario(0, 1.0e9, 4.5e-6);
    let si1_10k = landscape(&xs1, &y1, small);
    for (name, t) in [
        ("SI1@0.5G", &si1_05),
        ("SI1@2G", &si1_2),
        ("SI1@10k", &si1_10k),
    ] {
        print!("\n{name} cliff:");
        for l in (285..=375).step_by(15) {
            print!("  {l}:{:.2e}", t[l].abs());
        }
        println!();
    }

    // --- gamma/iteration grid over all cases, both inits ---
    println!("\n=== grid (alpha 10, patience 20) — order@iters, ! = miss ===");
    println!("cases: SI1 SI2 SI3 SI4 @1G/40k, then SI1@0.5G, SI1@2G, SI1@10k");
    for iters in [300usize, 600, 1200] {
        for (gamma_min, gamma_max) in [
            (500.0, 2.2e3),
            (500.0, 3.2e3),
            (1.0e3, 3.2e3),
            (1.5e3, 3.0e3),
            (2.0e3, 4.0e3),
            (1.0e3, 5.0e3),
        ] {
            print!("it {iters:>4} g [{gamma_min:>6.0},{gamma_max:>6.0}] |");
            let mut ok = true;
            let mut check = |table: &[f64], target: usize, lo: usize, hi: usize, blk: Block| {
                for l_init in [150usize, 450] {
                    let cfg = LsConfig {
                        gamma_min,
                        gamma_max,
                        max_iterations: iters,
                        l_init,
                        block_size: blk.len,
                        ..LsConfig::default()
                    };
                    let (order, conv, it) = simulate(table, &cfg);
                    let hit = conv && order >= lo && order <= hi;
                    ok &= hit;
                    print!(" {}{}@{}", if hit { ' ' } else { '!' }, order, it);
                }
                let _ = target;
                print!(" |");
            };
            for (idx, table) in tables.iter().enumerate() {
                let tol = (expected[idx] as f64 * 0.15).round() as usize;
                let (lo, hi) = if idx == 0 {
                    (300, 340)
                } else {
                    (expected[idx] - tol, expected[idx] + tol)
                };
                check(table, expected[idx], lo, hi, block);
            }
            check(&si1_05, 320, 300, 340, block);
            check(&si1_2, 320, 300, 340, block);
            check(&si1_10k, 320, 256, 384, small);
            println!("{}", if ok { "  ALL OK" } else { "" });
        }
    }

    end_to_end();
}

/// Phase 3: the real harness with frozen defaults — convergence, depth vs
/// order, and the depth-vs-baud trend used by the noise calibration.
fn end_to_end() {
    use fdsic::harness::{run_single, scenario_library};

    println!("\n=== real harness: adaptive convergence ===");
    for base in scenario_library() {
        for l_init in [150usize, 450] {
            let mut cfg = base.clone();
            cfg.estimator.l_init = l_init;
            let t0 = Instant::now();
            let r = run_single(&cfg).unwrap();
            let trace = r.trace.unwrap();
            println!(
                "{} from {l_init}: order {} converged {} after {} iters, depth {:.1} dB, {:.1} s",
                cfg.scenario.name,
                trace.final_order(),
                trace.converged(),
                trace.records().len(),
                r.sic.unwrap().depth_db,
                t0.elapsed().as_secs_f32()
            );
        }
    }

    println!("\n=== real harness: SI1 baud robustness ===");
    for baud in [0.5e9, 1.0e9, 2.0e9] {
        for l_init in [150usize, 450] {
            let mut cfg = scenario_library().remove(0);
            cfg.signal.baud_rate_hz = baud;
            cfg.estimator.l_init = l_init;
            let r = run_single(&cfg).unwrap();
            let trace = r.trace.unwrap();
            println!(
                "SI1 {baud:.1e} Bd from {l_init}: order {} converged {}",
                trace.final_order(),
                trace.converged()
            );
        }
    }

    println!("\n=== real harness: SI1 reduced block (N=10k) ===");
    for l_init in [150usize, 450] {
        let mut cfg = scenario_library().remove(0);
        cfg.estimator.block_size = 10_000;
        cfg.estimator.l_init = l_init;
        let r = run_single(&cfg).unwrap();
        let trace = r.trace.unwrap();
        println!(
            "SI1 N=10k from {l_init}: order {} converged {}",
            trace.final_order(),
            trace.converged()
        );
    }

    println!("\n=== real harness: depth vs fixed order (SI1, noiseless linear) ===");
    for order in [120usize, 200, 320, 350, 380, 410, 450] {
        let mut cfg = scenario_library().remove(0);
        cfg.fixed_order = Some(order);
        let r = run_single(&cfg).unwrap();
        println!("order {order}: depth {:.2} dB", r.sic.unwrap().depth_db);
    }

    println!("\n=== real harness: depth vs baud (sinusoidal + noise) ===");
    for snr in [8.0f64, 10.0, 12.0, 15.0, 20.0] {
        print!("snr {snr} dB:");
        for baud in [0.1e9, 0.25e9, 0.5e9, 1.0e9, 2.0e9] {
            let mut cfg = scenario_library().remove(0);
            cfg.signal.baud_rate_hz = baud;
            cfg.scenario.snr_db = Some(snr);
            cfg.frontend.nonlinearity = fdsic::frontend::Nonlinearity::Sinusoidal {
                modulation_index: 0.6,
            };
            let r = run_single(&cfg).unwrap();
            print!("  {baud:.2e}:{:.1}", r.sic.unwrap().depth_db);
        }
        println!();
    }
}
