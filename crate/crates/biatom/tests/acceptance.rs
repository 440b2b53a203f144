//! Acceptance suite: one test per shipped criterion, each printing a
//! PASS/FAIL line with the observed numbers (run with `--nocapture` to see
//! them). Criterion 5 is expected red; see the test for the analysis.

use biatom::kernels::excitation_kernels;
use biatom::linear::{
    beamsplitter_coeffs, cavity_compose, intensity_transmission, pulse_transmission,
    standing_wave_transfer, traveling_transfer, Mode,
};
use biatom::optimize::{maximize, Axis};
use biatom::oracle;
use biatom::sweep::{linspace, logspace, transmission_map, two_photon_report};
use biatom::twophoton::{
    channel_probabilities, nonlinear_part, scattering_channels, ChannelTag, Geometry,
    NonlinearPart,
};
use biatom::validate::rel_l2_offdiag;
use biatom::{make_pulse, PulseEnvelope, PulseShape, SystemParams, TimeGrid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use std::time::Instant;

fn report(criterion: u32, name: &str, pass: bool, detail: &str, started: Instant) {
    println!(
        "criterion {criterion} ({name}): {} — {detail} [{:.1} s]",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    assert!(pass, "criterion {criterion} ({name}): {detail}");
}

fn square_pulse(g2: f64, dur: f64, n: usize) -> PulseEnvelope {
    let grid = TimeGrid::for_pulse(g2, dur, n).expect("grid");
    make_pulse(PulseShape::Square, dur, grid).expect("pulse")
}

#[test]
fn criterion_01_standing_phase_unitarity() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst = 0.0_f64;
    for _ in 0..10_000 {
        let p = SystemParams::new(
            rng.gen_range(0.0..3.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(0.0..2.0 * PI),
            rng.gen_range(0.0..0.3),
        );
        let omega = rng.gen_range(-12.0..12.0);
        for mode in [Mode::C, Mode::D] {
            let tf = standing_wave_transfer(&p, mode, false);
            worst = worst.max((tf.eval(omega).norm() - 1.0).abs());
        }
    }
    report(
        1,
        "standing-wave phase unitarity",
        worst < 1e-12 && t0.elapsed().as_secs_f64() < 1.0,
        &format!("max ||ratio|-1| = {worst:.2e} over 1e4 samples"),
        t0,
    );
}

#[test]
fn criterion_02_traveling_unitarity() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let delta = rng.gen_range(-2.0..2.0);
        let exchange = rng.gen_range(-2.0..2.0);
        for i in 0..200 {
            let omega = -10.0 + 20.0 * i as f64 / 199.0;
            for j in 0..200 {
                let phi = 2.0 * PI * j as f64 / 200.0;
                let p = SystemParams::markov(1.0, delta, exchange, 0.0, phi);
                let (t, r) = traveling_transfer(&p, true);
                let s = t.eval(omega).norm_sqr() + r.eval(omega).norm_sqr();
                worst = worst.max((s - 1.0).abs());
            }
        }
    }
    report(
        2,
        "traveling unitarity with interactions",
        worst < 1e-10 && t0.elapsed().as_secs_f64() < 5.0,
        &format!("max ||t|^2+|r|^2 - 1| = {worst:.2e} on 200x200 x 20 pairs"),
        t0,
    );
}

#[test]
fn criterion_03_cavity_equivalence() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let mut worst = 0.0_f64;
    for _ in 0..10_000 {
        let p = SystemParams::markov(
            rng.gen_range(0.1..2.0),
            rng.gen_range(-2.0..2.0),
            0.0,
            0.0,
            rng.gen_range(0.0..2.0 * PI),
        );
        let omega = rng.gen_range(-8.0..8.0);
        let b = beamsplitter_coeffs(&p, -1.0, true).expect("Delta = 0");
        let (t, r) = traveling_transfer(&p, true);
        let (ct, cr) = cavity_compose(&b, omega);
        worst = worst.max((ct - t.eval(omega)).norm()).max((cr - r.eval(omega)).norm());
    }
    report(
        3,
        "cavity-composition equivalence",
        worst < 1e-10 && t0.elapsed().as_secs_f64() < 2.0,
        &format!("max |composed - closed form| = {worst:.2e} over 1e4 samples"),
        t0,
    );
}

#[test]
fn criterion_04_flat_window() {
    let t0 = Instant::now();
    let p = SystemParams::markov(1.0, 0.0, 1.0, 0.0, 1.5 * PI);
    let (_, refl) = traveling_transfer(&p, true);
    let mut worst_r = 0.0_f64;
    for i in 0..=2000 {
        let omega = -20.0 + 0.02 * i as f64;
        worst_r = worst_r.max(refl.eval(omega).norm());
    }
    let mut worst_t = 0.0_f64;
    for shape in [PulseShape::Square, PulseShape::Gaussian] {
        for g2_t in [0.3, 1.0, 3.0] {
            let grid = TimeGrid::for_pulse(1.0, g2_t, 2048).expect("grid");
            let pulse = make_pulse(shape, g2_t, grid).expect("pulse");
            let (t, _) = pulse_transmission(&p, &pulse, true);
            worst_t = worst_t.max((t - 1.0).abs());
        }
    }
    report(
        4,
        "spectrally flat window",
        worst_r < 1e-12 && worst_t < 1e-6,
        &format!("max |reflect| = {worst_r:.2e}, max |T-1| = {worst_t:.2e}"),
        t0,
    );
}

/// EXPECTED RED. The criterion asserts the paper's reported optimum
/// (g²T = 0.91 ± 0.03, P_dd = 0.593 ± 0.01) for the photon sorter.
/// Three independent computations (the closed-form channels, this crate's
/// amplitude-equation integrator, and a strictly unitary collision-model
/// prototype) all agree that the paper's own equations place the optimum at
/// g²T ≈ 2.88 with P_dd ≈ 0.585: the reported location matches only after
/// rescaling every rate by π (0.91·π ≈ 2.86), i.e. the paper's numerical
/// section used a rate convention differing from its printed equations by a
/// factor π. The maximum VALUE 0.585 does satisfy 0.593 ± 0.01; the location
/// inside [0.5, 1.5] cannot. Implemented faithfully and left red.
#[test]
fn criterion_05_sorter_optimum() {
    let t0 = Instant::now();
    let eval = |g2_t: f64| -> f64 {
        let p = SystemParams::markov(1.0, 0.0, 1.0, 0.0, 1.5 * PI);
        two_photon_report(&p, g2_t, 2048, Geometry::Standing)
            .expect("report")
            .probability(ChannelTag::Dd)
            .expect("dd")
    };
    let axes =
        vec![Axis { name: "g2T".into(), lo: 0.5, hi: 1.5, scan_points: 11 }];
    let spec_range = maximize(&axes, &|x: &[f64]| eval(x[0]), 1e-4, 40);
    // diagnostic: the optimum of the paper's equations over a wide bracket
    let wide_axes =
        vec![Axis { name: "g2T".into(), lo: 0.5, hi: 4.0, scan_points: 15 }];
    let wide = maximize(&wide_axes, &|x: &[f64]| eval(x[0]), 1e-4, 40);
    let loc_ok = (spec_range.x[0] - 0.91).abs() <= 0.03;
    let val_ok = (spec_range.value - 0.593).abs() <= 0.01;
    let detail = format!(
        "max over [0.5,1.5]: P_dd = {:.4} at g2T = {:.3} (spec wants 0.593±0.01 at 0.91±0.03); \
         wide-bracket optimum: P_dd = {:.4} at g2T = {:.3} (= 0.91·π within 1%), \
         |P_dd - 0.593| = {:.4} at the true optimum — see the decisions ledger",
        spec_range.value,
        spec_range.x[0],
        wide.value,
        wide.x[0],
        (wide.value - 0.593).abs()
    );
    report(5, "sorter optimum", loc_ok && val_ok, &detail, t0);
}

#[test]
fn criterion_06_counterpropagating_pass_through() {
    let t0 = Instant::now();
    let p = SystemParams::markov(1.0, 0.0, 1.0, 0.0, 1.5 * PI);
    let rep = two_photon_report(&p, 1.0, 2048, Geometry::Counterpropagating).expect("report");
    let p_opp = rep.probability(ChannelTag::Ab).unwrap();
    let pulse = square_pulse(1.0, 1.0, 2048);
    let ent_minus = nonlinear_part(&p, &pulse, NonlinearPart::EntAbMinus).expect("part");
    let ent_norm = ent_minus.norm2().sqrt();
    report(
        6,
        "counterpropagating pass-through",
        (p_opp - 1.0).abs() < 5e-4 && ent_norm > 0.01,
        &format!("P(opposite) = {p_opp:.6}, ||f-_ent,ab|| = {ent_norm:.3}"),
        t0,
    );
}

#[test]
fn criterion_07_term_cancellations() {
    let t0 = Instant::now();
    // Gamma+ = Gamma- at phi = 3pi/2 with Delta = g2, delta = beta = 0
    let p = SystemParams::markov(1.0, 0.0, 1.0, 0.0, 1.5 * PI);
    let pulse = square_pulse(1.0, 1.0, 512);
    let mut worst = 0.0_f64;
    for part in [
        NonlinearPart::EAaMinus,
        NonlinearPart::G2AaMinus,
        NonlinearPart::G2Ab,
        NonlinearPart::EntAbPlus,
    ] {
        let w = nonlinear_part(&p, &pulse, part).expect("part");
        worst = worst.max(w.max_abs(false));
    }
    report(
        7,
        "equal-rate term cancellations",
        worst < 1e-12,
        &format!("max |part| over the full grid = {worst:.2e}"),
        t0,
    );
}

#[test]
fn criterion_08_conservation() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(108);
    let mut worst = 0.0_f64;
    let mut worst_cfg = String::new();
    for i in 0..51 {
        let g2 = 1.0;
        let g2_t = rng.gen_range(0.1_f64.ln()..10.0_f64.ln()).exp();
        let p = SystemParams::markov(
            g2,
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(-2.0..2.0),
            rng.gen_range(0.0..2.0 * PI),
        );
        let geometry = [Geometry::Standing, Geometry::Copropagating, Geometry::Counterpropagating]
            [i % 3];
        let rep = two_photon_report(&p, g2_t, 2048, geometry).expect("report");
        if rep.conservation_residual > worst {
            worst = rep.conservation_residual;
            worst_cfg = format!(
                "{geometry:?} g2T={g2_t:.3} phi={:.3} delta={:.2} Delta={:.2} beta={:.2}",
                p.phi, p.delta, p.exchange, p.beta
            );
        }
    }
    report(
        8,
        "probability conservation",
        worst < 5e-4,
        &format!("worst |sum P - 1| = {worst:.2e} ({worst_cfg})"),
        t0,
    );
}

#[test]
fn criterion_09_oracle_equivalence() {
    let t0 = Instant::now();
    // 512 bins at dt*g2 = 1e-3: T = 0.2/g2 on a 0.512/g2 window
    let dur = 0.2;
    let build = |n: usize| -> PulseEnvelope {
        let grid = TimeGrid::for_pulse_with(dur, 0.1 * dur, 1.36 * dur, n).expect("grid");
        make_pulse(PulseShape::Square, dur, grid).expect("pulse")
    };
    let mut worst = 0.0_f64;
    let mut ratios = Vec::new();
    for (geometry, delta, exchange, beta, phi) in [
        (Geometry::Standing, 0.3, 0.2, 0.1, 0.5 * PI),
        (Geometry::Copropagating, 0.2, 0.5, 0.1, 2.0),
        (Geometry::Counterpropagating, 0.3, 0.5, -0.2, 1.9),
    ] {
        let p = SystemParams::markov(1.0, delta, exchange, beta, phi);
        let mut errs = Vec::new();
        for n in [512usize, 1024] {
            let pulse = build(n);
            assert!(pulse.grid().dt() <= 1.001e-3, "dt = {}", pulse.grid().dt());
            let st = oracle::evolve(&p, &pulse, geometry).expect("oracle");
            let mut err = 0.0_f64;
            for ch in scattering_channels(&p, &pulse, geometry).expect("channels") {
                let closed = ch.materialize();
                let ora = st.channel_amplitude(&pulse, ch.channel()).expect("amp");
                err = err.max(rel_l2_offdiag(pulse.grid(), &ora, &closed));
            }
            if geometry == Geometry::Standing && n == 512 {
                // |psi_e| against the kernel relation (the appendix form with
                // the integrator-calibrated magnitude prefactor)
                let k = excitation_kernels(&p, &pulse).expect("kernels");
                let pref = 4.0 * 2.0_f64.sqrt() * p.g2 * (0.5 * p.phi).cos().powi(2);
                let mut psi_err = 0.0_f64;
                let mut peak = 0.0_f64;
                for i in 0..pulse.grid().n() {
                    let expect = pref * k.e_plus[i].norm();
                    psi_err = psi_err.max((st.psi_e[i].norm() - expect).abs());
                    peak = peak.max(expect);
                }
                worst = worst.max(psi_err / peak);
            }
            errs.push(err);
        }
        worst = worst.max(errs[0]);
        ratios.push(errs[0] / errs[1]);
    }
    let ratios_ok = ratios.iter().all(|&r| r > 3.0 && r < 5.0);
    report(
        9,
        "oracle equivalence",
        worst < 1e-3 && ratios_ok,
        &format!(
            "worst rel L2 (incl |psi_e|) = {worst:.2e}; dt-halving ratios = {:?}",
            ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>()
        ),
        t0,
    );
}

#[test]
fn criterion_10_figure_map_anchors() {
    let t0 = Instant::now();
    let phis = linspace(0.0, 2.0 * PI, 100);
    let g2_ts = logspace(0.1, 20.0, 100);
    let mut pass = true;
    let mut notes = Vec::new();

    // panel (b): deltaT = 10 — the ridge tan(phi) = -delta/g2 carries T(0) = 1
    let map_b = transmission_map(10.0, 0.0, &phis, &g2_ts);
    for target in [0.5, 1.0] {
        let gi = g2_ts
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - target).abs().partial_cmp(&(b.1 - target).abs()).unwrap())
            .unwrap()
            .0;
        let g2t = g2_ts[gi];
        let delta = 10.0 / g2t;
        let ridge = (-(delta / g2t).atan()).rem_euclid(2.0 * PI);
        // exact monochromatic statement at the ridge
        let p = SystemParams::markov(g2t, delta, 0.0, 0.0, ridge);
        let t_zero = intensity_transmission(&p, 0.0);
        // map row: maximum within one grid spacing of the ridge and within 0.02 of 1
        let row: Vec<&biatom::sweep::MapPoint> =
            map_b.iter().filter(|pt| (pt.g2_t - g2t).abs() < 1e-12).collect();
        let best = row
            .iter()
            .max_by(|a, b| a.transmission.partial_cmp(&b.transmission).unwrap())
            .unwrap();
        let dphi = 2.0 * PI / 99.0;
        let ok = (t_zero - 1.0).abs() < 1e-9
            && (best.phi - ridge).abs() < 1.5 * dphi
            && (best.transmission - 1.0).abs() <= 0.02;
        notes.push(format!(
            "b@g2T={g2t:.2}: T(0)={t_zero:.6}, map max {:.4} at phi={:.3} (ridge {ridge:.3})",
            best.transmission, best.phi
        ));
        pass &= ok;
    }

    // panel (c): DeltaT = 10, anchor (g2T = 10 -> Delta = g2, phi = 3pi/2)
    let pc = transmission_map(0.0, 10.0, &[1.5 * PI], &[10.0]);
    notes.push(format!("c@(3pi/2,10): T = {:.4}", pc[0].transmission));
    pass &= (pc[0].transmission - 1.0).abs() <= 0.02;

    // panel (d): deltaT = DeltaT = 10, high reflection around phi = 0
    let pd = transmission_map(10.0, 10.0, &[0.0], &[20.0]);
    notes.push(format!("d@(0,20): T = {:.4}", pd[0].transmission));
    pass &= pd[0].transmission < 0.05;

    report(10, "figure-map anchors", pass, &notes.join("; "), t0);
}
