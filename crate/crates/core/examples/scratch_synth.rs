// Scratch exploration of the paper-anchored synthesis (not shipped).
use resokit::*;

fn main() {
    let shunt = ResonatorSpec::new(33.0e9, 0.30, 13.0, 80.0e-15).unwrap();
    let series = ResonatorSpec::new(38.0e9, 0.25, 10.0, 80.0e-15).unwrap();
    let p50 = PortImpedance::real(50.0).unwrap();
    let template = LadderDesign::new(
        vec![
            Stage { placement: Placement::Shunt, resonator: Resonator::Spec(shunt) },
            Stage { placement: Placement::Series, resonator: Resonator::Spec(series) },
            Stage { placement: Placement::Shunt, resonator: Resonator::Spec(shunt) },
        ],
        [p50, p50],
    )
    .unwrap();
    let band = (36.0e9, 41.0e9);

    for floor in [12.0, 13.0, 14.0, 15.0] {
        let mut o = SynthesisOptions::default();
        o.min_rejection_db = floor;
        let r = optimize_static_caps(&template, band, p50, &o).unwrap();
        let grid = linspace(30.0e9, 48.0e9, 2401).unwrap();
        let sweep = simulate(&r.design, &grid).unwrap();
        let m = extract_metrics(&sweep, 0.25).unwrap();
        let pts: Vec<(f64, f64)> = sweep.valid().map(|(f, s)| (f, s.s21_db())).collect();
        let lmin = |lo: f64, hi: f64| -> Option<(f64, f64)> {
            (1..pts.len()-1).filter(|&i| pts[i].0 > lo && pts[i].0 < hi && pts[i-1].1 >= pts[i].1 && pts[i+1].1 >= pts[i].1)
                .map(|i| pts[i]).min_by(|a, b| a.1.total_cmp(&b.1))
        };
        println!("floor {:.0}: c0=({:.1},{:.1})fF obj={:.3} | fc={:.2}G il={:.2} fbw={:.1}% rej={:.1} | lower {:?} upper {:?}",
            floor, r.c0_shunt*1e15, r.c0_series*1e15, r.objective_db,
            m.f_center/1e9, m.il_db, m.fbw_3db, m.oob_rejection_db,
            lmin(30.0e9, m.band_lo).map(|(f,d)|(f/1e9,d)), lmin(m.band_hi, 48.0e9).map(|(f,d)|(f/1e9,d)));
    }
    let t0 = std::time::Instant::now();
    let r = optimize_static_caps(&template, band, p50, &SynthesisOptions::default()).unwrap();
    println!(
        "synth: c0_shunt={:.2} fF c0_series={:.2} fF obj={:.4} dB ({:?})",
        r.c0_shunt * 1e15,
        r.c0_series * 1e15,
        r.objective_db,
        t0.elapsed()
    );

    // Exhaustive 100x100 grid oracle on the same objective.
    let t0 = std::time::Instant::now();
    let n = 100;
    let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            let c0_sh = 1e-15 * 10f64.powf(3.0 * i as f64 / (n - 1) as f64);
            let c0_se = 1e-15 * 10f64.powf(3.0 * j as f64 / (n - 1) as f64);
            let d = resokit::ladder::apply_static_caps(&template, c0_sh, c0_se).unwrap();
            let obj = synthesis_objective(&d, band, &SynthesisOptions::default()).unwrap();
            if obj > best.0 {
                best = (obj, c0_sh, c0_se);
            }
        }
    }
    println!(
        "oracle: c0_shunt={:.2} fF c0_series={:.2} fF obj={:.4} dB ({:?})",
        best.1 * 1e15,
        best.2 * 1e15,
        best.0,
        t0.elapsed()
    );
    println!(
        "  relative gap = {:.4}% (nm - grid = {:+.4} dB)",
        100.0 * (r.objective_db - best.0).abs() / best.0.abs(),
        r.objective_db - best.0
    );

    // AC-5-style checks on a 30-48 GHz grid.
    let grid = linspace(30.0e9, 48.0e9, 2401).unwrap();
    let sweep = simulate(&r.design, &grid).unwrap();
    let m = extract_metrics(&sweep, 0.25).unwrap();
    println!(
        "metrics: f_center={:.3} GHz il={:.3} dB fbw={:.2}% rej={:.2} dB band=[{:.3},{:.3}]",
        m.f_center / 1e9, m.il_db, m.fbw_3db, m.oob_rejection_db, m.band_lo / 1e9, m.band_hi / 1e9
    );
    let pts: Vec<(f64, f64)> = sweep.valid().map(|(f, s)| (f, s.s21_db())).collect();
    let local_min = |lohi: (f64, f64)| -> Option<(f64, f64)> {
        pts.iter()
            .enumerate()
            .filter(|(i, (f, _))| {
                *i > 0 && *i + 1 < pts.len() && *f > lohi.0 && *f < lohi.1
                    && pts[*i - 1].1 >= pts[*i].1 && pts[*i + 1].1 >= pts[*i].1
            })
            .map(|(_, &(f, db))| (f, db))
            .min_by(|a, b| a.1.total_cmp(&b.1))
    };
    let fp_series = mbvd_from_spec(&series).unwrap().fp_core();
    println!(
        "  lower notch {:?}  (want 33 GHz)   upper notch {:?}  (want {:.3} GHz)",
        local_min((30.0e9, m.band_lo)).map(|(f, d)| (f / 1e9, d)),
        local_min((m.band_hi, 48.0e9)).map(|(f, d)| (f / 1e9, d)),
        fp_series / 1e9
    );

    for (f, db) in pts.iter().filter(|(f,_)| *f>40.0e9 && *f<45.0e9).step_by(8) {
        println!("  trace {:.3} GHz {:.3} dB", f/1e9, db);
    }
    // Complex match.
    let abcd = ladder_abcd_sweep(&r.design, &grid).unwrap();
    let t0 = std::time::Instant::now();
    let mr = find_complex_match(&abcd, &MatchSearch::default()).unwrap();
    println!(
        "match: z = {:.2} {:+.2}j ohm, peak {:.4} dB, il50 {:.4} dB ({:?})",
        mr.z_source.re(), mr.z_source.im(), mr.peak_s21_db, m.il_db, t0.elapsed()
    );
    if let Some(mm) = mr.matched_metrics {
        println!("  matched il={:.4} dB fbw={:.2}% fc={:.3} GHz", mm.il_db, mm.fbw_3db, mm.f_center / 1e9);
    }

    // Brute-force 1-ohm grid for the match (AC-8 oracle).
    let t0 = std::time::Instant::now();
    let sweep50 = sweep.compact();
    let mut bf = (f64::NEG_INFINITY, 0.0f64, 0.0f64);
    for r_ohm in 5..=200 {
        for x_ohm in -100..=100 {
            let z = PortImpedance::new(r_ohm as f64, x_ohm as f64).unwrap();
            let rn = renormalize_sweep(&sweep50, (p50, p50), (z, z));
            let peak = rn
                .valid()
                .map(|(_, s)| s.s21.norm_sqr())
                .fold(f64::NEG_INFINITY, f64::max);
            if peak > bf.0 {
                bf = (peak, r_ohm as f64, x_ohm as f64);
            }
        }
    }
    println!(
        "brute force: z = {} {:+}j, peak {:.4} dB ({:?})",
        bf.1,
        bf.2,
        10.0 * bf.0.log10(),
        t0.elapsed()
    );
}
// trace dump appended temporarily
