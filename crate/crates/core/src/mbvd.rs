//! Modified Butterworth-Van Dyke resonator model for mmWave acoustic
//! resonators: a motional branch (Rm, Lm, Cm) in parallel with the static
//! capacitance C0, all behind series routing parasitics (Rs, Ls), plus
//! extraction of the resonator metrics (fs, fp, k², Q, FOM and the routing
//! EM resonance).

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sweep::{validate_grid, YSweep};

const PI2_OVER_8: f64 = PI * PI / 8.0;

/// Element values of one resonator's modified MBVD circuit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MbvdParams {
    /// Static capacitance, farads.
    pub c0: f64,
    /// Motional resistance, ohms.
    pub rm: f64,
    /// Motional inductance, henries.
    pub lm: f64,
    /// Motional capacitance, farads.
    pub cm: f64,
    /// Series routing resistance, ohms.
    pub rs: f64,
    /// Series routing inductance, henries.
    pub ls: f64,
}

impl MbvdParams {
    pub fn validate(&self) -> Result<()> {
        let pos = [("c0", self.c0), ("cm", self.cm), ("lm", self.lm)];
        for (name, v) in pos {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Input(format!("{name} must be finite and > 0, got {v}")));
            }
        }
        let nonneg = [("rm", self.rm), ("rs", self.rs), ("ls", self.ls)];
        for (name, v) in nonneg {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::Input(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    /// Series resonance of the bare motional branch, 1/(2π·√(Lm·Cm)).
    pub fn fs_core(&self) -> f64 {
        1.0 / (TAU * (self.lm * self.cm).sqrt())
    }

    /// Antiresonance of the core model, fs·√(1 + Cm/C0).
    pub fn fp_core(&self) -> f64 {
        self.fs_core() * (1.0 + self.cm / self.c0).sqrt()
    }
}

/// Design-level resonator description: target resonance, coupling, quality
/// factor and static capacitance, plus routing parasitics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorSpec {
    /// Series resonance, Hz.
    pub fs: f64,
    /// Electromechanical coupling, fraction in (0, 1).
    pub k2: f64,
    /// Motional quality factor. `f64::INFINITY` yields a lossless branch.
    pub q: f64,
    /// Static capacitance, farads.
    pub c0: f64,
    /// Series routing resistance, ohms.
    pub rs: f64,
    /// Series routing inductance, henries.
    pub ls: f64,
}

impl ResonatorSpec {
    pub fn new(fs: f64, k2: f64, q: f64, c0: f64) -> Result<Self> {
        let spec = Self {
            fs,
            k2,
            q,
            c0,
            rs: 0.0,
            ls: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_parasitics(mut self, rs: f64, ls: f64) -> Result<Self> {
        self.rs = rs;
        self.ls = ls;
        self.validate()?;
        Ok(self)
    }

    pub fn with_c0(mut self, c0: f64) -> Self {
        self.c0 = c0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !self.fs.is_finite() || self.fs <= 0.0 {
            return Err(Error::Input(format!("fs must be finite and > 0, got {}", self.fs)));
        }
        if !self.k2.is_finite() || self.k2 <= 0.0 || self.k2 >= 1.0 {
            return Err(Error::Input(format!("k2 must lie in (0, 1), got {}", self.k2)));
        }
        if self.q.is_nan() || self.q <= 0.0 {
            return Err(Error::Input(format!("q must be > 0, got {}", self.q)));
        }
        if !self.c0.is_finite() || self.c0 <= 0.0 {
            return Err(Error::Input(format!("c0 must be finite and > 0, got {}", self.c0)));
        }
        if !self.rs.is_finite() || self.rs < 0.0 || !self.ls.is_finite() || self.ls < 0.0 {
            return Err(Error::Input("rs and ls must be finite and >= 0".into()));
        }
        Ok(())
    }
}

/// Key resonator specifications derived from the element values, the same
/// way a table of extracted MBVD parameters reports them. The raw |Y|
/// extrema of a low-Q resonator sit visibly off these frequencies (several
/// percent at Q ~ 5-13); use [`resonance_extrema`] for the perceived pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResonatorMetrics {
    /// Series resonance of the motional branch, 1/(2π·√(Lm·Cm)), Hz.
    pub fs: f64,
    /// Antiresonance of the core model, fs·√(1 + Cm/C0), Hz.
    pub fp: f64,
    /// Coupling from the resonance pair; equals π²/8 · Cm/C0.
    pub k2: f64,
    /// Motional quality factor, ω_s·Lm/Rm. Infinite when Rm = 0.
    pub q: f64,
    /// Figure of merit, k²·Q.
    pub fom: f64,
    /// First-order routing LC resonance estimate, absent when Ls = 0.
    pub f_em: Option<f64>,
}

/// Electromechanical coupling from the resonance pair:
/// k² = π²/8 · (fp²/fs² − 1).
pub fn k2_from_freqs(fs: f64, fp: f64) -> Result<f64> {
    if !fs.is_finite() || fs <= 0.0 {
        return Err(Error::Domain(format!("fs must be > 0, got {fs}")));
    }
    if !fp.is_finite() || fp < fs {
        return Err(Error::Domain(format!("fp must satisfy fp >= fs, got fs={fs}, fp={fp}")));
    }
    let r = fp / fs;
    Ok(PI2_OVER_8 * (r * r - 1.0))
}

/// Builds MBVD element values realizing a [`ResonatorSpec`]:
/// Cm = C0·8k²/π², Lm = 1/(ω_s²·Cm), Rm = ω_s·Lm/Q. The core model
/// (rs = ls = 0) then has its |Y| extrema exactly at fs and fs·√(1 + Cm/C0).
pub fn mbvd_from_spec(spec: &ResonatorSpec) -> Result<MbvdParams> {
    spec.validate()?;
    let ws = TAU * spec.fs;
    let cm = spec.c0 * (8.0 * spec.k2 / (PI * PI));
    let lm = 1.0 / (ws * ws * cm);
    let rm = if spec.q.is_infinite() { 0.0 } else { ws * lm / spec.q };
    let params = MbvdParams {
        c0: spec.c0,
        rm,
        lm,
        cm,
        rs: spec.rs,
        ls: spec.ls,
    };
    params.validate()?;
    Ok(params)
}

/// One-port admittance of the full model at frequency `f`:
/// `Y = 1 / (rs + jωls + 1/(jωc0 + 1/(rm + jωlm + 1/(jωcm))))`,
/// evaluated without the outer inversion when rs = ls = 0.
///
/// Exact lossless resonance hits (infinite |Y|) are reported as a
/// singular-point error rather than a non-finite value.
pub fn admittance(p: &MbvdParams, f: f64) -> Result<Complex64> {
    if !f.is_finite() || f <= 0.0 {
        return Err(Error::Domain(format!("frequency must be > 0, got {f}")));
    }
    let w = TAU * f;
    let zm = Complex64::new(p.rm, w * p.lm - 1.0 / (w * p.cm));
    let zp = Complex64::new(p.rs, w * p.ls);

    if zm == Complex64::ZERO {
        // Lossless motional short: everything behind it is the parasitic branch.
        if zp == Complex64::ZERO {
            return Err(Error::Singular(format!(
                "lossless resonance: |Y| is unbounded at {f} Hz"
            )));
        }
        return Ok(zp.inv());
    }
    let y_core = Complex64::new(0.0, w * p.c0) + zm.inv();
    if p.rs == 0.0 && p.ls == 0.0 {
        return Ok(y_core);
    }
    if y_core == Complex64::ZERO {
        return Ok(Complex64::ZERO);
    }
    let z_total = zp + y_core.inv();
    if z_total == Complex64::ZERO {
        return Err(Error::Singular(format!(
            "lossless resonance: |Y| is unbounded at {f} Hz"
        )));
    }
    Ok(z_total.inv())
}

/// Evaluates the model admittance over a grid.
pub fn admittance_sweep(p: &MbvdParams, grid: &[f64]) -> Result<YSweep> {
    let data = grid.iter().map(|&f| admittance(p, f)).collect::<Result<Vec<_>>>()?;
    YSweep::new(grid.to_vec(), data)
}

/// |Y| for extremum scans; exact lossless hits count as +inf.
fn mag_for_scan(p: &MbvdParams, f: f64) -> Result<f64> {
    match admittance(p, f) {
        Ok(y) => Ok(y.norm()),
        Err(Error::Singular(_)) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Perceived resonance pair of the full model on a frequency grid:
/// the antiresonance is the deepest interior local minimum of |Y|, and the
/// series resonance is the strongest interior local maximum below it. Both
/// are refined by 3-point quadratic interpolation of log|Y|.
///
/// Pairing min-first keeps the detector on the acoustic resonances even when
/// a stronger routing (EM) resonance peak sits inside the sweep.
pub fn resonance_extrema(p: &MbvdParams, grid: &[f64]) -> Result<(f64, f64)> {
    validate_grid(grid)?;
    let mags = grid
        .iter()
        .map(|&f| mag_for_scan(p, f))
        .collect::<Result<Vec<_>>>()?;
    paired_extrema(grid, &mags)
}

/// Shared detector used for both model and measured sweeps.
pub(crate) fn paired_extrema(freqs: &[f64], mags: &[f64]) -> Result<(f64, f64)> {
    let n = freqs.len();
    if n < 3 {
        return Err(Error::Extremum("grid needs at least 3 points".into()));
    }
    let mut fp_idx: Option<usize> = None;
    for i in 1..n - 1 {
        if mags[i] <= mags[i - 1] && mags[i] <= mags[i + 1] {
            if fp_idx.map_or(true, |j| mags[i] < mags[j]) {
                fp_idx = Some(i);
            }
        }
    }
    let fp_idx = fp_idx.ok_or_else(|| {
        Error::Extremum("no interior |Y| minimum: the grid does not contain the antiresonance".into())
    })?;
    let mut fs_idx: Option<usize> = None;
    for i in 1..fp_idx {
        if mags[i] >= mags[i - 1] && mags[i] >= mags[i + 1] {
            if fs_idx.map_or(true, |j| mags[i] > mags[j]) {
                fs_idx = Some(i);
            }
        }
    }
    let fs_idx = fs_idx.ok_or_else(|| {
        Error::Extremum(
            "no interior |Y| maximum below the antiresonance: the grid does not contain fs".into(),
        )
    })?;
    let logm: Vec<f64> = mags.iter().map(|&m| m.max(1e-300).ln()).collect();
    Ok((
        refine_quadratic(freqs, &logm, fs_idx),
        refine_quadratic(freqs, &logm, fp_idx),
    ))
}

/// Vertex of the parabola through the three samples around index `i`.
/// Falls back to the grid point for flat or non-finite neighborhoods.
pub(crate) fn refine_quadratic(x: &[f64], y: &[f64], i: usize) -> f64 {
    let (x1, x2, x3) = (x[i - 1], x[i], x[i + 1]);
    let (y1, y2, y3) = (y[i - 1], y[i], y[i + 1]);
    if !y1.is_finite() || !y2.is_finite() || !y3.is_finite() {
        return x2;
    }
    let d21 = x2 - x1;
    let d23 = x2 - x3;
    let num = d21 * d21 * (y2 - y3) - d23 * d23 * (y2 - y1);
    let den = d21 * (y2 - y3) - d23 * (y2 - y1);
    if den == 0.0 {
        return x2;
    }
    let xv = x2 - 0.5 * num / den;
    if xv.is_finite() && xv > x1 && xv < x3 {
        xv
    } else {
        x2
    }
}

/// First-order estimate of the routing LC resonance, 1/(2π·√(Ls·C0)).
/// Absent when the model carries no routing inductance.
pub fn em_resonance_freq(p: &MbvdParams) -> Option<f64> {
    if p.ls > 0.0 {
        Some(1.0 / (TAU * (p.ls * p.c0).sqrt()))
    } else {
        None
    }
}

/// Extracts the key resonator metrics from the element values: the model's
/// own resonance pair, the coupling from that pair, and the motional quality
/// factor ω_s·Lm/Rm (infinite for a lossless branch). This matches how
/// fitted MBVD tables report fs/k²/Q and round-trips [`mbvd_from_spec`]
/// exactly; the perceived |Y| extrema carry a Q-dependent bias and are
/// available separately through [`resonance_extrema`].
pub fn resonator_metrics(p: &MbvdParams) -> Result<ResonatorMetrics> {
    p.validate()?;
    let fs = p.fs_core();
    let fp = p.fp_core();
    let k2 = k2_from_freqs(fs, fp)?;
    let q = if p.rm == 0.0 {
        f64::INFINITY
    } else {
        TAU * fs * p.lm / p.rm
    };
    Ok(ResonatorMetrics {
        fs,
        fp,
        k2,
        q,
        fom: k2 * q,
        f_em: em_resonance_freq(p),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sweep::linspace;
    use approx::assert_relative_eq;

    fn paper_series_spec() -> ResonatorSpec {
        ResonatorSpec::new(38.0e9, 0.41, 10.0, 50.0e-15).unwrap()
    }

    #[test]
    fn k2_of_degenerate_pair_is_zero() {
        assert_eq!(k2_from_freqs(38.0e9, 38.0e9).unwrap(), 0.0);
    }

    #[test]
    fn k2_matches_paper_shunt_resonator() {
        // fs = 33 GHz with k2 = 45% corresponds to fp ~ 38.55 GHz.
        let k2 = k2_from_freqs(33.0e9, 38.55e9).unwrap();
        assert_relative_eq!(k2, 0.450, epsilon = 5e-4);
    }

    #[test]
    fn k2_round_trips_through_closed_form() {
        let k2 = 0.41;
        let fp = 38.0e9 * (1.0 + 8.0 * k2 / (PI * PI)).sqrt();
        assert_relative_eq!(fp, 43.86e9, max_relative = 1e-3);
        assert_relative_eq!(k2_from_freqs(38.0e9, fp).unwrap(), k2, epsilon = 1e-12);
    }

    #[test]
    fn k2_rejects_bad_domains() {
        assert!(k2_from_freqs(-1.0, 1.0).is_err());
        assert!(k2_from_freqs(0.0, 1.0).is_err());
        assert!(k2_from_freqs(2.0e9, 1.0e9).is_err());
    }

    #[test]
    fn spec_to_params_closed_forms() {
        let p = mbvd_from_spec(&paper_series_spec()).unwrap();
        assert_relative_eq!(p.cm, 16.62e-15, max_relative = 1e-3);
        assert_relative_eq!(p.lm, 1.055e-9, max_relative = 1e-3);
        assert_relative_eq!(p.rm, 25.2, max_relative = 1e-2);
        assert_relative_eq!(p.fs_core(), 38.0e9, max_relative = 1e-12);
        assert_relative_eq!(p.fp_core(), 38.0e9 * (1.0 + p.cm / p.c0).sqrt(), epsilon = 1.0);
    }

    #[test]
    fn vanishing_coupling_removes_motional_branch() {
        let spec = ResonatorSpec::new(38.0e9, 1e-9, 10.0, 50.0e-15).unwrap();
        let p = mbvd_from_spec(&spec).unwrap();
        assert!(p.cm < 1e-22);
        let lossless = ResonatorSpec::new(38.0e9, 0.41, f64::INFINITY, 50.0e-15).unwrap();
        assert_eq!(mbvd_from_spec(&lossless).unwrap().rm, 0.0);
    }

    #[test]
    fn admittance_at_series_resonance_is_resistive_plus_static() {
        // At fs the motional branch reactance cancels exactly, so
        // Y = 1/rm + j*ws*c0 by direct complex arithmetic.
        let p = mbvd_from_spec(&paper_series_spec()).unwrap();
        let ws = TAU * 38.0e9;
        let y = admittance(&p, 38.0e9).unwrap();
        assert_relative_eq!(y.re, 1.0 / p.rm, max_relative = 1e-12);
        assert_relative_eq!(y.im, ws * p.c0, max_relative = 1e-12);
        // Matches the quoted values.
        assert_relative_eq!(y.re, 0.03968, max_relative = 1e-3);
        assert_relative_eq!(y.im, 0.01194, max_relative = 1e-3);
    }

    #[test]
    fn admittance_low_frequency_limit() {
        let p = mbvd_from_spec(&paper_series_spec()).unwrap();
        let y = admittance(&p, 1.0e9).unwrap();
        let expected = TAU * 1.0e9 * (p.c0 + p.cm);
        assert_relative_eq!(y.im, expected, max_relative = 1e-2);
        assert_relative_eq!(y.im, 4.19e-4, max_relative = 1e-2);
        assert!(y.re.abs() < 1e-5);
    }

    #[test]
    fn open_motional_branch_leaves_static_capacitor() {
        let mut p = mbvd_from_spec(&paper_series_spec()).unwrap();
        p.rm = 1e12;
        let f = 20.0e9;
        let y = admittance(&p, f).unwrap();
        assert_relative_eq!(y.im, TAU * f * p.c0, max_relative = 1e-3);
    }

    #[test]
    fn admittance_rejects_nonpositive_frequency() {
        let p = mbvd_from_spec(&paper_series_spec()).unwrap();
        assert!(admittance(&p, 0.0).is_err());
        assert!(admittance(&p, -1.0e9).is_err());
    }

    #[test]
    fn extrema_recover_high_q_core_resonances() {
        // For high Q the perceived |Y| extrema converge onto the element
        // resonances; the quadratic refinement must hold 0.05% there.
        let spec = ResonatorSpec::new(38.0e9, 0.41, 500.0, 50.0e-15).unwrap();
        let p = mbvd_from_spec(&spec).unwrap();
        let grid = linspace(30.0e9, 50.0e9, 8001).unwrap();
        let (fs, fp) = resonance_extrema(&p, &grid).unwrap();
        assert_relative_eq!(fs, 38.0e9, max_relative = 5e-4);
        assert_relative_eq!(fp, p.fp_core(), max_relative = 5e-4);
    }

    #[test]
    fn low_q_perceived_extrema_sit_below_element_resonances() {
        // At Q = 10 the |Y| maximum of the parallel model is pulled a couple
        // of percent below fs; the extractor must report the perceived value.
        let p = mbvd_from_spec(&paper_series_spec()).unwrap();
        let grid = linspace(30.0e9, 50.0e9, 8001).unwrap();
        let (fs, fp) = resonance_extrema(&p, &grid).unwrap();
        assert!(fs < 38.0e9 && fs > 0.97 * 38.0e9, "perceived fs {fs}");
        assert!(fp > p.fp_core() && fp < 1.03 * p.fp_core(), "perceived fp {fp}");
    }

    #[test]
    fn routing_inductance_lowers_perceived_fs() {
        let spec = paper_series_spec();
        let core = mbvd_from_spec(&spec).unwrap();
        // ls such that the routing resonance sits around 50 GHz.
        let ls = 1.0 / ((TAU * 50.0e9).powi(2) * spec.c0);
        let modified = mbvd_from_spec(&spec.with_parasitics(0.5, ls).unwrap()).unwrap();
        let grid = linspace(30.0e9, 46.0e9, 8001).unwrap();
        let (fs_core, _) = resonance_extrema(&core, &grid).unwrap();
        let (fs_mod, _) = resonance_extrema(&modified, &grid).unwrap();
        assert!(
            fs_mod < fs_core,
            "perceived fs did not drop: {fs_mod} vs {fs_core}"
        );
    }

    #[test]
    fn lossless_peak_survives_extremum_scan() {
        let spec = ResonatorSpec::new(38.0e9, 0.41, f64::INFINITY, 50.0e-15).unwrap();
        let p = mbvd_from_spec(&spec).unwrap();
        let grid = linspace(30.0e9, 50.0e9, 2001).unwrap();
        let (fs, fp) = resonance_extrema(&p, &grid).unwrap();
        assert_relative_eq!(fs, 38.0e9, max_relative = 1e-2);
        assert!(fp > fs);
    }

    #[test]
    fn extrema_error_when_grid_misses_antiresonance() {
        let p = mbvd_from_spec(&paper_series_spec()).unwrap();
        // Grid stops below fp: |Y| min is at the boundary.
        let grid = linspace(30.0e9, 40.0e9, 2001).unwrap();
        assert!(matches!(
            resonance_extrema(&p, &grid),
            Err(Error::Extremum(_))
        ));
    }

    #[test]
    fn em_resonance_closed_form() {
        let mut p = mbvd_from_spec(&paper_series_spec()).unwrap();
        p.ls = 0.0;
        assert_eq!(em_resonance_freq(&p), None);

        p.c0 = 66.6e-15;
        p.ls = 0.152e-9;
        let f_em = em_resonance_freq(&p).unwrap();
        assert_relative_eq!(f_em, 50.0e9, max_relative = 1e-2);

        p.ls *= 2.0;
        let f_em2 = em_resonance_freq(&p).unwrap();
        assert_relative_eq!(f_em2 * 2.0_f64.sqrt(), f_em, max_relative = 1e-12);
    }

    #[test]
    fn metrics_round_trip_paper_anchors() {
        for (fs, k2, q) in [(33.0e9, 0.30, 13.0), (38.0e9, 0.25, 10.0)] {
            let spec = ResonatorSpec::new(fs, k2, q, 80.0e-15).unwrap();
            let p = mbvd_from_spec(&spec).unwrap();
            let m = resonator_metrics(&p).unwrap();
            assert_relative_eq!(m.fs, fs, max_relative = 1e-12);
            assert_relative_eq!(m.k2, k2, max_relative = 1e-12);
            assert_relative_eq!(m.q, q, max_relative = 1e-12);
            assert_relative_eq!(m.fom, k2 * q, max_relative = 1e-12);
        }
        // FOM for the shunt anchor.
        let spec = ResonatorSpec::new(33.0e9, 0.30, 13.0, 80.0e-15).unwrap();
        let m = resonator_metrics(&mbvd_from_spec(&spec).unwrap()).unwrap();
        assert_relative_eq!(m.fom, 3.9, max_relative = 1e-9);
    }

    #[test]
    fn lossless_branch_reports_infinite_q() {
        let spec = ResonatorSpec::new(33.0e9, 0.30, f64::INFINITY, 80.0e-15).unwrap();
        let m = resonator_metrics(&mbvd_from_spec(&spec).unwrap()).unwrap();
        assert!(m.q.is_infinite() && m.fom.is_infinite());
        assert!(m.fp > m.fs);
    }

    #[test]
    fn fp_ratio_increases_with_k2() {
        let mut prev = 1.0;
        for k2 in [0.05, 0.1, 0.2, 0.3, 0.4, 0.5] {
            let spec = ResonatorSpec::new(38.0e9, k2, 10.0, 80.0e-15).unwrap();
            let p = mbvd_from_spec(&spec).unwrap();
            let ratio = p.fp_core() / p.fs_core();
            assert!(ratio > prev, "ratio not increasing at k2={k2}");
            prev = ratio;
        }
    }
}
