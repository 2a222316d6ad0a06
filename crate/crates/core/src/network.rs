//! Frequency-domain two-port network algebra: ABCD element matrices,
//! cascading, and conversion to scattering parameters under real and
//! complex (power-wave) port references.
//!
//! All networks built from [`series_abcd`]/[`shunt_abcd`]/[`cascade`] are
//! reciprocal, so their ABCD determinant is 1. Complex references use the
//! Kurokawa power-wave convention throughout; with real references the
//! power-wave S-parameters coincide with the usual voltage-wave ones.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::sweep::{SSweep, SimSweep, Sweep};

const ONE: Complex64 = Complex64::new(1.0, 0.0);
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Reference impedance of one port. `Re(z) > 0` is enforced at construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortImpedance(Complex64);

impl PortImpedance {
    pub fn new(re: f64, im: f64) -> Result<Self> {
        if !re.is_finite() || !im.is_finite() || re <= 0.0 {
            return Err(Error::Input(format!(
                "port impedance must be finite with Re(z) > 0 (got {re} + j{im})"
            )));
        }
        Ok(Self(Complex64::new(re, im)))
    }

    pub fn real(r: f64) -> Result<Self> {
        Self::new(r, 0.0)
    }

    pub fn z(&self) -> Complex64 {
        self.0
    }

    pub fn re(&self) -> f64 {
        self.0.re
    }

    pub fn im(&self) -> f64 {
        self.0.im
    }

    pub fn is_real(&self) -> bool {
        self.0.im == 0.0
    }
}

/// Two-port transmission (ABCD) matrix. `b` carries ohms, `c` siemens,
/// `a` and `d` are dimensionless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Abcd2x2 {
    pub a: Complex64,
    pub b: Complex64,
    pub c: Complex64,
    pub d: Complex64,
}

/// Two-port scattering matrix at a single frequency.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SMatrix {
    pub s11: Complex64,
    pub s12: Complex64,
    pub s21: Complex64,
    pub s22: Complex64,
}

impl SMatrix {
    pub fn is_finite(&self) -> bool {
        self.s11.is_finite() && self.s12.is_finite() && self.s21.is_finite() && self.s22.is_finite()
    }

    /// |S21| in dB.
    pub fn s21_db(&self) -> f64 {
        db20(self.s21.norm())
    }
}

/// 20·log10(x), floored to keep the result finite.
pub fn db20(x: f64) -> f64 {
    20.0 * x.max(1e-300).log10()
}

/// Series impedance `z` as a two-port: [[1, z], [0, 1]].
pub fn series_abcd(z: Complex64) -> Result<Abcd2x2> {
    if !z.is_finite() {
        return Err(Error::Input(format!("series impedance is not finite: {z}")));
    }
    Ok(Abcd2x2 {
        a: ONE,
        b: z,
        c: ZERO,
        d: ONE,
    })
}

/// Shunt admittance `y` as a two-port: [[1, 0], [y, 1]].
pub fn shunt_abcd(y: Complex64) -> Result<Abcd2x2> {
    if !y.is_finite() {
        return Err(Error::Input(format!("shunt admittance is not finite: {y}")));
    }
    Ok(Abcd2x2 {
        a: ONE,
        b: ZERO,
        c: y,
        d: ONE,
    })
}

/// Left-to-right cascade; port 1 is the first stage's input.
pub fn cascade(stages: &[Abcd2x2]) -> Result<Abcd2x2> {
    let (first, rest) = stages
        .split_first()
        .ok_or_else(|| Error::Input("cascade of zero stages".into()))?;
    Ok(rest.iter().fold(*first, |acc, m| acc.mul(m)))
}

impl Abcd2x2 {
    pub const IDENTITY: Abcd2x2 = Abcd2x2 {
        a: ONE,
        b: ZERO,
        c: ZERO,
        d: ONE,
    };

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn mul(&self, rhs: &Abcd2x2) -> Abcd2x2 {
        Abcd2x2 {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    /// Voltage-wave S-parameters for a single real reference `z0` at both ports.
    pub fn to_s(&self, z0: f64) -> Result<SMatrix> {
        if !z0.is_finite() || z0 <= 0.0 {
            return Err(Error::Input(format!("reference impedance must be > 0, got {z0}")));
        }
        let den = self.a + self.b / z0 + self.c * z0 + self.d;
        if den == ZERO || !den.is_finite() {
            return Err(Error::Singular(
                "zero denominator in ABCD to S conversion".into(),
            ));
        }
        let s11 = (self.a + self.b / z0 - self.c * z0 - self.d) / den;
        let s22 = (-self.a + self.b / z0 - self.c * z0 + self.d) / den;
        let s21 = 2.0 * ONE / den;
        let s12 = 2.0 * self.det() / den;
        let s = SMatrix { s11, s12, s21, s22 };
        if !s.is_finite() {
            return Err(Error::Singular("non-finite S-parameters".into()));
        }
        Ok(s)
    }

    /// Inverse of [`Abcd2x2::to_s`]; requires `s21 != 0`.
    pub fn from_s(s: &SMatrix, z0: f64) -> Result<Abcd2x2> {
        if !z0.is_finite() || z0 <= 0.0 {
            return Err(Error::Input(format!("reference impedance must be > 0, got {z0}")));
        }
        if s.s21 == ZERO {
            return Err(Error::Singular(
                "S to ABCD conversion needs s21 != 0".into(),
            ));
        }
        let den = 2.0 * s.s21;
        let a = ((ONE + s.s11) * (ONE - s.s22) + s.s12 * s.s21) / den;
        let b = z0 * ((ONE + s.s11) * (ONE + s.s22) - s.s12 * s.s21) / den;
        let c = ((ONE - s.s11) * (ONE - s.s22) - s.s12 * s.s21) / (z0 * den);
        let d = ((ONE - s.s11) * (ONE + s.s22) + s.s12 * s.s21) / den;
        let m = Abcd2x2 { a, b, c, d };
        if ![a, b, c, d].iter().all(|v| v.is_finite()) {
            return Err(Error::Singular("non-finite ABCD elements".into()));
        }
        Ok(m)
    }

    /// Power-wave (Kurokawa) S-parameters for source reference `zs` at port 1
    /// and load reference `zl` at port 2. With real references this equals
    /// [`Abcd2x2::to_s`].
    pub fn to_powerwave_s(&self, zs: PortImpedance, zl: PortImpedance) -> Result<SMatrix> {
        let (zs, zl) = (zs.z(), zl.z());
        let den = self.a * zl + self.b + zs * (self.c * zl + self.d);
        if den == ZERO || !den.is_finite() {
            return Err(Error::Singular(
                "zero denominator in power-wave conversion".into(),
            ));
        }
        let scale = (zs.re * zl.re).sqrt();
        let s21 = 2.0 * scale / den;
        let s12 = s21 * self.det();
        let s11 = reflection(self.a * zl + self.b, self.c * zl + self.d, zs);
        let s22 = reflection(self.d * zs + self.b, self.c * zs + self.a, zl);
        let s = SMatrix { s11, s12, s21, s22 };
        if !s.is_finite() {
            return Err(Error::Singular("non-finite power-wave S-parameters".into()));
        }
        Ok(s)
    }

    /// Recovers the ABCD matrix from power-wave S-parameters at references
    /// `(zs, zl)`. Solves the two-excitation wave system directly; requires
    /// `s21 != 0`.
    pub fn from_powerwave_s(s: &SMatrix, zs: PortImpedance, zl: PortImpedance) -> Result<Abcd2x2> {
        let (z1, z2) = (zs.z(), zl.z());
        let (u1, u2) = (z1.re.sqrt(), z2.re.sqrt());

        // Port voltages/currents for unit incident wave at port 1 then port 2.
        let v1a = (z1.conj() + z1 * s.s11) / u1;
        let i1a = (ONE - s.s11) / u1;
        let v2a = z2 * s.s21 / u2;
        let iouta = s.s21 / u2;

        let v1b = z1 * s.s12 / u1;
        let i1b = -s.s12 / u1;
        let v2b = (z2.conj() + z2 * s.s22) / u2;
        let ioutb = (s.s22 - ONE) / u2;

        // [V1; I1] = M [V2; Iout] for both excitations => M = Q P^-1.
        let det_p = v2a * ioutb - v2b * iouta; // analytically -2*s21
        if det_p == ZERO || !det_p.is_finite() {
            return Err(Error::Singular(
                "power-wave S to ABCD conversion needs s21 != 0".into(),
            ));
        }
        let m = Abcd2x2 {
            a: (v1a * ioutb - v1b * iouta) / det_p,
            b: (v1b * v2a - v1a * v2b) / det_p,
            c: (i1a * ioutb - i1b * iouta) / det_p,
            d: (i1b * v2a - i1a * v2b) / det_p,
        };
        if ![m.a, m.b, m.c, m.d].iter().all(|v| v.is_finite()) {
            return Err(Error::Singular("non-finite ABCD elements".into()));
        }
        Ok(m)
    }

    /// Input impedance at port 1 with port 2 terminated by `z_load`.
    /// Returns `None` when the input looks into an open circuit.
    pub fn input_impedance(&self, z_load: Complex64) -> Option<Complex64> {
        let den = self.c * z_load + self.d;
        if den == ZERO {
            return None;
        }
        Some((self.a * z_load + self.b) / den)
    }
}

/// Power-wave reflection coefficient of `num/den` against reference `z`:
/// (Z - conj(z)) / (Z + z), with the open-circuit limit handled.
fn reflection(num: Complex64, den: Complex64, z: Complex64) -> Complex64 {
    if den == ZERO {
        return ONE;
    }
    let zin = num / den;
    (zin - z.conj()) / (zin + z)
}

/// Transducer power gain of the two-port driven by a unit-EMF source with
/// internal impedance `zs` into a load `zl`, with the power-wave input
/// reflection coefficient. Solves the terminated circuit directly:
/// `gt = P_delivered / P_available`, `P_available = 1/(8 Re(zs))`.
///
/// For passive networks `0 <= gt <= 1`.
pub fn transducer_gain(m: &Abcd2x2, zs: PortImpedance, zl: PortImpedance) -> Result<(f64, Complex64)> {
    let (zs_c, zl_c) = (zs.z(), zl.z());
    let den_i = m.c * zl_c + m.d; // I1 per unit load current
    let den_v = m.a * zl_c + m.b; // V1 per unit load current

    if den_i == ZERO {
        if den_v == ZERO {
            return Err(Error::Singular("degenerate two-port termination".into()));
        }
        // Open input: no current can flow from the source.
        return Ok((0.0, ONE));
    }
    let zin = den_v / den_i;
    let i1 = ONE / (zs_c + zin);
    if !i1.is_finite() {
        return Err(Error::Singular(
            "source loop is resonant with zero total impedance".into(),
        ));
    }
    let i_out = i1 / den_i;
    let p_load = 0.5 * i_out.norm_sqr() * zl_c.re;
    let p_avail = 1.0 / (8.0 * zs_c.re);
    let gt = p_load / p_avail;
    let gamma_in = (zin - zs_c.conj()) / (zin + zs_c);
    if !gt.is_finite() || !gamma_in.is_finite() {
        return Err(Error::Singular("non-finite transducer gain".into()));
    }
    Ok((gt, gamma_in))
}

/// Renormalizes a two-port S sweep from port references `from` to `to`,
/// power-wave convention. Points where the per-frequency conversion is
/// ill-conditioned are flagged (`None`) instead of failing the whole sweep.
pub fn renormalize_sweep(
    sweep: &SSweep,
    from: (PortImpedance, PortImpedance),
    to: (PortImpedance, PortImpedance),
) -> SimSweep {
    sweep.map(|s| {
        Abcd2x2::from_powerwave_s(s, from.0, from.1)
            .and_then(|m| m.to_powerwave_s(to.0, to.1))
            .ok()
    })
}

/// Per-point ABCD view of an S sweep referenced to a real `z0`. Points with
/// `s21 == 0` cannot be converted and are flagged.
pub fn abcd_sweep_from_s(sweep: &SSweep, z0: f64) -> Sweep<Option<Abcd2x2>> {
    sweep.map(|s| Abcd2x2::from_s(s, z0).ok())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn series_zero_is_identity() {
        let m = series_abcd(ZERO).unwrap();
        assert_eq!(m, Abcd2x2::IDENTITY);
        let m = shunt_abcd(ZERO).unwrap();
        assert_eq!(m, Abcd2x2::IDENTITY);
    }

    #[test]
    fn series_reactance_has_unit_determinant() {
        let m = series_abcd(c(0.0, 50.0)).unwrap();
        assert_eq!(m.b, c(0.0, 50.0));
        assert_relative_eq!(m.det().re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(m.det().im, 0.0, epsilon = 1e-15);
        let m = shunt_abcd(c(0.0, 0.01)).unwrap();
        assert_relative_eq!(m.det().re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn non_finite_elements_rejected() {
        assert!(series_abcd(c(f64::NAN, 0.0)).is_err());
        assert!(shunt_abcd(c(0.0, f64::INFINITY)).is_err());
        assert!(cascade(&[]).is_err());
    }

    #[test]
    fn cascades_combine_like_elements() {
        let z1 = c(10.0, 1.0);
        let z2 = c(5.0, -2.0);
        let m = cascade(&[series_abcd(z1).unwrap(), series_abcd(z2).unwrap()]).unwrap();
        assert_eq!(m, series_abcd(z1 + z2).unwrap());

        let y1 = c(0.01, 0.002);
        let y2 = c(0.005, -0.001);
        let m = cascade(&[shunt_abcd(y1).unwrap(), shunt_abcd(y2).unwrap()]).unwrap();
        assert_eq!(m, shunt_abcd(y1 + y2).unwrap());

        let m = cascade(&[Abcd2x2::IDENTITY, Abcd2x2::IDENTITY]).unwrap();
        assert_eq!(m, Abcd2x2::IDENTITY);
    }

    #[test]
    fn identity_is_matched_through() {
        let s = Abcd2x2::IDENTITY.to_s(50.0).unwrap();
        assert_relative_eq!(s.s11.norm(), 0.0, epsilon = 1e-15);
        assert_relative_eq!(s.s21.re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(s.s12.re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(s.s22.norm(), 0.0, epsilon = 1e-15);
    }

    // Oracle: direct nodal solve of source(50) - series 100 - load(50):
    // V_load = 50/200, S21 = 2*V_load = 0.5, S11 = (Zin-50)/(Zin+50) = 0.5.
    #[test]
    fn series_100_at_50_ohms() {
        let s = series_abcd(c(100.0, 0.0)).unwrap().to_s(50.0).unwrap();
        assert_relative_eq!(s.s21.re, 0.5, epsilon = 1e-12);
        assert_relative_eq!(s.s11.re, 0.5, epsilon = 1e-12);
        assert_relative_eq!(s.s12.re, 0.5, epsilon = 1e-12);
        assert_relative_eq!(s.s22.re, 0.5, epsilon = 1e-12);
    }

    // Oracle: nodal solve of shunt 0.02 S at 50 ohm ports: S11 = -1/3, S21 = 2/3.
    #[test]
    fn shunt_20_millisiemens_at_50_ohms() {
        let s = shunt_abcd(c(0.02, 0.0)).unwrap().to_s(50.0).unwrap();
        assert_relative_eq!(s.s11.re, -1.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(s.s21.re, 2.0 / 3.0, epsilon = 1e-12);
    }

    #[test]
    fn transducer_gain_matched_through() {
        let z = PortImpedance::real(50.0).unwrap();
        let (gt, gamma) = transducer_gain(&Abcd2x2::IDENTITY, z, z).unwrap();
        assert_relative_eq!(gt, 1.0, epsilon = 1e-14);
        assert_relative_eq!(gamma.norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn transducer_gain_conjugate_matched_series_reactance() {
        // Zin = j50 + (50 - j25) = conj(zs): full power transfer.
        let z = PortImpedance::new(50.0, -25.0).unwrap();
        let m = series_abcd(c(0.0, 50.0)).unwrap();
        let (gt, gamma) = transducer_gain(&m, z, z).unwrap();
        assert_relative_eq!(gt, 1.0, epsilon = 1e-14);
        assert_relative_eq!(gamma.norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn transducer_gain_matches_s21_squared_for_real_ports() {
        let z = PortImpedance::real(50.0).unwrap();
        let m = series_abcd(c(100.0, 0.0)).unwrap();
        let (gt, _) = transducer_gain(&m, z, z).unwrap();
        assert_relative_eq!(gt, 0.25, epsilon = 1e-14);
    }

    #[test]
    fn renormalize_to_same_reference_is_identity() {
        let z0 = PortImpedance::real(50.0).unwrap();
        let m = cascade(&[
            shunt_abcd(c(0.003, 0.011)).unwrap(),
            series_abcd(c(20.0, -35.0)).unwrap(),
            shunt_abcd(c(0.001, -0.006)).unwrap(),
        ])
        .unwrap();
        let s = m.to_s(50.0).unwrap();
        let sweep = SSweep::new(vec![1.0e9], vec![s]).unwrap();
        let out = renormalize_sweep(&sweep, (z0, z0), (z0, z0));
        let (_, got) = out.valid().next().unwrap();
        assert_relative_eq!(got.s11.re, s.s11.re, epsilon = 1e-12);
        assert_relative_eq!(got.s11.im, s.s11.im, epsilon = 1e-12);
        assert_relative_eq!(got.s21.re, s.s21.re, epsilon = 1e-12);
        assert_relative_eq!(got.s21.im, s.s21.im, epsilon = 1e-12);
    }

    #[test]
    fn renormalize_identity_network_to_conjugate_ports_is_lossless() {
        let z0 = PortImpedance::real(50.0).unwrap();
        let zs = PortImpedance::new(30.0, 10.0).unwrap();
        let zl = PortImpedance::new(30.0, -10.0).unwrap();
        let s = Abcd2x2::IDENTITY.to_s(50.0).unwrap();
        let sweep = SSweep::new(vec![1.0e9], vec![s]).unwrap();
        let out = renormalize_sweep(&sweep, (z0, z0), (zs, zl));
        let (_, got) = out.valid().next().unwrap();
        assert_relative_eq!(got.s21.norm_sqr(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn powerwave_reduces_to_voltage_wave_at_real_reference() {
        let z0 = PortImpedance::real(50.0).unwrap();
        let m = cascade(&[
            shunt_abcd(c(0.004, 0.02)).unwrap(),
            series_abcd(c(12.0, 80.0)).unwrap(),
        ])
        .unwrap();
        let s_v = m.to_s(50.0).unwrap();
        let s_p = m.to_powerwave_s(z0, z0).unwrap();
        assert_relative_eq!(s_v.s11.re, s_p.s11.re, epsilon = 1e-13);
        assert_relative_eq!(s_v.s11.im, s_p.s11.im, epsilon = 1e-13);
        assert_relative_eq!(s_v.s21.re, s_p.s21.re, epsilon = 1e-13);
        assert_relative_eq!(s_v.s21.im, s_p.s21.im, epsilon = 1e-13);
        assert_relative_eq!(s_v.s22.re, s_p.s22.re, epsilon = 1e-13);
    }

    #[test]
    fn from_s_routes_agree_at_real_reference() {
        let z0 = PortImpedance::real(50.0).unwrap();
        let m = cascade(&[
            series_abcd(c(5.0, 30.0)).unwrap(),
            shunt_abcd(c(0.002, -0.01)).unwrap(),
        ])
        .unwrap();
        let s = m.to_s(50.0).unwrap();
        let back_classic = Abcd2x2::from_s(&s, 50.0).unwrap();
        let back_wave = Abcd2x2::from_powerwave_s(&s, z0, z0).unwrap();
        for (x, y) in [
            (back_classic.a, back_wave.a),
            (back_classic.b, back_wave.b),
            (back_classic.c, back_wave.c),
            (back_classic.d, back_wave.d),
        ] {
            assert_relative_eq!(x.re, y.re, max_relative = 1e-10, epsilon = 1e-12);
            assert_relative_eq!(x.im, y.im, max_relative = 1e-10, epsilon = 1e-12);
        }
        // And both invert to_s.
        for (x, y) in [(back_classic.a, m.a), (back_classic.b, m.b), (back_classic.c, m.c)] {
            assert_relative_eq!(x.re, y.re, max_relative = 1e-10, epsilon = 1e-12);
            assert_relative_eq!(x.im, y.im, max_relative = 1e-10, epsilon = 1e-12);
        }
    }

    #[test]
    fn renormalize_flags_zero_transmission_points() {
        // s21 == 0 cannot be converted to ABCD: the point must be flagged.
        let s = SMatrix {
            s11: ONE,
            s12: ZERO,
            s21: ZERO,
            s22: ONE,
        };
        let z0 = PortImpedance::real(50.0).unwrap();
        let zs = PortImpedance::new(39.0, 17.0).unwrap();
        let sweep = SSweep::new(vec![1.0e9], vec![s]).unwrap();
        let out = renormalize_sweep(&sweep, (z0, z0), (zs, zs));
        assert_eq!(out.flagged_count(), 1);
    }

    #[test]
    fn port_impedance_requires_positive_real_part() {
        assert!(PortImpedance::new(0.0, 10.0).is_err());
        assert!(PortImpedance::new(-5.0, 0.0).is_err());
        assert!(PortImpedance::new(f64::NAN, 0.0).is_err());
        assert!(PortImpedance::new(39.0, 17.0).is_ok());
    }
}
