//! Per-pair field propagation through a lossless 50/50 beam splitter.
//!
//! Every pair carries two path-entangled terms: the signal enters port `a`
//! and the idler port `b`, or the reverse. Both terms are propagated
//! separately. Amplitudes are defined up to the common optical carrier
//! phase, which cancels in every intensity and coincidence product, and
//! single-photon amplitudes are normalized to one so port intensities lie
//! in `[0, 2]`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, TAU};

use num_complex::Complex64;
use thiserror::Error;

/// Electric-field amplitude, up to a dropped global phase.
pub type ComplexAmplitude = Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("phase ledger is defined only for xi = 0 or xi = pi/2, got {0}")]
    UnsupportedXi(f64),
}

/// How a detuning and a delay combine into a phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PhaseConvention {
    /// `Δ = δf·τ`, the literal product.
    #[default]
    Paper,
    /// `Δ = 2π·δf·τ`.
    Si,
}

impl PhaseConvention {
    /// Radians of phase per unit of `δf·τ`.
    pub fn scale(self) -> f64 {
        match self {
            PhaseConvention::Paper => 1.0,
            PhaseConvention::Si => TAU,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PhaseConvention::Paper => "paper",
            PhaseConvention::Si => "si",
        }
    }
}

impl std::str::FromStr for PhaseConvention {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "paper" => Ok(PhaseConvention::Paper),
            "si" => Ok(PhaseConvention::Si),
            other => Err(format!("unknown phase convention `{other}` (expected paper or si)")),
        }
    }
}

impl std::fmt::Display for PhaseConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Control phases of the interferometer.
///
/// `xi` is applied at input path `a`; `zeta` is the phase of the idler
/// relative to the signal. All quantities are 2π-periodic, so no range is
/// enforced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseConfig {
    pub xi: f64,
    pub zeta: f64,
    pub convention: PhaseConvention,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        Self {
            xi: 0.0,
            zeta: FRAC_PI_2,
            convention: PhaseConvention::Paper,
        }
    }
}

impl PhaseConfig {
    pub fn new(xi: f64, zeta: f64) -> Self {
        Self {
            xi,
            zeta,
            convention: PhaseConvention::Paper,
        }
    }

    pub fn with_convention(mut self, convention: PhaseConvention) -> Self {
        self.convention = convention;
        self
    }

    /// The phase `θ = ζ − ξ − 2Δ` that sets every port intensity of a pair.
    pub fn interference_phase(&self, delta_f: f64, tau: f64) -> f64 {
        self.zeta - self.xi - 2.0 * detuning_phase(delta_f, tau, self.convention)
    }
}

/// One photon pair of the ensemble: the signal sits at `+delta_f` from the
/// center frequency and the idler at `-delta_f`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSample {
    pub delta_f: f64,
    pub weight: f64,
}

/// Output fields of both entangled terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldQuad {
    /// Port `c`, signal in `a` / idler in `b`.
    pub e_c: ComplexAmplitude,
    /// Port `d`, signal in `a` / idler in `b`.
    pub e_d: ComplexAmplitude,
    /// Port `c`, swapped term.
    pub e_c2: ComplexAmplitude,
    /// Port `d`, swapped term.
    pub e_d2: ComplexAmplitude,
}

/// Port intensities of both entangled terms, in units of the single-photon
/// intensity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntensityQuad {
    pub i_c: f64,
    pub i_d: f64,
    pub i_c2: f64,
    pub i_d2: f64,
}

impl FieldQuad {
    pub fn intensities(&self) -> IntensityQuad {
        IntensityQuad {
            i_c: self.e_c.norm_sqr(),
            i_d: self.e_d.norm_sqr(),
            i_c2: self.e_c2.norm_sqr(),
            i_d2: self.e_d2.norm_sqr(),
        }
    }
}

/// Lossless 50/50 beam splitter with the symmetric `[[1, i], [i, 1]] / √2`
/// matrix.
pub fn bs_transform(
    a: ComplexAmplitude,
    b: ComplexAmplitude,
) -> (ComplexAmplitude, ComplexAmplitude) {
    ((a + I * b) * FRAC_1_SQRT_2, (I * a + b) * FRAC_1_SQRT_2)
}

/// Delay-induced phase of a pair with detuning `delta_f` (Hz) at delay
/// `tau` (s).
pub fn detuning_phase(delta_f: f64, tau: f64, convention: PhaseConvention) -> f64 {
    convention.scale() * delta_f * tau
}

/// Propagates both entangled terms through the beam splitter.
///
/// The first term enters with `(e^{iξ}, e^{i(ζ−2Δ)})` on `(a, b)`; the
/// swapped term is written in the frame of its own port `a` photon, which
/// gives the input column `(e^{iθ}, 1)` with `θ = ζ − ξ − 2Δ`.
pub fn output_fields(cfg: &PhaseConfig, delta_f: f64, tau: f64) -> FieldQuad {
    let delta = detuning_phase(delta_f, tau, cfg.convention);
    let a = Complex64::from_polar(1.0, cfg.xi);
    let b = Complex64::from_polar(1.0, cfg.zeta - 2.0 * delta);
    let (e_c, e_d) = bs_transform(a, b);

    let theta = cfg.interference_phase(delta_f, tau);
    let (e_c2, e_d2) = bs_transform(Complex64::from_polar(1.0, theta), Complex64::new(1.0, 0.0));

    FieldQuad {
        e_c,
        e_d,
        e_c2,
        e_d2,
    }
}

/// Closed-form port intensities `1 ∓ sin θ` of both terms.
pub fn output_intensities(cfg: &PhaseConfig, delta_f: f64, tau: f64) -> IntensityQuad {
    let s = cfg.interference_phase(delta_f, tau).sin();
    IntensityQuad {
        i_c: 1.0 - s,
        i_d: 1.0 + s,
        i_c2: 1.0 + s,
        i_d2: 1.0 - s,
    }
}

/// Sign of `ζ = ±π/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ZetaBranch {
    Plus,
    Minus,
}

impl ZetaBranch {
    pub fn zeta(self) -> f64 {
        match self {
            ZetaBranch::Plus => FRAC_PI_2,
            ZetaBranch::Minus => -FRAC_PI_2,
        }
    }
}

/// Relative phases of the `ζ`-carrying photon against its partner at the
/// port where it is reflected and at the port where it is transmitted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseLedger {
    pub reflected: f64,
    pub transmitted: f64,
}

const LEDGER_XI_TOL: f64 = 1e-12;
const WRAP_TOL: f64 = 1e-12;

/// Phase bookkeeping at the beam splitter for `ξ ∈ {0, π/2}` and
/// `ζ = ±π/2`.
///
/// The `ζ` photon enters the `ξ`-controlled port `a` with phase `ζ + ξ`,
/// its partner enters `b` with phase zero. Each input is propagated alone
/// and the relative phase is read off the two contributions at each
/// output port, reduced into `[0, 2π)`.
pub fn phase_ledger(xi: f64, branch: ZetaBranch) -> Result<PhaseLedger, ModelError> {
    if !(xi.abs() <= LEDGER_XI_TOL || (xi - FRAC_PI_2).abs() <= LEDGER_XI_TOL) {
        return Err(ModelError::UnsupportedXi(xi));
    }
    let zero = Complex64::new(0.0, 0.0);
    let carrier = Complex64::from_polar(1.0, branch.zeta() + xi);
    let (carrier_t, carrier_r) = bs_transform(carrier, zero);
    let (partner_r, partner_t) = bs_transform(zero, Complex64::new(1.0, 0.0));

    // port d: carrier reflected, partner transmitted; port c: the reverse
    let reflected = wrap_phase((carrier_r * partner_t.conj()).arg());
    let transmitted = wrap_phase((carrier_t * partner_r.conj()).arg());
    Ok(PhaseLedger {
        reflected,
        transmitted,
    })
}

/// Reduces an angle into `[0, 2π)`; values within rounding of `2π` map to 0.
pub fn wrap_phase(phase: f64) -> f64 {
    let r = phase.rem_euclid(TAU);
    if TAU - r <= WRAP_TOL {
        0.0
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_PI_4, FRAC_PI_8, PI};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Explicit 2x2 matrix-vector product, kept apart from `bs_transform`.
    fn matrix_oracle(a: Complex64, b: Complex64) -> (Complex64, Complex64) {
        let m = [[c(1.0, 0.0), c(0.0, 1.0)], [c(0.0, 1.0), c(1.0, 0.0)]];
        let s = 1.0 / 2f64.sqrt();
        (
            (m[0][0] * a + m[0][1] * b) * s,
            (m[1][0] * a + m[1][1] * b) * s,
        )
    }

    #[test]
    fn bs_single_port_input() {
        let (o1, o2) = bs_transform(c(1.0, 0.0), c(0.0, 0.0));
        assert_abs_diff_eq!(o1.re, FRAC_1_SQRT_2, epsilon = 1e-15);
        assert_abs_diff_eq!(o1.im, 0.0);
        assert_abs_diff_eq!(o2.re, 0.0);
        assert_abs_diff_eq!(o2.im, FRAC_1_SQRT_2, epsilon = 1e-15);
    }

    #[test]
    fn bs_zero_input() {
        let (o1, o2) = bs_transform(c(0.0, 0.0), c(0.0, 0.0));
        assert_eq!(o1, c(0.0, 0.0));
        assert_eq!(o2, c(0.0, 0.0));
    }

    #[test]
    fn bs_one_and_i() {
        let (o1, o2) = bs_transform(c(1.0, 0.0), c(0.0, 1.0));
        let (m1, m2) = matrix_oracle(c(1.0, 0.0), c(0.0, 1.0));
        assert_abs_diff_eq!((o1 - m1).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!((o2 - m2).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(o1.norm_sqr() + o2.norm_sqr(), 2.0, epsilon = 1e-12);
        // (1 + i·i)/√2 = 0: everything exits port d
        assert_abs_diff_eq!(o1.norm_sqr(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn detuning_phase_conventions() {
        assert_eq!(detuning_phase(1e9, 0.0, PhaseConvention::Paper), 0.0);
        assert_eq!(detuning_phase(0.5, 1.0, PhaseConvention::Paper), 0.5);
        assert_abs_diff_eq!(detuning_phase(0.5, 1.0, PhaseConvention::Si), PI, epsilon = 1e-15);
    }

    #[test]
    fn fields_dip_configuration() {
        let q = output_fields(&PhaseConfig::new(0.0, FRAC_PI_2), 0.0, 0.0).intensities();
        assert_abs_diff_eq!(q.i_c, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.i_d, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn fields_balanced_split() {
        let q = output_fields(&PhaseConfig::new(0.0, 0.0), 0.0, 0.0).intensities();
        assert_abs_diff_eq!(q.i_c, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(q.i_d, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn fields_peak_configuration_is_balanced() {
        // θ = ζ − ξ = 0 at the peak: each port carries exactly one unit.
        let f = output_fields(&PhaseConfig::new(FRAC_PI_2, FRAC_PI_2), 0.0, 0.0);
        let brute_c = (Complex64::from_polar(1.0, FRAC_PI_2)
            + c(0.0, 1.0) * Complex64::from_polar(1.0, FRAC_PI_2))
            / 2f64.sqrt();
        assert_abs_diff_eq!(f.e_c.norm_sqr(), brute_c.norm_sqr(), epsilon = 1e-15);
        assert_abs_diff_eq!(f.e_c.norm_sqr(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.e_d.norm_sqr(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn fields_match_closed_form_products() {
        // e_c = e^{iξ}(1 + i e^{iθ})/√2 etc., written out directly.
        let cfg = PhaseConfig::new(0.3, -1.1);
        let (df, tau) = (2.0e9, 0.37e-9);
        let th = cfg.interference_phase(df, tau);
        let e = Complex64::from_polar(1.0, th);
        let x = Complex64::from_polar(1.0, cfg.xi);
        let f = output_fields(&cfg, df, tau);
        let s = 1.0 / 2f64.sqrt();
        assert!((f.e_c - x * (1.0 + c(0.0, 1.0) * e) * s).norm() < 1e-14);
        assert!((f.e_d - c(0.0, 1.0) * x * (1.0 - c(0.0, 1.0) * e) * s).norm() < 1e-14);
        assert!((f.e_c2 - (e + c(0.0, 1.0)) * s).norm() < 1e-14);
        assert!((f.e_d2 - c(0.0, 1.0) * (e - c(0.0, 1.0)) * s).norm() < 1e-14);
    }

    #[test]
    fn intensities_examples() {
        let q = output_intensities(&PhaseConfig::new(0.0, FRAC_PI_2), 0.0, 0.0);
        assert_eq!((q.i_c, q.i_d, q.i_c2, q.i_d2), (0.0, 2.0, 2.0, 0.0));

        let q = output_intensities(&PhaseConfig::new(0.0, 0.0), 0.0, 0.0);
        assert_eq!((q.i_c, q.i_d, q.i_c2, q.i_d2), (1.0, 1.0, 1.0, 1.0));

        // Δ = π/8 via δf·τ = π/8 under the literal convention; θ = −π/4
        let cfg = PhaseConfig::new(FRAC_PI_2, FRAC_PI_2);
        let q = output_intensities(&cfg, FRAC_PI_8, 1.0);
        assert_abs_diff_eq!(q.i_c, 1.0 + 2f64.sqrt() / 2.0, epsilon = 1e-12);
        let f = output_fields(&cfg, FRAC_PI_8, 1.0);
        assert_abs_diff_eq!(q.i_c, f.e_c.norm_sqr(), epsilon = 1e-12);
        assert_abs_diff_eq!(q.i_c, 1.70711, epsilon = 1e-5);
    }

    #[test]
    fn ledger_enumeration() {
        let cases = [
            (0.0, ZetaBranch::Plus, PI, 0.0),
            (0.0, ZetaBranch::Minus, 0.0, PI),
            (FRAC_PI_2, ZetaBranch::Plus, 3.0 * FRAC_PI_2, FRAC_PI_2),
            (FRAC_PI_2, ZetaBranch::Minus, FRAC_PI_2, 3.0 * FRAC_PI_2),
        ];
        for (xi, br, refl, trans) in cases {
            let l = phase_ledger(xi, br).unwrap();
            assert_abs_diff_eq!(l.reflected, refl, epsilon = 1e-12);
            assert_abs_diff_eq!(l.transmitted, trans, epsilon = 1e-12);
        }
    }

    #[test]
    fn ledger_rejects_other_xi() {
        assert_eq!(
            phase_ledger(FRAC_PI_4, ZetaBranch::Plus),
            Err(ModelError::UnsupportedXi(FRAC_PI_4))
        );
        assert!(phase_ledger(PI, ZetaBranch::Minus).is_err());
    }

    #[test]
    fn wrap_maps_near_tau_to_zero() {
        assert_eq!(wrap_phase(TAU - 1e-15), 0.0);
        assert_eq!(wrap_phase(-1e-16), 0.0);
        assert_abs_diff_eq!(wrap_phase(-FRAC_PI_2), 3.0 * FRAC_PI_2, epsilon = 1e-15);
    }

    fn angle() -> impl Strategy<Value = f64> {
        -4.0 * PI..4.0 * PI
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn bs_is_unitary(ar in -10.0..10.0f64, ai in -10.0..10.0f64,
                         br in -10.0..10.0f64, bi in -10.0..10.0f64) {
            let (a, b) = (c(ar, ai), c(br, bi));
            let (o1, o2) = bs_transform(a, b);
            let lhs = o1.norm_sqr() + o2.norm_sqr();
            let rhs = a.norm_sqr() + b.norm_sqr();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1.0));
            let (m1, m2) = matrix_oracle(a, b);
            prop_assert!((o1 - m1).norm() <= 1e-12 && (o2 - m2).norm() <= 1e-12);
        }

        #[test]
        fn intensities_match_fields(xi in angle(), zeta in angle(), delta in angle()) {
            let cfg = PhaseConfig::new(xi, zeta);
            let closed = output_intensities(&cfg, delta, 1.0);
            let from_fields = output_fields(&cfg, delta, 1.0).intensities();
            prop_assert!((closed.i_c - from_fields.i_c).abs() <= 1e-12);
            prop_assert!((closed.i_d - from_fields.i_d).abs() <= 1e-12);
            prop_assert!((closed.i_c2 - from_fields.i_c2).abs() <= 1e-12);
            prop_assert!((closed.i_d2 - from_fields.i_d2).abs() <= 1e-12);
            for v in [closed.i_c, closed.i_d, closed.i_c2, closed.i_d2] {
                prop_assert!((0.0..=2.0).contains(&v));
            }
        }

        #[test]
        fn per_term_energy_and_cross_cancellation(xi in angle(), zeta in angle(), delta in angle()) {
            let q = output_intensities(&PhaseConfig::new(xi, zeta), delta, 1.0);
            prop_assert!((q.i_c + q.i_d - 2.0).abs() <= 1e-12);
            prop_assert!((q.i_c2 + q.i_d2 - 2.0).abs() <= 1e-12);
            prop_assert!((q.i_c + q.i_c2 - 2.0).abs() <= 1e-12);
            prop_assert!((q.i_d + q.i_d2 - 2.0).abs() <= 1e-12);
            let f = output_fields(&PhaseConfig::new(xi, zeta), delta, 1.0).intensities();
            prop_assert!((f.i_c + f.i_d - 2.0).abs() <= 1e-12);
            prop_assert!((f.i_c2 + f.i_d2 - 2.0).abs() <= 1e-12);
        }

        #[test]
        fn zeta_branches_share_coincidence(xi in angle(), delta in angle()) {
            let plus = output_intensities(&PhaseConfig::new(xi, FRAC_PI_2), delta, 1.0);
            let minus = output_intensities(&PhaseConfig::new(xi, -FRAC_PI_2), delta, 1.0);
            let expect = (xi + 2.0 * delta).sin().powi(2);
            prop_assert!((plus.i_c * plus.i_d - minus.i_c * minus.i_d).abs() <= 1e-12);
            prop_assert!((plus.i_c * plus.i_d - expect).abs() <= 1e-12);
        }
    }
}
