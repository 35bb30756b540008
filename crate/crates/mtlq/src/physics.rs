//! Two-site luminescence-quenching phase model.
//!
//! A luminophore with two quenching environments is excited with sinusoidally
//! modulated light at angular frequency `omega`. Each site keeps its unquenched
//! decay time `tau0(T)` and is quenched according to its own Stern–Volmer
//! constant, `tau_i = tau0 / (1 + K_i * o2)`. The emitted luminescence of the
//! mixture lags the excitation by a phase `theta` whose tangent is the
//! intensity-weighted frequency response of the two components:
//!
//! ```text
//! tan(theta) = omega * (f1*tau1^2/(1+(omega*tau1)^2) + f2*tau2^2/(1+(omega*tau2)^2))
//!              ----------------------------------------------------------------
//!                       (f1*tau1/(1+(omega*tau1)^2) + f2*tau2/(1+(omega*tau2)^2))
//! ```
//!
//! with `f1 = f`, `f2 = 1 - f` the unquenched emission fractions. The measured
//! feature is the ratio `r = tan(theta at o2) / tan(theta at o2 = 0)`, which
//! with `q_i = 1/(1 + K_i*o2)` and `u_i = 1/(1 + (omega*tau0*q_i)^2)` reduces to
//!
//! ```text
//! r = (f1*q1^2*u1 + f2*q2^2*u2) / (f1*q1*u1 + f2*q2*u2)
//! ```
//!
//! a convex combination of `q1` and `q2`, hence always in (0, 1], exactly 1 at
//! `o2 = 0`, and exactly the single-site law `1/(1 + K1*o2)` when `f = 1`.
//! All model coefficients vary linearly with temperature around `t_ref`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of modulation frequencies per measurement.
pub const NUM_FREQUENCIES: usize = 16;

/// The five discrete temperature levels sampled by the generator, in °C.
pub const TEMP_LEVELS: [f64; 5] = [5.0, 15.0, 25.0, 35.0, 45.0];

/// Supported temperature domain, °C.
pub const TEMP_MIN: f64 = 5.0;
pub const TEMP_MAX: f64 = 45.0;

/// Oxygen concentration domain, % air.
pub const O2_MIN: f64 = 0.0;
pub const O2_MAX: f64 = 100.0;

/// Default modulation frequencies: 16 log-spaced values of `2*pi*500*40^(i/15)`
/// rad/s, i.e. 500 Hz to 20 kHz. Frozen as literals so the default feature set
/// is a stable, config-representable constant.
pub const DEFAULT_OMEGAS: [f64; NUM_FREQUENCIES] = [
    3_141.592_653_589_793,
    4_017.481_375_559_178,
    5_137.571_411_278_304,
    6_569.947_073_447_323,
    8_401.674_856_166_945,
    10744.095743789525,
    13_739.593_036_855_61,
    17_570.247_075_239_51,
    22468.902933067766,
    28733.32383168774,
    36_744.290_581_343_12,
    46988.74722029944,
    60089.399751652294,
    76_842.567_127_518_73,
    98_266.585_240_516_7,
    125663.70614359171,
];

/// Coefficients of the two-site phase model and their linear temperature laws.
///
/// Every `*_tc` field is a fractional change per °C applied around `t_ref`,
/// e.g. `f(T) = f_ref * (1 + f_tc * (T - t_ref))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams {
    /// Angular modulation frequencies, rad/s, strictly increasing, length 16.
    pub omegas: Vec<f64>,
    /// Unquenched decay time at `t_ref`, seconds.
    pub tau0_ref: f64,
    /// Linear temperature coefficient of the decay time, 1/°C.
    pub tau0_tc: f64,
    /// Unquenched emission fraction of component 1 at `t_ref`, in (0, 1].
    pub f_ref: f64,
    /// Linear temperature coefficient of `f`, 1/°C.
    pub f_tc: f64,
    /// Stern–Volmer constant of component 1 at `t_ref`, 1/(% air).
    pub ksv1_ref: f64,
    /// Stern–Volmer constant of component 2 at `t_ref`, 1/(% air).
    pub ksv2_ref: f64,
    /// Linear temperature coefficient of `K_SV1`, 1/°C.
    pub ksv1_tc: f64,
    /// Linear temperature coefficient of `K_SV2`, 1/°C.
    pub ksv2_tc: f64,
    /// Reference temperature, °C.
    pub t_ref: f64,
}

impl Default for PhysicsParams {
    /// Defaults chosen so the 16 features are informative over the full
    /// oxygen/temperature domain: r spans roughly (0.08, 1], decreases
    /// strictly with oxygen at every frequency, and temperature moves both
    /// the quenching strength (through the shared K coefficients) and the
    /// frequency response (through the decay time), so the two targets stay
    /// entangled the way a plain single-head regressor struggles with.
    fn default() -> Self {
        PhysicsParams {
            omegas: DEFAULT_OMEGAS.to_vec(),
            tau0_ref: 30e-6,
            tau0_tc: -0.02,
            f_ref: 0.85,
            f_tc: -0.004,
            ksv1_ref: 0.4,
            ksv2_ref: 0.033,
            ksv1_tc: 0.01,
            ksv2_tc: 0.01,
            t_ref: 25.0,
        }
    }
}

impl PhysicsParams {
    /// Unquenched decay time at temperature `temp`, seconds.
    pub fn tau0(&self, temp: f64) -> f64 {
        self.tau0_ref * (1.0 + self.tau0_tc * (temp - self.t_ref))
    }

    /// Unquenched emission fraction of component 1 at `temp`.
    pub fn fraction(&self, temp: f64) -> f64 {
        self.f_ref * (1.0 + self.f_tc * (temp - self.t_ref))
    }

    /// Stern–Volmer constant of component 1 at `temp`, 1/(% air).
    pub fn ksv1(&self, temp: f64) -> f64 {
        self.ksv1_ref * (1.0 + self.ksv1_tc * (temp - self.t_ref))
    }

    /// Stern–Volmer constant of component 2 at `temp`, 1/(% air).
    pub fn ksv2(&self, temp: f64) -> f64 {
        self.ksv2_ref * (1.0 + self.ksv2_tc * (temp - self.t_ref))
    }

    /// Check the structural invariants: 16 strictly increasing frequencies, and
    /// valid coefficient laws over the whole supported temperature domain.
    /// The laws are linear in T, so checking both endpoints covers the range.
    pub fn validate(&self) -> Result<()> {
        if self.omegas.len() != NUM_FREQUENCIES {
            return Err(Error::InvalidSpec(format!(
                "expected {} frequencies, got {}",
                NUM_FREQUENCIES,
                self.omegas.len()
            )));
        }
        for pair in self.omegas.windows(2) {
            if !(pair[0] < pair[1]) {
                return Err(Error::InvalidSpec(format!(
                    "frequencies must be strictly increasing, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        if !self.omegas.iter().all(|w| w.is_finite() && *w > 0.0) {
            return Err(Error::InvalidSpec(
                "frequencies must be finite and positive".into(),
            ));
        }
        for temp in [TEMP_MIN, TEMP_MAX] {
            let f = self.fraction(temp);
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::InvalidSpec(format!(
                    "fraction f({temp}) = {f} outside (0, 1]"
                )));
            }
            if self.tau0(temp) <= 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "tau0({temp}) = {} must be positive",
                    self.tau0(temp)
                )));
            }
            let (k1, k2) = (self.ksv1(temp), self.ksv2(temp));
            if k1 < 0.0 || k2 < 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "Stern-Volmer constants at {temp} °C must be nonnegative (got {k1}, {k2})"
                )));
            }
            if k1 < k2 {
                return Err(Error::InvalidSpec(format!(
                    "K_SV1({temp}) = {k1} < K_SV2({temp}) = {k2}; component 1 must quench at least as strongly"
                )));
            }
        }
        Ok(())
    }

    /// Render as a plain-text key=value config block, keys matching field names.
    pub fn to_config_string(&self) -> String {
        let omegas = self
            .omegas
            .iter()
            .map(|w| format!("{w:.16e}"))
            .collect::<Vec<_>>()
            .join(",");
        format!(
            "omegas = {omegas}\n\
             tau0_ref = {:.16e}\n\
             tau0_tc = {:.16e}\n\
             f_ref = {:.16e}\n\
             f_tc = {:.16e}\n\
             ksv1_ref = {:.16e}\n\
             ksv2_ref = {:.16e}\n\
             ksv1_tc = {:.16e}\n\
             ksv2_tc = {:.16e}\n\
             t_ref = {:.16e}\n",
            self.tau0_ref,
            self.tau0_tc,
            self.f_ref,
            self.f_tc,
            self.ksv1_ref,
            self.ksv2_ref,
            self.ksv1_tc,
            self.ksv2_tc,
            self.t_ref,
        )
    }

    /// Parse from the key=value format written by [`to_config_string`].
    /// Unknown keys are rejected; missing keys fall back to the defaults.
    ///
    /// [`to_config_string`]: PhysicsParams::to_config_string
    pub fn from_config_str(text: &str) -> Result<Self> {
        let mut params = PhysicsParams::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Parse(format!("line {}: expected key = value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            let parse_f64 = |v: &str| -> Result<f64> {
                v.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {key}: {e}", lineno + 1)))
            };
            match key {
                "omegas" => {
                    params.omegas = value
                        .split(',')
                        .map(|v| parse_f64(v.trim()))
                        .collect::<Result<Vec<f64>>>()?;
                }
                "tau0_ref" => params.tau0_ref = parse_f64(value)?,
                "tau0_tc" => params.tau0_tc = parse_f64(value)?,
                "f_ref" => params.f_ref = parse_f64(value)?,
                "f_tc" => params.f_tc = parse_f64(value)?,
                "ksv1_ref" => params.ksv1_ref = parse_f64(value)?,
                "ksv2_ref" => params.ksv2_ref = parse_f64(value)?,
                "ksv1_tc" => params.ksv1_tc = parse_f64(value)?,
                "ksv2_tc" => params.ksv2_tc = parse_f64(value)?,
                "t_ref" => params.t_ref = parse_f64(value)?,
                _ => {
                    return Err(Error::Parse(format!(
                        "line {}: unknown physics key '{key}'",
                        lineno + 1
                    )))
                }
            }
        }
        params.validate()?;
        Ok(params)
    }
}

/// Phase-shift ratio `tan(theta at o2) / tan(theta at o2 = 0)` at one frequency.
///
/// Exactly 1.0 at `o2 = 0` and strictly inside (0, 1) for `o2 > 0` when both
/// Stern–Volmer constants are positive.
pub fn tan_theta_ratio(params: &PhysicsParams, omega: f64, temp: f64, o2: f64) -> Result<f64> {
    if !(o2 >= 0.0) {
        return Err(Error::Domain(format!(
            "oxygen concentration must be nonnegative, got {o2} % air"
        )));
    }
    if !(omega.is_finite() && omega > 0.0) {
        return Err(Error::Domain(format!(
            "modulation frequency must be positive, got {omega} rad/s"
        )));
    }
    let f = params.fraction(temp);
    if !(f > 0.0 && f <= 1.0) {
        return Err(Error::Domain(format!(
            "fraction f({temp}) = {f} outside (0, 1]"
        )));
    }
    let tau0 = params.tau0(temp);
    if tau0 <= 0.0 {
        return Err(Error::Domain(format!(
            "decay time tau0({temp}) = {tau0} must be positive"
        )));
    }

    let q1 = 1.0 / (1.0 + params.ksv1(temp) * o2);
    let q2 = 1.0 / (1.0 + params.ksv2(temp) * o2);
    let wt = omega * tau0;
    let u1 = 1.0 / (1.0 + (wt * q1) * (wt * q1));
    let u2 = 1.0 / (1.0 + (wt * q2) * (wt * q2));
    let f2 = 1.0 - f;
    let numer = f * q1 * q1 * u1 + f2 * q2 * q2 * u2;
    let denom = f * q1 * u1 + f2 * q2 * u2;
    Ok(numer / denom)
}

/// The 16-component measurement vector `r(omega_i, temp, o2)`.
pub fn feature_vector(params: &PhysicsParams, temp: f64, o2: f64) -> Result<Vec<f64>> {
    params
        .omegas
        .iter()
        .map(|&omega| tan_theta_ratio(params, omega, temp, o2))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// 50-digit evaluation of the model at the default parameters, T = 25 °C,
    /// o2 = 50 % air, one value per default frequency (scratch mpmath script).
    const GOLDEN_R_T25_O2_50: [f64; NUM_FREQUENCIES] = [
        0.23977832273348479,
        0.23971501961909486,
        0.23961159083010836,
        0.23944269871183921,
        0.2391671669008015,
        0.23871834644608506,
        0.23798906264370209,
        0.23680881839441151,
        0.23491114764788548,
        0.23189165214784974,
        0.22716609081221203,
        0.2199589172394309,
        0.20938837211495862,
        0.19474137694601382,
        0.17596711363752088,
        0.15416676898961063,
    ];

    fn rel_err(got: f64, want: f64) -> f64 {
        (got - want).abs() / want.abs().max(1e-300)
    }

    #[test]
    fn ratio_is_exactly_one_at_zero_oxygen() {
        let p = PhysicsParams::default();
        for &temp in &TEMP_LEVELS {
            for &w in &p.omegas {
                assert_eq!(tan_theta_ratio(&p, w, temp, 0.0).unwrap(), 1.0);
            }
        }
    }

    #[test]
    fn single_site_limit_matches_stern_volmer() {
        let p = PhysicsParams {
            f_ref: 1.0,
            f_tc: 0.0,
            ksv1_tc: 0.0,
            ..PhysicsParams::default()
        };
        let k = p.ksv1_ref;
        for &w in &p.omegas {
            for i in 0..=100 {
                let o2 = i as f64;
                let got = tan_theta_ratio(&p, w, 25.0, o2).unwrap();
                let want = 1.0 / (1.0 + k * o2);
                assert!(
                    rel_err(got, want) < 1e-12,
                    "w={w} o2={o2}: got {got}, want {want}"
                );
            }
        }
    }

    #[test]
    fn golden_scalar_ratio() {
        let p = PhysicsParams::default();
        let got = tan_theta_ratio(&p, p.omegas[0], 25.0, 50.0).unwrap();
        assert!(rel_err(got, GOLDEN_R_T25_O2_50[0]) < 1e-14, "got {got}");
        let got = tan_theta_ratio(&p, p.omegas[8], 25.0, 50.0).unwrap();
        assert!(rel_err(got, GOLDEN_R_T25_O2_50[8]) < 1e-14, "got {got}");
        // independent point away from the reference temperature
        let got = tan_theta_ratio(&p, p.omegas[15], 35.0, 75.0).unwrap();
        assert!(rel_err(got, 0.16246391168300173) < 1e-14, "got {got}");
    }

    #[test]
    fn golden_feature_vector() {
        let p = PhysicsParams::default();
        let v = feature_vector(&p, 25.0, 50.0).unwrap();
        assert_eq!(v.len(), NUM_FREQUENCIES);
        for (i, (&got, &want)) in v.iter().zip(GOLDEN_R_T25_O2_50.iter()).enumerate() {
            assert!(rel_err(got, want) < 1e-14, "component {i}: got {got}");
        }
    }

    #[test]
    fn feature_vector_at_zero_oxygen_is_all_ones() {
        let p = PhysicsParams::default();
        for &temp in &TEMP_LEVELS {
            let v = feature_vector(&p, temp, 0.0).unwrap();
            assert!(v.iter().all(|&r| r == 1.0));
        }
    }

    #[test]
    fn strictly_decreasing_in_oxygen_on_grid() {
        let p = PhysicsParams::default();
        for &temp in &TEMP_LEVELS {
            for &w in &p.omegas {
                let mut prev = f64::INFINITY;
                for i in 0..=100 {
                    let o2 = O2_MAX * i as f64 / 100.0;
                    let r = tan_theta_ratio(&p, w, temp, o2).unwrap();
                    assert!(
                        r < prev,
                        "not strictly decreasing at w={w} T={temp} o2={o2}"
                    );
                    assert!(r > 0.0 && r <= 1.0);
                    prev = r;
                }
            }
        }
    }

    #[test]
    fn rejects_negative_oxygen_and_bad_fraction() {
        let p = PhysicsParams::default();
        assert!(matches!(
            tan_theta_ratio(&p, p.omegas[0], 25.0, -1.0),
            Err(Error::Domain(_))
        ));
        let bad = PhysicsParams {
            f_tc: -0.5,
            ..PhysicsParams::default()
        };
        // f(45) = 0.85 * (1 - 0.5*20) = negative
        assert!(matches!(
            tan_theta_ratio(&bad, bad.omegas[0], 45.0, 10.0),
            Err(Error::Domain(_))
        ));
        assert!(bad.validate().is_err());
    }

    #[test]
    fn validate_accepts_defaults_and_rejects_misordered_frequencies() {
        let p = PhysicsParams::default();
        p.validate().unwrap();
        let mut bad = p.clone();
        bad.omegas.swap(3, 4);
        assert!(bad.validate().is_err());
        let mut short = p;
        short.omegas.pop();
        assert!(short.validate().is_err());
    }

    #[test]
    fn config_round_trip_is_exact() {
        let p = PhysicsParams {
            tau0_ref: 17.5e-6,
            f_ref: 0.7301,
            ..PhysicsParams::default()
        };
        let text = p.to_config_string();
        let back = PhysicsParams::from_config_str(&text).unwrap();
        assert_eq!(p, back);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let err = PhysicsParams::from_config_str("tau0_reff = 1.0\n");
        assert!(matches!(err, Err(Error::Parse(_))));
    }

    proptest! {
        #[test]
        fn ratio_stays_in_unit_interval(
            temp in TEMP_MIN..TEMP_MAX,
            o2 in O2_MIN..O2_MAX,
            wi in 0usize..NUM_FREQUENCIES,
        ) {
            let p = PhysicsParams::default();
            let r = tan_theta_ratio(&p, p.omegas[wi], temp, o2).unwrap();
            prop_assert!(r > 0.0 && r <= 1.0);
        }

        #[test]
        fn lower_oxygen_gives_larger_features(
            temp in TEMP_MIN..TEMP_MAX,
            o2a in 0.0..50.0f64,
            delta in 1e-3..50.0f64,
        ) {
            let p = PhysicsParams::default();
            let lo = feature_vector(&p, temp, o2a).unwrap();
            let hi = feature_vector(&p, temp, o2a + delta).unwrap();
            for (a, b) in lo.iter().zip(hi.iter()) {
                prop_assert!(a > b);
            }
        }

        #[test]
        fn feature_vector_is_deterministic(
            temp in TEMP_MIN..TEMP_MAX,
            o2 in O2_MIN..O2_MAX,
        ) {
            let p = PhysicsParams::default();
            let a = feature_vector(&p, temp, o2).unwrap();
            let b = feature_vector(&p, temp, o2).unwrap();
            prop_assert!(a.iter().zip(b.iter()).all(|(x, y)| x == y));
        }
    }
}
