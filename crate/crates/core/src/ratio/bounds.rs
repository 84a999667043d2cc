//! Closed-form bounds on optimal pairwise coupling ratios.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};

/// Which closed form to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundKind {
    /// `55.7 (1 + ln |X|)` for a finite metric space, `q = 1`.
    FiniteMetric,
    /// `7.56 (|X| - 1)^q` for a power of a finite metric.
    MetricPower,
    /// `7.56` for an ultrametric.
    Ultrametric,
    /// `28.66 n^m gamma^{q-1} ln(gamma / n^m + 1)`, `m = max{1/p, 1 - 1/p}`,
    /// for a finite subset of `R^n` with distance ratio `gamma`, `q >= 1`.
    FiniteSet,
    /// `57.32 n^{(q-1)/p + m} s^{q-1} ln(s / n^{max{0, 1 - 2/p}} + 1)` for the
    /// torus hash on `[0..s]^n`, `q >= 1`.
    Torus,
    /// `7.56 / (1 - q) (2.47 n^{1{p>2}(1-1/p)} V_{n-1,p} / V_{n,p})^q` on
    /// `R^n`, `0 < q < 1`.
    SnowflakeExact,
    /// `10.55 / (1 - q) n^{q m}` on `R^n`, `0 < q < 1`.
    Snowflake,
    /// `23.1 ln |A|` for a finite collection of `|A| >= 2` distributions.
    FiniteCollection,
    /// Circle: `2` for `q = 1`, `20.27 / (1 - q)` for `q < 1`, infinite for
    /// `q > 1`.
    Circle,
    /// Truncated circle ratio `q eta^{1 - 1/q} + 1`, `q >= 1`.
    CircleTruncated,
    /// Discrete metric on a base of `s` points: `min{2, (s + 1) / 3}`.
    Discrete,
    /// Lower bound on `R^n`: `2` for `n = 1, q < 1`, `1` for `n = 1, q >= 1`,
    /// `max{2, 1 / (1000 sqrt(1 - q))}` for `n >= 2, q < 1`, infinite for
    /// `n >= 2, q >= 1`.
    LowerRn,
    /// Lower bound on `R^n`, `n >= 2`, `0 < q < 1`, from the ball argument.
    LowerBall,
}

impl BoundKind {
    pub const ALL: [BoundKind; 13] = [
        BoundKind::FiniteMetric,
        BoundKind::MetricPower,
        BoundKind::Ultrametric,
        BoundKind::FiniteSet,
        BoundKind::Torus,
        BoundKind::SnowflakeExact,
        BoundKind::Snowflake,
        BoundKind::FiniteCollection,
        BoundKind::Circle,
        BoundKind::CircleTruncated,
        BoundKind::Discrete,
        BoundKind::LowerRn,
        BoundKind::LowerBall,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::FiniteMetric => "finite-metric",
            BoundKind::MetricPower => "metric-power",
            BoundKind::Ultrametric => "ultrametric",
            BoundKind::FiniteSet => "finite-set",
            BoundKind::Torus => "torus",
            BoundKind::SnowflakeExact => "snowflake-exact",
            BoundKind::Snowflake => "snowflake",
            BoundKind::FiniteCollection => "finite-collection",
            BoundKind::Circle => "circle",
            BoundKind::CircleTruncated => "circle-truncated",
            BoundKind::Discrete => "discrete",
            BoundKind::LowerRn => "lower-rn",
            BoundKind::LowerBall => "lower-ball",
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BoundKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BoundKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| invalid("kind", format!("unknown bound `{s}`")))
    }
}

/// Parameters of the bound formulas; each kind reads only the fields it
/// needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundParams {
    /// Dimension.
    pub n: Option<usize>,
    /// Norm index in `[1, inf]`.
    pub p: f64,
    /// Cost exponent.
    pub q: f64,
    /// Grid side.
    pub s: Option<usize>,
    /// Number of points, or of distributions for `finite-collection`.
    pub size: Option<usize>,
    /// Ratio of largest to smallest distance for `finite-set`.
    pub gamma: Option<f64>,
    /// Truncation level for `circle-truncated`.
    pub eta: Option<f64>,
}

impl Default for BoundParams {
    fn default() -> Self {
        Self {
            n: None,
            p: 2.0,
            q: 1.0,
            s: None,
            size: None,
            gamma: None,
            eta: None,
        }
    }
}

impl BoundParams {
    /// Volume of the unit `l_p` ball in dimension `n`.
    pub fn v_np(&self) -> Result<f64> {
        Ok(ball_volume(self.need_n()?, self.p))
    }

    /// `n^{1{p>2}(1 - 1/p)} V_{n-1,p} / V_{n,p}`.
    pub fn psi(&self) -> Result<f64> {
        let n = self.need_n()?;
        let inv_p = inv(self.p);
        let lead = if self.p > 2.0 {
            (n as f64).powf(1.0 - inv_p)
        } else {
            1.0
        };
        Ok(lead * ball_volume(n - 1, self.p) / ball_volume(n, self.p))
    }

    fn need_n(&self) -> Result<usize> {
        match self.n {
            Some(n) if n >= 1 => Ok(n),
            Some(_) => Err(invalid("n", "must be at least 1")),
            None => Err(invalid("n", "required by this bound")),
        }
    }

    fn need_s(&self) -> Result<usize> {
        match self.s {
            Some(s) if s >= 1 => Ok(s),
            Some(_) => Err(invalid("s", "must be at least 1")),
            None => Err(invalid("s", "required by this bound")),
        }
    }

    fn need_size(&self, min: usize) -> Result<usize> {
        match self.size {
            Some(k) if k >= min => Ok(k),
            Some(k) => Err(invalid("size", format!("must be at least {min}, got {k}"))),
            None => Err(invalid("size", "required by this bound")),
        }
    }

    fn check(&self) -> Result<()> {
        if !(self.p >= 1.0) {
            return Err(invalid("p", format!("must lie in [1, inf], got {}", self.p)));
        }
        if !(self.q > 0.0 && self.q.is_finite()) {
            return Err(invalid("q", format!("must be positive and finite, got {}", self.q)));
        }
        Ok(())
    }

    fn snowflake_q(&self) -> Result<f64> {
        if self.q < 1.0 {
            Ok(self.q)
        } else {
            Err(invalid("q", format!("requires 0 < q < 1, got {}", self.q)))
        }
    }

    fn convex_q(&self) -> Result<f64> {
        if self.q >= 1.0 {
            Ok(self.q)
        } else {
            Err(invalid("q", format!("requires q >= 1, got {}", self.q)))
        }
    }
}

fn inv(p: f64) -> f64 {
    if p.is_infinite() {
        0.0
    } else {
        1.0 / p
    }
}

/// `V_{n,p} = 2^n Gamma(1 + 1/p)^n / Gamma(1 + n/p)`; `V_{0,p} = 1`.
pub fn ball_volume(n: usize, p: f64) -> f64 {
    let ip = inv(p);
    let nf = n as f64;
    2f64.powi(n as i32) * gamma(1.0 + ip).powi(n as i32) / gamma(1.0 + nf * ip)
}

/// Evaluates the closed form of `kind` at `params`.
pub fn bound_calculator(kind: BoundKind, params: &BoundParams) -> Result<f64> {
    params.check()?;
    let (p, q) = (params.p, params.q);
    let ip = inv(p);
    let m = ip.max(1.0 - ip);
    Ok(match kind {
        BoundKind::FiniteMetric => {
            if q != 1.0 {
                return Err(invalid("q", format!("requires q = 1, got {q}")));
            }
            55.7 * (1.0 + (params.need_size(1)? as f64).ln())
        }
        BoundKind::MetricPower => 7.56 * ((params.need_size(1)? - 1) as f64).powf(q),
        BoundKind::Ultrametric => 7.56,
        BoundKind::FiniteSet => {
            let q = params.convex_q()?;
            let n = params.need_n()? as f64;
            let gamma_ratio = match (params.gamma, params.s) {
                (Some(g), _) if g >= 1.0 => g,
                (Some(g), _) => return Err(invalid("gamma", format!("must be at least 1, got {g}"))),
                (None, Some(_)) => n.powf(ip) * params.need_s()? as f64,
                (None, None) => return Err(invalid("gamma", "required by this bound (or give s)")),
            };
            let nm = n.powf(m);
            28.66 * nm * gamma_ratio.powf(q - 1.0) * (gamma_ratio / nm + 1.0).ln()
        }
        BoundKind::Torus => {
            let q = params.convex_q()?;
            let n = params.need_n()? as f64;
            let s = params.need_s()? as f64;
            57.32
                * n.powf((q - 1.0) * ip + m)
                * s.powf(q - 1.0)
                * (s / n.powf((1.0 - 2.0 * ip).max(0.0)) + 1.0).ln()
        }
        BoundKind::SnowflakeExact => {
            let q = params.snowflake_q()?;
            7.56 / (1.0 - q) * (2.47 * params.psi()?).powf(q)
        }
        BoundKind::Snowflake => {
            let q = params.snowflake_q()?;
            10.55 / (1.0 - q) * (params.need_n()? as f64).powf(q * m)
        }
        BoundKind::FiniteCollection => 23.1 * (params.need_size(2)? as f64).ln(),
        BoundKind::Circle => {
            if q < 1.0 {
                20.27 / (1.0 - q)
            } else if q == 1.0 {
                2.0
            } else {
                f64::INFINITY
            }
        }
        BoundKind::CircleTruncated => {
            let q = params.convex_q()?;
            let eta = match params.eta {
                Some(e) if e >= 0.0 => e,
                Some(e) => return Err(invalid("eta", format!("must be non-negative, got {e}"))),
                None => return Err(invalid("eta", "required by this bound")),
            };
            q * eta.powf(1.0 - 1.0 / q) + 1.0
        }
        BoundKind::Discrete => (2.0f64).min((params.need_size(1)? as f64 + 1.0) / 3.0),
        BoundKind::LowerRn => {
            let n = params.need_n()?;
            match (n, q < 1.0) {
                (1, true) => 2.0,
                (1, false) => 1.0,
                (_, true) => (2.0f64).max(1.0 / (1000.0 * (1.0 - q).sqrt())),
                (_, false) => f64::INFINITY,
            }
        }
        BoundKind::LowerBall => {
            let q = params.snowflake_q()?;
            let n = params.need_n()?;
            if n < 2 {
                return Err(invalid("n", "requires n >= 2"));
            }
            let nf = n as f64;
            let a = ((nf / q + 1.0) / ball_volume(n, p)).powf(1.0 / (nf / q + 1.0));
            let first = 2f64.powf(-q) * nf.powf(q * ip + 1.0) / (nf + q);
            let second = (a - 1.0).max(0.0) + q * nf.powf(ip + 1.0) / (2.0 * (nf + 1.0));
            (1.0 - 1.0 / nf)
                * ((nf + q) / (nf + q - nf * q) * a + 1.0 / (nf - 1.0) - first.min(second))
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params(n: usize, p: f64, q: f64) -> BoundParams {
        BoundParams {
            n: Some(n),
            p,
            q,
            ..BoundParams::default()
        }
    }

    #[test]
    fn ball_volumes() {
        assert!((ball_volume(2, 2.0) - PI).abs() < 1e-12);
        assert!((ball_volume(3, 2.0) - 4.0 * PI / 3.0).abs() < 1e-12);
        assert!((ball_volume(2, 1.0) - 2.0).abs() < 1e-12);
        assert!((ball_volume(3, f64::INFINITY) - 8.0).abs() < 1e-12);
        assert!((ball_volume(0, 2.0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn snowflake_at_the_plane() {
        let v = bound_calculator(BoundKind::Snowflake, &params(2, 2.0, 0.5)).unwrap();
        assert!((v - 21.1 * 2f64.powf(0.25)).abs() < 1e-12);
        assert!(v <= 26.0);
    }

    #[test]
    fn psi_of_the_plane() {
        // V_{1,2} / V_{2,2} = 2 / pi.
        assert!((params(2, 2.0, 0.5).psi().unwrap() - 2.0 / PI).abs() < 1e-12);
    }

    #[test]
    fn out_of_range_parameters_are_named() {
        let err = bound_calculator(BoundKind::Snowflake, &params(2, 2.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { name: "q", .. }));
        let err = bound_calculator(BoundKind::Torus, &params(2, 2.0, 1.0)).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { name: "s", .. }));
        let err = bound_calculator(BoundKind::FiniteCollection, &BoundParams {
            size: Some(1),
            ..BoundParams::default()
        })
        .unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { name: "size", .. }));
        assert!(bound_calculator(BoundKind::Ultrametric, &params(1, 0.5, 1.0)).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in BoundKind::ALL {
            assert_eq!(k.name().parse::<BoundKind>().unwrap(), k);
        }
    }

    #[test]
    fn lower_rn_cases() {
        let lb = |n, q| bound_calculator(BoundKind::LowerRn, &params(n, 2.0, q)).unwrap();
        assert_eq!(lb(1, 0.5), 2.0);
        assert_eq!(lb(1, 1.0), 1.0);
        assert_eq!(lb(2, 0.5), 2.0);
        assert!((lb(2, 1.0 - 1e-12) - 1.0 / (1000.0 * 1e-6)).abs() / lb(2, 1.0 - 1e-12) < 1e-3);
        assert_eq!(lb(3, 1.5), f64::INFINITY);
    }

    #[test]
    fn discrete_bound() {
        let d = |s| {
            bound_calculator(BoundKind::Discrete, &BoundParams {
                size: Some(s),
                ..BoundParams::default()
            })
            .unwrap()
        };
        assert_eq!(d(2), 1.0);
        assert!((d(3) - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(d(8), 2.0);
    }
}
