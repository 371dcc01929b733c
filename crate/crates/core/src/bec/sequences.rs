//! Finite-N classifiers for the rate conditions on `(N, a_N, b_N, A_N, |w_N|_1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::fit_linear;

/// One row of a sequence fixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceRow {
    #[serde(rename = "N")]
    pub n: u64,
    pub a: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(rename = "A")]
    pub big_a: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_l1: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceFixture {
    #[serde(default)]
    pub name: String,
    pub d: usize,
    #[serde(default = "default_rho")]
    pub rho: f64,
    pub rows: Vec<SequenceRow>,
}

fn default_rho() -> f64 {
    1.0
}

pub fn parse_sequence_fixture(text: &str) -> Result<SequenceFixture> {
    let f: SequenceFixture = serde_json::from_str(text)?;
    if f.d == 0 {
        return Err(Error::param("d", "must be at least 1"));
    }
    if !(f.rho > 0.0 && f.rho.is_finite()) {
        return Err(Error::param("rho", format!("must be positive, got {}", f.rho)));
    }
    Ok(f)
}

/// Thresholds of the log-log slope test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlopeTest {
    /// A fitted slope of `ln(value)` against `ln N` counts only beyond this.
    pub slope_threshold: f64,
    /// A vanishing hardcore sequence must end below this value.
    pub vanishing_threshold: f64,
}

impl Default for SlopeTest {
    fn default() -> Self {
        SlopeTest {
            slope_threshold: 0.05,
            vanishing_threshold: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trend {
    Diverging,
    Vanishing,
    Inconclusive,
}

impl Trend {
    pub fn as_str(&self) -> &'static str {
        match self {
            Trend::Diverging => "diverging",
            Trend::Vanishing => "vanishing",
            Trend::Inconclusive => "inconclusive",
        }
    }
}

fn positive(name: &'static str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(Error::param(name, format!("must be positive, got {v}")))
    }
}

fn loglog_slope(ns: &[u64], values: &[f64]) -> Result<f64> {
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
    let ys: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    Ok(fit_linear(&xs, &ys)?.slope)
}

fn trend(slope: f64, test: &SlopeTest) -> Trend {
    if slope > test.slope_threshold {
        Trend::Diverging
    } else if slope < -test.slope_threshold {
        Trend::Vanishing
    } else {
        Trend::Inconclusive
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HardcoreRow {
    pub n: u64,
    pub side: f64,
    /// `(1/N) (A_N ln N / a_N^d)^2`.
    pub t_n: f64,
    /// `(1/L^d) (A_N ln N / a_N^d)^2`.
    pub u_n: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HardcoreReport {
    pub d: usize,
    pub rho: f64,
    pub rows: Vec<HardcoreRow>,
    pub slope: f64,
    pub vanishing: bool,
}

pub fn hardcore_vanishing_criterion(fixture: &SequenceFixture, test: &SlopeTest) -> Result<HardcoreReport> {
    let d = fixture.d;
    let rho = positive("rho", fixture.rho)?;
    let mut rows = Vec::with_capacity(fixture.rows.len());
    for r in &fixture.rows {
        if r.n <= 1 {
            return Err(Error::param("N", format!("must exceed 1, got {}", r.n)));
        }
        let a = positive("a", r.a)?;
        let big_a = positive("A", r.big_a)?;
        let nf = r.n as f64;
        let q = (big_a * nf.ln() / a.powi(d as i32)).powi(2);
        let side = (nf / rho).powf(1.0 / d as f64);
        rows.push(HardcoreRow {
            n: r.n,
            side,
            t_n: q / nf,
            u_n: q / side.powi(d as i32),
        });
    }
    if rows.len() < 2 {
        return Err(Error::EmptyInput("sequence needs at least two rows"));
    }
    let ns: Vec<u64> = rows.iter().map(|r| r.n).collect();
    let ts: Vec<f64> = rows.iter().map(|r| r.t_n).collect();
    let slope = loglog_slope(&ns, &ts)?;
    let last = *ts.last().unwrap();
    Ok(HardcoreReport {
        d,
        rho,
        vanishing: slope < -test.slope_threshold && last < test.vanishing_threshold,
        rows,
        slope,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SoftRow {
    pub n: u64,
    /// `b a^(3d) N / (A^3 ln^3 N)`.
    pub strength: f64,
    /// `a^(3d) N / (A^3 ln^3 N)`.
    pub range: f64,
    /// `ln^2 N |w|_1`.
    pub weakness: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SoftConditionsReport {
    pub d: usize,
    pub rows: Vec<SoftRow>,
    pub slopes: [f64; 3],
    pub trends: [Trend; 3],
    /// First two diverge and the third vanishes.
    pub satisfied: bool,
}

pub fn soft_conditions_check(fixture: &SequenceFixture, test: &SlopeTest) -> Result<SoftConditionsReport> {
    let d = fixture.d;
    if fixture.rows.len() < 3 {
        return Err(Error::EmptyInput("sequence needs at least three rows"));
    }
    let mut rows = Vec::with_capacity(fixture.rows.len());
    for r in &fixture.rows {
        if r.n <= 1 {
            return Err(Error::param("N", format!("must exceed 1, got {}", r.n)));
        }
        let a = positive("a", r.a)?;
        let big_a = positive("A", r.big_a)?;
        let b = positive("b", r.b.ok_or(Error::param("b", "missing"))?)?;
        let w = positive("w_l1", r.w_l1.ok_or(Error::param("w_l1", "missing"))?)?;
        let nf = r.n as f64;
        let ln = nf.ln();
        let range = a.powi(3 * d as i32) * nf / (big_a.powi(3) * ln.powi(3));
        rows.push(SoftRow {
            n: r.n,
            strength: b * range,
            range,
            weakness: ln * ln * w,
        });
    }
    let ns: Vec<u64> = rows.iter().map(|r| r.n).collect();
    let col = |f: fn(&SoftRow) -> f64| -> Vec<f64> { rows.iter().map(f).collect() };
    let slopes = [
        loglog_slope(&ns, &col(|r| r.strength))?,
        loglog_slope(&ns, &col(|r| r.range))?,
        loglog_slope(&ns, &col(|r| r.weakness))?,
    ];
    let trends = slopes.map(|s| trend(s, test));
    Ok(SoftConditionsReport {
        d,
        rows,
        slopes,
        satisfied: trends == [Trend::Diverging, Trend::Diverging, Trend::Vanishing],
        trends,
    })
}

/// `b / (2 V K^3) (q V)^2 - b rho / 2` for volume `V = L^d`, `K >= 1` cells
/// and condensate density `q`.
pub fn interaction_lower_bound(b: f64, k: f64, volume: f64, q: f64, rho: f64) -> f64 {
    b / (2.0 * volume * k.powi(3)) * (q * volume).powi(2) - b * rho / 2.0
}

/// Expected classification of a rate fixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Expectation {
    Hardcore { vanishing: bool },
    /// Expected trend per soft condition; `None` leaves it unchecked.
    Soft([Option<Trend>; 3]),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFixture {
    pub fixture: SequenceFixture,
    pub expected: Expectation,
}

impl RateFixture {
    /// Whether the classifier output agrees with the expectation.
    pub fn check(&self, test: &SlopeTest) -> Result<bool> {
        Ok(match self.expected {
            Expectation::Hardcore { vanishing } => {
                hardcore_vanishing_criterion(&self.fixture, test)?.vanishing == vanishing
            }
            Expectation::Soft(want) => {
                let got = soft_conditions_check(&self.fixture, test)?.trends;
                want.iter().zip(got).all(|(w, g)| w.is_none_or(|w| w == g))
            }
        })
    }
}

/// `N = 10^3 .. 10^8`.
pub fn decade_grid() -> Vec<u64> {
    (3..=8).map(|e| 10u64.pow(e)).collect()
}

/// Six fixtures with known limits: three for the hardcore criterion, three
/// for the soft conditions.
pub fn rate_fixtures(d: usize) -> Vec<RateFixture> {
    let ns = decade_grid();
    let root = |v: f64| v.powf(1.0 / d as f64);
    let ln = |n: u64| (n as f64).ln();
    let build = |name: &str, row: &dyn Fn(u64) -> SequenceRow| SequenceFixture {
        name: name.to_string(),
        d,
        rho: 1.0,
        rows: ns.iter().map(|&n| row(n)).collect(),
    };
    let hard = |n: u64, a: f64, big_a: f64| SequenceRow {
        n,
        a,
        b: None,
        big_a,
        w_l1: None,
    };
    let soft = |n: u64, b: f64, big_a: f64| SequenceRow {
        n,
        a: 1.0,
        b: Some(b),
        big_a,
        w_l1: Some(ln(n).powi(-3)),
    };
    vec![
        RateFixture {
            fixture: build("hardcore-constant", &|n| hard(n, 1.0, 1.0)),
            expected: Expectation::Hardcore { vanishing: true },
        },
        RateFixture {
            // t_N = 1 for every N
            fixture: build("hardcore-balanced", &|n| {
                hard(n, root(ln(n).powi(2) / (n as f64).sqrt()), ln(n))
            }),
            expected: Expectation::Hardcore { vanishing: false },
        },
        RateFixture {
            fixture: build("hardcore-wide", &|n| hard(n, root(n as f64), 1.0)),
            expected: Expectation::Hardcore { vanishing: true },
        },
        RateFixture {
            fixture: build("soft-log-components", &|n| soft(n, 1.0, ln(n))),
            expected: Expectation::Soft([
                Some(Trend::Diverging),
                Some(Trend::Diverging),
                Some(Trend::Vanishing),
            ]),
        },
        RateFixture {
            fixture: build("soft-weak-floor", &|n| soft(n, (n as f64).powi(-2), 1.0)),
            expected: Expectation::Soft([Some(Trend::Vanishing), None, None]),
        },
        RateFixture {
            fixture: build("soft-hardcore-proxy", &|n| soft(n, n as f64, ln(n))),
            expected: Expectation::Soft([Some(Trend::Diverging), Some(Trend::Diverging), None]),
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_fixtures_classify() {
        for d in [2, 3] {
            for f in rate_fixtures(d) {
                assert!(f.check(&SlopeTest::default()).unwrap(), "{} d={d}", f.fixture.name);
            }
        }
    }

    #[test]
    fn balanced_hardcore_fixture_is_flat() {
        let f = &rate_fixtures(2)[1];
        let r = hardcore_vanishing_criterion(&f.fixture, &SlopeTest::default()).unwrap();
        for row in &r.rows {
            assert!((row.t_n - 1.0).abs() < 1e-9);
            assert!((row.u_n - row.t_n).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_hardcore_values() {
        let f = &rate_fixtures(2)[0];
        let r = hardcore_vanishing_criterion(&f.fixture, &SlopeTest::default()).unwrap();
        for row in &r.rows {
            let n = row.n as f64;
            assert!((row.t_n - n.ln().powi(2) / n).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_bad_sequences() {
        let mut f = rate_fixtures(2)[0].fixture.clone();
        f.rows[0].n = 1;
        assert!(hardcore_vanishing_criterion(&f, &SlopeTest::default()).is_err());
        let mut g = rate_fixtures(2)[3].fixture.clone();
        g.rows.truncate(2);
        assert!(soft_conditions_check(&g, &SlopeTest::default()).is_err());
        let mut h = rate_fixtures(2)[3].fixture.clone();
        h.rows[1].b = Some(0.0);
        assert!(soft_conditions_check(&h, &SlopeTest::default()).is_err());
        h.rows[1].b = None;
        assert!(soft_conditions_check(&h, &SlopeTest::default()).is_err());
    }

    #[test]
    fn lower_bound_values() {
        assert!((interaction_lower_bound(3.0, 2.0, 50.0, 0.0, 0.8) + 1.2).abs() < 1e-15);
        assert!((interaction_lower_bound(2.0, 1.0, 10.0, 1.0, 1.0) - 9.0).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_diverges_along_log_cells() {
        let q = 0.5;
        let vals: Vec<f64> = decade_grid()
            .into_iter()
            .map(|n| {
                let ln = (n as f64).ln();
                interaction_lower_bound(1.0, ln * ln, n as f64, q, 1.0)
            })
            .collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]));
        for (n, v) in decade_grid().into_iter().zip(&vals) {
            let ln = (n as f64).ln();
            assert!((v - (q * q * n as f64 / (2.0 * ln.powi(6)) - 0.5)).abs() < 1e-9 * v.abs().max(1.0));
        }
    }

    #[test]
    fn fixture_json_round_trip() {
        let f = rate_fixtures(2)[3].fixture.clone();
        let text = serde_json::to_string(&f).unwrap();
        assert!(text.contains("\"N\":1000"));
        assert_eq!(parse_sequence_fixture(&text).unwrap(), f);
        assert!(parse_sequence_fixture(r#"{"d":2,"rows":[],"extra":1}"#).is_err());
        assert!(parse_sequence_fixture(r#"{"d":2,"rho":-1,"rows":[]}"#).is_err());
    }
}
