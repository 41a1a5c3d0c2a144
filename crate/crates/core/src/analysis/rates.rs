//! Predicted convergence rates for each element pair.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{ElementPair, FluxFamily};

/// The error quantities tracked by a study.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Norm {
    #[serde(rename = "q")]
    Q,
    #[serde(rename = "div_q")]
    DivQ,
    #[serde(rename = "u")]
    U,
    #[serde(rename = "grad_u")]
    GradU,
    #[serde(rename = "pi_q")]
    SuperQ,
    #[serde(rename = "div_pi_q")]
    SuperDivQ,
    #[serde(rename = "pi_u")]
    SuperU,
    #[serde(rename = "grad_pi_u")]
    SuperGradU,
    #[serde(rename = "grad_post_u")]
    PostGradU,
    #[serde(rename = "energy")]
    Energy,
}

impl Norm {
    pub const ALL: [Norm; 10] = [
        Norm::Q,
        Norm::DivQ,
        Norm::U,
        Norm::GradU,
        Norm::SuperQ,
        Norm::SuperDivQ,
        Norm::SuperU,
        Norm::SuperGradU,
        Norm::PostGradU,
        Norm::Energy,
    ];
    pub const PLAIN: [Norm; 4] = [Norm::Q, Norm::DivQ, Norm::U, Norm::GradU];
    pub const SUPER: [Norm; 4] = [
        Norm::SuperQ,
        Norm::SuperDivQ,
        Norm::SuperU,
        Norm::SuperGradU,
    ];

    /// Short machine-friendly key used in CSV output.
    pub fn key(self) -> &'static str {
        match self {
            Norm::Q => "q",
            Norm::DivQ => "div_q",
            Norm::U => "u",
            Norm::GradU => "grad_u",
            Norm::SuperQ => "pi_q",
            Norm::SuperDivQ => "div_pi_q",
            Norm::SuperU => "pi_u",
            Norm::SuperGradU => "grad_pi_u",
            Norm::PostGradU => "grad_post_u",
            Norm::Energy => "energy",
        }
    }

    pub fn from_key(s: &str) -> Option<Norm> {
        Norm::ALL.into_iter().find(|n| n.key() == s)
    }

    pub fn label(self) -> &'static str {
        match self {
            Norm::Q => "‖q−q_h‖",
            Norm::DivQ => "‖∇·(q−q_h)‖",
            Norm::U => "‖u−u_h‖",
            Norm::GradU => "‖∇(u−u_h)‖",
            Norm::SuperQ => "‖Πq−q_h‖",
            Norm::SuperDivQ => "‖∇·(Πq−q_h)‖",
            Norm::SuperU => "‖Π_V u−u_h‖",
            Norm::SuperGradU => "‖∇(Π_V u−u_h)‖",
            Norm::PostGradU => "‖∇(u*_h−u)‖",
            Norm::Energy => "energy",
        }
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// One predicted rate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Expected {
    /// Formula as printed, e.g. `(k+k1)*`.
    pub formula: String,
    pub value: f64,
    /// Requires H^3 regularity, which the square does not provide.
    pub starred: bool,
    /// Rate gated instead of a starred value.
    pub fallback: Option<f64>,
    /// Printed in parentheses: experiments beat the prediction.
    pub observed_better: bool,
}

impl Expected {
    fn plain(formula: &str, value: usize) -> Expected {
        Expected {
            formula: formula.to_string(),
            value: value as f64,
            starred: false,
            fallback: None,
            observed_better: false,
        }
    }

    fn star(formula: &str, value: usize, fallback: usize) -> Expected {
        Expected {
            formula: format!("({formula})*"),
            value: value as f64,
            starred: true,
            fallback: Some(fallback as f64),
            observed_better: false,
        }
    }

    fn printed(value: f64, observed_better: bool) -> Expected {
        Expected {
            formula: if observed_better {
                format!("({value:.2})")
            } else {
                format!("{value:.2}")
            },
            value,
            starred: false,
            fallback: None,
            observed_better,
        }
    }

    fn capped(mut self, cap: f64) -> Expected {
        if cap < self.value {
            self.formula = format!("min({}, {cap})", self.formula);
            self.value = cap;
            self.fallback = self.fallback.map(|f| f.min(cap));
        }
        self
    }

    /// Compact value as shown in summaries: `2*`, `(1.25)`, `2`.
    pub fn display_value(&self) -> String {
        let v = if self.value.fract() == 0.0 {
            format!("{}", self.value)
        } else {
            format!("{:.2}", self.value)
        };
        if self.starred {
            format!("{v}*")
        } else if self.observed_better {
            format!("({v})")
        } else {
            v
        }
    }

    /// The rate a gate compares against.
    pub fn gate_value(&self) -> f64 {
        self.fallback.unwrap_or(self.value)
    }
}

/// How an observed rate is judged.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    AtLeast(f64),
    Within { target: f64, tol: f64 },
    Informational,
}

impl Gate {
    pub fn passes(&self, rate: f64) -> bool {
        match *self {
            Gate::AtLeast(lo) => rate >= lo,
            Gate::Within { target, tol } => (rate - target).abs() <= tol,
            Gate::Informational => true,
        }
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::AtLeast(lo) => write!(f, ">= {lo:.2}"),
            Gate::Within { target, tol } => write!(f, "{target:.2} ± {tol:.2}"),
            Gate::Informational => f.write_str("-"),
        }
    }
}

/// Predicted rates for the four plain and the four supercloseness norms.
#[derive(Clone, Debug, Serialize)]
pub struct ExpectedRates {
    pub pair: ElementPair,
    pub omega: f64,
    pub regularity: f64,
    /// Order: q, div q, u, grad u.
    pub plain: [Expected; 4],
    /// Order: Pi q, div Pi q, Pi_V u, grad Pi_V u.
    pub superclose: [Expected; 4],
    /// Rates taken from the singular-data tables.
    pub from_singular_table: bool,
}

impl ExpectedRates {
    pub fn get(&self, norm: Norm) -> Option<&Expected> {
        match norm {
            Norm::Q => Some(&self.plain[0]),
            Norm::DivQ => Some(&self.plain[1]),
            Norm::U => Some(&self.plain[2]),
            Norm::GradU => Some(&self.plain[3]),
            Norm::SuperQ => Some(&self.superclose[0]),
            Norm::SuperDivQ => Some(&self.superclose[1]),
            Norm::SuperU => Some(&self.superclose[2]),
            Norm::SuperGradU => Some(&self.superclose[3]),
            Norm::PostGradU | Norm::Energy => None,
        }
    }

    /// Gate for `norm` with smooth slack `slack` and singular band `tol`.
    pub fn gate(&self, norm: Norm, slack: f64, tol: f64) -> Gate {
        let Some(e) = self.get(norm) else {
            return Gate::Informational;
        };
        if self.regularity.is_finite() {
            if !self.from_singular_table || Norm::PLAIN.contains(&norm) {
                return Gate::Informational;
            }
            if e.observed_better {
                Gate::AtLeast(e.value - 0.1)
            } else {
                Gate::Within {
                    target: e.value,
                    tol,
                }
            }
        } else {
            Gate::AtLeast(e.gate_value() - slack)
        }
    }
}

/// Pairs with a rate prediction: `m - k` in `{-1, 0, 1}`.
pub fn supported_pairs() -> Vec<ElementPair> {
    let mut out = Vec::new();
    for (family, ks) in [(FluxFamily::RT, 0..=2), (FluxFamily::BDM, 1..=2)] {
        for k in ks {
            for m in 1..=3usize {
                if (m as i64 - k as i64).abs() <= 1 {
                    out.push(ElementPair { family, k, m });
                }
            }
        }
    }
    out
}

/// `k1 = min(k-2, 1)`, `k2 = min(k, 2)`, `k3 = min(k, 1)`.
pub fn k_expansions(k: usize) -> [i64; 3] {
    let k = k as i64;
    [(k - 2).min(1), k.min(2), k.min(1)]
}

/// Rates printed for the singular-data experiment, in the superclose order.
fn singular_table(pair: &ElementPair) -> Option<[(f64, bool); 4]> {
    use FluxFamily::*;
    Some(match (pair.family, pair.k, pair.m) {
        (RT, 0, 1) => [(1.25, true), (2.0, false), (1.25, false), (1.25, false)],
        (RT, 1, 1) => [(1.25, false), (2.0, false), (2.0, false), (1.25, true)],
        (RT, 1, 2) => [(1.25, false), (2.25, false), (2.25, false), (1.25, false)],
        (BDM, 1, 1) => [(1.25, true), (2.0, false), (1.25, true), (1.25, false)],
        (BDM, 1, 2) => [(1.25, false), (2.25, false), (1.25, false), (1.25, false)],
        (BDM, 2, 2) => [(1.25, false), (2.25, false), (2.25, false), (1.25, false)],
        _ => return None,
    })
}

/// Predicted rates for smooth data (`regularity = inf`) or for a solution
/// in `H^(2+s)` for all `s < regularity`.
pub fn expected_rates(pair: ElementPair, regularity: f64, omega: f64) -> Result<ExpectedRates> {
    let k = pair.k;
    let d = pair.m as i64 - k as i64;
    if !(-1..=1).contains(&d) || pair.m == 0 {
        return Err(Error::UnsupportedPair(format!(
            "{pair} (no rate prediction for m - k = {d})"
        )));
    }
    let [k1, k2, k3] = k_expansions(k);
    let (k2, k3) = (k2 as usize, k3 as usize);
    let kk1 = (k as i64 + k1).max(0) as usize;
    use Expected as E;
    let (plain, superclose) = match (pair.family, d) {
        (FluxFamily::BDM, -1) => (
            [
                E::star("k+k1", kk1, k),
                E::plain("k", k),
                E::plain("k", k),
                E::plain("k-1", k - 1),
            ],
            [
                E::star("k+k1", kk1, k),
                E::plain("k", k),
                E::star("k+k1", kk1, k),
                E::plain("k", k),
            ],
        ),
        (FluxFamily::BDM, 0) => (
            [
                E::plain("k+1", k + 1),
                E::plain("k", k),
                E::plain("k+1", k + 1),
                E::plain("k", k),
            ],
            [
                E::plain("k+1", k + 1),
                E::plain("k+1", k + 1),
                E::star("k+k2", k + k2, k + 1),
                E::plain("k+1", k + 1),
            ],
        ),
        (FluxFamily::BDM, _) => {
            let div = if k == 1 && omega != 0.0 {
                E::plain("k+1 (k=1, ω≠0)", k + 1)
            } else {
                E::plain("k+2", k + 2)
            };
            (
                [
                    E::plain("k+1", k + 1),
                    E::plain("k", k),
                    E::plain("k+k2", k + k2),
                    E::plain("k+1", k + 1),
                ],
                [
                    E::plain("k+1", k + 1),
                    div,
                    E::plain("k+k2", k + k2),
                    E::plain("k+1", k + 1),
                ],
            )
        }
        (FluxFamily::RT, -1) => (
            [
                E::star("k+k1", kk1, k),
                E::plain("k", k),
                E::plain("k", k),
                E::plain("k-1", k - 1),
            ],
            [
                E::star("k+k1", kk1, k),
                E::plain("k", k),
                E::star("k+k1", kk1, k),
                E::plain("k", k),
            ],
        ),
        (FluxFamily::RT, 0) => (
            [
                E::plain("k+1", k + 1),
                E::plain("k+1", k + 1),
                E::plain("k+1", k + 1),
                E::plain("k", k),
            ],
            [
                E::plain("k+1", k + 1),
                E::plain("k+1", k + 1),
                E::star("k+k2", k + k2, k + 1),
                E::plain("k+1", k + 1),
            ],
        ),
        (FluxFamily::RT, _) => {
            let grad = if k == 0 {
                E::plain("k+2 (k=0)", k + 2)
            } else {
                E::star("k+2", k + 2, k + 1)
            };
            (
                [
                    E::plain("k+1", k + 1),
                    E::plain("k+1", k + 1),
                    E::plain("k+2", k + 2),
                    E::plain("k+1", k + 1),
                ],
                [
                    E::plain("k+1", k + 1),
                    E::plain("k+2", k + 2),
                    E::star("k+2+k3", k + 2 + k3, k + 2),
                    grad,
                ],
            )
        }
    };

    if regularity.is_infinite() {
        return Ok(ExpectedRates {
            pair,
            omega,
            regularity,
            plain,
            superclose,
            from_singular_table: false,
        });
    }

    let t = regularity;
    if let Some(row) = singular_table(&pair) {
        let [q, dq, u, gu] = plain;
        return Ok(ExpectedRates {
            pair,
            omega,
            regularity,
            plain: [
                q.capped(1.0 + t),
                dq.capped(t),
                u.capped(2.0 + t),
                gu.capped(1.0 + t),
            ],
            superclose: row.map(|(v, b)| E::printed(v, b)),
            from_singular_table: true,
        });
    }
    let [q, dq, u, gu] = plain;
    let [sq, sdq, su, sgu] = superclose;
    Ok(ExpectedRates {
        pair,
        omega,
        regularity,
        plain: [
            q.capped(1.0 + t),
            dq.capped(t),
            u.capped(2.0 + t),
            gu.capped(1.0 + t),
        ],
        superclose: [
            sq.capped(1.0 + t),
            sdq.capped(2.0 + t),
            su.capped(2.0 + t),
            sgu.capped(1.0 + t),
        ],
        from_singular_table: false,
    })
}
