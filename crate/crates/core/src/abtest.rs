//! Response-rate comparison between a control and a treatment arm.
//!
//! Rates are compared with a pooled two-proportion z-test and a two-sided
//! normal p-value. Relative deltas are `(p_t - p_c) / p_c`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::dataset::{Dataset, TokenId};
use crate::error::{Error, Result};

pub const DEFAULT_SIGNIFICANCE: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Proportion {
    pub successes: u64,
    pub trials: u64,
}

impl Proportion {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProportionComparison {
    pub control: Proportion,
    pub treatment: Proportion,
    /// `None` when the control rate is zero.
    pub relative_delta: Option<f64>,
    pub z: f64,
    pub p_value: f64,
}

impl ProportionComparison {
    pub fn is_significant(&self, level: f64) -> bool {
        self.p_value < level
    }
}

/// Two-sided p-value of a standard normal statistic.
pub fn normal_two_sided_p(z: f64) -> f64 {
    erfc(z.abs() / std::f64::consts::SQRT_2).clamp(0.0, 1.0)
}

/// `(p_t - p_c) / p_c` from integer counts, rounded once.
fn relative_delta(c_succ: u64, c_n: u64, t_succ: u64, t_n: u64) -> f64 {
    let num = i128::from(t_succ) * i128::from(c_n) - i128::from(c_succ) * i128::from(t_n);
    let den = i128::from(c_succ) * i128::from(t_n);
    num as f64 / den as f64
}

/// Pooled two-proportion z-test of treatment against control.
pub fn compare_proportions(
    c_succ: u64,
    c_n: u64,
    t_succ: u64,
    t_n: u64,
) -> Result<ProportionComparison> {
    if c_n == 0 || t_n == 0 {
        return Err(Error::Parameter("both arms need at least one trial".into()));
    }
    if c_succ > c_n || t_succ > t_n {
        return Err(Error::Parameter("successes exceed trials".into()));
    }
    let control = Proportion {
        successes: c_succ,
        trials: c_n,
    };
    let treatment = Proportion {
        successes: t_succ,
        trials: t_n,
    };
    let (pc, pt) = (control.rate(), treatment.rate());
    let pooled = (c_succ + t_succ) as f64 / (c_n + t_n) as f64;
    let se = (pooled * (1.0 - pooled) * (1.0 / c_n as f64 + 1.0 / t_n as f64)).sqrt();
    let z = if se > 0.0 { (pt - pc) / se } else { 0.0 };
    Ok(ProportionComparison {
        control,
        treatment,
        relative_delta: (c_succ > 0).then(|| relative_delta(c_succ, c_n, t_succ, t_n)),
        z,
        p_value: normal_two_sided_p(z),
    })
}

/// Denominator of per-token response rates.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Denominator {
    /// Every survey display in the arm.
    #[default]
    Displays,
    /// Only displays where at least one token was selected.
    Responders,
}

impl FromStr for Denominator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "displays" => Ok(Denominator::Displays),
            "responders" => Ok(Denominator::Responders),
            other => Err(Error::Parameter(format!("unknown denominator `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TokenComparison {
    pub token_id: TokenId,
    pub label: String,
    #[serde(flatten)]
    pub comparison: ProportionComparison,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Up,
    Down,
    Flat,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Flat => "flat",
        })
    }
}

impl ProportionComparison {
    pub fn direction(&self) -> Direction {
        let (pc, pt) = (self.control.rate(), self.treatment.rate());
        if pt > pc {
            Direction::Up
        } else if pt < pc {
            Direction::Down
        } else {
            Direction::Flat
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbTestReport {
    /// Any-token response rate over all displays.
    pub overall: ProportionComparison,
    pub per_token: Vec<TokenComparison>,
    pub significance_level: f64,
    pub denominator: Denominator,
}

impl AbTestReport {
    pub fn significant_tokens(&self) -> Vec<TokenId> {
        self.per_token
            .iter()
            .filter(|t| t.comparison.is_significant(self.significance_level))
            .map(|t| t.token_id)
            .collect()
    }

    /// `label,relative_delta,p_value,direction`, one row per token.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::io("<csv>", std::io::Error::other(e.to_string()));
        wtr.write_record(["label", "relative_delta", "p_value", "direction"])
            .map_err(io)?;
        for t in &self.per_token {
            let c = &t.comparison;
            wtr.write_record([
                t.label.clone(),
                c.relative_delta.map(|d| d.to_string()).unwrap_or_default(),
                c.p_value.to_string(),
                c.direction().to_string(),
            ])
            .map_err(io)?;
        }
        wtr.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(())
    }
}

/// Per-display comparison with the default significance level.
pub fn run_abtest(control: &Dataset, treatment: &Dataset) -> Result<AbTestReport> {
    run_abtest_with(
        control,
        treatment,
        Denominator::Displays,
        DEFAULT_SIGNIFICANCE,
    )
}

pub fn run_abtest_with(
    control: &Dataset,
    treatment: &Dataset,
    denominator: Denominator,
    significance_level: f64,
) -> Result<AbTestReport> {
    if control.catalog() != treatment.catalog() {
        return Err(Error::Schema(
            "control and treatment use different token catalogs".into(),
        ));
    }
    if !(significance_level > 0.0 && significance_level < 1.0) {
        return Err(Error::Parameter(format!(
            "significance level {significance_level} must be in (0, 1)"
        )));
    }
    if control.is_empty() || treatment.is_empty() {
        return Err(Error::EmptyData(
            "both arms need at least one display".into(),
        ));
    }
    let displays = |d: &Dataset| d.len() as u64;
    let responders = |d: &Dataset| d.responded_count() as u64;
    let overall = compare_proportions(
        responders(control),
        displays(control),
        responders(treatment),
        displays(treatment),
    )?;
    let trials = |d: &Dataset| match denominator {
        Denominator::Displays => displays(d),
        Denominator::Responders => responders(d),
    };
    let (c_n, t_n) = (trials(control), trials(treatment));
    if c_n == 0 || t_n == 0 {
        return Err(Error::EmptyData("an arm has no responders".into()));
    }
    let selected = |d: &Dataset, t: TokenId| {
        d.records()
            .iter()
            .filter(|r| r.selections.contains(t))
            .count() as u64
    };
    let per_token = control
        .catalog()
        .tokens()
        .iter()
        .map(|tok| {
            Ok(TokenComparison {
                token_id: tok.id,
                label: tok.label.clone(),
                comparison: compare_proportions(
                    selected(control, tok.id),
                    c_n,
                    selected(treatment, tok.id),
                    t_n,
                )?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(AbTestReport {
        overall,
        per_token,
        significance_level,
        denominator,
    })
}
