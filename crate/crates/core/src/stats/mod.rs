//! Descriptive statistics and the two-condition comparison: one-way ANOVA
//! F with its p-value, and Cohen's d.

mod special;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::Condition;
use crate::metrics::SessionMetrics;

pub use special::{ln_beta, ln_gamma, regularized_incomplete_beta};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("need at least 2 values per group, found {0}")]
    TooFewValues(usize),
    #[error("values must be finite")]
    NonFinite,
    #[error("within-group variance is zero")]
    DegenerateVariance,
    #[error("no sessions for condition `{0}`")]
    MissingCondition(Condition),
    #[error("invalid F-distribution arguments: f = {f}, df = ({df1}, {df2})")]
    InvalidDistribution { f: f64, df1: f64, df2: f64 },
}

/// Which per-session indicator a comparison uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Indicator {
    /// Level of collaboration (mean overlap ratio, %).
    Collaboration,
    /// Time on task (s).
    Time,
}

impl Indicator {
    pub fn as_str(&self) -> &'static str {
        match self {
            Indicator::Collaboration => "collaboration",
            Indicator::Time => "time",
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Indicator::Collaboration => "Level of collaboration (%)",
            Indicator::Time => "Time on task (s)",
        }
    }

    pub fn value(&self, m: &SessionMetrics) -> f64 {
        match self {
            Indicator::Collaboration => m.level_of_collaboration,
            Indicator::Time => m.time_on_task,
        }
    }
}

impl fmt::Display for Indicator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Indicator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "collaboration" => Ok(Indicator::Collaboration),
            "time" => Ok(Indicator::Time),
            other => Err(format!("unknown indicator `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub condition: Condition,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub sd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anova {
    pub f_statistic: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub ss_between: f64,
    pub ss_within: f64,
}

/// Result of comparing treatment against control on one indicator.
///
/// Serializes to the comparison report JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub indicator: Indicator,
    #[serde(rename = "f")]
    pub f_statistic: f64,
    pub df_between: usize,
    pub df_within: usize,
    #[serde(rename = "p")]
    pub p_value: f64,
    pub cohens_d: f64,
    /// Treatment first, then control.
    #[serde(rename = "groups")]
    pub summaries: [GroupSummary; 2],
    pub notes: Vec<String>,
}

fn check(values: &[f64]) -> Result<(), StatsError> {
    if values.len() < 2 {
        return Err(StatsError::TooFewValues(values.len()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

fn sum_sq_dev(values: &[f64], center: f64) -> f64 {
    values.iter().map(|v| (v - center).powi(2)).sum()
}

fn is_constant(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[0] == w[1])
}

pub fn group_summary(values: &[f64], condition: Condition) -> Result<GroupSummary, StatsError> {
    check(values)?;
    let m = mean(values);
    let sd = if is_constant(values) {
        0.0
    } else {
        (sum_sq_dev(values, m) / (values.len() - 1) as f64).sqrt()
    };
    Ok(GroupSummary {
        condition,
        n: values.len(),
        mean: m,
        sd,
    })
}

/// One-way ANOVA over two groups.
pub fn anova_two_groups(a: &[f64], b: &[f64]) -> Result<Anova, StatsError> {
    check(a)?;
    check(b)?;
    if is_constant(a) && is_constant(b) {
        return Err(StatsError::DegenerateVariance);
    }
    let (mean_a, mean_b) = (mean(a), mean(b));
    let n = (a.len() + b.len()) as f64;
    let grand = (a.iter().sum::<f64>() + b.iter().sum::<f64>()) / n;
    let ss_between =
        a.len() as f64 * (mean_a - grand).powi(2) + b.len() as f64 * (mean_b - grand).powi(2);
    let ss_within = sum_sq_dev(a, mean_a) + sum_sq_dev(b, mean_b);
    if ss_within <= 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    let df_between = 1;
    let df_within = a.len() + b.len() - 2;
    let f_statistic = (ss_between / df_between as f64) / (ss_within / df_within as f64);
    Ok(Anova {
        f_statistic,
        df_between,
        df_within,
        ss_between,
        ss_within,
    })
}

/// Upper tail `P(F > f)` of the F distribution with `(df1, df2)` degrees of freedom.
pub fn f_p_value(f: f64, df1: f64, df2: f64) -> Result<f64, StatsError> {
    if !(f.is_finite()
        && f >= 0.0
        && df1 >= 1.0
        && df2 >= 1.0
        && df1.is_finite()
        && df2.is_finite())
    {
        return Err(StatsError::InvalidDistribution { f, df1, df2 });
    }
    if f == 0.0 {
        return Ok(1.0);
    }
    let x = df2 / (df2 + df1 * f);
    Ok(regularized_incomplete_beta(df2 / 2.0, df1 / 2.0, x).clamp(0.0, 1.0))
}

/// Standardized mean difference `(mean_a - mean_b) / pooled_sd`.
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    let sa = group_summary(a, Condition::Treatment)?;
    let sb = group_summary(b, Condition::Control)?;
    let pooled = pooled_sd(&sa, &sb);
    if pooled <= 0.0 {
        return Err(StatsError::DegenerateVariance);
    }
    Ok((sa.mean - sb.mean) / pooled)
}

/// Pooled sample standard deviation of two groups.
pub fn pooled_sd(a: &GroupSummary, b: &GroupSummary) -> f64 {
    let (n1, n2) = (a.n as f64, b.n as f64);
    (((n1 - 1.0) * a.sd.powi(2) + (n2 - 1.0) * b.sd.powi(2)) / (n1 + n2 - 2.0)).sqrt()
}

/// Cohen's d recomputed from published summaries.
pub fn cohens_d_from_summaries(a: &GroupSummary, b: &GroupSummary) -> f64 {
    (a.mean - b.mean) / pooled_sd(a, b)
}

/// F implied by an effect size for two groups: `d² · n₁n₂ / (n₁ + n₂)`.
pub fn f_from_cohens_d(d: f64, n1: usize, n2: usize) -> f64 {
    let (n1, n2) = (n1 as f64, n2 as f64);
    d * d * n1 * n2 / (n1 + n2)
}

pub fn compare_conditions(
    metrics: &[SessionMetrics],
    indicator: Indicator,
) -> Result<ComparisonResult, StatsError> {
    let values = |c: Condition| -> Vec<f64> {
        metrics
            .iter()
            .filter(|m| m.condition == c)
            .map(|m| indicator.value(m))
            .collect()
    };
    let treatment = values(Condition::Treatment);
    let control = values(Condition::Control);
    for (c, v) in [
        (Condition::Treatment, &treatment),
        (Condition::Control, &control),
    ] {
        if v.is_empty() {
            return Err(StatsError::MissingCondition(c));
        }
    }
    let summaries = [
        group_summary(&treatment, Condition::Treatment)?,
        group_summary(&control, Condition::Control)?,
    ];
    let anova = anova_two_groups(&treatment, &control)?;
    let p_value = f_p_value(
        anova.f_statistic,
        anova.df_between as f64,
        anova.df_within as f64,
    )?;
    let d = cohens_d(&treatment, &control)?;

    let n = treatment.len() + control.len();
    let notes = vec![
        format!(
            "df_within = n_treatment + n_control - 2 = {} + {} - 2 = {}",
            treatment.len(),
            control.len(),
            anova.df_within
        ),
        format!(
            "an F(1, {}) for these {} sessions would use the total-sample df (N - 1), not the within-group df",
            n - 1,
            n
        ),
        "cohens_d sign: treatment mean minus control mean".to_string(),
    ];
    Ok(ComparisonResult {
        indicator,
        f_statistic: anova.f_statistic,
        df_between: anova.df_between,
        df_within: anova.df_within,
        p_value,
        cohens_d: d,
        summaries,
        notes,
    })
}

impl ComparisonResult {
    /// Plain-text table with one `mean ± sd` row per condition and the test line.
    pub fn table(&self) -> String {
        let precision = match self.indicator {
            Indicator::Collaboration => 2,
            Indicator::Time => 0,
        };
        let mut out = String::new();
        out.push_str(&format!(
            "{:<10} {:>4}  {}\n",
            "",
            "n",
            self.indicator.label()
        ));
        out.push_str(&format!("{:<10} {:>4}  Mean (±SD)\n", "", ""));
        for s in &self.summaries {
            let name = match s.condition {
                Condition::Treatment => "Treatment",
                Condition::Control => "Control",
            };
            out.push_str(&format!(
                "{:<10} {:>4}  {:.prec$} ± {:.prec$}\n",
                name,
                s.n,
                s.mean,
                s.sd,
                prec = precision
            ));
        }
        out.push_str(&format!(
            "F({}, {}) = {:.2}, p = {:.4}, Cohen's d = {:.2}\n",
            self.df_between, self.df_within, self.f_statistic, self.p_value, self.cohens_d
        ));
        for note in &self.notes {
            out.push_str(&format!("note: {note}\n"));
        }
        out
    }
}
