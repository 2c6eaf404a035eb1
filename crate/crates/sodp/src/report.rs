//! CSV emission. Schemas are pinned: exact column order, headers included,
//! floats at 17 significant digits with '.' as the decimal separator, LF
//! line endings. Two runs of the same seeded experiment must serialize to
//! byte-identical text.

use std::fmt::Write;

use crate::experiments::{CensusResult, DistinguisherRun, SweepResult};
use crate::stats::{FitResult, TrialSummary};

/// 17 significant digits, always scientific, locale-independent.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn census_csv(census: &CensusResult) -> String {
    format!(
        "N,base,odd_count,even_count\n{},{},{},{}\n",
        census.prime_count, census.base, census.odd_count, census.even_count
    )
}

pub const SWEEP_HEADER: &str =
    "axis,axis_value,sample_size,trials,avg_even,expectation,std_dev,z_score,z_signed,chebyshev_bound";

fn sweep_row(out: &mut String, axis: &str, axis_value: f64, s: &TrialSummary) {
    let _ = writeln!(
        out,
        "{axis},{},{},{},{},{},{},{},{},{}",
        fmt_f64(axis_value),
        s.sample_size,
        s.trials,
        fmt_f64(s.avg_even),
        fmt_f64(s.expectation),
        fmt_f64(s.std_dev),
        fmt_f64(s.z_score),
        fmt_f64(s.z_signed),
        fmt_f64(s.chebyshev_bound),
    );
}

pub fn sweep_csv(sweep: &SweepResult) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for point in &sweep.points {
        sweep_row(
            &mut out,
            sweep.axis.name(),
            point.axis_value,
            &point.summary,
        );
    }
    out
}

/// A single summary in the sweep schema (the mod experiment's output).
pub fn summary_csv(axis: &str, axis_value: f64, summary: &TrialSummary) -> String {
    let mut out = String::new();
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    sweep_row(&mut out, axis, axis_value, summary);
    out
}

pub fn fit_csv(fit: &FitResult) -> String {
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    format!(
        "kind,c2,c1,c0,r_squared,p_value,sse\n{},{},{},{},{},{},{}\n",
        fit.kind.as_str(),
        fmt_f64(fit.coefficients[0]),
        fmt_f64(fit.coefficients[1]),
        fmt_f64(fit.coefficients[2]),
        opt(fit.r_squared),
        opt(fit.p_value),
        fmt_f64(fit.sse),
    )
}

pub fn distinguisher_csv(run: &DistinguisherRun) -> String {
    format!(
        "verdict,z_avg,p_avg,exp_avg,std_avg,sample_size,trials,threshold\n{},{},{},{},{},{},{},{}\n",
        run.verdict,
        fmt_f64(run.z_avg),
        fmt_f64(run.p_avg),
        fmt_f64(run.exp_avg),
        fmt_f64(run.std_avg),
        run.sample_size,
        run.trials,
        fmt_f64(run.threshold),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::digits::Base;
    use crate::experiments::{Axis, SweepPoint};
    use crate::stats::{linear_fit, quadratic_fit_lnx, summarize_trials};

    #[test]
    fn float_format_is_17_significant_digits() {
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
        assert_eq!(fmt_f64(12.80), "1.2800000000000001e1");
        assert_eq!(fmt_f64(0.0), "0.0000000000000000e0");
        assert_eq!(fmt_f64(-3.25), "-3.2500000000000000e0");
    }

    #[test]
    fn census_schema() {
        let census = CensusResult {
            prime_count: 5,
            base: Base::TEN,
            odd_count: 3,
            even_count: 2,
        };
        assert_eq!(
            census_csv(&census),
            "N,base,odd_count,even_count\n5,10,3,2\n"
        );
    }

    #[test]
    fn sweep_schema_columns_and_line_endings() {
        let summary = summarize_trials(&[49_936; 4], 100_000).unwrap();
        let sweep = SweepResult {
            axis: Axis::SampleSize,
            points: vec![SweepPoint {
                axis_value: 100_000.0,
                summary,
            }],
            fit: None,
        };
        let text = sweep_csv(&sweep);
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), SWEEP_HEADER);
        let row = lines.next().unwrap();
        assert!(row.starts_with("sample_size,1.0000000000000000e5,100000,4,"));
        assert!(!text.contains('\r'));
        assert!(text.ends_with('\n'));
        assert_eq!(row.split(',').count(), SWEEP_HEADER.split(',').count());
    }

    #[test]
    fn fit_schema_blanks_linear_only_fields() {
        let lin = linear_fit(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]).unwrap();
        let text = fit_csv(&lin);
        assert!(text.starts_with("kind,c2,c1,c0,r_squared,p_value,sse\nlinear,"));
        assert!(!text.contains(",,1")); // r² and p present for linear

        let quad = quadratic_fit_lnx(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0), (4.0, 5.0)]).unwrap();
        let text = fit_csv(&quad);
        let row = text.lines().nth(1).unwrap();
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields[0], "quadratic_in_ln_x");
        assert_eq!(fields[4], "");
        assert_eq!(fields[5], "");
        assert_ne!(fields[6], "");
    }

    #[test]
    fn serialization_is_deterministic() {
        let summary = summarize_trials(&[470, 530, 511], 1000).unwrap();
        let sweep = SweepResult {
            axis: Axis::BiasRate,
            points: vec![SweepPoint {
                axis_value: 0.55,
                summary,
            }],
            fit: None,
        };
        assert_eq!(sweep_csv(&sweep), sweep_csv(&sweep.clone()));
    }
}
