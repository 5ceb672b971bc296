use std::io::Write;

use crate::error::{Error, Result};

pub const REPORT_HEADER: [&str; 7] = ["scenario", "method", "J", "input_snr_db", "metric", "value", "seed"];

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub scenario: String,
    pub method: String,
    pub order: usize,
    pub input_snr_db: f64,
    pub metric: String,
    pub value: f64,
    pub seed: u64,
}

/// Metric table produced by an experiment run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
}

impl ExperimentReport {
    /// Rows matching `method`, `J`, SNR and metric, in insertion order.
    pub fn select<'a>(
        &'a self,
        method: &'a str,
        order: usize,
        input_snr_db: f64,
        metric: &'a str,
    ) -> impl Iterator<Item = &'a ReportRow> + 'a {
        self.rows.iter().filter(move |r| {
            r.method == method && r.order == order && r.input_snr_db == input_snr_db && r.metric == metric
        })
    }

    /// Mean of the selected rows' values, or `None` if nothing matches.
    pub fn mean(&self, method: &str, order: usize, input_snr_db: f64, metric: &str) -> Option<f64> {
        let (sum, n) = self
            .select(method, order, input_snr_db, metric)
            .fold((0.0, 0usize), |(s, n), r| (s + r.value, n + 1));
        (n > 0).then(|| sum / n as f64)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let csv_err = |e: csv::Error| Error::Io(e.to_string());
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(REPORT_HEADER).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.scenario.clone(),
                r.method.clone(),
                r.order.to_string(),
                format_g(r.input_snr_db),
                r.metric.clone(),
                format_g(r.value),
                r.seed.to_string(),
            ])
            .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("report is ASCII")
    }
}

/// C-style `%.10g` formatting.
pub fn format_g(v: f64) -> String {
    const P: i32 = 10;
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.into();
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{:.*e}", (P - 1) as usize, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..P).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa), exp.abs())
    } else {
        trim_zeros(&format!("{:.*}", (P - 1 - exp) as usize, v)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_formatting_matches_printf() {
        let cases = [
            (0.0, "0"),
            (1.0, "1"),
            (-10.0, "-10"),
            (0.1, "0.1"),
            (1.0 / 3.0, "0.3333333333"),
            (123456789012.0, "1.23456789e+11"),
            (0.00012345, "0.00012345"),
            (0.000012345, "1.2345e-05"),
            (9999999999.5, "1e+10"),
            (2.5e-300, "2.5e-300"),
            (f64::INFINITY, "inf"),
        ];
        for (v, want) in cases {
            assert_eq!(format_g(v), want, "{v}");
        }
    }

    #[test]
    fn csv_layout() {
        let report = ExperimentReport {
            rows: vec![ReportRow {
                scenario: "tracking".into(),
                method: "dnmf".into(),
                order: 1,
                input_snr_db: -5.0,
                metric: "mse".into(),
                value: 0.125,
                seed: 7,
            }],
        };
        assert_eq!(
            report.to_csv_string(),
            "scenario,method,J,input_snr_db,metric,value,seed\ntracking,dnmf,1,-5,mse,0.125,7\n"
        );
        assert_eq!(report.mean("dnmf", 1, -5.0, "mse"), Some(0.125));
        assert_eq!(report.mean("static", 1, -5.0, "mse"), None);
    }
}
