//! Report files: deterministic JSON serialization of synthesis results and
//! verification results.
//!
//! Writing is done by hand with every floating-point number printed at 17
//! significant digits, so identical inputs always produce byte-identical
//! files and values round-trip losslessly. Reading goes through `serde_json`
//! and accepts any standard JSON formatting.

use serde_json::Value;
use thiserror::Error;

use crate::matcore::Mat;
use crate::poly;
use crate::synth::{Certificate, Diagnostics, SynthStatus, SynthesisReport};
use crate::verify::VerificationReport;

pub const CERTIFICATE_SCHEMA: &str = "kcbc-certificate-1";
pub const VERIFICATION_SCHEMA: &str = "kcbc-verification-1";

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("report parse error: {0}")]
    Parse(String),
    #[error("report field {0}: {1}")]
    Field(&'static str, String),
}

/// 17 significant digits: enough to round-trip any f64 exactly.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "\"nan\"".into()
    } else if v > 0.0 {
        "\"inf\"".into()
    } else {
        "\"-inf\"".into()
    }
}

fn fmt_f64_slice(vs: &[f64]) -> String {
    let parts: Vec<String> = vs.iter().map(|&v| fmt_f64(v)).collect();
    format!("[{}]", parts.join(", "))
}

fn json_string(s: &str) -> String {
    // serde_json escapes per the JSON grammar; output is deterministic
    serde_json::to_string(s).expect("string serialization cannot fail")
}

fn mat_json(m: &Mat, indent: &str) -> String {
    let rows: Vec<String> = (0..m.rows())
        .map(|r| {
            let row: Vec<f64> = (0..m.cols()).map(|c| m.get(r, c)).collect();
            format!("{indent}  {}", fmt_f64_slice(&row))
        })
        .collect();
    format!("[\n{}\n{indent}]", rows.join(",\n"))
}

fn status_str(s: SynthStatus) -> &'static str {
    match s {
        SynthStatus::Certified => "Certified",
        SynthStatus::NotFoundAtK => "NotFoundAtK",
        SynthStatus::DataError => "DataError",
    }
}

fn diagnostics_json(d: &Diagnostics, indent: &str) -> String {
    let msgs: Vec<String> = d.messages.iter().map(|m| json_string(m)).collect();
    let opt = |v: Option<f64>| v.map_or("null".into(), fmt_f64);
    format!(
        "{{\n{indent}  \"stage\": {},\n{indent}  \"sdp_iterations\": {},\n\
         {indent}  \"lmi_margin\": {},\n{indent}  \"cancellation_residual\": {},\n\
         {indent}  \"messages\": [{}]\n{indent}}}",
        json_string(&d.stage),
        d.sdp_iterations,
        opt(d.lmi_margin),
        opt(d.cancellation_residual),
        msgs.join(", "),
    )
}

/// Serialize a synthesis report (certificate, controller gain, dictionary
/// term list, diagnostics) to deterministic JSON.
pub fn certificate_report_json(report: &SynthesisReport) -> String {
    let mut out = String::from("{\n");
    out.push_str(&format!("  \"schema\": {},\n", json_string(CERTIFICATE_SCHEMA)));
    out.push_str(&format!(
        "  \"status\": {},\n",
        json_string(status_str(report.status))
    ));

    match &report.certificate {
        Some(c) => {
            out.push_str(&format!("  \"k\": {},\n", c.k));
            out.push_str(&format!("  \"n\": {},\n", c.p.rows()));
            out.push_str(&format!("  \"p\": {},\n", mat_json(&c.p, "  ")));
            out.push_str(&format!("  \"gamma\": {},\n", fmt_f64(c.gamma)));
            out.push_str(&format!("  \"lambda\": {},\n", fmt_f64(c.lambda_)));
            out.push_str(&format!("  \"epsilon\": {},\n", fmt_f64(c.epsilon)));
            out.push_str(&format!("  \"margin\": {},\n", fmt_f64(c.margin)));
            let barrier = poly::quadratic_form(&c.p)
                .map(|q| q.to_text())
                .unwrap_or_default();
            out.push_str(&format!("  \"barrier\": {},\n", json_string(&barrier)));
        }
        None => {
            out.push_str("  \"certificate\": null,\n");
        }
    }

    match &report.controller {
        Some(ctl) => {
            out.push_str(&format!(
                "  \"k_gain\": {},\n",
                mat_json(&ctl.k_gain, "  ")
            ));
            let labels: Vec<String> = ctl
                .dictionary
                .term_labels()
                .iter()
                .map(|l| json_string(l))
                .collect();
            out.push_str(&format!("  \"dictionary\": [{}],\n", labels.join(", ")));
        }
        None => {
            out.push_str("  \"k_gain\": null,\n  \"dictionary\": null,\n");
        }
    }

    out.push_str(&format!(
        "  \"diagnostics\": {}\n}}\n",
        diagnostics_json(&report.diagnostics, "  ")
    ));
    out
}

/// Serialize a verification report to deterministic JSON.
pub fn verification_report_json(rep: &VerificationReport) -> String {
    let mut out = String::from("{\n");
    out.push_str(&format!(
        "  \"schema\": {},\n",
        json_string(VERIFICATION_SCHEMA)
    ));
    out.push_str(&format!(
        "  \"pass\": {},\n",
        if rep.pass { "true" } else { "false" }
    ));

    let checks: Vec<String> = rep
        .condition_checks
        .checks
        .iter()
        .map(|c| {
            format!(
                "    {{\n      \"name\": {},\n      \"max_violation\": {},\n      \
                 \"argmax\": {},\n      \"samples\": {}\n    }}",
                json_string(&c.name),
                fmt_f64(c.max_violation),
                fmt_f64_slice(&c.argmax),
                c.samples,
            )
        })
        .collect();
    out.push_str(&format!("  \"checks\": [\n{}\n  ],\n", checks.join(",\n")));
    out.push_str(&format!(
        "  \"eig_check\": {},\n",
        fmt_f64(rep.condition_checks.eig_check)
    ));

    match &rep.level_set {
        Some(ls) => out.push_str(&format!(
            "  \"level_set\": {{\n    \"exact_initial_max\": {},\n    \
             \"exact_unsafe_min\": {}\n  }},\n",
            fmt_f64(ls.exact_initial_max),
            fmt_f64_slice(&ls.exact_unsafe_min),
        )),
        None => out.push_str("  \"level_set\": null,\n"),
    }

    match &rep.monte_carlo {
        Some(mc) => out.push_str(&format!(
            "  \"monte_carlo\": {{\n    \"trajectories\": {},\n    \"horizon\": {},\n    \
             \"violations\": {},\n    \"diverged\": {},\n    \"min_distance\": {}\n  }},\n",
            mc.trajectories,
            mc.horizon,
            mc.violations,
            mc.diverged,
            fmt_f64(mc.min_distance),
        )),
        None => out.push_str("  \"monte_carlo\": null,\n"),
    }

    out.push_str(&format!(
        "  \"controller_sup\": {}\n}}\n",
        fmt_f64(rep.controller_sup)
    ));
    out
}

/// The parts of a certificate report needed to re-verify it: certificate
/// values, controller gain (row-major), and the dictionary term labels.
#[derive(Debug, Clone)]
pub struct ParsedCertificateReport {
    pub status: String,
    pub certificate: Option<Certificate>,
    pub k_gain: Option<Mat>,
    pub dictionary_labels: Option<Vec<String>>,
}

fn get_f64(v: &Value, field: &'static str) -> Result<f64, ReportError> {
    v.get(field)
        .and_then(Value::as_f64)
        .ok_or(ReportError::Field(field, "missing or not a number".into()))
}

fn get_mat(v: &Value, field: &'static str) -> Result<Mat, ReportError> {
    let rows = v
        .get(field)
        .and_then(Value::as_array)
        .ok_or(ReportError::Field(field, "missing or not an array".into()))?;
    let parsed: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| {
            row.as_array()
                .map(|cells| cells.iter().filter_map(Value::as_f64).collect())
                .ok_or(ReportError::Field(field, "row is not an array".into()))
        })
        .collect::<Result<_, _>>()?;
    let nrows = parsed.len();
    let ncols = parsed.first().map_or(0, Vec::len);
    if parsed.iter().any(|r| r.len() != ncols) {
        return Err(ReportError::Field(field, "ragged rows".into()));
    }
    Mat::new(nrows, ncols, parsed.concat())
        .map_err(|e| ReportError::Field(field, e.to_string()))
}

/// Parse a certificate report produced by [`certificate_report_json`].
pub fn parse_certificate_report(text: &str) -> Result<ParsedCertificateReport, ReportError> {
    let v: Value =
        serde_json::from_str(text).map_err(|e| ReportError::Parse(e.to_string()))?;
    let schema = v.get("schema").and_then(Value::as_str).unwrap_or("");
    if schema != CERTIFICATE_SCHEMA {
        return Err(ReportError::Parse(format!(
            "unsupported schema {schema:?}, expected {CERTIFICATE_SCHEMA:?}"
        )));
    }
    let status = v
        .get("status")
        .and_then(Value::as_str)
        .ok_or(ReportError::Field("status", "missing".into()))?
        .to_string();

    let certificate = if v.get("p").is_some_and(|p| !p.is_null()) {
        Some(Certificate {
            p: get_mat(&v, "p")?,
            gamma: get_f64(&v, "gamma")?,
            lambda_: get_f64(&v, "lambda")?,
            epsilon: get_f64(&v, "epsilon")?,
            k: v
                .get("k")
                .and_then(Value::as_u64)
                .ok_or(ReportError::Field("k", "missing or not an integer".into()))?
                as usize,
            margin: get_f64(&v, "margin")?,
        })
    } else {
        None
    };

    let k_gain = match v.get("k_gain") {
        Some(Value::Null) | None => None,
        Some(_) => Some(get_mat(&v, "k_gain")?),
    };
    let dictionary_labels = v.get("dictionary").and_then(Value::as_array).map(|items| {
        items
            .iter()
            .filter_map(Value::as_str)
            .map(str::to_string)
            .collect()
    });

    Ok(ParsedCertificateReport {
        status,
        certificate,
        k_gain,
        dictionary_labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::plant::DictionarySpec;
    use crate::synth::Controller;

    fn sample_report() -> SynthesisReport {
        let p = Mat::from_rows(&[&[1.8, 0.1], &[0.1, 0.2]]);
        let cert = Certificate {
            p,
            gamma: 0.84,
            lambda_: 2.5,
            epsilon: 0.125,
            k: 3,
            margin: 2e-6,
        };
        let dict = DictionarySpec::linear(2);
        let ctl = Controller {
            k_gain: Mat::from_rows(&[&[0.25, -0.5]]),
            dictionary: dict,
        };
        SynthesisReport {
            status: SynthStatus::Certified,
            certificate: Some(cert),
            controller: Some(ctl),
            rep: None,
            diagnostics: Diagnostics {
                stage: "k-cbc".into(),
                sdp_iterations: 1234,
                lmi_margin: Some(1e-3),
                cancellation_residual: None,
                messages: vec!["ok".into()],
            },
        }
    }

    #[test]
    fn certificate_round_trip_is_lossless() {
        let rep = sample_report();
        let text = certificate_report_json(&rep);
        let parsed = parse_certificate_report(&text).unwrap();
        assert_eq!(parsed.status, "Certified");
        let c = parsed.certificate.unwrap();
        let orig = rep.certificate.as_ref().unwrap();
        assert_eq!(c.p, orig.p);
        assert_eq!(c.gamma, orig.gamma);
        assert_eq!(c.lambda_, orig.lambda_);
        assert_eq!(c.epsilon, orig.epsilon);
        assert_eq!(c.k, orig.k);
        assert_eq!(c.margin, orig.margin);
        assert_eq!(parsed.k_gain.unwrap(), rep.controller.as_ref().unwrap().k_gain);
        assert_eq!(
            parsed.dictionary_labels.unwrap(),
            vec!["x1".to_string(), "x2".to_string()]
        );
    }

    #[test]
    fn serialization_is_deterministic() {
        let rep = sample_report();
        assert_eq!(certificate_report_json(&rep), certificate_report_json(&rep));
    }

    #[test]
    fn float_formatting_round_trips_awkward_values() {
        for &v in &[0.1, 1.0 / 3.0, 2.686074999999312e0, 1e-300, -4.0] {
            let s = fmt_f64(v);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back, v, "value {v} reformatted as {s}");
        }
    }

    #[test]
    fn not_found_report_serializes_without_certificate() {
        let rep = SynthesisReport {
            status: SynthStatus::NotFoundAtK,
            certificate: None,
            controller: None,
            rep: None,
            diagnostics: Diagnostics {
                stage: "k-cbc".into(),
                messages: vec!["no feasible solution at k = 1".into()],
                ..Diagnostics::default()
            },
        };
        let text = certificate_report_json(&rep);
        let parsed = parse_certificate_report(&text).unwrap();
        assert_eq!(parsed.status, "NotFoundAtK");
        assert!(parsed.certificate.is_none());
        assert!(parsed.k_gain.is_none());
    }

    #[test]
    fn wrong_schema_is_rejected() {
        let err = parse_certificate_report("{\"schema\": \"other\"}").unwrap_err();
        assert!(err.to_string().contains("unsupported schema"));
    }
}
