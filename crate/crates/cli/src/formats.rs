//! JSON and CSV shapes shared by the subcommands.
//!
//! Every reader rejects unknown keys. Floats are written with the shortest
//! representation that round-trips, so equal values give equal bytes.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{de::DeserializeOwned, Deserialize, Serialize};
use trinet_core::inflation::{Certificate, InflationLP, RowKind};
use trinet_core::local::LocalModel;
use trinet_core::quantum::{FitResult, ModelParams};
use trinet_core::tensor::C64;
use trinet_core::testers::Tester;
use trinet_core::{ComplexMatrix, TripartiteDistribution, Visibility};

/// Schema tags written into every CSV header line and JSON bundle.
pub const SCAN_SCHEMA: &str = "trinet.scan/1";
pub const TRACE_SCHEMA: &str = "trinet.seesaw-trace/1";
pub const CERTIFICATE_SCHEMA: &str = "trinet.certificate/1";

/// Outcome order of the probability vector: index `4a + 2b + c`.
pub const ORDER: &str = "abc";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<String>,
    pub p: [f64; 8],
    pub order: String,
}

impl DistributionJson {
    pub fn new(d: &TripartiteDistribution, v: Option<&Visibility>) -> Self {
        Self {
            v: v.map(|v| v.to_string()),
            p: *d.probs(),
            order: ORDER.into(),
        }
    }

    pub fn to_distribution(&self) -> Result<TripartiteDistribution> {
        if self.order != ORDER {
            bail!("unsupported outcome order {:?}, expected {ORDER:?}", self.order);
        }
        Ok(TripartiteDistribution::new(self.p)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParamsJson {
    pub p0: f64,
    pub p_empty: f64,
    pub omega: f64,
    pub theta0: f64,
    pub theta1: f64,
}

impl From<&ModelParams> for ModelParamsJson {
    fn from(p: &ModelParams) -> Self {
        Self {
            p0: p.p0,
            p_empty: p.p_empty,
            omega: p.omega,
            theta0: p.theta0,
            theta1: p.theta1,
        }
    }
}

impl ModelParamsJson {
    pub fn to_params(self) -> Result<ModelParams> {
        Ok(ModelParams::new(self.p0, self.p_empty, self.omega, self.theta0, self.theta1)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FitJson {
    pub v: String,
    pub params: ModelParamsJson,
    pub l2: f64,
    pub iterations: usize,
}

impl From<&FitResult> for FitJson {
    fn from(f: &FitResult) -> Self {
        Self {
            v: f.v.to_string(),
            params: (&f.params).into(),
            l2: f.l2,
            iterations: f.iterations,
        }
    }
}

/// Complex matrices are row-major lists of rows of `[re, im]` pairs.
pub type MatrixJson = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_json(m: &ComplexMatrix) -> MatrixJson {
    (0..m.rows()).map(|i| (0..m.cols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
}

pub fn matrix_from_json(m: &MatrixJson) -> Result<ComplexMatrix> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    if m.iter().any(|r| r.len() != cols) {
        bail!("ragged matrix");
    }
    let data = m.iter().flatten().map(|&[re, im]| C64::new(re, im)).collect();
    Ok(ComplexMatrix::from_vec(rows, cols, data)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TesterJson {
    pub d_in: usize,
    pub d_out: usize,
    /// One operator per outcome on `out ⊗ in`.
    pub elements: Vec<MatrixJson>,
}

impl From<&Tester> for TesterJson {
    fn from(t: &Tester) -> Self {
        Self {
            d_in: t.d_in(),
            d_out: t.d_out(),
            elements: t.elements().iter().map(matrix_to_json).collect(),
        }
    }
}

impl TesterJson {
    pub fn to_tester(&self) -> Result<Tester> {
        let elements = self.elements.iter().map(matrix_from_json).collect::<Result<Vec<_>>>()?;
        Ok(Tester::new(self.d_in, self.d_out, elements)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourcesJson {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
}

/// Probability of outcome 0, indexed `a[β][γ]`, `b[γ][α]`, `c[α][β]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponsesJson {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    pub c: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalModelJson {
    /// `[c_α, c_β, c_γ]`.
    pub cardinalities: [usize; 3],
    pub sources: SourcesJson,
    pub responses: ResponsesJson,
}

impl From<&LocalModel> for LocalModelJson {
    fn from(m: &LocalModel) -> Self {
        let (a, b, c) = m.cardinalities();
        Self {
            cardinalities: [a, b, c],
            sources: SourcesJson {
                alpha: m.source_alpha().to_vec(),
                beta: m.source_beta().to_vec(),
                gamma: m.source_gamma().to_vec(),
            },
            responses: ResponsesJson {
                a: m.response_a().to_vec(),
                b: m.response_b().to_vec(),
                c: m.response_c().to_vec(),
            },
        }
    }
}

impl LocalModelJson {
    pub fn to_model(&self) -> Result<LocalModel> {
        let s = &self.sources;
        let found = [s.alpha.len(), s.beta.len(), s.gamma.len()];
        if found != self.cardinalities {
            bail!("cardinalities {:?} do not match source lengths {found:?}", self.cardinalities);
        }
        let r = &self.responses;
        Ok(LocalModel::new(
            s.alpha.clone(),
            s.beta.clone(),
            s.gamma.clone(),
            r.a.clone(),
            r.b.clone(),
            r.c.clone(),
        )?)
    }
}

/// A Farkas certificate keyed by constraint index. Coefficients are exact
/// `"num/den"` strings when available, otherwise floats scaled to unit
/// max-norm. Zero multipliers are omitted.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateJson {
    pub schema: &'static str,
    pub rows: usize,
    pub variables: usize,
    pub reduced: bool,
    pub exact: bool,
    pub coefficients: BTreeMap<usize, String>,
    pub constraints: BTreeMap<usize, String>,
}

fn describe(kind: &RowKind) -> String {
    match kind {
        RowKind::Normalization => "normalization".into(),
        RowKind::Symmetry { generator, event } => format!("symmetry generator={generator} event={event}"),
        RowKind::Marginal { set, outcome } => format!("marginal set={set} outcome={outcome}"),
    }
}

impl CertificateJson {
    pub fn new(lp: &InflationLP, cert: &Certificate) -> Self {
        let mut coefficients = BTreeMap::new();
        match &cert.y_exact {
            Some(yq) => {
                for (i, y) in yq.iter().enumerate().filter(|(_, y)| *y.numer() != 0.into()) {
                    coefficients.insert(i, y.to_string());
                }
            }
            None => {
                let scale = cert.y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                for (i, y) in cert.y.iter().enumerate().filter(|(_, y)| **y != 0.0) {
                    coefficients.insert(i, fmt_f64(y / scale));
                }
            }
        }
        let constraints = coefficients.keys().map(|&i| (i, describe(&lp.rows[i].kind))).collect();
        Self {
            schema: CERTIFICATE_SCHEMA,
            rows: lp.rows.len(),
            variables: lp.n_vars,
            reduced: lp.is_reduced(),
            exact: cert.y_exact.is_some(),
            coefficients,
            constraints,
        }
    }
}

/// Shortest round-trip text for a float, with an exponent for very small or
/// very large magnitudes.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-5..1e16).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// CSV with a leading `# schema=...` comment line.
pub fn write_csv<W: Write>(out: &mut W, schema: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    writeln!(out, "# schema={schema}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Scan rows: `v, p0, p_empty, omega, theta0, theta1, l2`.
pub fn scan_rows(fits: &[FitResult]) -> Vec<Vec<String>> {
    fits.iter()
        .map(|f| {
            let p = &f.params;
            vec![
                f.v.to_string(),
                fmt_f64(p.p0),
                fmt_f64(p.p_empty),
                fmt_f64(p.omega),
                fmt_f64(p.theta0),
                fmt_f64(p.theta1),
                fmt_f64(f.l2),
            ]
        })
        .collect()
}

pub const SCAN_HEADER: [&str; 7] = ["v", "p0", "p_empty", "omega", "theta0", "theta1", "l2"];
pub const TRACE_HEADER: [&str; 3] = ["restart", "sweep", "l2"];

/// Read a scan CSV back, skipping the schema line.
pub fn read_scan_csv(text: &str) -> Result<Vec<[f64; 7]>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(l) if l == format!("# schema={SCAN_SCHEMA}") => {}
        other => bail!("missing scan schema line, found {other:?}"),
    }
    let body: String = lines.map(|l| format!("{l}\n")).collect();
    let mut r = csv::Reader::from_reader(body.as_bytes());
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let mut row = [0.0; 7];
        for (k, field) in rec.iter().enumerate().take(7) {
            row[k] = if k == 0 {
                field.parse::<Visibility>()?.value()
            } else {
                field.parse()?
            };
        }
        out.push(row);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use trinet_core::dists::w_dist;
    use trinet_core::local::golden_model;
    use trinet_core::testers::model_testers;

    #[test]
    fn distribution_round_trip() {
        let v: Visibility = "3/5".parse().unwrap();
        let j = DistributionJson::new(&w_dist(&v), Some(&v));
        let back: DistributionJson = serde_json::from_str(&to_json(&j).unwrap()).unwrap();
        assert_eq!(back, j);
        assert_eq!(back.to_distribution().unwrap(), w_dist(&v));
    }

    #[test]
    fn unknown_keys_and_orders_are_rejected() {
        let bad = r#"{"p":[1,0,0,0,0,0,0,0],"order":"abc","extra":1}"#;
        assert!(serde_json::from_str::<DistributionJson>(bad).is_err());
        let j: DistributionJson = serde_json::from_str(r#"{"p":[1,0,0,0,0,0,0,0],"order":"cba"}"#).unwrap();
        assert!(j.to_distribution().is_err());
    }

    #[test]
    fn tester_round_trip() {
        let p = trinet_core::quantum::continuation_anchor();
        let (r, _, _) = model_testers(&p).unwrap();
        let j = TesterJson::from(&r);
        let back: TesterJson = serde_json::from_str(&to_json(&j).unwrap()).unwrap();
        assert_eq!(back.to_tester().unwrap(), r);
    }

    #[test]
    fn local_model_round_trip() {
        let m = golden_model();
        let j = LocalModelJson::from(&m);
        let back: LocalModelJson = serde_json::from_str(&to_json(&j).unwrap()).unwrap();
        assert_eq!(back.to_model().unwrap(), m);
        let mut wrong = back.clone();
        wrong.cardinalities = [2, 2, 2];
        assert!(wrong.to_model().is_err());
    }

    #[test]
    fn floats_round_trip_through_text() {
        for x in [0.0, 1.0, -0.25, 8.092071311423672e-17, 1e-5, 3.5e20, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(8.092071311423672e-17), "8.092071311423672e-17");
        assert_eq!(fmt_f64(0.5), "0.5");
    }

    #[test]
    fn scan_csv_round_trip() {
        let v: Visibility = "1/2".parse().unwrap();
        let f = FitResult {
            params: trinet_core::quantum::continuation_anchor(),
            l2: 1e-17,
            v,
            iterations: 3,
        };
        let mut buf = Vec::new();
        write_csv(&mut buf, SCAN_SCHEMA, &SCAN_HEADER, &scan_rows(&[f])).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# schema=trinet.scan/1\nv,p0,"));
        assert!(text.trim_end().ends_with(",1e-17"));
        let rows = read_scan_csv(&text).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0][0], 0.5);
        assert_eq!(rows[0][6], 1e-17);
    }
}
