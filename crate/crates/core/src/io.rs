//! JSON specs, CSV ingestion and number formatting for the command line.

use std::collections::{BTreeMap, HashMap};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::risk::RiskFunctional;
use crate::scoring::ForecastSeries;
use crate::spectral::{ParametricDensity, SpectralMeasure};

/// Normalization slack accepted when reading a measure from text.
pub const SPEC_NORMALIZATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DensitySpec {
    Uc {
        #[serde(rename = "C")]
        c: f64,
    },
}

/// `{"atom0": w, "atoms": [[alpha, w], ...], "density": {"type": "uc", "C": c} | null}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    #[serde(default)]
    pub atom0: f64,
    #[serde(default)]
    pub atoms: Vec<(f64, f64)>,
    #[serde(default)]
    pub density: Option<DensitySpec>,
}

impl MeasureSpec {
    pub fn to_measure(&self) -> Result<SpectralMeasure<f64>> {
        let density = self.density.as_ref().map(|d| match *d {
            DensitySpec::Uc { c } => ParametricDensity::Uc { c },
        });
        SpectralMeasure::with_tolerance(
            self.atom0,
            self.atoms.clone(),
            density,
            SPEC_NORMALIZATION_TOL,
        )
    }

    pub fn from_measure(m: &SpectralMeasure<f64>) -> Self {
        Self {
            atom0: m.atom_at_zero(),
            atoms: m.atoms().to_vec(),
            density: m.density().map(|d| match *d {
                ParametricDensity::Uc { c } => DensitySpec::Uc { c },
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum FunctionalSpec {
    Var { level: f64 },
    Es { level: f64 },
    Expectile { level: f64 },
    Negmean,
    Spectral { measure: MeasureSpec },
    InfFamily { measures: Vec<MeasureSpec> },
}

impl FunctionalSpec {
    pub fn to_functional(&self) -> Result<RiskFunctional<f64>> {
        let rf = match self {
            FunctionalSpec::Var { level } => RiskFunctional::VaR { alpha: *level },
            FunctionalSpec::Es { level } => RiskFunctional::Es { alpha: *level },
            FunctionalSpec::Expectile { level } => RiskFunctional::Expectile { tau: *level },
            FunctionalSpec::Negmean => RiskFunctional::NegMean,
            FunctionalSpec::Spectral { measure } => RiskFunctional::Spectral(measure.to_measure()?),
            FunctionalSpec::InfFamily { measures } => RiskFunctional::InfOverFamily(
                measures
                    .iter()
                    .map(MeasureSpec::to_measure)
                    .collect::<Result<_>>()?,
            ),
        };
        rf.validate()?;
        Ok(rf)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DistributionSpec {
    TwoPoint { x1: f64, x2: f64, p: f64 },
    Atomic { atoms: Vec<(f64, f64)> },
    Empirical { values: Vec<f64> },
    Uniform { a: f64, b: f64 },
}

impl DistributionSpec {
    pub fn to_distribution(&self) -> Result<Distribution<f64>> {
        match self {
            DistributionSpec::TwoPoint { x1, x2, p } => Distribution::two_point(*x1, *x2, *p),
            DistributionSpec::Atomic { atoms } => Distribution::finite_atomic(atoms.clone()),
            DistributionSpec::Empirical { values } => Distribution::empirical(values),
            DistributionSpec::Uniform { a, b } => Distribution::uniform(*a, *b),
        }
    }

    /// Number of atoms or observations; zero for a continuous law.
    pub fn size(&self) -> usize {
        match self {
            DistributionSpec::TwoPoint { .. } => 2,
            DistributionSpec::Atomic { atoms } => atoms.len(),
            DistributionSpec::Empirical { values } => values.len(),
            DistributionSpec::Uniform { .. } => 0,
        }
    }
}

pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

fn parse_real(field: &str, line: u64, column: &str) -> Result<f64> {
    let v: f64 = field
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("line {line}: {column} = {field:?} is not a number")))?;
    if !v.is_finite() {
        return Err(Error::Parse(format!("line {line}: {column} is not finite")));
    }
    Ok(v)
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h.trim() == name)
        .ok_or_else(|| Error::Parse(format!("missing column {name:?}")))
}

/// Reads the `y` column of a CSV with one header row.
pub fn read_observations<R: Read>(reader: R) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let y = column(&rdr.headers().map_err(csv_err)?.clone(), "y")?;
    let mut values = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let field = record
            .get(y)
            .ok_or_else(|| Error::Parse(format!("line {line}: missing y")))?;
        values.push(parse_real(field, line, "y")?);
    }
    if values.is_empty() {
        return Err(Error::Empty("observations"));
    }
    Ok(values)
}

/// Reads `method,period,forecast,realization`. Periods are ordered by first
/// appearance; every method must cover the same periods, and each period has
/// a single realization.
pub fn read_forecasts<R: Read>(reader: R) -> Result<ForecastSeries<f64>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers().map_err(csv_err)?.clone();
    let (mc, pc, fc, rc) = (
        column(&headers, "method")?,
        column(&headers, "period")?,
        column(&headers, "forecast")?,
        column(&headers, "realization")?,
    );
    let mut periods: Vec<String> = Vec::new();
    let mut period_index: HashMap<String, usize> = HashMap::new();
    let mut realizations: Vec<f64> = Vec::new();
    let mut methods: Vec<String> = Vec::new();
    let mut cells: HashMap<String, BTreeMap<usize, f64>> = HashMap::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        let get = |i: usize| {
            record
                .get(i)
                .map(str::trim)
                .ok_or_else(|| Error::Parse(format!("line {line}: too few fields")))
        };
        let method = get(mc)?.to_string();
        let period = get(pc)?.to_string();
        let forecast = parse_real(get(fc)?, line, "forecast")?;
        let realization = parse_real(get(rc)?, line, "realization")?;
        let k = match period_index.get(&period) {
            Some(&k) => {
                if realizations[k] != realization {
                    return Err(Error::Parse(format!(
                        "line {line}: period {period:?} has conflicting realizations"
                    )));
                }
                k
            }
            None => {
                periods.push(period.clone());
                period_index.insert(period.clone(), periods.len() - 1);
                realizations.push(realization);
                periods.len() - 1
            }
        };
        if !cells.contains_key(&method) {
            methods.push(method.clone());
        }
        if cells
            .entry(method.clone())
            .or_default()
            .insert(k, forecast)
            .is_some()
        {
            return Err(Error::Parse(format!(
                "line {line}: duplicate forecast for method {method:?}, period {period:?}"
            )));
        }
    }
    if methods.is_empty() {
        return Err(Error::Empty("forecasts"));
    }
    let mut series = Vec::with_capacity(methods.len());
    for m in methods {
        let row = cells.remove(&m).expect("present");
        if row.len() != periods.len() {
            return Err(Error::Parse(format!(
                "method {m:?} covers {} of {} periods",
                row.len(),
                periods.len()
            )));
        }
        series.push((m, row.into_values().collect()));
    }
    ForecastSeries::new(series, realizations)
}

/// Writes `method,mean_score,rank`.
pub fn write_ranking<W: Write>(
    writer: W,
    ranking: &[crate::scoring::RankedMethod<f64>],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Invalid(e.to_string());
    w.write_record(["method", "mean_score", "rank"])
        .map_err(io)?;
    for r in ranking {
        w.write_record([
            r.method.clone(),
            format_sig(r.mean_score),
            r.rank.to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Invalid(e.to_string()))
}

/// Twelve significant digits, `%.12g` style, independent of locale.
pub fn format_sig(x: f64) -> String {
    const DIGITS: i32 = 12;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", (DIGITS - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let trim = |s: &str| -> String {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s.to_string()
        }
    };
    if !(-4..DIGITS).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{}{:02}", trim(mantissa), sign, exp.abs())
    } else {
        let decimals = (DIGITS - 1 - exp).max(0) as usize;
        trim(&format!("{:.*}", decimals, x))
    }
}

/// JSON number, or `null` when not finite.
pub fn json_real(x: f64) -> serde_json::Value {
    // adding zero maps -0.0 to 0.0
    serde_json::Number::from_f64(x + 0.0).map_or(serde_json::Value::Null, serde_json::Value::Number)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn format_like_printf_g() {
        assert_eq!(format_sig(-2.0), "-2");
        assert_eq!(format_sig(0.1 + 0.2), "0.3");
        assert_eq!(format_sig(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_sig(123456.7890123456), "123456.789012");
        assert_eq!(format_sig(1e-7), "1e-07");
        assert_eq!(format_sig(-1.5e15), "-1.5e+15");
        assert_eq!(format_sig(999999999999.5), "1e+12");
        assert_eq!(format_sig(0.0001), "0.0001");
        assert_eq!(format_sig(-0.0), "0");
    }

    #[test]
    fn measure_spec_round_trip() {
        let text = r#"{"atom0": 0.1, "atoms": [[0.2, 0.5], [1.0, 0.4]], "density": null}"#;
        let spec: MeasureSpec = parse_json(text).unwrap();
        let m = spec.to_measure().unwrap();
        let echoed = serde_json::to_string(&MeasureSpec::from_measure(&m)).unwrap();
        let again: MeasureSpec = parse_json(&echoed).unwrap();
        assert_eq!(again.to_measure().unwrap(), m);
        let uc: MeasureSpec =
            parse_json(r#"{"atoms": [[1, 0.3]], "density": {"type": "uc", "C": 0.3}}"#).unwrap();
        assert_eq!(uc.to_measure().unwrap(), SpectralMeasure::uc(0.3).unwrap());
        let bad: MeasureSpec = parse_json(r#"{"atoms": [[0.5, 0.9]]}"#).unwrap();
        assert!(bad.to_measure().is_err());
    }

    #[test]
    fn functional_specs() {
        let rf = parse_json::<FunctionalSpec>(r#"{"type": "es", "level": 0.05}"#)
            .unwrap()
            .to_functional()
            .unwrap();
        assert_eq!(rf, RiskFunctional::Es { alpha: 0.05 });
        let rf = parse_json::<FunctionalSpec>(r#"{"type": "negmean"}"#).unwrap();
        assert_eq!(rf, FunctionalSpec::Negmean);
        assert!(
            parse_json::<FunctionalSpec>(r#"{"type": "var", "level": 1.5}"#)
                .unwrap()
                .to_functional()
                .is_err()
        );
        assert!(parse_json::<FunctionalSpec>(r#"{"type": "median"}"#).is_err());
    }

    #[test]
    fn observations_csv() {
        let v = read_observations("y\n1\n2.5\n-3e-1\n".as_bytes()).unwrap();
        assert_eq!(v, vec![1.0, 2.5, -0.3]);
        assert!(read_observations("x\n1\n".as_bytes()).is_err());
        assert!(read_observations("y\n1,5\n".as_bytes()).is_err());
        assert!(read_observations("y\n".as_bytes()).is_err());
    }

    #[test]
    fn forecasts_csv() {
        let text = "method,period,forecast,realization\n\
                    a,1,0.5,1.0\nb,1,1.0,1.0\na,2,2.0,2.5\nb,2,2.5,2.5\n";
        let s = read_forecasts(text.as_bytes()).unwrap();
        assert_eq!(s.realizations(), &[1.0, 2.5]);
        assert_eq!(s.methods()[0], ("a".to_string(), vec![0.5, 2.0]));
        let missing = "method,period,forecast,realization\na,1,0,1\nb,2,0,1\n";
        assert!(read_forecasts(missing.as_bytes()).is_err());
        let conflict = "method,period,forecast,realization\na,1,0,1\nb,1,0,2\n";
        assert!(read_forecasts(conflict.as_bytes()).is_err());
    }
}
