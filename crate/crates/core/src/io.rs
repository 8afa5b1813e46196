//! JSON problem formats, serde helpers for nalgebra types and CSV output.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::lp::StandardLp;
use crate::ot::{CostSpec, OtProblem};
use crate::tol::Tolerances;

pub fn ser_vector<S: Serializer>(v: &DVector<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(v.iter())
}

pub fn ser_vectors<S: Serializer>(vs: &[DVector<f64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(vs.iter().map(|v| v.iter().copied().collect::<Vec<_>>()))
}

pub fn ser_matrix<S: Serializer>(m: &DMatrix<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(m.row_iter().map(|r| r.iter().copied().collect::<Vec<_>>()))
}

pub fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

pub fn rows_to_matrix(rows: &[DVector<f64>], d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), d, |i, j| rows[i][j])
}

fn matrix_from_rows(rows: &[Vec<f64>], field: &str) -> Result<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, Vec::len);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != ncols {
            return Err(Error::InvalidInput(format!("`{field}` row {i} has {} entries, expected {ncols}", row.len())));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("`{field}` entry ({i}, {j}) is not finite")));
        }
    }
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LpFile {
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub names: Option<Vec<String>>,
}

impl LpFile {
    pub fn into_lp(self, tol: Tolerances) -> Result<StandardLp> {
        let a = matrix_from_rows(&self.a, "A")?;
        let lp = StandardLp::with_tolerances(a, DVector::from_vec(self.b), DVector::from_vec(self.c), tol)?;
        match self.names {
            Some(names) => lp.with_names(names),
            None => Ok(lp),
        }
    }

    pub fn from_lp(lp: &StandardLp) -> Self {
        Self {
            a: matrix_rows(lp.a()),
            b: lp.b().iter().copied().collect(),
            c: lp.c().iter().copied().collect(),
            names: lp.names().map(<[String]>::to_vec),
        }
    }
}

/// A ground point given either as a scalar or as coordinates.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointRepr {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl PointRepr {
    fn coords(&self) -> Vec<f64> {
        match self {
            PointRepr::Scalar(v) => vec![*v],
            PointRepr::Vector(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OtFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cost: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_x: Option<Vec<PointRepr>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points_y: Option<Vec<PointRepr>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Norm exponent; `null` or absent means 2, the string "inf" the max-norm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<serde_json::Value>,
    pub r: Vec<f64>,
    pub s: Vec<f64>,
}

impl OtFile {
    pub fn into_problem(self) -> Result<OtProblem> {
        let r = DVector::from_vec(self.r);
        let s = DVector::from_vec(self.s);
        let points = match (self.points_x, self.points_y) {
            (Some(x), Some(y)) => Some((
                x.iter().map(|p| DVector::from_vec(p.coords())).collect::<Vec<_>>(),
                y.iter().map(|p| DVector::from_vec(p.coords())).collect::<Vec<_>>(),
            )),
            (None, None) => None,
            _ => return Err(Error::InvalidInput("`points_x` and `points_y` must be given together".into())),
        };
        let q = match &self.q {
            None | Some(serde_json::Value::Null) => 2.0,
            Some(serde_json::Value::Number(n)) => n.as_f64().unwrap_or(f64::NAN),
            Some(serde_json::Value::String(s)) if s == "inf" || s == "infinity" => f64::INFINITY,
            Some(other) => return Err(Error::InvalidInput(format!("`q` must be a number or \"inf\", got {other}"))),
        };
        match (self.cost, points) {
            (Some(cost), points) => {
                let cost = matrix_from_rows(&cost, "cost")?;
                let mut ot = OtProblem::new(cost, r, s)?;
                if let Some((x, y)) = points {
                    let spec = CostSpec { p: self.p.unwrap_or(2.0), q };
                    ot = ot.with_ground_points(x, y, spec)?;
                }
                Ok(ot)
            }
            (None, Some((x, y))) => {
                let p = self.p.ok_or_else(|| Error::InvalidInput("`p` is required with ground points".into()))?;
                OtProblem::from_points(x, y, CostSpec { p, q }, r, s)
            }
            (None, None) => Err(Error::InvalidInput("either `cost` or `points_x`/`points_y` is required".into())),
        }
    }
}

/// Either problem form accepted by the command line.
#[derive(Debug, Clone)]
pub enum ProblemFile {
    Lp(StandardLp),
    Ot(OtProblem),
}

pub fn parse_problem(text: &str, tol: Tolerances) -> Result<ProblemFile> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("malformed JSON: {e}")))?;
    let obj = value.as_object().ok_or_else(|| Error::InvalidInput("problem file must be a JSON object".into()))?;
    if obj.contains_key("A") {
        let file: LpFile =
            serde_json::from_value(value).map_err(|e| Error::InvalidInput(format!("LP problem: {e}")))?;
        Ok(ProblemFile::Lp(file.into_lp(tol)?))
    } else if obj.contains_key("r") || obj.contains_key("cost") || obj.contains_key("points_x") {
        let file: OtFile =
            serde_json::from_value(value).map_err(|e| Error::InvalidInput(format!("OT problem: {e}")))?;
        Ok(ProblemFile::Ot(file.into_problem()?))
    } else {
        Err(Error::InvalidInput("problem file needs field `A` (LP) or `r`/`s` (OT)".into()))
    }
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_string(header: &[String], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

/// Reads a numeric CSV with a header row, as written by [`csv_string`].
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::InvalidInput("CSV is empty".into()))?
        .split(',')
        .map(|s| s.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for (n, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let row = line
            .split(',')
            .enumerate()
            .map(|(j, v)| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidInput(format!("CSV line {}, column {j}: `{v}` is not a number", n + 2)))
            })
            .collect::<Result<Vec<_>>>()?;
        if row.len() != header.len() {
            return Err(Error::InvalidInput(format!(
                "CSV line {} has {} fields, expected {}",
                n + 2,
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok((header, rows))
}
