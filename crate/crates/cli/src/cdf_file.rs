//! Reading CDF tables written by the other commands back in, for `compare`.

use std::collections::HashMap;

/// How a tabulated CDF is evaluated between its knots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Interp {
    /// Right-continuous step function (exact distributions, sample
    /// quantiles).
    Step,
    /// Linear interpolation (estimates and fronts).
    Linear,
}

#[derive(Debug, Clone)]
pub struct TabulatedCdf {
    /// Knots with strictly increasing `x`. Raw estimates may leave `[0, 1]`
    /// slightly in the tails and are kept as given.
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub interp: Interp,
}

impl TabulatedCdf {
    /// 0 left of the first knot, the last value right of the last knot.
    pub fn eval(&self, tau: f64) -> f64 {
        let k = self.x.partition_point(|&x| x <= tau);
        if k == 0 {
            return 0.0;
        }
        if k == self.x.len() || self.interp == Interp::Step {
            return self.f[k - 1];
        }
        let (x0, x1) = (self.x[k - 1], self.x[k]);
        let w = (tau - x0) / (x1 - x0);
        self.f[k - 1] + w * (self.f[k] - self.f[k - 1])
    }

    /// Knots plus points just left of each knot, which is where a step
    /// function attains its left limits.
    pub fn probe_points(&self) -> Vec<f64> {
        let mut out = self.x.clone();
        if self.interp == Interp::Step {
            out.extend(self.x.iter().map(|&x| x - 1e-9 * x.abs().max(1.0)));
        }
        out
    }
}

/// Recognized layouts, by column names:
/// - `tau` with `F` or `pareto_value` (estimates and fronts), linear;
/// - `q` with `value` (sample quantiles), step, so `F(value_i) = q_i`;
/// - `value_decimal` with `cdf_decimal` (exact distributions), step.
pub fn parse(text: &str, name: &str) -> Result<TabulatedCdf, String> {
    let rows = read_rows(text).map_err(|e| format!("{name}: {e}"))?;
    if rows.is_empty() {
        return Err(format!("{name}: no rows"));
    }
    let has = |c: &str| rows[0].contains_key(c);
    let (xcol, fcol, interp) = if has("tau") && has("F") {
        ("tau", "F", Interp::Linear)
    } else if has("tau") && has("pareto_value") {
        ("tau", "pareto_value", Interp::Linear)
    } else if has("q") && has("value") {
        ("value", "q", Interp::Step)
    } else if has("value_decimal") && has("cdf_decimal") {
        ("value_decimal", "cdf_decimal", Interp::Step)
    } else {
        let mut cols: Vec<&String> = rows[0].keys().collect();
        cols.sort();
        return Err(format!("{name}: unrecognized columns {cols:?}"));
    };
    let mut x: Vec<f64> = Vec::with_capacity(rows.len());
    let mut f: Vec<f64> = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let get = |c: &str| -> Result<f64, String> {
            let raw = row
                .get(c)
                .ok_or_else(|| format!("{name}: row {}: missing `{c}`", i + 1))?;
            raw.parse::<f64>()
                .map_err(|_| format!("{name}: row {}: `{c}` = `{raw}` is not a number", i + 1))
        };
        let (xi, fi) = (get(xcol)?, get(fcol)?);
        if !(xi.is_finite() && fi.is_finite()) {
            return Err(format!("{name}: row {}: non-finite value", i + 1));
        }
        match x.last() {
            // Repeated quantiles mark an atom; keep the largest level.
            Some(&last) if xi == last => {
                let k = f.len() - 1;
                f[k] = f[k].max(fi);
            }
            Some(&last) if xi < last => {
                return Err(format!("{name}: row {}: `{xcol}` is not sorted", i + 1));
            }
            _ => {
                x.push(xi);
                f.push(fi);
            }
        }
    }
    Ok(TabulatedCdf { x, f, interp })
}

/// CSV with a header row, or JSON lines when the first character is `{`.
fn read_rows(text: &str) -> Result<Vec<HashMap<String, String>>, String> {
    if text.trim_start().starts_with('{') {
        return text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, line)| {
                let obj: serde_json::Map<String, serde_json::Value> =
                    serde_json::from_str(line).map_err(|e| format!("line {}: {e}", i + 1))?;
                Ok(obj
                    .into_iter()
                    .map(|(k, v)| {
                        let s = match v {
                            serde_json::Value::String(s) => s,
                            other => other.to_string(),
                        };
                        (k, s)
                    })
                    .collect())
            })
            .collect();
    }
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    reader
        .records()
        .map(|r| {
            let r = r.map_err(|e| e.to_string())?;
            Ok(headers
                .iter()
                .map(String::from)
                .zip(r.iter().map(String::from))
                .collect())
        })
        .collect()
}
