//! Log-log rate fits.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{Error, Result};
use crate::linalg::linear_fit;
use crate::xlab::config::LoadedConfig;
use crate::xlab::report::{num, Bundle};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Outcome of a rate fit: either a fit, or the reason none was attempted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum FitVerdict {
    Fit(RateFit),
    Degenerate { reason: String },
}

impl FitVerdict {
    pub fn fit(&self) -> Option<&RateFit> {
        match self {
            Self::Fit(f) => Some(f),
            Self::Degenerate { .. } => None,
        }
    }
}

/// Least squares of `log distance` on `log N`.
///
/// Fewer than three points is an error. Any distance at or below `floor`
/// makes the fit degenerate instead.
pub fn fit_rate(points: &[(f64, f64)], floor: f64) -> Result<FitVerdict> {
    if points.len() < 3 {
        return Err(Error::DegenerateFit(format!("need at least 3 points, got {}", points.len())));
    }
    if let Some(&(n, _)) = points.iter().find(|(n, _)| !(*n > 0.0)) {
        return Err(Error::DegenerateFit(format!("particle number {n} is not positive")));
    }
    if let Some(&(n, d)) = points.iter().find(|(_, d)| !(*d > floor)) {
        return Ok(FitVerdict::Degenerate { reason: format!("distance {d:e} at N = {n} is not above {floor:e}") });
    }
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (slope, intercept, r2) = linear_fit(&x, &y);
    Ok(FitVerdict::Fit(RateFit { slope, intercept, r2 }))
}

/// Reads `(N, distance)` pairs from a CSV with an `N` column and a
/// `distance` or `trace_distance` column, optionally filtered on `t`.
pub fn read_points(path: &Path, t: Option<f64>) -> Result<Vec<(f64, f64)>> {
    let parse_err = |e: csv::Error| Error::Parse(format!("{}: {e}", path.display()));
    let mut rdr = csv::Reader::from_path(path).map_err(parse_err)?;
    let header = rdr.headers().map_err(parse_err)?.clone();
    let col = |names: &[&str]| header.iter().position(|h| names.contains(&h.trim()));
    let n_col = col(&["N"]).ok_or_else(|| Error::Parse(format!("{}: no N column", path.display())))?;
    let d_col = col(&["distance", "trace_distance"])
        .ok_or_else(|| Error::Parse(format!("{}: no distance column", path.display())))?;
    let t_col = col(&["t"]);
    let num_at = |rec: &csv::StringRecord, i: usize| -> Result<f64> {
        rec.get(i)
            .unwrap_or("")
            .trim()
            .parse::<f64>()
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    };
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(parse_err)?;
        if let (Some(want), Some(tc)) = (t, t_col) {
            if num_at(&rec, tc)? != want {
                continue;
            }
        }
        out.push((num_at(&rec, n_col)?, num_at(&rec, d_col)?));
    }
    Ok(out)
}

pub fn run_fit(cfg: &LoadedConfig) -> Result<Bundle> {
    let f = cfg.config.fit.as_ref().ok_or_else(|| Error::Config("missing [fit] table".into()))?;
    let path = cfg.resolve(&f.input);
    let points = read_points(&path, f.t)?;
    let verdict = fit_rate(&points, 0.0)?;
    let mut b = Bundle::new(&cfg.hash, "fit.json");
    let mut t = b.table(&["verdict", "points", "slope", "intercept", "r2"]);
    let params = json!({"input": f.input, "t": f.t, "points": points.len()});
    match &verdict {
        FitVerdict::Fit(r) => {
            t.push(b.row(vec!["fit".into(), points.len().to_string(), num(r.slope), num(r.intercept), num(r.r2)]));
            b.check("rate-fit", params, json!(r), json!(null), r.slope.is_finite(), true);
        }
        FitVerdict::Degenerate { reason } => {
            t.push(b.row(vec!["degenerate".into(), points.len().to_string(), String::new(), String::new(), String::new()]));
            b.check("rate-fit", params, json!({"degenerate": reason}), json!(null), true, false);
        }
    }
    b.add_table("fit.csv", t);
    Ok(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn fitted(points: &[(f64, f64)]) -> RateFit {
        *fit_rate(points, 0.0).unwrap().fit().unwrap()
    }

    #[test]
    fn exact_power_laws() {
        let inv: Vec<(f64, f64)> = (2..=10).map(|n| (n as f64, 0.3 / n as f64)).collect();
        assert!((fitted(&inv).slope + 1.0).abs() < 1e-12);
        let root: Vec<(f64, f64)> = (2..=10).map(|n| (n as f64, 0.3 / (n as f64).sqrt())).collect();
        let f = fitted(&root);
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!((f.intercept - 0.3f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn noisy_inverse() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let pts: Vec<(f64, f64)> = (2..=10)
            .map(|n| (n as f64, 0.5 / n as f64 * (1.0 + 0.01 * rng.gen_range(-1.0..1.0))))
            .collect();
        assert!((fitted(&pts).slope + 1.0).abs() < 0.05);
    }

    #[test]
    fn degenerate_and_invalid() {
        let zero = [(2.0, 0.1), (3.0, 0.0), (4.0, 0.05)];
        assert!(matches!(fit_rate(&zero, 0.0).unwrap(), FitVerdict::Degenerate { .. }));
        let tiny = [(2.0, 1e-15), (3.0, 1e-15), (4.0, 1e-15)];
        assert!(matches!(fit_rate(&tiny, 1e-12).unwrap(), FitVerdict::Degenerate { .. }));
        assert!(fit_rate(&[(2.0, 0.1), (3.0, 0.05)], 0.0).is_err());
    }

    #[test]
    fn reads_filtered_points() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "config_hash,N,t,trace_distance\nx,2,0.5,0.1\nx,2,1,0.2\nx,3,1,0.1\n").unwrap();
        assert_eq!(read_points(&p, Some(1.0)).unwrap(), vec![(2.0, 0.2), (3.0, 0.1)]);
        assert_eq!(read_points(&p, None).unwrap().len(), 3);
        std::fs::write(&p, "a,b\n1,2\n").unwrap();
        assert!(read_points(&p, None).is_err());
    }
}
