//! Plain-text tables for states and matrices.
//!
//! State format: a header line `M n_max`, then one line per basis element
//! `n_1 .. n_M re im`. Floats use the shortest representation that parses
//! back to the same bits, so a save/load cycle is exact.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;

use super::basis::FockBasis;
use super::state::FockState;
use crate::error::{Error, Result};
use crate::linalg::{C64, ZERO};

pub fn state_to_string(s: &FockState) -> String {
    let b = s.basis();
    let mut out = format!("{} {}\n", b.modes(), b.n_max());
    for (k, a) in s.amplitudes().iter().enumerate() {
        for n in b.occupation(k) {
            let _ = write!(out, "{n} ");
        }
        let _ = writeln!(out, "{:e} {:e}", a.re, a.im);
    }
    out
}

pub fn state_from_str(text: &str) -> Result<FockState> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| Error::Parse("empty state table".into()))?;
    let head: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|e| Error::Parse(format!("header `{header}`: {e}"))))
        .collect::<Result<_>>()?;
    let [modes, n_max] = head[..] else {
        return Err(Error::Parse(format!("header must be `M n_max`, got `{header}`")));
    };
    let basis = Arc::new(FockBasis::new(modes, n_max)?);
    let mut amps = vec![ZERO; basis.dim()];
    let mut seen = vec![false; basis.dim()];
    for line in lines {
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() != modes + 2 {
            return Err(Error::Parse(format!("expected {} fields in `{line}`", modes + 2)));
        }
        let occ: Vec<u16> = tok[..modes]
            .iter()
            .map(|t| t.parse().map_err(|e| Error::Parse(format!("occupation `{t}`: {e}"))))
            .collect::<Result<_>>()?;
        let k = basis
            .index_of(&occ)
            .ok_or_else(|| Error::Parse(format!("occupation {occ:?} outside n_max = {n_max}")))?;
        if seen[k] {
            return Err(Error::Parse(format!("duplicate row for {occ:?}")));
        }
        seen[k] = true;
        amps[k] = C64::new(parse_f64(tok[modes])?, parse_f64(tok[modes + 1])?);
    }
    FockState::from_amplitudes(&basis, amps)
}

fn parse_f64(t: &str) -> Result<f64> {
    t.parse().map_err(|e| Error::Parse(format!("number `{t}`: {e}")))
}

pub fn save_state(path: impl AsRef<Path>, s: &FockState) -> Result<()> {
    std::fs::write(path, state_to_string(s))?;
    Ok(())
}

pub fn load_state(path: impl AsRef<Path>) -> Result<FockState> {
    state_from_str(&std::fs::read_to_string(path)?)
}

/// Matrix table: header `rows cols`, then `i j re im` per entry in row-major order.
pub fn matrix_to_string(m: &DMatrix<C64>) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let z = m[(i, j)];
            let _ = writeln!(out, "{i} {j} {:e} {:e}", z.re, z.im);
        }
    }
    out
}

pub fn matrix_from_str(text: &str) -> Result<DMatrix<C64>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or_else(|| Error::Parse("empty matrix table".into()))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(|t| t.parse().map_err(|e| Error::Parse(format!("header `{header}`: {e}"))))
        .collect::<Result<_>>()?;
    let [r, c] = dims[..] else {
        return Err(Error::Parse(format!("header must be `rows cols`, got `{header}`")));
    };
    let mut m = DMatrix::from_element(r, c, ZERO);
    for line in lines {
        let tok: Vec<&str> = line.split_whitespace().collect();
        if tok.len() != 4 {
            return Err(Error::Parse(format!("expected `i j re im`, got `{line}`")));
        }
        let i: usize = tok[0].parse().map_err(|e| Error::Parse(format!("row `{}`: {e}", tok[0])))?;
        let j: usize = tok[1].parse().map_err(|e| Error::Parse(format!("col `{}`: {e}", tok[1])))?;
        if i >= r || j >= c {
            return Err(Error::Parse(format!("entry ({i}, {j}) outside {r}x{c}")));
        }
        m[(i, j)] = C64::new(parse_f64(tok[2])?, parse_f64(tok[3])?);
    }
    Ok(m)
}

pub fn save_matrix(path: impl AsRef<Path>, m: &DMatrix<C64>) -> Result<()> {
    std::fs::write(path, matrix_to_string(m))?;
    Ok(())
}
