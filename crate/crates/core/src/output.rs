//! CSV artifacts. Numbers use Rust's shortest round-trip formatting, so
//! identical results give identical files.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::mdp::{ActionSet, StateGrid};

fn grid_header(grid: &StateGrid) -> Vec<String> {
    (1..=grid.dims()).map(|d| format!("x{d}")).collect()
}

fn centre(grid: &StateGrid, x: usize) -> Vec<String> {
    grid.center(x).iter().map(|c| c.to_string()).collect()
}

/// `x1,...,xd,q,value` rows from `(base state, automaton state, value)`.
pub fn write_values<W: Write>(
    out: W,
    grid: &StateGrid,
    rows: impl IntoIterator<Item = (usize, usize, f64)>,
) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = grid_header(grid);
    header.extend(["q".to_string(), "value".to_string()]);
    w.write_record(&header)?;
    for (x, q, v) in rows {
        let mut rec = centre(grid, x);
        rec.push(q.to_string());
        rec.push(v.to_string());
        w.write_record(&rec)?;
    }
    w.flush()
}

/// `x1,...,xd,q,action_index,<component names>` rows. `None` marks states
/// where the action does not matter; they get `-1` in every action column.
pub fn write_policy<W: Write>(
    out: W,
    grid: &StateGrid,
    actions: &ActionSet,
    rows: impl IntoIterator<Item = (usize, usize, Option<usize>)>,
) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = grid_header(grid);
    header.push("q".into());
    header.push("action_index".into());
    header.extend(actions.names().iter().cloned());
    w.write_record(&header)?;
    let width = actions.names().len();
    for (x, q, a) in rows {
        let mut rec = centre(grid, x);
        rec.push(q.to_string());
        match a {
            Some(a) => {
                rec.push(a.to_string());
                rec.extend(actions.vector(a).iter().map(|v| v.to_string()));
            }
            None => rec.extend(std::iter::repeat_n("-1".to_string(), width + 1)),
        }
        w.write_record(&rec)?;
    }
    w.flush()
}

/// `iter,residual,beta_estimate`; the estimate is the ratio of successive
/// residuals and is empty where undefined.
pub fn write_residuals<W: Write>(out: W, residuals: &[f64]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["iter", "residual", "beta_estimate"])?;
    for (i, r) in residuals.iter().enumerate() {
        let beta = match i.checked_sub(1).map(|j| residuals[j]) {
            Some(prev) if prev > 0.0 => (r / prev).to_string(),
            _ => String::new(),
        };
        w.write_record([(i + 1).to_string(), r.to_string(), beta])?;
    }
    w.flush()
}

/// Residual log of a two-phase run: `phase,iter,residual,beta_estimate`.
pub fn write_phase_residuals<W: Write>(out: W, log: &[(u8, usize, f64)]) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["phase", "iter", "residual", "beta_estimate"])?;
    for (i, &(phase, iter, r)) in log.iter().enumerate() {
        let beta = match i.checked_sub(1).map(|j| log[j]) {
            Some((p, _, prev)) if p == phase && prev > 0.0 => (r / prev).to_string(),
            _ => String::new(),
        };
        w.write_record([phase.to_string(), iter.to_string(), r.to_string(), beta])?;
    }
    w.flush()
}

pub fn create(path: &Path) -> io::Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn value_and_policy_layout() {
        let grid = StateGrid::new(vec![0.0], vec![2.0], vec![2]).unwrap();
        let mut buf = Vec::new();
        write_values(&mut buf, &grid, [(0, 0, 0.25), (1, 0, 1.0)]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x1,q,value\n0.5,0,0.25\n1.5,0,1\n");
        let actions = ActionSet::uniform(vec![vec![0.8, 0.0], vec![1.0, 0.5]], vec!["v".into(), "u1".into()], 2);
        let mut buf = Vec::new();
        write_policy(&mut buf, &grid, &actions, [(0, 0, Some(1)), (1, 0, None)]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "x1,q,action_index,v,u1\n0.5,0,1,1,0.5\n1.5,0,-1,-1,-1\n"
        );
    }

    #[test]
    fn residual_ratios() {
        let mut buf = Vec::new();
        write_residuals(&mut buf, &[0.5, 0.25, 0.0, 0.0]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "iter,residual,beta_estimate\n1,0.5,\n2,0.25,0.5\n3,0,0\n4,0,\n"
        );
    }
}
