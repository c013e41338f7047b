use std::io::{BufRead, Write};

use crate::error::{HtodaError, Result};

use super::hamiltonian::SeparableHamiltonian;

/// Samples of `(q, p)` on the uniform grid `t0 + k dt`, `k = 0..=steps`,
/// stored row-major with `n` values per sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub t0: f64,
    pub dt: f64,
    pub steps: usize,
    pub n: usize,
    pub q: Vec<f64>,
    pub p: Vec<f64>,
}

impl Trajectory {
    pub fn samples(&self) -> usize {
        self.steps + 1
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn q_at(&self, k: usize) -> &[f64] {
        &self.q[k * self.n..(k + 1) * self.n]
    }

    pub fn p_at(&self, k: usize) -> &[f64] {
        &self.p[k * self.n..(k + 1) * self.n]
    }

    pub fn final_q(&self) -> &[f64] {
        self.q_at(self.steps)
    }

    pub fn final_p(&self) -> &[f64] {
        self.p_at(self.steps)
    }

    fn map_rows(&self, values: &[f64], f: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(values.len());
        for row in values.chunks(self.n) {
            out.extend(f(row)?);
        }
        Ok(out)
    }

    /// `q* = dU/dq` at every sample.
    pub fn q_star(&self, h: &SeparableHamiltonian) -> Result<Vec<f64>> {
        self.map_rows(&self.q, |q| h.potential.gradient(q))
    }

    /// `p* = dK/dp` at every sample.
    pub fn p_star(&self, h: &SeparableHamiltonian) -> Result<Vec<f64>> {
        self.map_rows(&self.p, |p| h.kinetic.gradient(p))
    }

    pub fn energies(&self, h: &SeparableHamiltonian) -> Result<Vec<f64>> {
        (0..self.samples())
            .map(|k| h.energy(self.q_at(k), self.p_at(k)))
            .collect()
    }

    pub fn csv_header(n: usize) -> String {
        let mut cols = vec!["t".to_string()];
        for prefix in ["q", "p", "qstar", "pstar"] {
            cols.extend((1..=n).map(|i| format!("{prefix}_{i}")));
        }
        cols.join(",")
    }

    /// Writes `t, q, p, q*, p*` with 17 significant digits.
    pub fn write_csv<W: Write>(&self, h: &SeparableHamiltonian, mut w: W) -> Result<()> {
        let qs = self.q_star(h)?;
        let ps = self.p_star(h)?;
        writeln!(w, "{}", Self::csv_header(self.n))?;
        let n = self.n;
        for k in 0..self.samples() {
            let row = k * n..(k + 1) * n;
            let mut line = format!("{:.16e}", self.time(k));
            for v in self.q[row.clone()]
                .iter()
                .chain(&self.p[row.clone()])
                .chain(&qs[row.clone()])
                .chain(&ps[row])
            {
                line.push_str(&format!(",{v:.16e}"));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Reads the format of [`Trajectory::write_csv`]; the dual columns are
    /// ignored and recomputed on demand.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Trajectory> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| HtodaError::Grid("empty trajectory file".into()))??;
        let cols = header.trim().split(',').count();
        if cols < 5 || (cols - 1) % 4 != 0 || !header.starts_with("t,q_1") {
            return Err(HtodaError::Grid(format!("unrecognised trajectory header '{header}'")));
        }
        let n = (cols - 1) / 4;
        let mut times = Vec::new();
        let mut q = Vec::new();
        let mut p = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let vals: Vec<f64> = line
                .split(',')
                .map(|s| s.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| HtodaError::Grid(format!("row {}: {e}", i + 1)))?;
            if vals.len() != cols {
                return Err(HtodaError::Grid(format!(
                    "row {} has {} columns, expected {cols}",
                    i + 1,
                    vals.len()
                )));
            }
            times.push(vals[0]);
            q.extend_from_slice(&vals[1..1 + n]);
            p.extend_from_slice(&vals[1 + n..1 + 2 * n]);
        }
        if times.len() < 2 {
            return Err(HtodaError::Grid("trajectory needs at least two samples".into()));
        }
        let t0 = times[0];
        let dt = times[1] - times[0];
        let steps = times.len() - 1;
        let traj = Trajectory { t0, dt, steps, n, q, p };
        for (k, &t) in times.iter().enumerate() {
            if (t - traj.time(k)).abs() > 1e-9 * (1.0 + t.abs()) {
                return Err(HtodaError::Grid(format!("time grid is not uniform at row {}", k + 1)));
            }
        }
        Ok(traj)
    }
}
