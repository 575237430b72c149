//! Binary RB maps and power maps for one slot or mini-slot.

use crate::error::ConstraintKind;

/// Dense row-major `rows x cols` table, rows are users and columns RBs.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Copy> Grid<T> {
    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Grid {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for c in 0..cols {
                data.push(f(i, c));
            }
        }
        Grid { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, c: usize) -> T {
        self.data[i * self.cols + c]
    }

    pub fn set(&mut self, i: usize, c: usize, v: T) {
        self.data[i * self.cols + c] = v;
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn values(&self) -> &[T] {
        &self.data
    }

    pub fn map<U: Copy>(&self, f: impl Fn(T) -> U) -> Grid<U> {
        Grid {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }
}

impl Grid<bool> {
    pub fn row_count(&self, i: usize) -> usize {
        self.row(i).iter().filter(|&&b| b).count()
    }

    pub fn col_count(&self, c: usize) -> usize {
        (0..self.rows).filter(|&i| self.get(i, c)).count()
    }

    /// Row holding the single `true` in column `c`, if any.
    pub fn owner(&self, c: usize) -> Option<usize> {
        (0..self.rows).find(|&i| self.get(i, c))
    }

    pub fn any(&self) -> bool {
        self.data.iter().any(|&b| b)
    }

    /// Rows joined by `/`, one `0`/`1` per column.
    pub fn to_bits(&self) -> String {
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .map(|&b| if b { '1' } else { '0' })
                    .collect::<String>()
            })
            .collect::<Vec<_>>()
            .join("/")
    }
}

impl Grid<f64> {
    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }
}

/// RB and power decisions. `alpha`/`p_e` are slot-level eMBB decisions;
/// `beta`, `rho`, `z`, `p_u` belong to the current mini-slot.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationState {
    pub alpha: Grid<bool>,
    pub beta: Grid<bool>,
    pub rho: Grid<bool>,
    pub z: Grid<bool>,
    pub p_e: Grid<f64>,
    pub p_u: Grid<f64>,
}

impl AllocationState {
    pub fn empty(num_embb: usize, num_urllc: usize, num_rbs: usize) -> Self {
        AllocationState {
            alpha: Grid::filled(num_embb, num_rbs, false),
            beta: Grid::filled(num_urllc, num_rbs, false),
            rho: Grid::filled(num_urllc, num_rbs, false),
            z: Grid::filled(num_urllc, num_rbs, false),
            p_e: Grid::filled(num_embb, num_rbs, 0.0),
            p_u: Grid::filled(num_urllc, num_rbs, 0.0),
        }
    }

    pub fn num_rbs(&self) -> usize {
        self.alpha.cols()
    }

    /// Whether URLLC user `j` radiates on RB `c`, i.e. `β + ρ − z = 1`.
    pub fn urllc_active(&self, j: usize, c: usize) -> bool {
        self.beta.get(j, c) || self.rho.get(j, c)
    }

    pub fn embb_power(&self) -> f64 {
        let mut total = 0.0;
        for i in 0..self.alpha.rows() {
            for c in 0..self.num_rbs() {
                if self.alpha.get(i, c) {
                    total += self.p_e.get(i, c);
                }
            }
        }
        total
    }

    /// `Σ (β + ρ − z) p^u`.
    pub fn urllc_power(&self) -> f64 {
        let mut total = 0.0;
        for j in 0..self.beta.rows() {
            for c in 0..self.num_rbs() {
                let w = self.beta.get(j, c) as u8 + self.rho.get(j, c) as u8
                    - self.z.get(j, c) as u8;
                total += f64::from(w) * self.p_u.get(j, c);
            }
        }
        total
    }

    /// Recomputes `z = β ρ`.
    pub fn sync_z(&mut self) {
        self.z = Grid::from_fn(self.beta.rows(), self.beta.cols(), |j, c| {
            self.beta.get(j, c) && self.rho.get(j, c)
        });
    }

    /// Checks the exact combinatorial and budget constraints. Returns a
    /// description of each violation.
    pub fn structural_violations(&self, p_max: f64) -> Vec<String> {
        let mut out = Vec::new();
        for c in 0..self.num_rbs() {
            if self.alpha.col_count(c) > 1 {
                out.push(format!("alpha column {c} has more than one user"));
            }
            if self.beta.col_count(c) > 1 {
                out.push(format!("beta column {c} has more than one user"));
            }
            if self.rho.col_count(c) > 1 {
                out.push(format!("rho column {c} has more than one target"));
            }
        }
        for j in 0..self.rho.rows() {
            if self.rho.row_count(j) > 1 {
                out.push(format!("target {j} sensed on more than one RB"));
            }
            for c in 0..self.num_rbs() {
                let (b, r, z) = (self.beta.get(j, c), self.rho.get(j, c), self.z.get(j, c));
                if z != (b && r) {
                    out.push(format!("z[{j},{c}] differs from beta*rho"));
                }
            }
        }
        if self.p_e.values().iter().chain(self.p_u.values()).any(|&p| !(p >= 0.0)) {
            out.push("negative or NaN power".into());
        }
        let total = self.embb_power() + self.urllc_power();
        if total > p_max * (1.0 + 1e-9) {
            out.push(format!(
                "{}: total power {total:.6e} W exceeds {p_max:.6e} W",
                ConstraintKind::PowerBudget
            ));
        }
        out
    }
}

/// Remaining eMBB resource fraction `η_{i,c} = 1 − (1/I) Σ_j Σ_τ α_{i,c} β_{j,c}[τ]`
/// given the URLLC maps of the mini-slots elapsed so far.
pub fn puncture_fraction(alpha: &Grid<bool>, betas: &[Grid<bool>], minislots: usize) -> Grid<f64> {
    let cols = alpha.cols();
    let punctured: Vec<usize> = (0..cols)
        .map(|c| betas.iter().map(|b| b.col_count(c)).sum())
        .collect();
    Grid::from_fn(alpha.rows(), cols, |i, c| {
        if alpha.get(i, c) {
            1.0 - punctured[c] as f64 / minislots as f64
        } else {
            1.0
        }
    })
}
