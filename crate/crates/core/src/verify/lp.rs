//! Exact dictionary simplex for small dense LPs.
//!
//! Solves `maximize c·x subject to A·x <= b, x >= 0` over the rationals with
//! Bland's rule, so it always terminates. Infeasible problems come back with a
//! Farkas vector `y >= 0`, `yᵀA >= 0`, `yᵀb < 0`, which callers can check on
//! their own without trusting the solver.

use crate::Rat;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LpOutcome {
    Optimal { x: Vec<Rat>, value: Rat, duals: Vec<Rat> },
    Infeasible { farkas: Vec<Rat> },
    Unbounded,
}

struct Dictionary {
    /// Variable index of the basic variable in each row.
    basis: Vec<usize>,
    /// Variable index of each nonbasic column.
    cols: Vec<usize>,
    /// `x_basis[i] = rhs[i] + Σ_j coef[i][j]·x_cols[j]`.
    rhs: Vec<Rat>,
    coef: Vec<Vec<Rat>>,
    obj_const: Rat,
    obj: Vec<Rat>,
}

impl Dictionary {
    fn pivot(&mut self, row: usize, col: usize) {
        let d = self.coef[row][col].clone();
        debug_assert!(!d.is_zero());
        let inv = d.recip();
        // Solve the pivot row for the entering variable.
        let new_rhs = -&self.rhs[row] * &inv;
        let mut new_row: Vec<Rat> = self.coef[row].iter().map(|a| -(a * &inv)).collect();
        new_row[col] = inv;
        for i in 0..self.rhs.len() {
            if i == row {
                continue;
            }
            let factor = self.coef[i][col].clone();
            if factor.is_zero() {
                continue;
            }
            self.rhs[i] += &(&factor * &new_rhs);
            for j in 0..new_row.len() {
                if j == col {
                    self.coef[i][j] = &factor * &new_row[j];
                } else if !new_row[j].is_zero() {
                    let delta = &factor * &new_row[j];
                    self.coef[i][j] += &delta;
                }
            }
        }
        let factor = self.obj[col].clone();
        if !factor.is_zero() {
            self.obj_const += &(&factor * &new_rhs);
            for j in 0..new_row.len() {
                if j == col {
                    self.obj[j] = &factor * &new_row[j];
                } else if !new_row[j].is_zero() {
                    let delta = &factor * &new_row[j];
                    self.obj[j] += &delta;
                }
            }
        }
        self.rhs[row] = new_rhs;
        self.coef[row] = new_row;
        std::mem::swap(&mut self.basis[row], &mut self.cols[col]);
    }

    /// Maximizes the current objective from a feasible dictionary.
    /// Returns false when unbounded.
    fn optimize(&mut self) -> bool {
        loop {
            // Bland: lowest-index improving variable enters.
            let entering = (0..self.cols.len()).filter(|&j| self.obj[j].is_positive()).min_by_key(|&j| self.cols[j]);
            let Some(col) = entering else {
                return true;
            };
            let mut leaving: Option<(usize, Rat)> = None;
            for i in 0..self.rhs.len() {
                let a = &self.coef[i][col];
                if !a.is_negative() {
                    continue;
                }
                let bound = &self.rhs[i] / &(-a);
                let replace = match &leaving {
                    None => true,
                    Some((r, best)) => bound < *best || (bound == *best && self.basis[i] < self.basis[*r]),
                };
                if replace {
                    leaving = Some((i, bound));
                }
            }
            match leaving {
                Some((row, _)) => self.pivot(row, col),
                None => return false,
            }
        }
    }

    fn duals(&self, n: usize, m: usize) -> Vec<Rat> {
        let mut y = vec![Rat::zero(); m];
        for (j, &var) in self.cols.iter().enumerate() {
            if (n..n + m).contains(&var) {
                y[var - n] = -&self.obj[j];
            }
        }
        y
    }
}

/// `maximize c·x` s.t. `a·x <= b`, `x >= 0`.
pub fn solve(a: &[Vec<Rat>], b: &[Rat], c: &[Rat]) -> LpOutcome {
    let m = a.len();
    let n = c.len();
    assert_eq!(b.len(), m);
    assert!(a.iter().all(|row| row.len() == n));
    let aux = n + m;

    let needs_phase_one = b.iter().any(Rat::is_negative);
    let mut cols: Vec<usize> = (0..n).collect();
    if needs_phase_one {
        cols.push(aux);
    }
    let mut coef: Vec<Vec<Rat>> = a
        .iter()
        .map(|row| {
            let mut r: Vec<Rat> = row.iter().map(|x| -x).collect();
            if needs_phase_one {
                r.push(Rat::one());
            }
            r
        })
        .collect();
    if m == 0 {
        coef.clear();
    }
    let mut dict = Dictionary {
        basis: (n..n + m).collect(),
        cols,
        rhs: b.to_vec(),
        coef,
        obj_const: Rat::zero(),
        obj: Vec::new(),
    };

    if needs_phase_one {
        let width = dict.cols.len();
        dict.obj = vec![Rat::zero(); width];
        dict.obj[width - 1] = -Rat::one();
        let row = (0..m).min_by(|&i, &j| dict.rhs[i].cmp(&dict.rhs[j]).then(i.cmp(&j))).expect("some row is negative");
        dict.pivot(row, width - 1);
        let bounded = dict.optimize();
        debug_assert!(bounded, "phase one is bounded by 0");
        if dict.obj_const.is_negative() {
            return LpOutcome::Infeasible { farkas: dict.duals(n, m) };
        }
        // Drive the auxiliary variable out of the basis if it is still there.
        if let Some(row) = dict.basis.iter().position(|&v| v == aux) {
            let col = (0..dict.cols.len())
                .filter(|&j| !dict.coef[row][j].is_zero())
                .min_by_key(|&j| dict.cols[j])
                .expect("degenerate row has a nonzero entry");
            dict.pivot(row, col);
        }
        let col = dict.cols.iter().position(|&v| v == aux).expect("aux is nonbasic");
        dict.cols.remove(col);
        for row in &mut dict.coef {
            row.remove(col);
        }
    }

    // Express the real objective over the current nonbasic variables.
    let width = dict.cols.len();
    let mut obj = vec![Rat::zero(); width];
    let mut obj_const = Rat::zero();
    for (j, &var) in dict.cols.iter().enumerate() {
        if var < n {
            obj[j] += &c[var];
        }
    }
    for (i, &var) in dict.basis.iter().enumerate() {
        if var < n && !c[var].is_zero() {
            obj_const += &(&c[var] * &dict.rhs[i]);
            for j in 0..width {
                let delta = &c[var] * &dict.coef[i][j];
                obj[j] += &delta;
            }
        }
    }
    dict.obj = obj;
    dict.obj_const = obj_const;

    if !dict.optimize() {
        return LpOutcome::Unbounded;
    }
    let mut x = vec![Rat::zero(); n];
    for (i, &var) in dict.basis.iter().enumerate() {
        if var < n {
            x[var] = dict.rhs[i].clone();
        }
    }
    LpOutcome::Optimal { x, value: dict.obj_const.clone(), duals: dict.duals(n, m) }
}

/// Checks `y >= 0`, `yᵀA >= 0` and `yᵀb < 0`.
pub fn is_farkas_certificate(a: &[Vec<Rat>], b: &[Rat], y: &[Rat]) -> bool {
    if y.len() != a.len() || y.iter().any(Rat::is_negative) {
        return false;
    }
    let n = a.first().map_or(0, Vec::len);
    let combo_ok = (0..n).all(|j| {
        let s: Rat = a.iter().zip(y).map(|(row, yi)| &row[j] * yi).sum();
        !s.is_negative()
    });
    let rhs: Rat = b.iter().zip(y).map(|(bi, yi)| bi * yi).sum();
    combo_ok && rhs.is_negative()
}
