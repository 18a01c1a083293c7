/// Butcher tableau of an implicit Runge-Kutta method.
#[derive(Clone, Debug, PartialEq)]
pub struct ButcherTableau {
    pub name: &'static str,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

/// Tolerance on `b_i a_ij + b_j a_ji - b_i b_j` for the symplectic flag.
pub const SYMPLECTIC_TOL: f64 = 1e-14;

impl ButcherTableau {
    pub fn stages(&self) -> usize {
        self.b.len()
    }

    /// `max_ij |b_i a_ij + b_j a_ji - b_i b_j|`.
    pub fn symplectic_residual(&self) -> f64 {
        let s = self.stages();
        let mut worst: f64 = 0.0;
        for i in 0..s {
            for j in 0..s {
                let r = self.b[i] * self.a[i][j] + self.b[j] * self.a[j][i] - self.b[i] * self.b[j];
                worst = worst.max(r.abs());
            }
        }
        worst
    }

    pub fn is_symplectic(&self) -> bool {
        self.symplectic_residual() <= SYMPLECTIC_TOL
    }

    /// `max(|sum b - 1|, max_i |c_i - sum_j a_ij|)`.
    pub fn consistency_residual(&self) -> f64 {
        let sum_b = (self.b.iter().sum::<f64>() - 1.0).abs();
        self.a
            .iter()
            .zip(&self.c)
            .map(|(row, c)| (row.iter().sum::<f64>() - c).abs())
            .fold(sum_b, f64::max)
    }
}

/// Gauss-Legendre collocation tableau with `s` stages (order `2s`).
pub fn gauss_legendre_tableau(s: usize) -> crate::Result<ButcherTableau> {
    let tab = match s {
        1 => ButcherTableau {
            name: "IRK2",
            a: vec![vec![0.5]],
            b: vec![1.0],
            c: vec![0.5],
        },
        2 => {
            let r = 3f64.sqrt() / 6.0;
            ButcherTableau {
                name: "IRK4",
                a: vec![vec![0.25, 0.25 - r], vec![0.25 + r, 0.25]],
                b: vec![0.5, 0.5],
                c: vec![0.5 - r, 0.5 + r],
            }
        }
        3 => {
            let r = 15f64.sqrt();
            ButcherTableau {
                name: "IRK6",
                a: vec![
                    vec![5.0 / 36.0, 2.0 / 9.0 - r / 15.0, 5.0 / 36.0 - r / 30.0],
                    vec![5.0 / 36.0 + r / 24.0, 2.0 / 9.0, 5.0 / 36.0 - r / 24.0],
                    vec![5.0 / 36.0 + r / 30.0, 2.0 / 9.0 + r / 15.0, 5.0 / 36.0],
                ],
                b: vec![5.0 / 18.0, 4.0 / 9.0, 5.0 / 18.0],
                c: vec![0.5 - r / 10.0, 0.5, 0.5 + r / 10.0],
            }
        }
        other => return Err(crate::Error::UnsupportedStages(other)),
    };
    Ok(tab)
}
