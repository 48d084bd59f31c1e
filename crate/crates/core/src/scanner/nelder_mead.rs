//! Derivative-free Nelder–Mead simplex minimization.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NelderMead {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    pub max_iter: usize,
    /// Edge length of the initial axis-aligned simplex.
    pub initial_step: f64,
    /// Stop once every vertex lies within this distance of the best one.
    pub x_tol: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        NelderMead {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            max_iter: 500,
            initial_step: 0.1,
            x_tol: 1e-12,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

fn combine(a: &[f64], b: &[f64], t: f64) -> Vec<f64> {
    // a + t (b − a)
    a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl NelderMead {
    /// Minimizes `f` from `x0`. Non-finite objective values are treated as `+∞`.
    pub fn minimize<F>(&self, mut f: F, x0: &[f64]) -> Minimum
    where
        F: FnMut(&[f64]) -> f64,
    {
        let n = x0.len();
        let mut evaluations = 0;
        let mut eval = |x: &[f64]| {
            evaluations += 1;
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(n + 1);
        let v0 = eval(x0);
        simplex.push((x0.to_vec(), v0));
        for i in 0..n {
            let mut x = x0.to_vec();
            x[i] += self.initial_step;
            let v = eval(&x);
            simplex.push((x, v));
        }

        let mut iterations = 0;
        while iterations < self.max_iter {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = &simplex[0];
            if best.1 == 0.0
                || simplex[1..]
                    .iter()
                    .all(|(x, _)| dist(x, &best.0) <= self.x_tol)
            {
                break;
            }
            iterations += 1;

            let mut centroid = vec![0.0; n];
            for (x, _) in &simplex[..n] {
                for (c, xi) in centroid.iter_mut().zip(x) {
                    *c += xi / n as f64;
                }
            }
            let (worst_x, worst_v) = simplex[n].clone();
            let second_worst = simplex[n - 1].1;
            let best_v = simplex[0].1;

            let reflected = combine(&centroid, &worst_x, -self.reflection);
            let fr = eval(&reflected);
            if fr < best_v {
                let expanded = combine(&centroid, &worst_x, -self.expansion);
                let fe = eval(&expanded);
                simplex[n] = if fe < fr {
                    (expanded, fe)
                } else {
                    (reflected, fr)
                };
                continue;
            }
            if fr < second_worst {
                simplex[n] = (reflected, fr);
                continue;
            }
            let (contracted, fc) = if fr < worst_v {
                let x = combine(&centroid, &reflected, self.contraction);
                let v = eval(&x);
                (x, v)
            } else {
                let x = combine(&centroid, &worst_x, self.contraction);
                let v = eval(&x);
                (x, v)
            };
            if fc < worst_v.min(fr) {
                simplex[n] = (contracted, fc);
                continue;
            }
            let best_x = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                let x = combine(&best_x, &vertex.0, self.shrink);
                let v = eval(&x);
                *vertex = (x, v);
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, value) = simplex.swap_remove(0);
        Minimum {
            x,
            value,
            iterations,
            evaluations,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_bowl() {
        let nm = NelderMead::default();
        let m = nm.minimize(
            |x| (x[0] - 1.0).powi(2) + 3.0 * (x[1] + 2.0).powi(2),
            &[0.0, 0.0],
        );
        assert!((m.x[0] - 1.0).abs() < 1e-6);
        assert!((m.x[1] + 2.0).abs() < 1e-6);
        assert!(m.iterations <= 500);
    }

    #[test]
    fn rosenbrock() {
        let nm = NelderMead {
            max_iter: 5000,
            ..NelderMead::default()
        };
        let m = nm.minimize(
            |x| 100.0 * (x[1] - x[0] * x[0]).powi(2) + (1.0 - x[0]).powi(2),
            &[-1.2, 1.0],
        );
        assert!(m.value < 1e-12, "{}", m.value);
    }

    #[test]
    fn cone_in_three_dimensions() {
        // |linear| along a line of zeros, the shape of |det| near an umbilic curve
        let nm = NelderMead::default();
        let m = nm.minimize(
            |x| ((x[0] - 0.3).powi(2) + (x[1] + 0.1).powi(2)).sqrt(),
            &[1.0, 1.0, 0.5],
        );
        assert!(m.value < 1e-8, "{}", m.value);
    }

    #[test]
    fn iteration_cap() {
        let nm = NelderMead {
            max_iter: 3,
            ..NelderMead::default()
        };
        let m = nm.minimize(|x| x.iter().map(|v| v * v).sum(), &[5.0, 5.0]);
        assert_eq!(m.iterations, 3);
    }

    #[test]
    fn nan_is_worst() {
        let nm = NelderMead::default();
        let m = nm.minimize(
            |x| {
                if x[0] < 0.0 {
                    f64::NAN
                } else {
                    (x[0] - 0.5).powi(2) + x[1].powi(2)
                }
            },
            &[0.05, 0.3],
        );
        assert!(m.value.is_finite());
        assert!((m.x[0] - 0.5).abs() < 1e-5);
    }
}
