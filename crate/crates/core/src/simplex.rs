//! Maximization over the probability simplex: projected gradient ascent with
//! backtracking from several starts, then a pairwise mass-transfer polish that
//! copes with kinks and jumps the gradient cannot see.

/// Objective on the simplex `{x ≥ 0, Σx = 1}` of dimension [`dim`](Self::dim).
pub trait SimplexObjective {
    fn dim(&self) -> usize;

    /// May return NaN for points where the objective is undefined; those are
    /// treated as worse than any finite value.
    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64], out: &mut [f64]) {
        let h = 1e-7;
        let mut y = x.to_vec();
        for a in 0..x.len() {
            let up = (x[a] + h).min(1.0);
            let down = (x[a] - h).max(0.0);
            y[a] = up;
            let fu = self.value(&y);
            y[a] = down;
            let fd = self.value(&y);
            y[a] = x[a];
            out[a] = if up > down { (fu - fd) / (up - down) } else { 0.0 };
        }
    }

    /// Value after moving `amount` of mass from coordinate `from` to `to`.
    /// `base` is `value(x)`.
    fn transfer_value(&self, x: &[f64], base: f64, from: usize, to: usize, amount: f64) -> f64 {
        let _ = base;
        let mut y = x.to_vec();
        y[from] -= amount;
        y[to] += amount;
        self.value(&y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentOptions {
    pub max_iter: usize,
    /// Stop once an iteration gains less than this (relative to `max(1, |f|)`).
    pub tolerance: f64,
    pub polish: bool,
    pub polish_grid: usize,
    pub max_polish_sweeps: usize,
}

impl Default for AscentOptions {
    fn default() -> Self {
        AscentOptions {
            max_iter: 400,
            tolerance: 1e-15,
            polish: true,
            polish_grid: 64,
            max_polish_sweeps: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AscentResult {
    pub point: Vec<f64>,
    pub value: f64,
}

fn score(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Euclidean projection onto the simplex (sort-based).
pub fn project_to_simplex(v: &mut [f64]) {
    let mut u: Vec<f64> = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumulative += uj;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    for x in v.iter_mut() {
        *x = (*x - theta).max(0.0);
    }
    let s: f64 = v.iter().sum();
    if s > 0.0 {
        for x in v.iter_mut() {
            *x /= s;
        }
    }
}

fn ascend<O: SimplexObjective + ?Sized>(obj: &O, start: &[f64], opts: &AscentOptions) -> AscentResult {
    let n = obj.dim();
    let mut x = start.to_vec();
    project_to_simplex(&mut x);
    let mut fx = score(obj.value(&x));
    let mut grad = vec![0.0; n];
    let mut step = 1.0;
    let mut stalls = 0;
    for _ in 0..opts.max_iter {
        obj.gradient(&x, &mut grad);
        if grad.iter().any(|g| !g.is_finite()) {
            break;
        }
        let mut improved = false;
        let mut s = step * 2.0;
        while s > 1e-14 {
            let mut y: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a + s * g).collect();
            project_to_simplex(&mut y);
            let fy = score(obj.value(&y));
            if fy > fx {
                let gain = fy - fx;
                x = y;
                fx = fy;
                step = s;
                improved = true;
                if gain <= opts.tolerance * fx.abs().max(1.0) {
                    stalls += 1;
                } else {
                    stalls = 0;
                }
                break;
            }
            s *= 0.5;
        }
        if !improved || stalls >= 3 {
            break;
        }
    }
    AscentResult { point: x, value: fx }
}

/// Moves mass between coordinate pairs while any candidate transfer helps.
pub fn polish<O: SimplexObjective + ?Sized>(obj: &O, mut best: AscentResult, opts: &AscentOptions) -> AscentResult {
    let n = obj.dim();
    let grid = opts.polish_grid.max(1) as f64;
    for _ in 0..opts.max_polish_sweeps {
        let mut improved = false;
        for from in 0..n {
            if best.point[from] <= 0.0 {
                continue;
            }
            for to in 0..n {
                if to == from || best.point[from] <= 0.0 {
                    continue;
                }
                let avail = best.point[from];
                let mut amounts = vec![avail];
                let mut a = avail;
                for _ in 0..20 {
                    a *= 0.5;
                    amounts.push(a);
                }
                let mut j = 1.0;
                while j / grid < avail && j <= 4.0 {
                    amounts.push(j / grid);
                    j += 1.0;
                }
                let mut best_amount = 0.0;
                let mut best_value = best.value;
                for &amt in &amounts {
                    let v = score(obj.transfer_value(&best.point, best.value, from, to, amt));
                    if v > best_value {
                        best_value = v;
                        best_amount = amt;
                    }
                }
                if best_amount > 0.0 && best_value - best.value > 1e-15 * best.value.abs().max(1.0) {
                    if best_amount == avail {
                        best.point[to] += best.point[from];
                        best.point[from] = 0.0;
                    } else {
                        best.point[from] -= best_amount;
                        best.point[to] += best_amount;
                    }
                    best.value = best_value;
                    improved = true;
                }
            }
        }
        if !improved {
            break;
        }
    }
    best
}

/// Best point found from `starts` by ascent, then polished.
pub fn maximize_on_simplex<O: SimplexObjective + ?Sized>(
    obj: &O,
    starts: &[Vec<f64>],
    opts: &AscentOptions,
) -> AscentResult {
    let mut best: Option<AscentResult> = None;
    for start in starts {
        let r = ascend(obj, start, opts);
        if best.as_ref().is_none_or(|b| r.value > b.value) {
            best = Some(r);
        }
    }
    let best = best.expect("at least one start");
    if opts.polish {
        polish(obj, best, opts)
    } else {
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Quadratic(Vec<f64>);

    impl SimplexObjective for Quadratic {
        fn dim(&self) -> usize {
            self.0.len()
        }

        fn value(&self, x: &[f64]) -> f64 {
            -x.iter().zip(&self.0).map(|(a, b)| (a - b).powi(2)).sum::<f64>()
        }
    }

    #[test]
    fn projection_lands_on_simplex() {
        let mut v = vec![0.8, 0.6, -0.2];
        project_to_simplex(&mut v);
        assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!((v[0] - 0.6).abs() < 1e-12 && (v[1] - 0.4).abs() < 1e-12 && v[2] == 0.0);
    }

    #[test]
    fn finds_interior_maximum() {
        let obj = Quadratic(vec![0.2, 0.3, 0.5]);
        let r = maximize_on_simplex(&obj, &[vec![1.0, 0.0, 0.0]], &AscentOptions::default());
        for (a, b) in r.point.iter().zip(&obj.0) {
            assert!((a - b).abs() < 1e-6);
        }
    }

    #[test]
    fn finds_boundary_maximum() {
        let obj = Quadratic(vec![1.2, -0.1, -0.1]);
        let r = maximize_on_simplex(&obj, &[vec![0.0, 0.0, 1.0]], &AscentOptions::default());
        assert!((r.point[0] - 1.0).abs() < 1e-9);
    }
}
