//! Reference implementations used as test oracles. Each one deliberately takes
//! a different numerical route from the library code it checks.
#![allow(dead_code)]

/// Double-double number `hi + lo` (about 106 significant bits).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dd {
    hi: f64,
    lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> Dd {
    let s = a + b;
    Dd {
        hi: s,
        lo: b - (s - a),
    }
}

impl Dd {
    pub fn from(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    pub fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        quick_two_sum(s, e + self.lo + o.lo)
    }

    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn sub(self, o: Dd) -> Dd {
        self.add(o.neg())
    }

    pub fn mul(self, o: Dd) -> Dd {
        let p = self.hi * o.hi;
        let e = self.hi.mul_add(o.hi, -p);
        quick_two_sum(p, e + self.hi * o.lo + self.lo * o.hi)
    }

    pub fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self.sub(o.mul(Dd::from(q1)));
        let q2 = r.hi / o.hi;
        let r = r.sub(o.mul(Dd::from(q2)));
        let q3 = r.hi / o.hi;
        quick_two_sum(q1, q2).add(Dd::from(q3))
    }
}

/// Posterior mean and variance of the first-order polynomial kernel,
/// `k*ᵀ Σ⁻¹ y` and `k** - k*ᵀ Σ⁻¹ k*`, by Gaussian elimination with partial
/// pivoting carried out in double-double arithmetic.
pub fn dense_posterior(
    x: &[[f64; 2]],
    y: &[f64],
    psi1: f64,
    psi2: f64,
    sigma: f64,
    v: [f64; 2],
) -> (f64, f64) {
    let (p1, p2) = (Dd::from(psi1), Dd::from(psi2));
    let k = |a: [f64; 2], b: [f64; 2]| {
        p1.mul(
            Dd::from(a[0])
                .mul(Dd::from(b[0]))
                .add(Dd::from(a[1]).mul(Dd::from(b[1])))
                .add(p2),
        )
    };
    let n = x.len();
    let s2 = Dd::from(sigma).mul(Dd::from(sigma));
    let ks: Vec<Dd> = x.iter().map(|&xi| k(xi, v)).collect();
    // Augmented system [Σ | y | k*].
    let mut m: Vec<Vec<Dd>> = (0..n)
        .map(|i| {
            let mut row: Vec<Dd> = (0..n)
                .map(|j| {
                    if i == j {
                        k(x[i], x[j]).add(s2)
                    } else {
                        k(x[i], x[j])
                    }
                })
                .collect();
            row.push(Dd::from(y[i]));
            row.push(ks[i]);
            row
        })
        .collect();
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&a, &b| m[a][c].hi.abs().partial_cmp(&m[b][c].hi.abs()).unwrap())
            .unwrap();
        m.swap(c, piv);
        for r in c + 1..n {
            let f = m[r][c].div(m[c][c]);
            let (top, bottom) = m.split_at_mut(r);
            for (dst, src) in bottom[0][c..].iter_mut().zip(&top[c][c..]) {
                *dst = dst.sub(src.mul(f));
            }
        }
    }
    let mut sol = vec![[Dd::from(0.0); 2]; n];
    for r in (0..n).rev() {
        for (col, slot) in [(n, 0), (n + 1, 1)] {
            let mut acc = m[r][col];
            for j in r + 1..n {
                acc = acc.sub(m[r][j].mul(sol[j][slot]));
            }
            sol[r][slot] = acc.div(m[r][r]);
        }
    }
    let mut mean = Dd::from(0.0);
    let mut explained = Dd::from(0.0);
    for i in 0..n {
        mean = mean.add(ks[i].mul(sol[i][0]));
        explained = explained.add(ks[i].mul(sol[i][1]));
    }
    (mean.to_f64(), k(v, v).sub(explained).to_f64())
}

/// `Φ(z)` by composite Simpson integration of the normal density from 0.
pub fn phi_simpson(z: f64) -> f64 {
    let zc = z.abs().min(12.0);
    // Simpson needs an even interval count.
    let steps = 2 * ((zc * 1000.0).ceil() as usize).max(1);
    let h = zc / steps as f64;
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(0.0) + pdf(zc);
    for i in 1..steps {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * pdf(i as f64 * h);
    }
    let half = s * h / 3.0;
    if z >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

/// Euclidean projection onto `{x : x_i >= 0, Σ x_i = 1}` (sort-based).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// Minimizes `Σ c_i / x_i` over the probability simplex by projected gradient
/// descent with backtracking. Returns the minimizing shares.
pub fn min_inverse_sum_on_simplex(c: &[f64]) -> Vec<f64> {
    let f = |x: &[f64]| -> f64 {
        x.iter()
            .zip(c)
            .map(|(&xi, &ci)| if xi > 0.0 { ci / xi } else { f64::INFINITY })
            .sum()
    };
    let n = c.len();
    let mut x = vec![1.0 / n as f64; n];
    let mut fx = f(&x);
    let mut step = 1.0 / c.iter().cloned().fold(0.0, f64::max);
    for _ in 0..200_000 {
        let g: Vec<f64> = x.iter().zip(c).map(|(&xi, &ci)| -ci / (xi * xi)).collect();
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - step * gi).collect();
            let p = project_simplex(&trial);
            let fp = f(&p);
            let dec: f64 = g
                .iter()
                .zip(&p)
                .zip(&x)
                .map(|((gi, pi), xi)| gi * (pi - xi))
                .sum();
            let dist2: f64 = p.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
            if fp <= fx + dec + dist2 / (2.0 * step) {
                let moved = dist2.sqrt();
                x = p;
                fx = fp;
                accepted = true;
                step *= 1.5;
                if moved < 1e-16 {
                    return x;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    x
}
