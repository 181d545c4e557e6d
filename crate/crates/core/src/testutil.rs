use nalgebra::DMatrix;

fn step(x: f64) -> f64 {
    1e-6 * (1.0 + x.abs())
}

pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            let h = step(x[i]);
            p[i] = x[i] + h;
            let up = f(&p);
            p[i] = x[i] - h;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn fd_hessian(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> DMatrix<f64> {
    let d = x.len();
    let mut h = DMatrix::zeros(d, d);
    let mut p = x.to_vec();
    for i in 0..d {
        for j in 0..d {
            let (hi, hj) = (1e-4 * (1.0 + x[i].abs()), 1e-4 * (1.0 + x[j].abs()));
            let mut eval = |si: f64, sj: f64| {
                p.copy_from_slice(x);
                p[i] += si * hi;
                p[j] += sj * hj;
                f(&p)
            };
            h[(i, j)] = (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                / (4.0 * hi * hj);
        }
    }
    h
}
