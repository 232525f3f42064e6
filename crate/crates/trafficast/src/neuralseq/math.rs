//! Small dense-vector kernels shared by the recurrent cells. Matrices are
//! row-major `rows x cols` slices.

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `out[r] += sum_c m[r, c] * x[c]`
#[inline]
pub(crate) fn matvec_acc(out: &mut [f64], m: &[f64], x: &[f64]) {
    let cols = x.len();
    debug_assert_eq!(m.len(), out.len() * cols);
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o += dot(row, x);
    }
}

/// `out[c] += sum_r m[r, c] * y[r]` (transpose apply)
#[inline]
pub(crate) fn matvec_t_acc(out: &mut [f64], m: &[f64], y: &[f64]) {
    let cols = out.len();
    debug_assert_eq!(m.len(), y.len() * cols);
    for (yr, row) in y.iter().zip(m.chunks_exact(cols)) {
        if *yr != 0.0 {
            for (o, mv) in out.iter_mut().zip(row) {
                *o += yr * mv;
            }
        }
    }
}

/// `m[r, c] += y[r] * x[c]`
#[inline]
pub(crate) fn outer_acc(m: &mut [f64], y: &[f64], x: &[f64]) {
    let cols = x.len();
    debug_assert_eq!(m.len(), y.len() * cols);
    for (yr, row) in y.iter().zip(m.chunks_exact_mut(cols)) {
        if *yr != 0.0 {
            for (mv, xv) in row.iter_mut().zip(x) {
                *mv += yr * xv;
            }
        }
    }
}

/// `y[i] += a * x[i]`
#[inline]
pub(crate) fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Numerically stable softmax, written into `out`.
pub(crate) fn softmax_into(out: &mut [f64], scores: &[f64]) {
    debug_assert_eq!(out.len(), scores.len());
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for (o, s) in out.iter_mut().zip(scores) {
        *o = (s - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matvec_and_transpose_agree_with_naive() {
        let m = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]; // 2x3
        let x = [1.0, 0.5, -1.0];
        let mut out = [0.0; 2];
        matvec_acc(&mut out, &m, &x);
        assert_eq!(out, [-1.0, 0.5]);

        let y = [2.0, -1.0];
        let mut outt = [0.0; 3];
        matvec_t_acc(&mut outt, &m, &y);
        assert_eq!(outt, [-2.0, -1.0, 0.0]);
    }

    #[test]
    fn softmax_sums_to_one() {
        let mut out = [0.0; 4];
        softmax_into(&mut out, &[1.0, 2.0, 3.0, 4.0]);
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(out.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn softmax_of_equal_scores_is_uniform() {
        let mut out = [0.0; 5];
        softmax_into(&mut out, &[0.7; 5]);
        for o in out {
            assert!((o - 0.2).abs() < 1e-15);
        }
    }
}
