//! Dense row-major helpers shared by the tagger, encoder and transform code.

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub(crate) fn sq_norm(a: &[f64]) -> f64 {
    dot(a, a)
}

/// Cosine of two equal-length vectors; `None` when either is all-zero.
pub(crate) fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        ab += x * y;
        aa += x * x;
        bb += y * y;
    }
    if aa == 0.0 || bb == 0.0 {
        return None;
    }
    Some(ab / (aa * bb).sqrt())
}

/// `out += M x` for an `rows x cols` matrix `m`.
#[inline]
pub(crate) fn gemv_acc(out: &mut [f64], m: &[f64], cols: usize, x: &[f64]) {
    debug_assert_eq!(m.len(), out.len() * cols);
    debug_assert_eq!(x.len(), cols);
    for (o, row) in out.iter_mut().zip(m.chunks_exact(cols)) {
        *o += dot(row, x);
    }
}

/// `out += M^T y` for an `rows x cols` matrix `m`.
#[inline]
pub(crate) fn gemv_t_acc(out: &mut [f64], m: &[f64], cols: usize, y: &[f64]) {
    debug_assert_eq!(out.len(), cols);
    for (row, &yi) in m.chunks_exact(cols).zip(y) {
        if yi == 0.0 {
            continue;
        }
        for (o, w) in out.iter_mut().zip(row) {
            *o += yi * w;
        }
    }
}

/// `m += y x^T` (rank-one update).
#[inline]
pub(crate) fn ger_acc(m: &mut [f64], cols: usize, y: &[f64], x: &[f64]) {
    for (row, &yi) in m.chunks_exact_mut(cols).zip(y) {
        if yi == 0.0 {
            continue;
        }
        for (w, xj) in row.iter_mut().zip(x) {
            *w += yi * xj;
        }
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Shortest decimal that parses back to the same `f64`.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}
