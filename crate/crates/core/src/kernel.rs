//! Dense real GEMM kernels behind codebook projection and cleanup.
//!
//! A codebook of `m` rows is held as two row-major `m × n` planes
//! (`re`, `im`). A batch of `b` query vectors is held the same way as
//! `b × n` planes. Every product goes through `matrixmultiply::dgemm` with
//! fixed blocking, so the value computed for one query does not depend on
//! how many other queries share the batch.

/// Borrowed `rows × n` complex matrix in split re/im layout.
#[derive(Clone, Copy)]
pub(crate) struct Planes<'a> {
    pub re: &'a [f64],
    pub im: &'a [f64],
    pub rows: usize,
    pub n: usize,
}

impl<'a> Planes<'a> {
    pub fn new(re: &'a [f64], im: &'a [f64], rows: usize, n: usize) -> Self {
        debug_assert_eq!(re.len(), rows * n);
        debug_assert_eq!(im.len(), rows * n);
        Planes { re, im, rows, n }
    }
}

/// `out[i*b + q] = Re(Φ_i† v_q)` for every codebook row `i` and query `q`.
pub(crate) fn coefficients(book: Planes<'_>, queries: Planes<'_>, out: &mut [f64]) {
    let (m, n, b) = (book.rows, book.n, queries.rows);
    assert_eq!(queries.n, n);
    assert_eq!(out.len(), m * b);
    if m == 0 || b == 0 {
        return;
    }
    // SAFETY: every pointer covers the extents implied by its strides:
    // book planes are m×n row-major, query planes b×n row-major read as n×b,
    // and out is m×b row-major.
    unsafe {
        matrixmultiply::dgemm(
            m, n, b, 1.0,
            book.re.as_ptr(), n as isize, 1,
            queries.re.as_ptr(), 1, n as isize,
            0.0,
            out.as_mut_ptr(), b as isize, 1,
        );
        matrixmultiply::dgemm(
            m, n, b, 1.0,
            book.im.as_ptr(), n as isize, 1,
            queries.im.as_ptr(), 1, n as isize,
            1.0,
            out.as_mut_ptr(), b as isize, 1,
        );
    }
}

/// `out_q = Σ_i coeffs[i*b + q] · Φ_i` for each query `q`, as `b × n` planes.
pub(crate) fn combine(
    book: Planes<'_>,
    coeffs: &[f64],
    b: usize,
    out_re: &mut [f64],
    out_im: &mut [f64],
) {
    let (m, n) = (book.rows, book.n);
    assert_eq!(coeffs.len(), m * b);
    assert_eq!(out_re.len(), b * n);
    assert_eq!(out_im.len(), b * n);
    if b == 0 {
        return;
    }
    if m == 0 {
        out_re.fill(0.0);
        out_im.fill(0.0);
        return;
    }
    // SAFETY: coeffs is m×b row-major, read transposed as b×m; book planes
    // are m×n row-major; outputs are b×n row-major.
    unsafe {
        matrixmultiply::dgemm(
            b, m, n, 1.0,
            coeffs.as_ptr(), 1, b as isize,
            book.re.as_ptr(), n as isize, 1,
            0.0,
            out_re.as_mut_ptr(), n as isize, 1,
        );
        matrixmultiply::dgemm(
            b, m, n, 1.0,
            coeffs.as_ptr(), 1, b as isize,
            book.im.as_ptr(), n as isize, 1,
            0.0,
            out_im.as_mut_ptr(), n as isize, 1,
        );
    }
}
