//! Bounds-checked strided wrapper over `matrixmultiply::dgemm`.

/// Largest offset touched by an `rows x cols` view with the given strides.
fn extent(rows: usize, cols: usize, rs: isize, cs: isize) -> usize {
    if rows == 0 || cols == 0 {
        return 0;
    }
    (rows as isize - 1) as usize * rs as usize + (cols as isize - 1) as usize * cs as usize + 1
}

/// `C <- A B + beta C` with `A: m x k`, `B: k x n`, `C: m x n`, all strides
/// nonnegative and element-counted.
#[allow(clippy::too_many_arguments)]
pub(crate) fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    rsa: usize,
    csa: usize,
    b: &[f64],
    rsb: usize,
    csb: usize,
    beta: f64,
    c: &mut [f64],
    rsc: usize,
    csc: usize,
) {
    let (rsa, csa, rsb, csb, rsc, csc) = (
        rsa as isize,
        csa as isize,
        rsb as isize,
        csb as isize,
        rsc as isize,
        csc as isize,
    );
    assert!(extent(m, k, rsa, csa) <= a.len(), "gemm: A out of bounds");
    assert!(extent(k, n, rsb, csb) <= b.len(), "gemm: B out of bounds");
    assert!(extent(m, n, rsc, csc) <= c.len(), "gemm: C out of bounds");
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: every index the kernel touches lies inside the slices checked
    // above, and `c` is exclusively borrowed.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            rsc,
            csc,
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strided_product() {
        // A = [[1, 2], [3, 4]] row-major, B = [[5], [6]] stored with stride 3.
        let a = [1.0, 2.0, 3.0, 4.0];
        let b = [5.0, -1.0, -1.0, 6.0];
        let mut c = [1.0, 0.0, 1.0];
        gemm(2, 2, 1, &a, 2, 1, &b, 3, 1, 1.0, &mut c, 2, 1);
        assert_eq!(c, [18.0, 0.0, 40.0]);
        gemm(2, 2, 1, &a, 2, 1, &b, 3, 1, 0.0, &mut c, 2, 1);
        assert_eq!(c, [17.0, 0.0, 39.0]);
    }

    #[test]
    #[should_panic]
    fn rejects_short_output() {
        let a = [1.0; 4];
        let mut c = [0.0; 3];
        gemm(2, 2, 2, &a, 2, 1, &a, 2, 1, 0.0, &mut c, 2, 1);
    }
}
