//! Thin safe wrappers over the LAPACK drivers the kernel relies on.
//!
//! nalgebra's own bidiagonal SVD returns wrong factorizations on some
//! rank-deficient complex inputs, so all SVDs and Hermitian eigensolves go
//! through reference LAPACK (`zgesvd`, `dgesvd`, `zheev`).

// Links the system OpenBLAS, which provides the LAPACK symbols.
extern crate openblas_src;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, C64};

/// Thin SVD `M = U diag(s) Vᴴ` with `s` descending.
pub(crate) struct Svd {
    pub u: CMatrix,
    pub s: Vec<f64>,
    pub vt: CMatrix,
}

fn check(info: i32, routine: &str) -> Result<()> {
    match info {
        0 => Ok(()),
        i if i < 0 => Err(Error::Numerical(format!("{routine}: invalid argument {}", -i))),
        i => Err(Error::Numerical(format!("{routine} did not converge ({i})"))),
    }
}

pub(crate) fn svd(m: &CMatrix, vectors: bool) -> Result<Svd> {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok(Svd {
            u: CMatrix::zeros(rows, 0),
            s: Vec::new(),
            vt: CMatrix::zeros(0, cols),
        });
    }
    let job = if vectors { b'S' } else { b'N' };
    let mut a = m.clone();
    let mut s = vec![0.0; k];
    let (mut u, mut vt) = if vectors {
        (CMatrix::zeros(rows, k), CMatrix::zeros(k, cols))
    } else {
        (CMatrix::zeros(1, 1), CMatrix::zeros(1, 1))
    };
    let ldu = if vectors { rows } else { 1 } as i32;
    let ldvt = if vectors { k } else { 1 } as i32;
    let mut rwork = vec![0.0; 5 * k];
    let mut info = 0;
    let mut query = [C64::new(0.0, 0.0)];
    // SAFETY: all buffers are sized per the zgesvd contract for jobu = jobvt = job.
    unsafe {
        lapack::zgesvd(
            job, job, rows as i32, cols as i32, a.as_mut_slice(), rows as i32, &mut s,
            u.as_mut_slice(), ldu, vt.as_mut_slice(), ldvt, &mut query, -1, &mut rwork, &mut info,
        );
    }
    check(info, "zgesvd")?;
    let lwork = (query[0].re as usize).max(1);
    let mut work = vec![C64::new(0.0, 0.0); lwork];
    unsafe {
        lapack::zgesvd(
            job, job, rows as i32, cols as i32, a.as_mut_slice(), rows as i32, &mut s,
            u.as_mut_slice(), ldu, vt.as_mut_slice(), ldvt, &mut work, lwork as i32, &mut rwork,
            &mut info,
        );
    }
    check(info, "zgesvd")?;
    if !vectors {
        u = CMatrix::zeros(rows, 0);
        vt = CMatrix::zeros(0, cols);
    }
    Ok(Svd { u, s, vt })
}

/// Thin real SVD: left singular vectors (as columns) and singular values,
/// descending.
pub(crate) fn real_svd(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Ok((DMatrix::zeros(rows, 0), Vec::new()));
    }
    let mut a = m.clone();
    let mut s = vec![0.0; k];
    let mut u = DMatrix::<f64>::zeros(rows, k);
    let mut vt = [0.0];
    let mut info = 0;
    let mut query = [0.0];
    // SAFETY: buffers sized per the dgesvd contract for jobu = 'S', jobvt = 'N'.
    unsafe {
        lapack::dgesvd(
            b'S', b'N', rows as i32, cols as i32, a.as_mut_slice(), rows as i32, &mut s,
            u.as_mut_slice(), rows as i32, &mut vt, 1, &mut query, -1, &mut info,
        );
    }
    check(info, "dgesvd")?;
    let lwork = (query[0] as usize).max(1);
    let mut work = vec![0.0; lwork];
    unsafe {
        lapack::dgesvd(
            b'S', b'N', rows as i32, cols as i32, a.as_mut_slice(), rows as i32, &mut s,
            u.as_mut_slice(), rows as i32, &mut vt, 1, &mut work, lwork as i32, &mut info,
        );
    }
    check(info, "dgesvd")?;
    Ok((u, s))
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian
/// matrix; only the lower triangle is read.
pub(crate) fn hermitian_eigen(m: &CMatrix) -> Result<(Vec<f64>, CMatrix)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), CMatrix::zeros(0, 0)));
    }
    let mut a = m.clone();
    let mut w = vec![0.0; n];
    let mut rwork = vec![0.0; (3 * n).saturating_sub(2).max(1)];
    let mut info = 0;
    let mut query = [C64::new(0.0, 0.0)];
    // SAFETY: buffers sized per the zheev contract for jobz = 'V'.
    unsafe {
        lapack::zheev(
            b'V', b'L', n as i32, a.as_mut_slice(), n as i32, &mut w, &mut query, -1, &mut rwork,
            &mut info,
        );
    }
    check(info, "zheev")?;
    let lwork = (query[0].re as usize).max(2 * n);
    let mut work = vec![C64::new(0.0, 0.0); lwork];
    unsafe {
        lapack::zheev(
            b'V', b'L', n as i32, a.as_mut_slice(), n as i32, &mut w, &mut work, lwork as i32,
            &mut rwork, &mut info,
        );
    }
    check(info, "zheev")?;
    Ok((w, a))
}
