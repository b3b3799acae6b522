//! Dense linear algebra helpers on top of LAPACK (`dsyevd`, `dsyevx`, `zheevd`).

use std::os::raw::c_int;
use std::sync::OnceLock;

use lapack_sys::__BindgenComplex;
use ndarray::{Array1, Array2, ShapeBuilder};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Column-major copy of a square matrix.
fn col_major<T: Clone>(a: &Array2<T>) -> Vec<T> {
    a.t().iter().cloned().collect()
}

fn check_square<T>(a: &Array2<T>) -> Result<usize> {
    let (r, c) = a.dim();
    if r != c {
        return Err(Error::DimensionMismatch {
            expected: r,
            got: c,
        });
    }
    Ok(r)
}

/// Full eigendecomposition of a real symmetric matrix (lower triangle is read).
/// Eigenvalues ascending, eigenvectors in columns.
pub fn eigh(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    backend_self_check()?;
    eigh_unchecked(a)
}

/// Verifies once per process that the LAPACK backend returns orthonormal
/// eigenvectors. Some OpenBLAS kernels selected at load time corrupt results;
/// setting `OPENBLAS_CORETYPE` (e.g. `Haswell`) before start-up avoids them.
pub fn backend_self_check() -> Result<()> {
    static CHECK: OnceLock<std::result::Result<(), String>> = OnceLock::new();
    CHECK
        .get_or_init(|| {
            let n = 160;
            let a = Array2::from_shape_fn((n, n), |(i, j)| {
                if i == j {
                    3.0 * (0.37 * i as f64).sin()
                } else {
                    1.0 / (1.0 + (i as f64 - j as f64).abs())
                }
            });
            let (w, v) = eigh_unchecked(&a).map_err(|e| e.to_string())?;
            let res = max_abs(&(a.dot(&v) - &v * &w));
            let orth = max_abs(&(v.t().dot(&v) - Array2::<f64>::eye(n)));
            if res > 1e-10 || orth > 1e-10 {
                return Err(format!(
                    "test eigenproblem residual {res:e}, orthogonality error {orth:e}; \
                     set OPENBLAS_CORETYPE=Haswell (or another explicit core) and restart"
                ));
            }
            Ok(())
        })
        .clone()
        .map_err(Error::Backend)
}

fn max_abs(a: &Array2<f64>) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn eigh_unchecked(a: &Array2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = check_square(a)?;
    if n == 0 {
        return Ok((Array1::zeros(0), Array2::zeros((0, 0))));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("eigh input".into()));
    }
    let mut buf = col_major(a);
    let nn = n as c_int;
    let mut w = vec![0.0f64; n];
    let mut info: c_int = 0;
    let mut wq = [0.0f64];
    let mut iq = [0 as c_int];
    let query: c_int = -1;
    unsafe {
        lapack_sys::dsyevd_(
            b"V".as_ptr() as _,
            b"L".as_ptr() as _,
            &nn,
            buf.as_mut_ptr(),
            &nn,
            w.as_mut_ptr(),
            wq.as_mut_ptr(),
            &query,
            iq.as_mut_ptr(),
            &query,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Eigensolver {
            routine: "dsyevd",
            info,
        });
    }
    let lwork = wq[0] as c_int;
    let liwork = iq[0];
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    let mut iwork = vec![0 as c_int; liwork.max(1) as usize];
    unsafe {
        lapack_sys::dsyevd_(
            b"V".as_ptr() as _,
            b"L".as_ptr() as _,
            &nn,
            buf.as_mut_ptr(),
            &nn,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Eigensolver {
            routine: "dsyevd",
            info,
        });
    }
    let v = Array2::from_shape_vec((n, n).f(), buf).expect("shape");
    Ok((Array1::from(w), v))
}

/// Lowest `k` eigenpairs of a real symmetric matrix via `dsyevx`.
/// Bisection and inverse iteration: the MRRR driver returned inaccurate
/// vectors for near-degenerate pairs.
pub fn eigh_lowest(a: &Array2<f64>, k: usize) -> Result<(Array1<f64>, Array2<f64>)> {
    backend_self_check()?;
    let n = check_square(a)?;
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "requested {k} eigenpairs of an {n}x{n} matrix"
        )));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("eigh_lowest input".into()));
    }
    let mut buf = col_major(a);
    let nn = n as c_int;
    let (il, iu) = (1 as c_int, k as c_int);
    let (vl, vu) = (0.0f64, 0.0f64);
    // twice the underflow threshold gives the most accurate bisection
    let abstol = 2.0 * f64::MIN_POSITIVE;
    let mut m: c_int = 0;
    let mut w = vec![0.0f64; n];
    let mut z = vec![0.0f64; n * k];
    let lwork = (8 * n) as c_int;
    let mut work = vec![0.0f64; 8 * n];
    let mut iwork = vec![0 as c_int; 5 * n];
    let mut ifail = vec![0 as c_int; n];
    let mut info: c_int = 0;
    unsafe {
        lapack_sys::dsyevx_(
            b"V".as_ptr() as _,
            b"I".as_ptr() as _,
            b"L".as_ptr() as _,
            &nn,
            buf.as_mut_ptr(),
            &nn,
            &vl,
            &vu,
            &il,
            &iu,
            &abstol,
            &mut m,
            w.as_mut_ptr(),
            z.as_mut_ptr(),
            &nn,
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            ifail.as_mut_ptr(),
            &mut info,
        );
    }
    if info != 0 || m as usize != k {
        return Err(Error::Eigensolver {
            routine: "dsyevx",
            info,
        });
    }
    w.truncate(k);
    let v = Array2::from_shape_vec((n, k).f(), z).expect("shape");
    Ok((Array1::from(w), v))
}

/// Full eigendecomposition of a complex Hermitian matrix (lower triangle is read).
pub fn eigh_hermitian(a: &Array2<Complex64>) -> Result<(Array1<f64>, Array2<Complex64>)> {
    backend_self_check()?;
    let n = check_square(a)?;
    if n == 0 {
        return Ok((Array1::zeros(0), Array2::zeros((0, 0))));
    }
    if a.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::NonFinite("eigh_hermitian input".into()));
    }
    let mut buf = col_major(a);
    let nn = n as c_int;
    let mut w = vec![0.0f64; n];
    let mut info: c_int = 0;
    let mut wq = [Complex64::new(0.0, 0.0)];
    let mut rq = [0.0f64];
    let mut iq = [0 as c_int];
    let query: c_int = -1;
    let ptr = |v: &mut [Complex64]| v.as_mut_ptr() as *mut __BindgenComplex<f64>;
    unsafe {
        lapack_sys::zheevd_(
            b"V".as_ptr() as _,
            b"L".as_ptr() as _,
            &nn,
            ptr(&mut buf),
            &nn,
            w.as_mut_ptr(),
            ptr(&mut wq),
            &query,
            rq.as_mut_ptr(),
            &query,
            iq.as_mut_ptr(),
            &query,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Eigensolver {
            routine: "zheevd",
            info,
        });
    }
    let lwork = wq[0].re as c_int;
    let lrwork = rq[0] as c_int;
    let liwork = iq[0];
    let mut work = vec![Complex64::new(0.0, 0.0); lwork.max(1) as usize];
    let mut rwork = vec![0.0f64; lrwork.max(1) as usize];
    let mut iwork = vec![0 as c_int; liwork.max(1) as usize];
    unsafe {
        lapack_sys::zheevd_(
            b"V".as_ptr() as _,
            b"L".as_ptr() as _,
            &nn,
            ptr(&mut buf),
            &nn,
            w.as_mut_ptr(),
            ptr(&mut work),
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Eigensolver {
            routine: "zheevd",
            info,
        });
    }
    let v = Array2::from_shape_vec((n, n).f(), buf).expect("shape");
    Ok((Array1::from(w), v))
}

pub fn identity_c(n: usize) -> Array2<Complex64> {
    Array2::from_diag_elem(n, Complex64::new(1.0, 0.0))
}

pub fn to_complex(a: &Array2<f64>) -> Array2<Complex64> {
    a.mapv(|x| Complex64::new(x, 0.0))
}

pub fn dagger(a: &Array2<Complex64>) -> Array2<Complex64> {
    a.t().mapv(|x| x.conj())
}

/// Kronecker product `a ⊗ b` (first factor most significant).
pub fn kron(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for ((i, j), &x) in a.indexed_iter() {
        if x == Complex64::new(0.0, 0.0) {
            continue;
        }
        out.slice_mut(ndarray::s![i * br..(i + 1) * br, j * bc..(j + 1) * bc])
            .zip_mut_with(b, |o, &y| *o = x * y);
    }
    out
}

/// max |A - A†|
pub fn hermitian_deviation(a: &Array2<Complex64>) -> f64 {
    let n = a.nrows();
    let mut d: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            d = d.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    d
}

/// max |U†U - I|
pub fn unitary_deviation(u: &Array2<Complex64>) -> f64 {
    let p = dagger(u).dot(u);
    let mut d: f64 = 0.0;
    for ((i, j), x) in p.indexed_iter() {
        let target = if i == j { 1.0 } else { 0.0 };
        d = d.max((x - Complex64::new(target, 0.0)).norm());
    }
    d
}

pub fn max_abs_diff(a: &Array2<Complex64>, b: &Array2<Complex64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Hermitian part (A + A†)/2.
pub fn hermitize(a: &Array2<Complex64>) -> Array2<Complex64> {
    (a + &dagger(a)).mapv(|x| x * 0.5)
}

fn one_norm(a: &Array2<Complex64>) -> f64 {
    a.columns()
        .into_iter()
        .map(|c| c.iter().map(|x| x.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring of a truncated Taylor series.
pub fn expm(a: &Array2<Complex64>) -> Result<Array2<Complex64>> {
    let n = check_square(a)?;
    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(Error::NonFinite("expm input".into()));
    }
    let mut s = 0u32;
    if norm > 0.5 {
        s = (norm / 0.5).log2().ceil() as u32;
    }
    let scale = 0.5f64.powi(s as i32);
    let x = a.mapv(|v| v * scale);
    let mut result = identity_c(n);
    let mut term = identity_c(n);
    for k in 1..=24 {
        term = term.dot(&x).mapv(|v| v / k as f64);
        let tn = one_norm(&term);
        result += &term;
        if tn < 1e-18 * one_norm(&result) {
            break;
        }
    }
    for _ in 0..s {
        result = result.dot(&result);
    }
    Ok(result)
}

/// exp(-i t H) for Hermitian `h` via its eigendecomposition.
pub fn expm_hermitian(h: &Array2<Complex64>, t: f64) -> Result<Array2<Complex64>> {
    let (e, v) = eigh_hermitian(h)?;
    let mut vd = v.clone();
    for (j, mut col) in vd.columns_mut().into_iter().enumerate() {
        let ph = Complex64::from_polar(1.0, -e[j] * t);
        col.mapv_inplace(|x| x * ph);
    }
    Ok(vd.dot(&dagger(&v)))
}

/// exp(-i t H) for real symmetric `h` via its eigendecomposition.
pub fn expm_symmetric(h: &Array2<f64>, t: f64) -> Result<Array2<Complex64>> {
    expm_hermitian(&to_complex(h), t)
}

pub fn vdot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[Complex64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}
