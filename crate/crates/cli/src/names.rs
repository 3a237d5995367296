//! Stable identifiers for gallery objects, as accepted by `muchan gen`.

use muchan::constructive::ToroidalDecomposition;
use muchan::format::Document;
use muchan::gallery;
use muchan::mu_analysis::certified_gap_rank;
use muchan::{channels, linalg, Error, Result, Tolerance};

/// `(pattern, description)` for every accepted name.
pub const NAMES: &[(&str, &str)] = &[
    ("weyl:p", "discrete Weyl channel for an odd prime p"),
    ("weyl-decomp:p", "its p-term decomposition"),
    ("gap:p:m", "Weyl channel (p) plus identity channel on M_m"),
    ("gap-decomp:p:m", "certified 2p-term decomposition of gap:p:m"),
    ("gap3lit", "literal 6-term decomposition of gap:3:1"),
    ("wh0:n", "symmetric Werner-Holevo channel on M_n"),
    ("wh1:n", "antisymmetric Werner-Holevo channel on M_n"),
    ("wh0-decomp:n", "decomposition of wh0:n (n(n+1)/2 terms for even n, n(n+3)/2 for odd n)"),
    ("wh1-decomp:n", "n(n-1)/2-term decomposition of wh1:n, n even"),
    ("wh0sym3", "six-term decomposition of wh0:3"),
    ("mubcorr:d", "correlation matrix from mutually unbiased bases, d = 2 or an odd prime"),
    ("mubcorr-decomp:d", "its d-term toroidal decomposition"),
    ("corrB3", "3x3 correlation matrix of rank 2"),
    ("corrB3-decomp", "its two-term toroidal decomposition"),
    ("corrC4", "4x4 correlation matrix of rank 3"),
    ("ctensor2", "six-term toroidal decomposition of corrC4 tensored with the 2x2 identity"),
    ("ctensor2-matrix", "the correlation matrix ctensor2 decomposes"),
    ("dephase:n", "completely dephasing channel on M_n"),
];

fn int_args(name: &str, parts: &[&str], want: usize) -> Result<Vec<usize>> {
    if parts.len() != want {
        return Err(Error::Argument(format!(
            "gallery name {name:?} expects {want} integer parameter(s)"
        )));
    }
    parts
        .iter()
        .map(|p| {
            p.parse::<usize>()
                .map_err(|_| Error::Argument(format!("{p:?} in {name:?} is not a nonnegative integer")))
        })
        .collect()
}

fn toroidal(t: ToroidalDecomposition) -> Document {
    Document::Toroidal(t)
}

pub fn generate(name: &str, tol: &Tolerance) -> Result<Document> {
    let mut parts = name.split(':');
    let head = parts.next().unwrap_or_default();
    let rest: Vec<&str> = parts.collect();
    let nums = |want| int_args(name, &rest, want);
    let doc = match head {
        "weyl" => Document::Kraus(gallery::weyl_channel(nums(1)?[0])?),
        "weyl-decomp" => Document::MixedUnitary(gallery::weyl_decomposition(nums(1)?[0])?),
        "gap" => {
            let a = nums(2)?;
            Document::Kraus(gallery::gap_channel(a[0], a[1])?)
        }
        "gap-decomp" => {
            let a = nums(2)?;
            let cert = certified_gap_rank(&gallery::weyl_channel(a[0])?, a[1], tol)?;
            Document::MixedUnitary(cert.decomposition)
        }
        "gap3lit" => {
            nums(0)?;
            Document::MixedUnitary(gallery::gap3_literal_decomposition())
        }
        "wh0" => Document::Kraus(gallery::wh_symmetric(nums(1)?[0])?),
        "wh1" => Document::Kraus(gallery::wh_antisymmetric(nums(1)?[0])?),
        "wh0-decomp" => {
            let n = nums(1)?[0];
            Document::MixedUnitary(if n % 2 == 0 {
                gallery::wh_sym_even_decomposition(n)?
            } else {
                gallery::wh_sym_odd_decomposition(n)?
            })
        }
        "wh1-decomp" => Document::MixedUnitary(gallery::wh_antisym_decomposition(nums(1)?[0])?),
        "wh0sym3" => {
            nums(0)?;
            Document::MixedUnitary(gallery::wh_sym3_decomposition())
        }
        "mubcorr" => Document::Correlation(gallery::mub_correlation(nums(1)?[0])?.c),
        "mubcorr-decomp" => toroidal(gallery::mub_correlation(nums(1)?[0])?.decomposition),
        "corrB3" => {
            nums(0)?;
            Document::Correlation(gallery::corr_b3())
        }
        "corrB3-decomp" => {
            nums(0)?;
            toroidal(gallery::corr_b3_decomposition())
        }
        "corrC4" => {
            nums(0)?;
            Document::Correlation(gallery::corr_c4())
        }
        "ctensor2" => {
            nums(0)?;
            toroidal(gallery::toroidal_ctensor_i2())
        }
        "ctensor2-matrix" => {
            nums(0)?;
            Document::Correlation(gallery::corr_c4_tensor_i2())
        }
        "dephase" => {
            let n = nums(1)?[0];
            if n == 0 {
                return Err(Error::Argument("dimension must be positive".into()));
            }
            Document::Kraus(channels::schur_channel(&linalg::identity(n), tol)?)
        }
        _ => {
            return Err(Error::Argument(format!(
                "unknown gallery name {name:?}; run `muchan gen list` for the catalogue"
            )))
        }
    };
    Ok(doc)
}
