//! Integer partition coefficients of the Taylor series.
//!
//! With cumulants kept symbolic, `[(n+1)!]² c_2^{3n+1} a_n` and
//! `(n+1)! n! c_2^{3n−1} b_n` are integer polynomials whose monomials
//! `Π c_{2+i}^{a_i}` are labelled by the partition `λ = (1^{a_1} 2^{a_2} …)`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};
use serde::{Deserialize, Serialize};

use super::poly::CumulantPoly;
use super::{lanczos_taylor_generic, DEFAULT_N_MAX};
use crate::error::{Error, Result};
use crate::exact::factorial;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Which {
    /// Coefficients of `α`.
    A,
    /// Coefficients of `β²`.
    B,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionTerm {
    pub n: usize,
    pub which: Which,
    /// Parts in non-increasing order.
    pub lambda: Vec<u32>,
    pub coeff: i64,
}

/// Highest order accepted by [`partition_coefficients`].
pub const MAX_PARTITION_ORDER: usize = DEFAULT_N_MAX;

fn symbolic_cumulants(count: usize) -> Vec<CumulantPoly> {
    (1..=count).map(CumulantPoly::var).collect()
}

fn normalize(
    poly: &CumulantPoly,
    n: usize,
    which: Which,
) -> Result<Vec<PartitionTerm>> {
    let (scale, c2_pow, target) = match which {
        Which::A => {
            let f = factorial(n as u64 + 1);
            (&f * &f, 3 * n as i32 + 1, 2 * n as u32 + 1)
        }
        Which::B => (
            factorial(n as u64 + 1) * factorial(n as u64),
            3 * n as i32 - 1,
            2 * n as u32,
        ),
    };
    let scaled =
        poly.clone() * CumulantPoly::monomial(vec![0, c2_pow], BigRational::from_integer(scale));
    let mut out = Vec::new();
    for (exps, coeff) in scaled.terms() {
        let bad = |why: &str| Error::Internal(format!("{which:?}({n}) term {exps:?}: {why}"));
        if !coeff.denom().is_one() {
            return Err(bad("non-integer coefficient"));
        }
        if exps.iter().any(|&e| e < 0) {
            return Err(bad("negative exponent"));
        }
        if CumulantPoly::exponent(exps, 1) != 0 {
            return Err(bad("depends on c1"));
        }
        let mut lambda = Vec::new();
        for k in (3..=exps.len()).rev() {
            let e = CumulantPoly::exponent(exps, k);
            lambda.extend(std::iter::repeat((k - 2) as u32).take(e as usize));
        }
        let parts_sum: u32 = lambda.iter().sum();
        let multiplicity = lambda.len() as u32 + CumulantPoly::exponent(exps, 2) as u32;
        if parts_sum != target || multiplicity != target {
            return Err(bad("partition constraint violated"));
        }
        let coeff = coeff
            .to_integer()
            .to_i64()
            .ok_or_else(|| bad("coefficient exceeds 64 bits"))?;
        out.push(PartitionTerm {
            n,
            which,
            lambda,
            coeff,
        });
    }
    sort_terms(&mut out);
    Ok(out)
}

/// Canonical order: by block, then lexicographically on the parts.
pub fn sort_terms(terms: &mut [PartitionTerm]) {
    terms.sort_by(|x, y| {
        (x.n, x.which, &x.lambda).cmp(&(y.n, y.which, &y.lambda))
    });
}

/// Partition coefficients `A(n; λ)` or `B(n; λ)` from the symbolic series.
pub fn partition_coefficients(n: usize, which: Which) -> Result<Vec<PartitionTerm>> {
    if n > MAX_PARTITION_ORDER {
        return Err(Error::UnsupportedOrder {
            order: n,
            cap: MAX_PARTITION_ORDER,
        });
    }
    let c = symbolic_cumulants(2 * n + 3);
    let series = lanczos_taylor_generic(
        &c,
        &CumulantPoly::var(2),
        &CumulantPoly::var_pow(2, -1),
        n,
    )?;
    match which {
        Which::A => normalize(&series.a[n], n, which),
        Which::B => normalize(&series.b[n], n, which),
    }
}

/// All blocks `A(0..=n_max)` and `B(1..=n_max)` from a single symbolic solve.
pub fn partition_table(n_max: usize) -> Result<Vec<PartitionTerm>> {
    if n_max > MAX_PARTITION_ORDER {
        return Err(Error::UnsupportedOrder {
            order: n_max,
            cap: MAX_PARTITION_ORDER,
        });
    }
    let c = symbolic_cumulants(2 * n_max + 3);
    let series = lanczos_taylor_generic(
        &c,
        &CumulantPoly::var(2),
        &CumulantPoly::var_pow(2, -1),
        n_max,
    )?;
    let mut out = Vec::new();
    for n in 0..=n_max {
        out.extend(normalize(&series.a[n], n, Which::A)?);
        if n >= 1 {
            out.extend(normalize(&series.b[n], n, Which::B)?);
        }
    }
    sort_terms(&mut out);
    Ok(out)
}

/// The published coefficient table (blocks `a_0..a_3`, `b_1..b_4`).
pub fn table1_transcription() -> Vec<PartitionTerm> {
    let mut terms: Vec<PartitionTerm> = serde_json::from_str(include_str!("../../data/table1.json"))
        .expect("bundled table parses");
    sort_terms(&mut terms);
    terms
}

/// One JSON object per line, for diffing against the bundled table.
pub fn table_to_json(terms: &[PartitionTerm]) -> String {
    let lines: Vec<String> = terms
        .iter()
        .map(|t| format!("  {}", serde_json::to_string(t).expect("term serializes")))
        .collect();
    format!("[\n{}\n]\n", lines.join(",\n"))
}

/// Evaluate a block at numeric cumulants, for spot checks against the series.
pub fn evaluate_block(terms: &[PartitionTerm], c: &[BigRational]) -> BigRational {
    terms
        .iter()
        .map(|t| {
            let mut v = BigRational::from_integer(BigInt::from(t.coeff));
            let mut used = 0u32;
            for &p in &t.lambda {
                v *= &c[p as usize + 1];
                used += 1;
            }
            let target = t.lambda.iter().sum::<u32>();
            for _ in used..target {
                v *= &c[1];
            }
            v
        })
        .sum()
}
