//! Small exact-rational toolkit used by the graph algebra.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub(crate) fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// Best rational approximation of `x` whose error is at most `tol`,
/// found by walking the continued-fraction convergents.
///
/// Values that are "nice" fractions (`-0.75`, `1/3` up to rounding) come
/// back exactly; anything else yields a convergent with a large denominator.
pub fn rationalize(x: f64, tol: f64) -> BigRational {
    assert!(x.is_finite(), "cannot rationalize a non-finite value");
    let (mut h_prev, mut h) = (BigInt::zero(), BigInt::one());
    let (mut k_prev, mut k) = (BigInt::one(), BigInt::zero());
    let mut r = x;
    for _ in 0..64 {
        let a = r.floor();
        let a_int = BigInt::from(a as i64);
        let h_next = &a_int * &h + &h_prev;
        let k_next = &a_int * &k + &k_prev;
        h_prev = std::mem::replace(&mut h, h_next);
        k_prev = std::mem::replace(&mut k, k_next);
        let approx = BigRational::new(h.clone(), k.clone());
        let err = (approx.to_f64().unwrap_or(f64::INFINITY) - x).abs();
        let frac = r - a;
        if err <= tol || frac == 0.0 {
            return approx;
        }
        r = 1.0 / frac;
        if !r.is_finite() {
            return approx;
        }
    }
    BigRational::new(h, k)
}

/// Inverts a square rational matrix by Gauss–Jordan elimination.
/// Returns `None` when the matrix is singular.
pub(crate) fn invert(mut m: Vec<Vec<BigRational>>) -> Option<Vec<Vec<BigRational>>> {
    let n = m.len();
    let mut inv: Vec<Vec<BigRational>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { int(1) } else { int(0) }).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, pivot);
        inv.swap(col, pivot);
        let p = m[col][col].clone();
        for j in 0..n {
            m[col][j] = &m[col][j] / &p;
            inv[col][j] = &inv[col][j] / &p;
        }
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let factor = m[r][col].clone();
            for j in 0..n {
                let a = &m[col][j] * &factor;
                m[r][j] -= a;
                let b = &inv[col][j] * &factor;
                inv[r][j] -= b;
            }
        }
    }
    Some(inv)
}

/// A nonzero vector spanning the kernel of `m`, assuming the kernel is
/// one-dimensional. Returns `None` if `m` has full column rank.
pub(crate) fn kernel_vector(mut m: Vec<Vec<BigRational>>) -> Option<Vec<BigRational>> {
    let rows = m.len();
    let cols = m.first().map_or(0, Vec::len);
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let pv = m[r][c].clone();
        for j in 0..cols {
            m[r][j] = &m[r][j] / &pv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let factor = m[i][c].clone();
                for j in 0..cols {
                    let a = &m[r][j] * &factor;
                    m[i][j] -= a;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free = (0..cols).find(|c| !pivots.contains(c))?;
    let mut v = vec![int(0); cols];
    v[free] = int(1);
    for (row, &pc) in pivots.iter().enumerate() {
        v[pc] = -m[row][free].clone();
    }
    Some(v)
}

/// Scales a rational vector to the primitive integer vector pointing the
/// same way (common denominator cleared, gcd of entries equal to one).
pub(crate) fn primitive_integer_vector(v: &[BigRational]) -> Vec<BigInt> {
    let lcm = v
        .iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let scaled: Vec<BigInt> = v.iter().map(|x| (x * &lcm).to_integer()).collect();
    let g = scaled
        .iter()
        .fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return scaled;
    }
    scaled.into_iter().map(|x| x / &g).collect()
}

pub(crate) fn to_i64(x: &BigInt) -> Option<i64> {
    x.to_i64()
}

pub(crate) fn abs_big(x: &BigInt) -> BigInt {
    x.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rationalize_recovers_simple_fractions() {
        assert_eq!(rationalize(-0.75, 1e-12), BigRational::new((-3).into(), 4.into()));
        assert_eq!(rationalize(1.0 / 3.0, 1e-12), BigRational::new(1.into(), 3.into()));
        assert_eq!(rationalize(0.0, 1e-12), int(0));
        assert_eq!(rationalize(-2.0, 1e-12), int(-2));
        let r = rationalize(std::f64::consts::PI, 1e-12);
        assert!((r.to_f64().unwrap() - std::f64::consts::PI).abs() <= 1e-12);
    }

    #[test]
    fn invert_round_trip() {
        let m = vec![vec![int(2), int(1)], vec![int(1), int(1)]];
        let inv = invert(m).unwrap();
        assert_eq!(inv, vec![vec![int(1), int(-1)], vec![int(-1), int(2)]]);
        assert!(invert(vec![vec![int(1), int(2)], vec![int(2), int(4)]]).is_none());
    }

    #[test]
    fn kernel_of_rank_deficient_matrix() {
        // rows of [[1,-2],[-1,2]] annihilate (2,1)
        let m = vec![vec![int(1), int(-2)], vec![int(-1), int(2)]];
        let v = kernel_vector(m).unwrap();
        let p = primitive_integer_vector(&v);
        assert_eq!(p, vec![BigInt::from(2), BigInt::from(1)]);
    }
}
