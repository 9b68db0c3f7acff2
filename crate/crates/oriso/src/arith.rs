//! Integer substrate: factorization, primality, CRT, Kronecker symbols and
//! Lagrange four-square decompositions.
//!
//! All routines are exact and deterministic. Primality is certified by the
//! deterministic Miller-Rabin base set valid below 3.3e24, well past the
//! desk-scale factoring cap.

use crate::{Error, Result};

/// Default cap on integers accepted by [`factor`].
pub const FACTOR_CAP: u128 = 1 << 64;

fn mulmod(a: u128, b: u128, m: u128) -> u128 {
    // Inputs stay below 2^64 under FACTOR_CAP, so the product fits u128.
    debug_assert!(a < (1 << 64) && b < (1 << 64));
    a * b % m
}

fn powmod(mut b: u128, mut e: u128, m: u128) -> u128 {
    let mut acc: u128 = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, b, m);
        }
        b = mulmod(b, b, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, valid for n < 3.317e24.
pub fn is_prime(n: u128) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u128, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d & 1 == 0 {
        d >>= 1;
        s += 1;
    }
    'witness: for a in [2u128, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn pollard_rho(n: u128) -> u128 {
    // n is odd, composite, and not a prime power of a tiny prime.
    for c in 1u128.. {
        let f = |x: u128| (mulmod(x, x, n) + c) % n;
        let (mut x, mut y, mut d) = (2u128, 2u128, 1u128);
        while d == 1 {
            x = f(x);
            y = f(f(y));
            d = gcd_u128(x.abs_diff(y), n);
        }
        if d != n {
            return d;
        }
    }
    unreachable!()
}

pub fn gcd_u128(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

pub fn gcd_i128(a: i128, b: i128) -> i128 {
    gcd_u128(a.unsigned_abs(), b.unsigned_abs()) as i128
}

/// Prime factorization of `n >= 1` as a sorted list of (prime, exponent).
///
/// Fails with [`Error::InputTooLarge`] above `cap` (callers pass
/// [`FACTOR_CAP`] unless configured otherwise).
pub fn factor_with_cap(n: u128, cap: u128) -> Result<Vec<(u128, u32)>> {
    if n == 0 {
        return Err(Error::InvalidInput("factor(0)".into()));
    }
    if n > cap {
        return Err(Error::InputTooLarge(format!("factor({n}) with cap {cap}")));
    }
    let mut rest = n;
    let mut out: Vec<(u128, u32)> = Vec::new();
    let push = |p: u128, e: u32, out: &mut Vec<(u128, u32)>| {
        if let Some(last) = out.iter_mut().find(|(q, _)| *q == p) {
            last.1 += e;
        } else {
            out.push((p, e));
        }
    };
    for p in 2u128..=65536 {
        if p * p > rest {
            break;
        }
        if rest % p == 0 {
            let mut e = 0;
            while rest % p == 0 {
                rest /= p;
                e += 1;
            }
            push(p, e, &mut out);
        }
    }
    // The remaining part has no factor <= 2^16, so split it recursively.
    let mut stack = vec![rest];
    while let Some(m) = stack.pop() {
        if m == 1 {
            continue;
        }
        if is_prime(m) {
            push(m, 1, &mut out);
            continue;
        }
        let d = pollard_rho(m);
        stack.push(d);
        stack.push(m / d);
    }
    out.sort_unstable();
    Ok(out)
}

/// [`factor_with_cap`] with the default desk-scale cap.
pub fn factor(n: u128) -> Result<Vec<(u128, u32)>> {
    factor_with_cap(n, FACTOR_CAP)
}

pub fn factor_i128(n: i128) -> Result<Vec<(u128, u32)>> {
    factor(n.unsigned_abs())
}

/// Largest square s with s^2 <= n.
pub fn isqrt_u128(n: u128) -> u128 {
    if n == 0 {
        return 0;
    }
    let mut x = 1u128 << (n.ilog2() / 2 + 1);
    loop {
        let y = (x + n / x) / 2;
        if y >= x {
            break;
        }
        x = y;
    }
    x
}

fn is_square_u128(n: u128) -> Option<u128> {
    let r = isqrt_u128(n);
    (r * r == n).then_some(r)
}

/// Lagrange decomposition m = m1^2 + m2^2 + m3^2 + m4^2 with
/// m1 >= m2 >= m3 >= m4 >= 0, lexicographically smallest such tuple.
///
/// Exhaustive scan; the desk-scale inputs (differences N' - N) are small.
pub fn four_squares(m: u128) -> (u128, u128, u128, u128) {
    if m == 0 {
        return (0, 0, 0, 0);
    }
    let ceil_sqrt = |v: u128, parts: u128| -> u128 {
        // smallest s with s^2 >= ceil(v / parts)
        let q = v.div_ceil(parts);
        let mut s = isqrt_u128(q);
        if s * s < q {
            s += 1;
        }
        s
    };
    let top = isqrt_u128(m);
    for m1 in ceil_sqrt(m, 4)..=top {
        let r1 = m - m1 * m1;
        let hi2 = isqrt_u128(r1).min(m1);
        for m2 in ceil_sqrt(r1, 3)..=hi2 {
            let r2 = r1 - m2 * m2;
            let hi3 = isqrt_u128(r2).min(m2);
            for m3 in ceil_sqrt(r2, 2)..=hi3 {
                let r3 = r2 - m3 * m3;
                if let Some(m4) = is_square_u128(r3) {
                    if m4 <= m3 {
                        return (m1, m2, m3, m4);
                    }
                }
            }
        }
    }
    unreachable!("Lagrange guarantees a decomposition")
}

/// Kronecker symbol (D | n) for n > 0.
pub fn kronecker(d: i128, n: u128) -> i32 {
    if n == 0 {
        return i32::from(d == 1 || d == -1);
    }
    let mut a = d;
    let mut n = n as i128;
    let mut result = 1i32;
    // strip factors of two from n
    if n % 2 == 0 {
        if a % 2 == 0 {
            return 0;
        }
        let two_symbol = match a.rem_euclid(8) {
            1 | 7 => 1,
            3 | 5 => -1,
            _ => unreachable!(),
        };
        while n % 2 == 0 {
            n /= 2;
            result *= two_symbol;
        }
    }
    // now n odd positive: Jacobi symbol loop
    a = a.rem_euclid(n);
    while a != 0 {
        while a % 2 == 0 {
            a /= 2;
            if matches!(n.rem_euclid(8), 3 | 5) {
                result = -result;
            }
        }
        std::mem::swap(&mut a, &mut n);
        if a.rem_euclid(4) == 3 && n.rem_euclid(4) == 3 {
            result = -result;
        }
        a = a.rem_euclid(n);
    }
    if n == 1 {
        result
    } else {
        0
    }
}

/// Extended gcd: returns (g, x, y) with a*x + b*y = g >= 0.
pub fn ext_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut r0, mut r1) = (a, b);
    let (mut x0, mut x1) = (1i128, 0i128);
    let (mut y0, mut y1) = (0i128, 1i128);
    while r1 != 0 {
        let q = r0.div_euclid(r1);
        (r0, r1) = (r1, r0 - q * r1);
        (x0, x1) = (x1, x0 - q * x1);
        (y0, y1) = (y1, y0 - q * y1);
    }
    if r0 < 0 {
        (-r0, -x0, -y0)
    } else {
        (r0, x0, y0)
    }
}

/// Inverse of a mod m (m > 1), if gcd(a, m) = 1.
pub fn inv_mod(a: i128, m: i128) -> Option<i128> {
    let (g, x, _) = ext_gcd(a.rem_euclid(m), m);
    (g == 1).then(|| x.rem_euclid(m))
}

/// Chinese remainder theorem for pairwise coprime moduli.
///
/// Returns (r, M) with r the unique solution mod M = prod m_i.
pub fn crt(residues: &[(i128, i128)]) -> Result<(i128, i128)> {
    let mut r: i128 = 0;
    let mut m: i128 = 1;
    for &(ri, mi) in residues {
        if mi <= 0 {
            return Err(Error::InvalidInput("crt modulus must be positive".into()));
        }
        if gcd_i128(m, mi) != 1 {
            return Err(Error::NotCoprime);
        }
        // solve x = r (mod m), x = ri (mod mi)
        let inv = inv_mod(m.rem_euclid(mi), mi).ok_or(Error::NotCoprime)?;
        let t = ((ri - r).rem_euclid(mi) * inv).rem_euclid(mi);
        r += m * t;
        m *= mi;
        r = r.rem_euclid(m);
    }
    Ok((r, m))
}

/// Centered representative of r mod m in (-m/2, m/2].
pub fn centered_lift(r: i128, m: i128) -> i128 {
    let r = r.rem_euclid(m);
    if 2 * r > m {
        r - m
    } else {
        r
    }
}

/// v_p(n): largest e with p^e | n.
pub fn valuation(mut n: u128, p: u128) -> u32 {
    let mut v = 0;
    while n != 0 && n % p == 0 {
        n /= p;
        v += 1;
    }
    v
}

/// Squarefree part d of n (n = d * s^2 with d squarefree), sign preserved.
pub fn squarefree_part(n: i128) -> Result<i128> {
    let f = factor_i128(n)?;
    let mut d: i128 = n.signum();
    for (p, e) in f {
        if e % 2 == 1 {
            d *= p as i128;
        }
    }
    Ok(d)
}

/// Ascending iterator over primes, by trial division (desk scale).
pub fn primes() -> impl Iterator<Item = u64> {
    (2u64..).filter(|&n| is_prime(n as u128))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn factor_examples() {
        assert_eq!(factor(1).unwrap(), vec![]);
        assert_eq!(factor(1676).unwrap(), vec![(2, 2), (419, 1)]);
        assert_eq!(factor((1 << 20) * 243).unwrap(), vec![(2, 20), (3, 5)]);
        assert!(matches!(
            factor_with_cap(u128::MAX, FACTOR_CAP),
            Err(Error::InputTooLarge(_))
        ));
    }

    #[test]
    fn factor_recomposes_exhaustive() {
        for n in 1u128..=100_000 {
            let f = factor(n).unwrap();
            let back: u128 = f.iter().map(|&(p, e)| p.pow(e)).product();
            assert_eq!(back, n);
            assert!(f.iter().all(|&(p, _)| is_prime(p)));
        }
    }

    #[test]
    fn factor_random_wide() {
        // simple deterministic LCG over the 2^48 range
        let mut x: u128 = 0x2545f4914f6cdd1d;
        for _ in 0..1000 {
            x = (x.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407))
                & ((1 << 48) - 1);
            let n = x.max(1);
            let f = factor(n).unwrap();
            assert_eq!(f.iter().map(|&(p, e)| p.pow(e)).product::<u128>(), n);
        }
    }

    #[test]
    fn four_squares_examples() {
        assert_eq!(four_squares(0), (0, 0, 0, 0));
        assert_eq!(four_squares(7), (2, 1, 1, 1));
        let (a, b, c, d) = four_squares(310);
        assert_eq!(a * a + b * b + c * c + d * d, 310);
    }

    #[test]
    fn four_squares_up_to_1e4() {
        for m in 0u128..=10_000 {
            let (a, b, c, d) = four_squares(m);
            assert_eq!(a * a + b * b + c * c + d * d, m, "m={m}");
            assert!(a >= b && b >= c && c >= d);
        }
    }

    #[test]
    fn kronecker_examples() {
        assert_eq!(kronecker(-4, 3), -1);
        assert_eq!(kronecker(-4, 2), 0);
        assert_eq!(kronecker(-47, 2), 1);
    }

    #[test]
    fn kronecker_matches_quadratic_residues() {
        // brute-force Legendre oracle over odd primes
        for n in (3u128..=10_000).filter(|&n| n % 2 == 1 && is_prime(n)) {
            let squares: std::collections::HashSet<u128> =
                (0..n).map(|x| x * x % n).collect();
            for d in -1000i128..=1000 {
                let expect = if d.rem_euclid(n as i128) == 0 {
                    0
                } else if squares.contains(&(d.rem_euclid(n as i128) as u128)) {
                    1
                } else {
                    -1
                };
                assert_eq!(kronecker(d, n), expect, "D={d} n={n}");
            }
            if n > 200 {
                break; // a handful of primes is plenty; keep the loop fast
            }
        }
    }

    #[test]
    fn kronecker_full_range_small_primes() {
        for n in [3u128, 5, 7, 11, 13, 17, 19, 23] {
            let squares: std::collections::HashSet<u128> =
                (1..n).map(|x| x * x % n).collect();
            for d in -1000i128..=1000 {
                let r = d.rem_euclid(n as i128) as u128;
                let expect = if r == 0 {
                    0
                } else if squares.contains(&r) {
                    1
                } else {
                    -1
                };
                assert_eq!(kronecker(d, n), expect);
            }
        }
    }

    #[test]
    fn crt_examples() {
        assert_eq!(crt(&[(0, 2)]).unwrap(), (0, 2));
        assert_eq!(crt(&[(1, 2), (2, 3)]).unwrap(), (5, 6));
        assert_eq!(crt(&[(3, 5), (4, 7), (1, 2)]).unwrap(), (53, 70));
        assert!(matches!(crt(&[(1, 4), (2, 6)]), Err(Error::NotCoprime)));
    }

    #[test]
    fn crt_matches_scan() {
        let sys = [(3i128, 5i128), (4, 7), (1, 2)];
        let (r, m) = crt(&sys).unwrap();
        let scan = (0..70)
            .find(|x| sys.iter().all(|&(ri, mi)| x % mi == ri))
            .unwrap();
        assert_eq!((r, m), (scan, 70));
    }

    proptest! {
        #[test]
        fn prop_four_squares(m in 0u128..1_000_000) {
            let (a, b, c, d) = four_squares(m);
            prop_assert_eq!(a*a + b*b + c*c + d*d, m);
        }

        #[test]
        fn prop_factor_roundtrip(n in 1u128..u64::MAX as u128) {
            let f = factor(n).unwrap();
            prop_assert_eq!(f.iter().map(|&(p, e)| p.pow(e)).product::<u128>(), n);
        }

        #[test]
        fn prop_kronecker_multiplicative(d in -500i128..500, m in 1u128..200, n in 1u128..200) {
            prop_assert_eq!(kronecker(d, m * n), kronecker(d, m) * kronecker(d, n));
        }
    }
}
