//! Parsing and rendering helpers: exact decimal output, hex symbol strings,
//! and flag-value parsing for rationals, demand lists and colluder sets.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, Zero};

/// Renders a nonnegative rational as a decimal with `digits` fractional
/// digits, rounding half away from zero. The digits are computed from the
/// exact value, not through floating point.
pub fn decimal(value: &BigRational, digits: u32) -> String {
    assert!(!value.is_negative(), "loads and bounds are nonnegative");
    let scale = BigInt::from(10u32).pow(digits);
    let num = value.numer() * &scale;
    let den = value.denom();
    let scaled = (num * 2u32 + den) / (den * 2u32);
    let scaled = scaled.to_biguint().expect("nonnegative");
    let unit = scale.to_biguint().expect("positive");
    let int_part = &scaled / &unit;
    let frac_part = &scaled % &unit;
    let mut frac = frac_part.to_string();
    while (frac.len() as u32) < digits {
        frac.insert(0, '0');
    }
    format!("{int_part}.{frac}")
}

/// Renders a rational as `num/den`.
pub fn fraction(value: &BigRational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Symbols as a hex string, four lowercase digits per symbol.
pub fn hex_symbols(symbols: &[u32]) -> String {
    let mut out = String::with_capacity(symbols.len() * 4);
    for &s in symbols {
        out.push_str(&format!("{:04x}", s as u16));
    }
    out
}

/// Parses a decimal or fraction string ("0.01", "2", "1/3") into an exact
/// rational.
pub fn parse_rational(s: &str) -> Result<BigRational, String> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| format!("bad fraction: {s}"))?;
        let den: BigInt = den.trim().parse().map_err(|_| format!("bad fraction: {s}"))?;
        if den.is_zero() {
            return Err(format!("zero denominator: {s}"));
        }
        return Ok(BigRational::new(num, den));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let int = if int.is_empty() { "0" } else { int };
        let int: BigInt = int.parse().map_err(|_| format!("bad decimal: {s}"))?;
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("bad decimal: {s}"));
        }
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        let frac_num: BigInt = frac.parse().map_err(|_| format!("bad decimal: {s}"))?;
        let negative = s.starts_with('-');
        let frac_part = BigRational::new(frac_num, scale.clone());
        let int_part = BigRational::from_integer(int);
        return Ok(if negative {
            int_part - frac_part
        } else {
            int_part + frac_part
        });
    }
    let int: BigInt = s.parse().map_err(|_| format!("bad number: {s}"))?;
    Ok(BigRational::from_integer(int))
}

/// Parses a demand list: semicolon-separated vectors of comma-separated
/// residues, e.g. `1,0,0;0,1,0`.
pub fn parse_demand_list(s: &str) -> Result<Vec<Vec<u32>>, String> {
    s.split(';')
        .map(|v| {
            v.split(',')
                .map(|r| {
                    r.trim()
                        .parse::<u32>()
                        .map_err(|_| format!("bad residue in demand vector: {v}"))
                })
                .collect()
        })
        .collect()
}

/// Parses a colluder list of 1-based user indices, e.g. `1,3`. The empty
/// string and `none` mean the empty set.
pub fn parse_colluders(s: &str, k: usize) -> Result<Vec<usize>, String> {
    let s = s.trim();
    if s.is_empty() || s == "none" {
        return Ok(Vec::new());
    }
    let mut users = Vec::new();
    for part in s.split(',') {
        let u: usize = part
            .trim()
            .parse()
            .map_err(|_| format!("bad user index: {part}"))?;
        if u == 0 || u > k {
            return Err(format!("user index {u} out of range 1..={k}"));
        }
        users.push(u - 1);
    }
    users.sort_unstable();
    users.dedup();
    Ok(users)
}

/// C(n, k) as a decimal string (exact bignum).
pub fn binom_string(n: u64, k: u64) -> String {
    let b: BigUint = privcache_core::combin::binom(n, k);
    b.to_string()
}
