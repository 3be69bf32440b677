//! Cross-checks `bv_apply` against an independent oracle built on unbounded
//! integers (`num-bigint`), transcribed from the SMT-LIB theory definitions
//! rather than from the production code. The two implementations share no
//! arithmetic: the oracle works with mathematical integers mod 2^w, the
//! production path with masked `u128` machine words.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use peakforge::bitvec::{bv_apply, mask, BVValue, OpCode, Value};
use rand::{Rng, SeedableRng};

fn big(x: u128) -> BigUint {
    BigUint::from(x)
}

fn pow2(w: u32) -> BigUint {
    BigUint::one() << w
}

/// Most significant bit of an unsigned representative.
fn msb(x: &BigUint, w: u32) -> bool {
    (x >> (w - 1)) & BigUint::one() == BigUint::one()
}

fn bvnot(x: &BigUint, w: u32) -> BigUint {
    pow2(w) - BigUint::one() - x
}

fn bvneg(x: &BigUint, w: u32) -> BigUint {
    (pow2(w) - x) % pow2(w)
}

fn bvudiv(x: &BigUint, y: &BigUint, w: u32) -> BigUint {
    if y.is_zero() {
        pow2(w) - BigUint::one()
    } else {
        x / y
    }
}

fn bvurem(x: &BigUint, y: &BigUint) -> BigUint {
    if y.is_zero() {
        x.clone()
    } else {
        x % y
    }
}

fn bvlshr(x: &BigUint, k: &BigUint) -> BigUint {
    // floor(x / 2^k); for astronomically large k the quotient is just zero.
    match u32::try_from(k) {
        Ok(k) => x >> k,
        Err(_) => BigUint::zero(),
    }
}

fn bvshl(x: &BigUint, k: &BigUint, w: u32) -> BigUint {
    match u32::try_from(k) {
        Ok(k) if k < w => (x << k) % pow2(w),
        _ => BigUint::zero(),
    }
}

/// The SMT-LIB abbreviation: negative operands arithmetic-shift by
/// complementing twice around a logical shift.
fn bvashr(x: &BigUint, k: &BigUint, w: u32) -> BigUint {
    if !msb(x, w) {
        bvlshr(x, k)
    } else {
        bvnot(&bvlshr(&bvnot(x, w), k), w)
    }
}

fn bvsdiv(x: &BigUint, y: &BigUint, w: u32) -> BigUint {
    match (msb(x, w), msb(y, w)) {
        (false, false) => bvudiv(x, y, w),
        (true, false) => bvneg(&bvudiv(&bvneg(x, w), y, w), w),
        (false, true) => bvneg(&bvudiv(x, &bvneg(y, w), w), w),
        (true, true) => bvudiv(&bvneg(x, w), &bvneg(y, w), w),
    }
}

fn bvsrem(x: &BigUint, y: &BigUint, w: u32) -> BigUint {
    match (msb(x, w), msb(y, w)) {
        (false, false) => bvurem(x, y),
        (true, false) => bvneg(&bvurem(&bvneg(x, w), y), w),
        (false, true) => bvurem(x, &bvneg(y, w)),
        (true, true) => bvneg(&bvurem(&bvneg(x, w), &bvneg(y, w)), w),
    }
}

/// Signed interpretation as a mathematical integer, as `x - 2^w * msb(x)`.
fn signed(x: &BigUint, w: u32) -> num_bigint::BigInt {
    let xi = num_bigint::BigInt::from(x.clone());
    if msb(x, w) {
        xi - num_bigint::BigInt::from(pow2(w))
    } else {
        xi
    }
}

/// Evaluate one opcode through the oracle. Bitvector results come back as the
/// unsigned representative; comparisons come back as Some(bool).
enum OracleOut {
    Bv(BigUint, u32),
    B(bool),
}

fn oracle(op: OpCode, args: &[(BigUint, u32)]) -> OracleOut {
    use OpCode::*;
    let (x, w) = (&args[0].0, args[0].1);
    match op {
        BvNeg => OracleOut::Bv(bvneg(x, w), w),
        BvNot => OracleOut::Bv(bvnot(x, w), w),
        ZeroExtend { by } => OracleOut::Bv(x.clone(), w + by),
        SignExtend { by } => {
            let v = if msb(x, w) {
                x + (pow2(w + by) - pow2(w))
            } else {
                x.clone()
            };
            OracleOut::Bv(v, w + by)
        }
        Extract { hi, lo } => {
            let nw = hi - lo + 1;
            OracleOut::Bv((x >> lo) % pow2(nw), nw)
        }
        _ => {
            let (y, wy) = (&args[1].0, args[1].1);
            match op {
                BvAdd => OracleOut::Bv((x + y) % pow2(w), w),
                BvSub => OracleOut::Bv((x + pow2(w) - y) % pow2(w), w),
                BvMul => OracleOut::Bv((x * y) % pow2(w), w),
                BvUdiv => OracleOut::Bv(bvudiv(x, y, w), w),
                BvUrem => OracleOut::Bv(bvurem(x, y), w),
                BvSdiv => OracleOut::Bv(bvsdiv(x, y, w), w),
                BvSrem => OracleOut::Bv(bvsrem(x, y, w), w),
                BvAnd => OracleOut::Bv(x & y, w),
                BvOr => OracleOut::Bv(x | y, w),
                BvXor => OracleOut::Bv(x ^ y, w),
                BvShl => OracleOut::Bv(bvshl(x, y, w), w),
                BvLshr => OracleOut::Bv(bvlshr(x, y), w),
                BvAshr => OracleOut::Bv(bvashr(x, y, w), w),
                BvComp => OracleOut::Bv(
                    if x == y { BigUint::one() } else { BigUint::zero() },
                    1,
                ),
                BvUlt => OracleOut::B(x < y),
                BvUle => OracleOut::B(x <= y),
                BvUgt => OracleOut::B(x > y),
                BvUge => OracleOut::B(x >= y),
                BvSlt => OracleOut::B(signed(x, w) < signed(y, w)),
                BvSle => OracleOut::B(signed(x, w) <= signed(y, w)),
                BvSgt => OracleOut::B(signed(x, w) > signed(y, w)),
                BvSge => OracleOut::B(signed(x, w) >= signed(y, w)),
                Concat => OracleOut::Bv((x << wy) + y, w + wy),
                Eq => OracleOut::B(x == y),
                Neq => OracleOut::B(x != y),
                _ => unreachable!("not a bitvector opcode: {op:?}"),
            }
        }
    }
}

fn check(op: OpCode, raw: &[(u128, u32)]) {
    let vals: Vec<Value> = raw
        .iter()
        .map(|&(bits, w)| Value::Bv(BVValue::unsigned(bits, w).unwrap()))
        .collect();
    let got = bv_apply(op, &vals).unwrap_or_else(|e| {
        panic!("bv_apply({op:?}, {raw:?}) failed: {e}");
    });
    let oargs: Vec<(BigUint, u32)> = raw.iter().map(|&(b, w)| (big(b), w)).collect();
    match oracle(op, &oargs) {
        OracleOut::Bv(expect, ew) => {
            let v = got.as_bv().expect("oracle expects a bitvector result");
            assert_eq!(v.width(), ew, "{op:?} on {raw:?}: width");
            assert_eq!(
                big(v.bits()),
                expect,
                "{op:?} on {raw:?}: {:#x} != oracle {expect:#x}",
                v.bits()
            );
        }
        OracleOut::B(expect) => {
            assert_eq!(got, Value::Bit(expect), "{op:?} on {raw:?}");
        }
    }
}

const BINARY_SAME_WIDTH: [OpCode; 24] = [
    OpCode::BvAdd,
    OpCode::BvSub,
    OpCode::BvMul,
    OpCode::BvUdiv,
    OpCode::BvUrem,
    OpCode::BvSdiv,
    OpCode::BvSrem,
    OpCode::BvAnd,
    OpCode::BvOr,
    OpCode::BvXor,
    OpCode::BvShl,
    OpCode::BvLshr,
    OpCode::BvAshr,
    OpCode::BvComp,
    OpCode::BvUlt,
    OpCode::BvUle,
    OpCode::BvUgt,
    OpCode::BvUge,
    OpCode::BvSlt,
    OpCode::BvSle,
    OpCode::BvSgt,
    OpCode::BvSge,
    OpCode::Eq,
    OpCode::Neq,
];

/// Every mnemonic, exhaustive over all width-4 operand pairs.
#[test]
fn exhaustive_width_4_all_mnemonics() {
    for op in BINARY_SAME_WIDTH {
        for x in 0..16u128 {
            for y in 0..16u128 {
                check(op, &[(x, 4), (y, 4)]);
            }
        }
    }
    for op in [OpCode::BvNeg, OpCode::BvNot] {
        for x in 0..16u128 {
            check(op, &[(x, 4)]);
        }
    }
    for hi in 0..4u32 {
        for lo in 0..=hi {
            for x in 0..16u128 {
                check(OpCode::Extract { hi, lo }, &[(x, 4)]);
            }
        }
    }
    for by in 0..=4u32 {
        for x in 0..16u128 {
            check(OpCode::ZeroExtend { by }, &[(x, 4)]);
            check(OpCode::SignExtend { by }, &[(x, 4)]);
        }
    }
    for wx in 1..=4u32 {
        for wy in 1..=4u32 {
            for x in 0..(1u128 << wx) {
                for y in 0..(1u128 << wy) {
                    check(OpCode::Concat, &[(x, wx), (y, wy)]);
                }
            }
        }
    }
}

/// Narrow widths hit different corner cases (width 1 especially).
#[test]
fn exhaustive_widths_1_to_3() {
    for w in 1..=3u32 {
        for op in BINARY_SAME_WIDTH {
            for x in 0..(1u128 << w) {
                for y in 0..(1u128 << w) {
                    check(op, &[(x, w), (y, w)]);
                }
            }
        }
        for op in [OpCode::BvNeg, OpCode::BvNot] {
            for x in 0..(1u128 << w) {
                check(op, &[(x, w)]);
            }
        }
    }
}

/// Sampled agreement at wide widths, including the u128 boundary at 128 bits.
#[test]
fn sampled_wide_widths() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x9e3779b97f4a7c15);
    for w in [63u32, 64, 65, 127, 128] {
        let m = mask(w);
        let mut pool: Vec<u128> = vec![0, 1, m, m - 1, m / 2, m / 2 + 1];
        for _ in 0..40 {
            pool.push(rng.gen::<u128>() & m);
        }
        for op in BINARY_SAME_WIDTH {
            for &x in &pool {
                for &y in pool.iter().take(12) {
                    check(op, &[(x, w), (y, w)]);
                }
            }
        }
        for op in [OpCode::BvNeg, OpCode::BvNot] {
            for &x in &pool {
                check(op, &[(x, w)]);
            }
        }
    }
    // Structural ops at the 128-bit ceiling.
    for _ in 0..50 {
        let x = rng.gen::<u128>();
        check(OpCode::Extract { hi: 127, lo: 0 }, &[(x, 128)]);
        check(OpCode::Extract { hi: 127, lo: 64 }, &[(x, 128)]);
        check(OpCode::Extract { hi: 63, lo: 0 }, &[(x, 128)]);
        check(OpCode::Concat, &[(x >> 100, 28), (x & mask(100), 100)]);
        check(OpCode::ZeroExtend { by: 64 }, &[(x & mask(64), 64)]);
        check(OpCode::SignExtend { by: 64 }, &[(x & mask(64), 64)]);
    }
}

/// Shift amounts at and beyond the width, across widths: the saturation zone.
#[test]
fn shift_saturation_zone() {
    for w in [1u32, 2, 4, 7, 8] {
        let m = mask(w);
        for x in [0u128, 1, m, m >> 1, (m >> 1) + 1] {
            for amt in 0..=(w as u128 + 3).min(m) {
                check(OpCode::BvShl, &[(x & m, w), (amt, w)]);
                check(OpCode::BvLshr, &[(x & m, w), (amt, w)]);
                check(OpCode::BvAshr, &[(x & m, w), (amt, w)]);
            }
        }
    }
}
