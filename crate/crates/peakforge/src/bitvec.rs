//! Fixed-width bitvector values and the operation set shared by every backend.
//!
//! Semantics follow SMT-LIB 2's `QF_BV` theory exactly — including the corner
//! cases that trip up ad-hoc implementations: division by zero yields all-ones,
//! remainder by zero yields the dividend, out-of-range shift amounts saturate
//! (to zero, or to the sign fill for `bvashr`), and every arithmetic result is
//! reduced modulo `2^width`. The simulator, the symbolic evaluator, the Verilog
//! backend, and the synthesis checker all call into [`bv_apply`], so a semantic
//! disagreement between backends would have to disagree with itself.
//!
//! Widths range over `1..=128`; bits are stored in a `u128` and kept masked as
//! an invariant of [`BVValue`].

use thiserror::Error;

/// Whether a bitvector type participates in signed or unsigned comparisons and
/// right shifts. Signedness is a *static* attribute: it selects opcodes during
/// typechecking and never changes how bits are stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Unsigned,
    Signed,
}

/// Sort of a bit-level value: a single Boolean bit or a bitvector of known width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sort {
    Bit,
    Bv(u32),
}

impl std::fmt::Display for Sort {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Sort::Bit => write!(f, "bit"),
            Sort::Bv(w) => write!(f, "bv[{w}]"),
        }
    }
}

/// All-ones mask for a width in `1..=128`.
pub fn mask(width: u32) -> u128 {
    debug_assert!((1..=128).contains(&width));
    if width == 128 {
        u128::MAX
    } else {
        (1u128 << width) - 1
    }
}

/// A concrete bitvector: `width` bits stored in the low bits of `bits`.
///
/// Invariant: `bits & !mask(width) == 0` and `1 <= width <= 128`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BVValue {
    bits: u128,
    width: u32,
    sign: Sign,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OpError {
    #[error("bitvector width {0} out of range 1..=128")]
    WidthRange(u32),
    #[error("literal {bits:#x} does not fit in {width} bits")]
    LiteralRange { bits: u128, width: u32 },
    #[error("operand widths differ: {0} vs {1}")]
    WidthMismatch(u32, u32),
    #[error("operand sorts differ: {0} vs {1}")]
    SortMismatch(Sort, Sort),
    #[error("`{op}` expects {expect} operand(s), got {got}")]
    Arity {
        op: &'static str,
        expect: usize,
        got: usize,
    },
    #[error("`{op}` applied to {got}, expects {expect}")]
    BadSort {
        op: &'static str,
        expect: &'static str,
        got: Sort,
    },
    #[error("extract [{hi}:{lo}] out of range for width {width}")]
    ExtractRange { hi: u32, lo: u32, width: u32 },
    #[error("result width {0} exceeds 128")]
    TooWide(u32),
    #[error("ite branches have different sorts: {0} vs {1}")]
    IteBranches(Sort, Sort),
}

impl BVValue {
    /// Construct a value, rejecting bits outside the width.
    pub fn new(bits: u128, width: u32, sign: Sign) -> Result<Self, OpError> {
        if !(1..=128).contains(&width) {
            return Err(OpError::WidthRange(width));
        }
        if bits & !mask(width) != 0 {
            return Err(OpError::LiteralRange { bits, width });
        }
        Ok(BVValue { bits, width, sign })
    }

    /// Construct an unsigned value, rejecting bits outside the width.
    pub fn unsigned(bits: u128, width: u32) -> Result<Self, OpError> {
        Self::new(bits, width, Sign::Unsigned)
    }

    /// Construct by truncating `bits` to `width` (two's-complement wraparound).
    pub fn truncate(bits: u128, width: u32, sign: Sign) -> Result<Self, OpError> {
        if !(1..=128).contains(&width) {
            return Err(OpError::WidthRange(width));
        }
        Ok(BVValue { bits: bits & mask(width), width, sign })
    }

    /// Encode a possibly negative integer in two's complement.
    pub fn from_i128(v: i128, width: u32, sign: Sign) -> Result<Self, OpError> {
        Self::truncate(v as u128, width, sign)
    }

    pub fn bits(&self) -> u128 {
        self.bits
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// Reinterpret with a different signedness attribute (bits unchanged).
    pub fn with_sign(&self, sign: Sign) -> Self {
        BVValue { sign, ..*self }
    }

    /// The most significant bit.
    pub fn msb(&self) -> bool {
        (self.bits >> (self.width - 1)) & 1 == 1
    }

    /// Two's-complement signed interpretation of the bits.
    pub fn to_i128(&self) -> i128 {
        let shift = 128 - self.width;
        ((self.bits << shift) as i128) >> shift
    }

    fn same_width(&self, other: &Self) -> Result<(), OpError> {
        if self.width != other.width {
            Err(OpError::WidthMismatch(self.width, other.width))
        } else {
            Ok(())
        }
    }
}

impl std::fmt::Display for BVValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#x}", self.bits)
    }
}

/// A runtime value: a Boolean bit or a bitvector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Value {
    Bit(bool),
    Bv(BVValue),
}

impl Value {
    pub fn sort(&self) -> Sort {
        match self {
            Value::Bit(_) => Sort::Bit,
            Value::Bv(v) => Sort::Bv(v.width()),
        }
    }

    pub fn as_bit(&self) -> Result<bool, OpError> {
        match self {
            Value::Bit(b) => Ok(*b),
            Value::Bv(v) => Err(OpError::BadSort {
                op: "bit context",
                expect: "bit",
                got: Sort::Bv(v.width()),
            }),
        }
    }

    pub fn as_bv(&self) -> Result<&BVValue, OpError> {
        match self {
            Value::Bv(v) => Ok(v),
            Value::Bit(_) => Err(OpError::BadSort {
                op: "bitvector context",
                expect: "bitvector",
                got: Sort::Bit,
            }),
        }
    }

    /// Raw bits, for both sorts (a bit is one bit wide).
    pub fn raw_bits(&self) -> u128 {
        match self {
            Value::Bit(b) => *b as u128,
            Value::Bv(v) => v.bits(),
        }
    }

    /// Reconstruct from raw bits at a given sort.
    pub fn from_raw(bits: u128, sort: Sort) -> Result<Value, OpError> {
        match sort {
            Sort::Bit => {
                if bits > 1 {
                    return Err(OpError::LiteralRange { bits, width: 1 });
                }
                Ok(Value::Bit(bits == 1))
            }
            Sort::Bv(w) => Ok(Value::Bv(BVValue::unsigned(bits, w)?)),
        }
    }
}

impl std::fmt::Display for Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Value::Bit(b) => write!(f, "{}", u8::from(*b)),
            Value::Bv(v) => write!(f, "{v}"),
        }
    }
}

/// The operation set. Names and semantics are SMT-LIB 2's, plus Boolean
/// connectives on single bits and polymorphic (dis)equality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpCode {
    // unary bitvector
    BvNeg,
    BvNot,
    // binary bitvector, result same width
    BvAdd,
    BvSub,
    BvMul,
    BvUdiv,
    BvUrem,
    BvSdiv,
    BvSrem,
    BvAnd,
    BvOr,
    BvXor,
    BvShl,
    BvLshr,
    BvAshr,
    // binary bitvector, result bv[1]
    BvComp,
    // binary bitvector, result bit
    BvUlt,
    BvUle,
    BvUgt,
    BvUge,
    BvSlt,
    BvSle,
    BvSgt,
    BvSge,
    // structural
    Concat,
    Extract { hi: u32, lo: u32 },
    ZeroExtend { by: u32 },
    SignExtend { by: u32 },
    // polymorphic equality (two bits or two equal-width bitvectors)
    Eq,
    Neq,
    // Boolean connectives on bits
    And,
    Or,
    Xor,
    Not,
}

impl OpCode {
    /// The operator name as it appears in SMT-LIB (indexed operators return
    /// their base symbol; emission adds the index form).
    pub fn mnemonic(&self) -> &'static str {
        use OpCode::*;
        match self {
            BvNeg => "bvneg",
            BvNot => "bvnot",
            BvAdd => "bvadd",
            BvSub => "bvsub",
            BvMul => "bvmul",
            BvUdiv => "bvudiv",
            BvUrem => "bvurem",
            BvSdiv => "bvsdiv",
            BvSrem => "bvsrem",
            BvAnd => "bvand",
            BvOr => "bvor",
            BvXor => "bvxor",
            BvShl => "bvshl",
            BvLshr => "bvlshr",
            BvAshr => "bvashr",
            BvComp => "bvcomp",
            BvUlt => "bvult",
            BvUle => "bvule",
            BvUgt => "bvugt",
            BvUge => "bvuge",
            BvSlt => "bvslt",
            BvSle => "bvsle",
            BvSgt => "bvsgt",
            BvSge => "bvsge",
            Concat => "concat",
            Extract { .. } => "extract",
            ZeroExtend { .. } => "zero_extend",
            SignExtend { .. } => "sign_extend",
            Eq => "=",
            Neq => "distinct",
            And => "and",
            Or => "or",
            Xor => "xor",
            Not => "not",
        }
    }

    pub fn arity(&self) -> usize {
        use OpCode::*;
        match self {
            BvNeg | BvNot | Not | Extract { .. } | ZeroExtend { .. } | SignExtend { .. } => 1,
            _ => 2,
        }
    }

    /// Sort-check an application and compute the result sort.
    pub fn result_sort(&self, args: &[Sort]) -> Result<Sort, OpError> {
        use OpCode::*;
        if args.len() != self.arity() {
            return Err(OpError::Arity {
                op: self.mnemonic(),
                expect: self.arity(),
                got: args.len(),
            });
        }
        let bv = |s: Sort| match s {
            Sort::Bv(w) => Ok(w),
            Sort::Bit => Err(OpError::BadSort {
                op: self.mnemonic(),
                expect: "bitvector",
                got: Sort::Bit,
            }),
        };
        let bit = |s: Sort| match s {
            Sort::Bit => Ok(()),
            other => Err(OpError::BadSort {
                op: self.mnemonic(),
                expect: "bit",
                got: other,
            }),
        };
        let same = |a: u32, b: u32| {
            if a == b {
                Ok(a)
            } else {
                Err(OpError::WidthMismatch(a, b))
            }
        };
        match self {
            BvNeg | BvNot => Ok(Sort::Bv(bv(args[0])?)),
            BvAdd | BvSub | BvMul | BvUdiv | BvUrem | BvSdiv | BvSrem | BvAnd | BvOr | BvXor
            | BvShl | BvLshr | BvAshr => {
                Ok(Sort::Bv(same(bv(args[0])?, bv(args[1])?)?))
            }
            BvComp => {
                same(bv(args[0])?, bv(args[1])?)?;
                Ok(Sort::Bv(1))
            }
            BvUlt | BvUle | BvUgt | BvUge | BvSlt | BvSle | BvSgt | BvSge => {
                same(bv(args[0])?, bv(args[1])?)?;
                Ok(Sort::Bit)
            }
            Concat => {
                let w = bv(args[0])? + bv(args[1])?;
                if w > 128 {
                    return Err(OpError::TooWide(w));
                }
                Ok(Sort::Bv(w))
            }
            Extract { hi, lo } => {
                let w = bv(args[0])?;
                if lo > hi || *hi >= w {
                    return Err(OpError::ExtractRange { hi: *hi, lo: *lo, width: w });
                }
                Ok(Sort::Bv(hi - lo + 1))
            }
            ZeroExtend { by } | SignExtend { by } => {
                let w = bv(args[0])? + by;
                if w > 128 {
                    return Err(OpError::TooWide(w));
                }
                Ok(Sort::Bv(w))
            }
            Eq | Neq => {
                if args[0] != args[1] {
                    return Err(OpError::SortMismatch(args[0], args[1]));
                }
                Ok(Sort::Bit)
            }
            And | Or | Xor => {
                bit(args[0])?;
                bit(args[1])?;
                Ok(Sort::Bit)
            }
            Not => {
                bit(args[0])?;
                Ok(Sort::Bit)
            }
        }
    }
}

impl std::fmt::Display for OpCode {
    /// The SMT-LIB spelling, including the index form for parameterized ops.
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OpCode::Extract { hi, lo } => write!(f, "(_ extract {hi} {lo})"),
            OpCode::ZeroExtend { by } => write!(f, "(_ zero_extend {by})"),
            OpCode::SignExtend { by } => write!(f, "(_ sign_extend {by})"),
            other => write!(f, "{}", other.mnemonic()),
        }
    }
}

/// Comparison/shift/division shapes whose opcode depends on operand signedness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignSensitiveOp {
    Lt,
    Le,
    Gt,
    Ge,
    Shr,
    Div,
    Rem,
}

/// Select the concrete opcode for a sign-sensitive surface operator.
///
/// Both operands must already have the *same* signedness — mixing signed and
/// unsigned operands is a type error raised by the typechecker, never silently
/// coerced here.
pub fn signed_dispatch(op: SignSensitiveOp, sign: Sign) -> OpCode {
    use SignSensitiveOp::*;
    match (op, sign) {
        (Lt, Sign::Unsigned) => OpCode::BvUlt,
        (Le, Sign::Unsigned) => OpCode::BvUle,
        (Gt, Sign::Unsigned) => OpCode::BvUgt,
        (Ge, Sign::Unsigned) => OpCode::BvUge,
        (Shr, Sign::Unsigned) => OpCode::BvLshr,
        (Div, Sign::Unsigned) => OpCode::BvUdiv,
        (Rem, Sign::Unsigned) => OpCode::BvUrem,
        (Lt, Sign::Signed) => OpCode::BvSlt,
        (Le, Sign::Signed) => OpCode::BvSle,
        (Gt, Sign::Signed) => OpCode::BvSgt,
        (Ge, Sign::Signed) => OpCode::BvSge,
        (Shr, Sign::Signed) => OpCode::BvAshr,
        (Div, Sign::Signed) => OpCode::BvSdiv,
        (Rem, Sign::Signed) => OpCode::BvSrem,
    }
}

fn bvneg_raw(x: u128, m: u128) -> u128 {
    x.wrapping_neg() & m
}

fn udiv_raw(x: u128, y: u128, m: u128) -> u128 {
    if y == 0 {
        m
    } else {
        x / y
    }
}

fn urem_raw(x: u128, y: u128) -> u128 {
    if y == 0 {
        x
    } else {
        x % y
    }
}

/// Apply an operation to concrete values.
///
/// The opcode is assumed to be fully resolved (signed vs unsigned already
/// chosen); widths and sorts are still checked so misuse fails loudly rather
/// than wrapping silently.
pub fn bv_apply(op: OpCode, args: &[Value]) -> Result<Value, OpError> {
    use OpCode::*;
    let sorts: Vec<Sort> = args.iter().map(Value::sort).collect();
    let out = op.result_sort(&sorts)?;

    let bin = |f: fn(u128, u128, u32) -> u128| -> Result<Value, OpError> {
        let a = args[0].as_bv()?;
        let b = args[1].as_bv()?;
        a.same_width(b)?;
        let w = a.width();
        Ok(Value::Bv(BVValue {
            bits: f(a.bits(), b.bits(), w) & mask(w),
            width: w,
            sign: a.sign(),
        }))
    };

    match op {
        BvNeg => {
            let a = args[0].as_bv()?;
            Ok(Value::Bv(BVValue {
                bits: bvneg_raw(a.bits(), mask(a.width())),
                width: a.width(),
                sign: a.sign(),
            }))
        }
        BvNot => {
            let a = args[0].as_bv()?;
            Ok(Value::Bv(BVValue {
                bits: !a.bits() & mask(a.width()),
                width: a.width(),
                sign: a.sign(),
            }))
        }
        BvAdd => bin(|x, y, _| x.wrapping_add(y)),
        BvSub => bin(|x, y, _| x.wrapping_sub(y)),
        BvMul => bin(|x, y, _| x.wrapping_mul(y)),
        BvUdiv => bin(|x, y, w| udiv_raw(x, y, mask(w))),
        BvUrem => bin(|x, y, _| urem_raw(x, y)),
        BvSdiv => bin(|x, y, w| {
            let m = mask(w);
            let neg = |v: u128| bvneg_raw(v, m);
            let msb = |v: u128| (v >> (w - 1)) & 1 == 1;
            match (msb(x), msb(y)) {
                (false, false) => udiv_raw(x, y, m),
                (true, false) => neg(udiv_raw(neg(x), y, m)),
                (false, true) => neg(udiv_raw(x, neg(y), m)),
                (true, true) => udiv_raw(neg(x), neg(y), m),
            }
        }),
        BvSrem => bin(|x, y, w| {
            let m = mask(w);
            let neg = |v: u128| bvneg_raw(v, m);
            let msb = |v: u128| (v >> (w - 1)) & 1 == 1;
            match (msb(x), msb(y)) {
                (false, false) => urem_raw(x, y),
                (true, false) => neg(urem_raw(neg(x), y)),
                (false, true) => urem_raw(x, neg(y)),
                (true, true) => neg(urem_raw(neg(x), neg(y))),
            }
        }),
        BvAnd => bin(|x, y, _| x & y),
        BvOr => bin(|x, y, _| x | y),
        BvXor => bin(|x, y, _| x ^ y),
        BvShl => bin(|x, y, w| {
            if y >= w as u128 {
                0
            } else {
                x << (y as u32)
            }
        }),
        BvLshr => bin(|x, y, w| {
            if y >= w as u128 {
                0
            } else {
                x >> (y as u32)
            }
        }),
        BvAshr => bin(|x, y, w| {
            let m = mask(w);
            let msb = (x >> (w - 1)) & 1 == 1;
            if y >= w as u128 {
                if msb {
                    m
                } else {
                    0
                }
            } else {
                let amt = y as u32;
                let shifted = x >> amt;
                if msb {
                    shifted | (m & !(m >> amt))
                } else {
                    shifted
                }
            }
        }),
        BvComp => {
            let a = args[0].as_bv()?;
            let b = args[1].as_bv()?;
            a.same_width(b)?;
            Ok(Value::Bv(BVValue {
                bits: (a.bits() == b.bits()) as u128,
                width: 1,
                sign: Sign::Unsigned,
            }))
        }
        BvUlt => cmp(args, |a, b| a.bits() < b.bits()),
        BvUle => cmp(args, |a, b| a.bits() <= b.bits()),
        BvUgt => cmp(args, |a, b| a.bits() > b.bits()),
        BvUge => cmp(args, |a, b| a.bits() >= b.bits()),
        BvSlt => cmp(args, |a, b| a.to_i128() < b.to_i128()),
        BvSle => cmp(args, |a, b| a.to_i128() <= b.to_i128()),
        BvSgt => cmp(args, |a, b| a.to_i128() > b.to_i128()),
        BvSge => cmp(args, |a, b| a.to_i128() >= b.to_i128()),
        Concat => {
            // SMT-LIB: the first operand becomes the high bits.
            let a = args[0].as_bv()?;
            let b = args[1].as_bv()?;
            Ok(Value::Bv(BVValue {
                bits: (a.bits() << b.width()) | b.bits(),
                width: a.width() + b.width(),
                sign: Sign::Unsigned,
            }))
        }
        Extract { hi, lo } => {
            let a = args[0].as_bv()?;
            let w = hi - lo + 1;
            Ok(Value::Bv(BVValue {
                bits: (a.bits() >> lo) & mask(w),
                width: w,
                sign: Sign::Unsigned,
            }))
        }
        ZeroExtend { by } => {
            let a = args[0].as_bv()?;
            Ok(Value::Bv(BVValue {
                bits: a.bits(),
                width: a.width() + by,
                sign: a.sign(),
            }))
        }
        SignExtend { by } => {
            let a = args[0].as_bv()?;
            let w = a.width() + by;
            let bits = if a.msb() {
                a.bits() | (mask(w) & !mask(a.width()))
            } else {
                a.bits()
            };
            Ok(Value::Bv(BVValue { bits, width: w, sign: a.sign() }))
        }
        Eq => Ok(Value::Bit(args[0].raw_bits() == args[1].raw_bits())),
        Neq => Ok(Value::Bit(args[0].raw_bits() != args[1].raw_bits())),
        And => Ok(Value::Bit(args[0].as_bit()? & args[1].as_bit()?)),
        Or => Ok(Value::Bit(args[0].as_bit()? | args[1].as_bit()?)),
        Xor => Ok(Value::Bit(args[0].as_bit()? ^ args[1].as_bit()?)),
        Not => Ok(Value::Bit(!args[0].as_bit()?)),
    }
    .map(|v| {
        debug_assert_eq!(v.sort(), out);
        v
    })
}

fn cmp(args: &[Value], f: fn(&BVValue, &BVValue) -> bool) -> Result<Value, OpError> {
    let a = args[0].as_bv()?;
    let b = args[1].as_bv()?;
    a.same_width(b)?;
    Ok(Value::Bit(f(a, b)))
}

/// Value-level multiplexer: both branches must share a sort.
pub fn bv_ite(cond: bool, t: &Value, e: &Value) -> Result<Value, OpError> {
    if t.sort() != e.sort() {
        return Err(OpError::IteBranches(t.sort(), e.sort()));
    }
    Ok(if cond { *t } else { *e })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn bv(bits: u128, w: u32) -> Value {
        Value::Bv(BVValue::unsigned(bits, w).unwrap())
    }

    fn sbv(bits: u128, w: u32) -> Value {
        Value::Bv(BVValue::new(bits, w, Sign::Signed).unwrap())
    }

    fn app(op: OpCode, args: &[Value]) -> Value {
        bv_apply(op, args).unwrap()
    }

    // ---- construction and interpretation ----------------------------------

    #[test]
    fn width_bounds_checked() {
        assert!(BVValue::unsigned(0, 0).is_err());
        assert!(BVValue::unsigned(0, 129).is_err());
        assert!(BVValue::unsigned(0, 128).is_ok());
        assert!(BVValue::unsigned(2, 1).is_err());
        assert!(BVValue::unsigned(u128::MAX, 128).is_ok());
    }

    #[test]
    fn signed_reinterpretation() {
        assert_eq!(BVValue::unsigned(0x80, 8).unwrap().to_i128(), -128);
        assert_eq!(BVValue::unsigned(0xff, 8).unwrap().to_i128(), -1);
        assert_eq!(BVValue::unsigned(0x7f, 8).unwrap().to_i128(), 127);
        assert_eq!(BVValue::unsigned(1, 1).unwrap().to_i128(), -1);
        assert_eq!(BVValue::unsigned(u128::MAX, 128).unwrap().to_i128(), -1);
        assert_eq!(BVValue::from_i128(-3, 8, Sign::Signed).unwrap().bits(), 0xfd);
    }

    // ---- arithmetic wraps modulo 2^width -----------------------------------

    #[test]
    fn add_wraps() {
        assert_eq!(app(OpCode::BvAdd, &[bv(250, 8), bv(10, 8)]), bv(4, 8));
        assert_eq!(app(OpCode::BvSub, &[bv(0, 8), bv(1, 8)]), bv(0xff, 8));
        assert_eq!(app(OpCode::BvMul, &[bv(16, 8), bv(16, 8)]), bv(0, 8));
    }

    // ---- division corner cases ---------------------------------------------

    #[test]
    fn udiv_by_zero_is_all_ones() {
        assert_eq!(app(OpCode::BvUdiv, &[bv(5, 8), bv(0, 8)]), bv(0xff, 8));
        assert_eq!(app(OpCode::BvUdiv, &[bv(0, 4), bv(0, 4)]), bv(0xf, 4));
    }

    #[test]
    fn urem_by_zero_is_dividend() {
        assert_eq!(app(OpCode::BvUrem, &[bv(5, 8), bv(0, 8)]), bv(5, 8));
    }

    #[test]
    fn sdiv_srem_by_zero() {
        // Nonnegative dividend: bvudiv by zero => all ones.
        assert_eq!(app(OpCode::BvSdiv, &[bv(5, 8), bv(0, 8)]), bv(0xff, 8));
        // Negative dividend: bvneg(bvudiv(bvneg s, 0)) = bvneg(all ones) = 1.
        assert_eq!(app(OpCode::BvSdiv, &[bv(0xfb, 8), bv(0, 8)]), bv(1, 8));
        // Remainder by zero is the dividend, both signs.
        assert_eq!(app(OpCode::BvSrem, &[bv(5, 8), bv(0, 8)]), bv(5, 8));
        assert_eq!(app(OpCode::BvSrem, &[bv(0xfb, 8), bv(0, 8)]), bv(0xfb, 8));
    }

    #[test]
    fn sdiv_truncates_toward_zero() {
        // -7 / 2 = -3 (truncation), remainder -1.
        assert_eq!(app(OpCode::BvSdiv, &[bv(0xf9, 8), bv(2, 8)]), bv(0xfd, 8));
        assert_eq!(app(OpCode::BvSrem, &[bv(0xf9, 8), bv(2, 8)]), bv(0xff, 8));
        // INT_MIN / -1 wraps back to INT_MIN.
        assert_eq!(app(OpCode::BvSdiv, &[bv(0x80, 8), bv(0xff, 8)]), bv(0x80, 8));
    }

    // ---- shifts -------------------------------------------------------------

    #[test]
    fn oversized_shifts_saturate() {
        assert_eq!(app(OpCode::BvShl, &[bv(0x81, 8), bv(8, 8)]), bv(0, 8));
        assert_eq!(app(OpCode::BvShl, &[bv(0x81, 8), bv(200, 8)]), bv(0, 8));
        assert_eq!(app(OpCode::BvLshr, &[bv(0x81, 8), bv(9, 8)]), bv(0, 8));
        // Arithmetic shift saturates to the sign fill.
        assert_eq!(app(OpCode::BvAshr, &[bv(0x80, 8), bv(100, 8)]), bv(0xff, 8));
        assert_eq!(app(OpCode::BvAshr, &[bv(0x7f, 8), bv(100, 8)]), bv(0, 8));
    }

    #[test]
    fn ashr_fills_sign() {
        assert_eq!(app(OpCode::BvAshr, &[bv(0x80, 8), bv(1, 8)]), bv(0xc0, 8));
        assert_eq!(app(OpCode::BvAshr, &[bv(0x40, 8), bv(1, 8)]), bv(0x20, 8));
    }

    #[test]
    fn shl_matches_mul_by_power_of_two() {
        for x in 0..16u128 {
            for k in 0..4u128 {
                assert_eq!(
                    app(OpCode::BvShl, &[bv(x, 4), bv(k, 4)]),
                    app(OpCode::BvMul, &[bv(x, 4), bv(1 << k, 4)]),
                );
            }
        }
    }

    // ---- structural ops ------------------------------------------------------

    #[test]
    fn concat_puts_first_operand_high() {
        assert_eq!(app(OpCode::Concat, &[bv(0xa, 4), bv(0x5, 4)]), bv(0xa5, 8));
    }

    #[test]
    fn extract_concat_roundtrip() {
        for x in 0..=0xffu128 {
            let hi = app(OpCode::Extract { hi: 7, lo: 4 }, &[bv(x, 8)]);
            let lo = app(OpCode::Extract { hi: 3, lo: 0 }, &[bv(x, 8)]);
            assert_eq!(app(OpCode::Concat, &[hi, lo]), bv(x, 8));
        }
    }

    #[test]
    fn extends() {
        assert_eq!(app(OpCode::ZeroExtend { by: 4 }, &[bv(0x9, 4)]), bv(0x09, 8));
        assert_eq!(app(OpCode::SignExtend { by: 4 }, &[bv(0x9, 4)]), bv(0xf9, 8));
        assert_eq!(app(OpCode::SignExtend { by: 4 }, &[bv(0x7, 4)]), bv(0x07, 8));
    }

    #[test]
    fn extract_bounds_checked() {
        assert!(bv_apply(OpCode::Extract { hi: 8, lo: 0 }, &[bv(0, 8)]).is_err());
        assert!(bv_apply(OpCode::Extract { hi: 1, lo: 2 }, &[bv(0, 8)]).is_err());
        assert!(bv_apply(OpCode::ZeroExtend { by: 121 }, &[bv(0, 8)]).is_err());
        assert!(bv_apply(OpCode::Concat, &[bv(0, 128), bv(0, 1)]).is_err());
    }

    // ---- comparisons, equality, bvcomp ---------------------------------------

    #[test]
    fn unsigned_vs_signed_compare() {
        // 0x80 is 128 unsigned but -128 signed.
        assert_eq!(app(OpCode::BvUlt, &[bv(0x80, 8), bv(1, 8)]), Value::Bit(false));
        assert_eq!(app(OpCode::BvSlt, &[bv(0x80, 8), bv(1, 8)]), Value::Bit(true));
        assert_eq!(app(OpCode::BvSge, &[bv(0, 8), bv(0xff, 8)]), Value::Bit(true));
        assert_eq!(app(OpCode::BvUge, &[bv(0, 8), bv(0xff, 8)]), Value::Bit(false));
    }

    #[test]
    fn bvcomp_is_single_bit() {
        assert_eq!(app(OpCode::BvComp, &[bv(3, 8), bv(3, 8)]), bv(1, 1));
        assert_eq!(app(OpCode::BvComp, &[bv(3, 8), bv(4, 8)]), bv(0, 1));
    }

    #[test]
    fn equality_is_polymorphic() {
        assert_eq!(app(OpCode::Eq, &[bv(3, 8), bv(3, 8)]), Value::Bit(true));
        assert_eq!(app(OpCode::Neq, &[bv(3, 8), bv(4, 8)]), Value::Bit(true));
        assert_eq!(
            app(OpCode::Eq, &[Value::Bit(true), Value::Bit(true)]),
            Value::Bit(true)
        );
        // Mixed sorts are rejected, not coerced.
        assert!(bv_apply(OpCode::Eq, &[Value::Bit(true), bv(1, 1)]).is_err());
        assert!(bv_apply(OpCode::Eq, &[bv(1, 4), bv(1, 8)]).is_err());
    }

    #[test]
    fn bit_connectives() {
        let t = Value::Bit(true);
        let f = Value::Bit(false);
        assert_eq!(app(OpCode::And, &[t, f]), f);
        assert_eq!(app(OpCode::Or, &[t, f]), t);
        assert_eq!(app(OpCode::Xor, &[t, t]), f);
        assert_eq!(app(OpCode::Not, &[f]), t);
    }

    #[test]
    fn width_mismatch_rejected() {
        assert!(bv_apply(OpCode::BvAdd, &[bv(1, 4), bv(1, 8)]).is_err());
        assert!(bv_apply(OpCode::BvUlt, &[bv(1, 4), bv(1, 8)]).is_err());
    }

    // ---- dispatch table --------------------------------------------------------

    #[test]
    fn dispatch_selects_by_signedness() {
        use SignSensitiveOp::*;
        assert_eq!(signed_dispatch(Lt, Sign::Signed), OpCode::BvSlt);
        assert_eq!(signed_dispatch(Lt, Sign::Unsigned), OpCode::BvUlt);
        assert_eq!(signed_dispatch(Le, Sign::Signed), OpCode::BvSle);
        assert_eq!(signed_dispatch(Gt, Sign::Signed), OpCode::BvSgt);
        assert_eq!(signed_dispatch(Ge, Sign::Unsigned), OpCode::BvUge);
        assert_eq!(signed_dispatch(Shr, Sign::Signed), OpCode::BvAshr);
        assert_eq!(signed_dispatch(Shr, Sign::Unsigned), OpCode::BvLshr);
        assert_eq!(signed_dispatch(Div, Sign::Signed), OpCode::BvSdiv);
        assert_eq!(signed_dispatch(Rem, Sign::Unsigned), OpCode::BvUrem);
    }

    #[test]
    fn dispatched_ops_disagree_on_sign_boundary() {
        // The same bits compared both ways give different verdicts, which is
        // exactly why mixing signedness is a type error upstream.
        let a = sbv(0xc0, 8);
        let b = sbv(0x10, 8);
        assert_eq!(app(OpCode::BvSlt, &[a, b]), Value::Bit(true));
        assert_eq!(app(OpCode::BvUlt, &[a, b]), Value::Bit(false));
    }

    // ---- ite ---------------------------------------------------------------------

    #[test]
    fn ite_selects_and_checks_sorts() {
        assert_eq!(bv_ite(true, &bv(1, 8), &bv(2, 8)).unwrap(), bv(1, 8));
        assert_eq!(bv_ite(false, &bv(1, 8), &bv(2, 8)).unwrap(), bv(2, 8));
        assert!(bv_ite(true, &bv(1, 8), &bv(1, 4)).is_err());
        assert!(bv_ite(true, &Value::Bit(true), &bv(1, 1)).is_err());
    }

    // ---- properties -----------------------------------------------------------

    proptest! {
        #[test]
        fn closure_arith_keeps_width(x in any::<u128>(), y in any::<u128>(), w in 1u32..=128) {
            let a = bv(x & mask(w), w);
            let b = bv(y & mask(w), w);
            for op in [OpCode::BvAdd, OpCode::BvSub, OpCode::BvMul, OpCode::BvUdiv,
                       OpCode::BvUrem, OpCode::BvSdiv, OpCode::BvSrem, OpCode::BvAnd,
                       OpCode::BvOr, OpCode::BvXor, OpCode::BvShl, OpCode::BvLshr,
                       OpCode::BvAshr] {
                let r = bv_apply(op, &[a, b]).unwrap();
                prop_assert_eq!(r.sort(), Sort::Bv(w));
                // Result respects the storage invariant.
                prop_assert_eq!(r.raw_bits() & !mask(w), 0);
            }
        }

        #[test]
        fn add_commutes_and_neg_is_sub(x in any::<u128>(), y in any::<u128>(), w in 1u32..=128) {
            let a = bv(x & mask(w), w);
            let b = bv(y & mask(w), w);
            prop_assert_eq!(
                bv_apply(OpCode::BvAdd, &[a, b]).unwrap(),
                bv_apply(OpCode::BvAdd, &[b, a]).unwrap()
            );
            let neg_b = bv_apply(OpCode::BvNeg, &[b]).unwrap();
            prop_assert_eq!(
                bv_apply(OpCode::BvSub, &[a, b]).unwrap(),
                bv_apply(OpCode::BvAdd, &[a, neg_b]).unwrap()
            );
        }

        #[test]
        fn udiv_urem_reconstruct(x in any::<u128>(), y in any::<u128>(), w in 1u32..=64) {
            let a = bv(x & mask(w), w);
            let b = bv(y & mask(w), w);
            if b.raw_bits() != 0 {
                let q = bv_apply(OpCode::BvUdiv, &[a, b]).unwrap();
                let r = bv_apply(OpCode::BvUrem, &[a, b]).unwrap();
                let qb = bv_apply(OpCode::BvMul, &[q, b]).unwrap();
                prop_assert_eq!(bv_apply(OpCode::BvAdd, &[qb, r]).unwrap(), a);
                prop_assert!(r.raw_bits() < b.raw_bits());
            }
        }

        #[test]
        fn signed_roundtrip(v in any::<i128>(), w in 1u32..=128) {
            let shift = 128 - w;
            let v = (v << shift) >> shift; // clamp into range
            let enc = BVValue::from_i128(v, w, Sign::Signed).unwrap();
            prop_assert_eq!(enc.to_i128(), v);
        }

        #[test]
        fn srem_sign_follows_dividend(x in any::<u128>(), y in any::<u128>(), w in 2u32..=64) {
            let a = bv(x & mask(w), w);
            let b = bv(y & mask(w), w);
            let r = bv_apply(OpCode::BvSrem, &[a, b]).unwrap();
            let rv = r.as_bv().unwrap().to_i128();
            if rv != 0 && b.raw_bits() != 0 {
                prop_assert_eq!(rv.signum(), a.as_bv().unwrap().to_i128().signum());
            }
        }
    }
}
