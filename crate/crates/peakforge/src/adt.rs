//! Algebraic data types over hardware values, and their bitvector encodings.
//!
//! Enums carry explicitly assigned integers (the assignment *is* the encoding).
//! Products concatenate their fields, first declared field in the lowest bits,
//! unless per-field bit ranges override the layout. Sums place the tag (the
//! variant's declaration index) in the low bits and the zero-padded payload
//! above it.
//!
//! Decoding is deliberately partial: an unused enum code, an out-of-range sum
//! tag, or nonzero padding is a hard error naming the offending component. The
//! point of the separation between values and encodings is that swapping an
//! encoding can never change what a circuit computes on abstract values — only
//! which bit patterns mean what.

use crate::bitvec::{mask, BVValue, OpError, Sign, Sort, Value};
use std::sync::Arc;
use thiserror::Error;

/// The surface type universe: single bits, sized bitvectors, and ADTs.
#[derive(Debug, Clone)]
pub enum Type {
    Bit,
    Bv { width: u32, sign: Sign },
    Adt(Arc<AdtType>),
}

impl PartialEq for Type {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (Type::Bit, Type::Bit) => true,
            (Type::Bv { width: a, sign: sa }, Type::Bv { width: b, sign: sb }) => {
                a == b && sa == sb
            }
            // ADT names are unique within a source unit.
            (Type::Adt(a), Type::Adt(b)) => a.name == b.name,
            _ => false,
        }
    }
}

impl Eq for Type {}

impl Type {
    /// Width of the flattened (encoded) representation in bits.
    pub fn encoded_width(&self) -> u32 {
        match self {
            Type::Bit => 1,
            Type::Bv { width, .. } => *width,
            Type::Adt(t) => t.width(),
        }
    }

    /// The bit-level sort this type flattens to.
    pub fn sort(&self) -> Sort {
        match self {
            Type::Bit => Sort::Bit,
            Type::Bv { width, .. } => Sort::Bv(*width),
            Type::Adt(t) => Sort::Bv(t.width()),
        }
    }

    pub fn unsigned(width: u32) -> Type {
        Type::Bv { width, sign: Sign::Unsigned }
    }

    /// Number of distinct inhabitants, `None` if it exceeds `u128`.
    pub fn count(&self) -> Option<u128> {
        match self {
            Type::Bit => Some(2),
            Type::Bv { width, .. } => 1u128.checked_shl(*width),
            Type::Adt(t) => t.count(),
        }
    }
}

impl std::fmt::Display for Type {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Type::Bit => write!(f, "bit"),
            Type::Bv { width, sign: Sign::Unsigned } => write!(f, "bv[{width}]"),
            Type::Bv { width, sign: Sign::Signed } => write!(f, "sbv[{width}]"),
            Type::Adt(t) => write!(f, "{}", t.name),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnumVariant {
    pub label: String,
    pub value: u128,
}

#[derive(Debug, Clone)]
pub struct Field {
    pub name: String,
    pub ty: Type,
    /// Custom `[hi:lo]` placement, if the declaration carried one.
    pub annotation: Option<(u32, u32)>,
}

#[derive(Debug, Clone)]
pub struct Variant {
    pub name: String,
    pub ty: Type,
}

#[derive(Debug)]
pub enum AdtKind {
    Enum(Vec<EnumVariant>),
    Product(Vec<Field>),
    Sum(Vec<Variant>),
}

/// A named ADT with a validated, precomputed layout.
#[derive(Debug)]
pub struct AdtType {
    pub name: String,
    pub kind: AdtKind,
    width: u32,
    /// Products: bits actually covered by fields (rest is forced-zero padding).
    used_mask: u128,
    /// Products: low bit offset per field, aligned with the field list.
    field_lo: Vec<u32>,
    /// Sums: width of the tag in the low bits.
    tag_width: u32,
    /// Enums: variant indices sorted by assigned value (encoding order).
    enum_order: Vec<usize>,
}

impl PartialEq for AdtType {
    /// Names are unique within a source unit, so identity is by name.
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
    }
}

impl Eq for AdtType {}

#[derive(Debug, Error, PartialEq)]
pub enum AdtError {
    #[error("type `{0}` has no variants/fields")]
    Empty(String),
    #[error("type `{ty}` declares `{name}` twice")]
    Duplicate { ty: String, name: String },
    #[error("enum `{ty}` assigns {value} to more than one label")]
    DuplicateValue { ty: String, value: u128 },
    #[error("type `{0}` is wider than 128 bits")]
    TooWide(String),
    #[error("bad layout on `{ty}.{field}`: {msg}")]
    BadLayout { ty: String, field: String, msg: String },
    #[error("cannot decode {bits:#x} as `{ty}`: {component}")]
    Decode { ty: String, bits: u128, component: String },
    #[error("value/type mismatch: expected `{expected}`, got `{got}`")]
    Mismatch { expected: String, got: String },
    #[error("enumeration of `{ty}` has {count} values, over the cap of {cap}")]
    EnumerationCap { ty: String, count: u128, cap: u128 },
    #[error("`{ty}` has too many inhabitants to enumerate")]
    CountOverflow { ty: String },
    #[error("{0}")]
    Op(#[from] OpError),
}

fn bit_length(v: u128) -> u32 {
    128 - v.leading_zeros()
}

impl AdtType {
    /// An enum with explicitly assigned encodings. Width is the number of bits
    /// needed for the largest assigned integer (at least one).
    pub fn enum_type(
        name: impl Into<String>,
        variants: Vec<(String, u128)>,
    ) -> Result<Arc<Self>, AdtError> {
        let name = name.into();
        if variants.is_empty() {
            return Err(AdtError::Empty(name));
        }
        let mut seen_labels = std::collections::BTreeSet::new();
        let mut seen_values = std::collections::BTreeSet::new();
        for (label, value) in &variants {
            if !seen_labels.insert(label.clone()) {
                return Err(AdtError::Duplicate { ty: name, name: label.clone() });
            }
            if !seen_values.insert(*value) {
                return Err(AdtError::DuplicateValue { ty: name, value: *value });
            }
        }
        let max = variants.iter().map(|(_, v)| *v).max().unwrap();
        let width = bit_length(max).max(1);
        let mut enum_order: Vec<usize> = (0..variants.len()).collect();
        enum_order.sort_by_key(|&i| variants[i].1);
        let variants = variants
            .into_iter()
            .map(|(label, value)| EnumVariant { label, value })
            .collect();
        Ok(Arc::new(AdtType {
            name,
            kind: AdtKind::Enum(variants),
            width,
            used_mask: 0,
            field_lo: Vec::new(),
            tag_width: 0,
            enum_order,
        }))
    }

    /// A product. With no annotations, fields pack from bit 0 upward in
    /// declaration order; with annotations, every field needs one, ranges must
    /// be disjoint and exactly as wide as the field they place.
    pub fn product(name: impl Into<String>, fields: Vec<Field>) -> Result<Arc<Self>, AdtError> {
        let name = name.into();
        if fields.is_empty() {
            return Err(AdtError::Empty(name));
        }
        let mut seen = std::collections::BTreeSet::new();
        for f in &fields {
            if !seen.insert(f.name.clone()) {
                return Err(AdtError::Duplicate { ty: name, name: f.name.clone() });
            }
        }
        let annotated = fields.iter().filter(|f| f.annotation.is_some()).count();
        let (width, field_lo, used_mask) = if annotated == 0 {
            let mut lo = 0u32;
            let mut offs = Vec::with_capacity(fields.len());
            for f in &fields {
                offs.push(lo);
                lo = lo
                    .checked_add(f.ty.encoded_width())
                    .filter(|w| *w <= 128)
                    .ok_or_else(|| AdtError::TooWide(name.clone()))?;
            }
            // Fields are non-empty and at least one bit wide, so lo >= 1 here
            // and the layout is gapless.
            (lo, offs, mask(lo))
        } else if annotated == fields.len() {
            let mut used = 0u128;
            let mut offs = Vec::with_capacity(fields.len());
            let mut total = 0u32;
            for f in &fields {
                let (hi, lo) = f.annotation.unwrap();
                let bad = |msg: String| AdtError::BadLayout {
                    ty: name.clone(),
                    field: f.name.clone(),
                    msg,
                };
                if hi < lo || hi >= 128 {
                    return Err(bad(format!("range [{hi}:{lo}] is malformed")));
                }
                let w = hi - lo + 1;
                if w != f.ty.encoded_width() {
                    return Err(bad(format!(
                        "range [{hi}:{lo}] is {w} bits but the field is {} bits",
                        f.ty.encoded_width()
                    )));
                }
                let range_mask = mask(w) << lo;
                if used & range_mask != 0 {
                    return Err(bad(format!("range [{hi}:{lo}] overlaps another field")));
                }
                used |= range_mask;
                offs.push(lo);
                total = total.max(hi + 1);
            }
            (total, offs, used)
        } else {
            let unannotated = fields.iter().find(|f| f.annotation.is_none()).unwrap();
            return Err(AdtError::BadLayout {
                ty: name,
                field: unannotated.name.clone(),
                msg: "either every field or no field takes a placement".into(),
            });
        };
        if width > 128 {
            return Err(AdtError::TooWide(name));
        }
        Ok(Arc::new(AdtType {
            name,
            kind: AdtKind::Product(fields),
            width,
            used_mask,
            field_lo,
            tag_width: 0,
            enum_order: Vec::new(),
        }))
    }

    /// A sum: tag (declaration index) in the low bits, payload above.
    pub fn sum(name: impl Into<String>, variants: Vec<Variant>) -> Result<Arc<Self>, AdtError> {
        let name = name.into();
        if variants.is_empty() {
            return Err(AdtError::Empty(name));
        }
        let mut seen = std::collections::BTreeSet::new();
        for v in &variants {
            if !seen.insert(v.name.clone()) {
                return Err(AdtError::Duplicate { ty: name, name: v.name.clone() });
            }
        }
        let tag_width = bit_length((variants.len() - 1) as u128).max(1);
        let payload = variants.iter().map(|v| v.ty.encoded_width()).max().unwrap();
        let width = tag_width
            .checked_add(payload)
            .filter(|w| *w <= 128)
            .ok_or_else(|| AdtError::TooWide(name.clone()))?;
        Ok(Arc::new(AdtType {
            name,
            kind: AdtKind::Sum(variants),
            width,
            used_mask: 0,
            field_lo: Vec::new(),
            tag_width,
            enum_order: Vec::new(),
        }))
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    /// For products: the low bit offset of each field, declaration order.
    pub fn field_ranges(&self) -> Vec<(u32, u32)> {
        match &self.kind {
            AdtKind::Product(fields) => fields
                .iter()
                .zip(&self.field_lo)
                .map(|(f, lo)| (lo + f.ty.encoded_width() - 1, *lo))
                .collect(),
            _ => Vec::new(),
        }
    }

    pub fn tag_width(&self) -> u32 {
        self.tag_width
    }

    /// Number of inhabitants (`None` when it exceeds `u128`).
    pub fn count(&self) -> Option<u128> {
        match &self.kind {
            AdtKind::Enum(vs) => Some(vs.len() as u128),
            AdtKind::Product(fields) => fields
                .iter()
                .try_fold(1u128, |acc, f| acc.checked_mul(f.ty.count()?)),
            AdtKind::Sum(vs) => vs
                .iter()
                .try_fold(0u128, |acc, v| acc.checked_add(v.ty.count()?)),
        }
    }
}

/// An abstract (unencoded) ADT value.
#[derive(Debug, Clone, PartialEq)]
pub enum AdtValue {
    Enum { ty: Arc<AdtType>, index: usize },
    Product { ty: Arc<AdtType>, fields: Vec<FieldVal> },
    Sum { ty: Arc<AdtType>, index: usize, payload: Box<FieldVal> },
}

/// A field or payload slot: a bit-level value or a nested ADT value.
#[derive(Debug, Clone, PartialEq)]
pub enum FieldVal {
    Bits(Value),
    Adt(AdtValue),
}

impl AdtValue {
    pub fn ty(&self) -> &Arc<AdtType> {
        match self {
            AdtValue::Enum { ty, .. }
            | AdtValue::Product { ty, .. }
            | AdtValue::Sum { ty, .. } => ty,
        }
    }

    /// Convenience: build an enum value from its label.
    pub fn enum_label(ty: &Arc<AdtType>, label: &str) -> Result<AdtValue, AdtError> {
        let AdtKind::Enum(vs) = &ty.kind else {
            return Err(AdtError::Mismatch {
                expected: "enum".into(),
                got: ty.name.clone(),
            });
        };
        let index = vs
            .iter()
            .position(|v| v.label == label)
            .ok_or_else(|| AdtError::Mismatch {
                expected: format!("label of `{}`", ty.name),
                got: label.into(),
            })?;
        Ok(AdtValue::Enum { ty: ty.clone(), index })
    }
}

impl std::fmt::Display for AdtValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            AdtValue::Enum { ty, index } => {
                let AdtKind::Enum(vs) = &ty.kind else { unreachable!() };
                write!(f, "{}.{}", ty.name, vs[*index].label)
            }
            AdtValue::Product { ty, fields } => {
                let AdtKind::Product(fs) = &ty.kind else { unreachable!() };
                write!(f, "{}(", ty.name)?;
                for (i, (field, val)) in fs.iter().zip(fields).enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{}=", field.name)?;
                    match val {
                        FieldVal::Bits(v) => write!(f, "{v}")?,
                        FieldVal::Adt(v) => write!(f, "{v}")?,
                    }
                }
                write!(f, ")")
            }
            AdtValue::Sum { ty, index, payload } => {
                let AdtKind::Sum(vs) = &ty.kind else { unreachable!() };
                write!(f, "{}.{}(", ty.name, vs[*index].name)?;
                match payload.as_ref() {
                    FieldVal::Bits(v) => write!(f, "{v}")?,
                    FieldVal::Adt(v) => write!(f, "{v}")?,
                }
                write!(f, ")")
            }
        }
    }
}

fn encode_field(fv: &FieldVal, ty: &Type) -> Result<u128, AdtError> {
    match (fv, ty) {
        (FieldVal::Bits(Value::Bit(b)), Type::Bit) => Ok(*b as u128),
        (FieldVal::Bits(Value::Bv(v)), Type::Bv { width, .. }) if v.width() == *width => {
            Ok(v.bits())
        }
        (FieldVal::Adt(v), Type::Adt(t)) if v.ty().name == t.name => {
            Ok(adt_encode(v)?.bits())
        }
        _ => Err(AdtError::Mismatch {
            expected: ty.to_string(),
            got: match fv {
                FieldVal::Bits(v) => v.sort().to_string(),
                FieldVal::Adt(v) => v.ty().name.clone(),
            },
        }),
    }
}

/// Encode an abstract value into its bitvector representation.
pub fn adt_encode(v: &AdtValue) -> Result<BVValue, AdtError> {
    let bits = match v {
        AdtValue::Enum { ty, index } => {
            let AdtKind::Enum(vs) = &ty.kind else { unreachable!() };
            vs[*index].value
        }
        AdtValue::Product { ty, fields } => {
            let AdtKind::Product(fs) = &ty.kind else { unreachable!() };
            if fields.len() != fs.len() {
                return Err(AdtError::Mismatch {
                    expected: format!("{} fields", fs.len()),
                    got: format!("{} fields", fields.len()),
                });
            }
            let mut bits = 0u128;
            for ((field, val), lo) in fs.iter().zip(fields).zip(&ty.field_lo) {
                bits |= encode_field(val, &field.ty)? << lo;
            }
            bits
        }
        AdtValue::Sum { ty, index, payload } => {
            let AdtKind::Sum(vs) = &ty.kind else { unreachable!() };
            let variant = vs.get(*index).ok_or_else(|| AdtError::Mismatch {
                expected: format!("variant index < {}", vs.len()),
                got: index.to_string(),
            })?;
            (*index as u128) | (encode_field(payload, &variant.ty)? << ty.tag_width)
        }
    };
    Ok(BVValue::unsigned(bits, v.ty().width())?)
}

fn decode_field(bits: u128, ty: &Type) -> Result<FieldVal, AdtError> {
    match ty {
        Type::Bit => Ok(FieldVal::Bits(Value::Bit(bits == 1))),
        Type::Bv { width, sign } => Ok(FieldVal::Bits(Value::Bv(BVValue::new(
            bits, *width, *sign,
        )?))),
        Type::Adt(t) => Ok(FieldVal::Adt(adt_decode(
            t,
            &BVValue::unsigned(bits, t.width())?,
        )?)),
    }
}

/// Decode a bit pattern back into an abstract value.
///
/// This is a partial function: bit patterns that no value encodes to are
/// rejected with an error naming the component that failed.
pub fn adt_decode(ty: &Arc<AdtType>, bits: &BVValue) -> Result<AdtValue, AdtError> {
    if bits.width() != ty.width {
        return Err(AdtError::Mismatch {
            expected: format!("{} bits", ty.width),
            got: format!("{} bits", bits.width()),
        });
    }
    let raw = bits.bits();
    match &ty.kind {
        AdtKind::Enum(vs) => {
            let index = vs.iter().position(|v| v.value == raw).ok_or_else(|| {
                AdtError::Decode {
                    ty: ty.name.clone(),
                    bits: raw,
                    component: format!("{raw:#x} is not an assigned code"),
                }
            })?;
            Ok(AdtValue::Enum { ty: ty.clone(), index })
        }
        AdtKind::Product(fs) => {
            if raw & !ty.used_mask != 0 {
                return Err(AdtError::Decode {
                    ty: ty.name.clone(),
                    bits: raw,
                    component: "padding between fields must be zero".into(),
                });
            }
            let mut fields = Vec::with_capacity(fs.len());
            for (f, lo) in fs.iter().zip(&ty.field_lo) {
                let w = f.ty.encoded_width();
                let slice = (raw >> lo) & mask(w);
                let fv = decode_field(slice, &f.ty).map_err(|e| match e {
                    AdtError::Decode { component, .. } => AdtError::Decode {
                        ty: ty.name.clone(),
                        bits: raw,
                        component: format!("field `{}`: {component}", f.name),
                    },
                    other => other,
                })?;
                fields.push(fv);
            }
            Ok(AdtValue::Product { ty: ty.clone(), fields })
        }
        AdtKind::Sum(vs) => {
            let tag = raw & mask(ty.tag_width);
            if tag >= vs.len() as u128 {
                return Err(AdtError::Decode {
                    ty: ty.name.clone(),
                    bits: raw,
                    component: format!("tag {tag} has no variant"),
                });
            }
            let index = tag as usize;
            let variant = &vs[index];
            let pw = variant.ty.encoded_width();
            let payload_bits = raw >> ty.tag_width;
            if payload_bits & !mask(pw) != 0 {
                return Err(AdtError::Decode {
                    ty: ty.name.clone(),
                    bits: raw,
                    component: format!(
                        "padding above variant `{}` must be zero",
                        variant.name
                    ),
                });
            }
            let payload = decode_field(payload_bits & mask(pw), &variant.ty).map_err(
                |e| match e {
                    AdtError::Decode { component, .. } => AdtError::Decode {
                        ty: ty.name.clone(),
                        bits: raw,
                        component: format!("variant `{}`: {component}", variant.name),
                    },
                    other => other,
                },
            )?;
            Ok(AdtValue::Sum { ty: ty.clone(), index, payload: Box::new(payload) })
        }
    }
}

fn field_count(ty: &Type) -> Option<u128> {
    ty.count()
}

pub(crate) fn nth_field(ty: &Type, i: u128) -> FieldVal {
    match ty {
        Type::Bit => FieldVal::Bits(Value::Bit(i == 1)),
        Type::Bv { width, sign } => {
            FieldVal::Bits(Value::Bv(BVValue::new(i, *width, *sign).unwrap()))
        }
        Type::Adt(t) => FieldVal::Adt(adt_nth(t, i)),
    }
}

/// The `i`-th inhabitant in enumeration order. Panics if `i` is out of range;
/// use [`AdtType::count`] to stay in bounds.
///
/// Enumeration order: enums ascend by assigned value; products run in
/// declaration-order mixed radix with the first field fastest (which is
/// numeric encoding order for default layouts); sums go variant by variant.
pub fn adt_nth(ty: &Arc<AdtType>, i: u128) -> AdtValue {
    match &ty.kind {
        AdtKind::Enum(_) => AdtValue::Enum { ty: ty.clone(), index: ty.enum_order[i as usize] },
        AdtKind::Product(fs) => {
            let mut rest = i;
            let mut fields = Vec::with_capacity(fs.len());
            for f in fs {
                let c = field_count(&f.ty).expect("count fits in u128");
                fields.push(nth_field(&f.ty, rest % c));
                rest /= c;
            }
            assert_eq!(rest, 0, "inhabitant index out of range");
            AdtValue::Product { ty: ty.clone(), fields }
        }
        AdtKind::Sum(vs) => {
            let mut rest = i;
            for (index, v) in vs.iter().enumerate() {
                let c = field_count(&v.ty).expect("count fits in u128");
                if rest < c {
                    return AdtValue::Sum {
                        ty: ty.clone(),
                        index,
                        payload: Box::new(nth_field(&v.ty, rest)),
                    };
                }
                rest -= c;
            }
            panic!("inhabitant index out of range");
        }
    }
}

/// Default cap for materialized enumerations.
pub const DEFAULT_ENUM_CAP: u128 = 1 << 20;

/// Iterate every inhabitant exactly once, in enumeration order, refusing to
/// start when the count exceeds `cap` (default [`DEFAULT_ENUM_CAP`]).
pub fn adt_enumerate(
    ty: &Arc<AdtType>,
    cap: Option<u128>,
) -> Result<impl Iterator<Item = AdtValue> + '_, AdtError> {
    let cap = cap.unwrap_or(DEFAULT_ENUM_CAP);
    let count = ty
        .count()
        .ok_or_else(|| AdtError::CountOverflow { ty: ty.name.clone() })?;
    if count > cap {
        return Err(AdtError::EnumerationCap { ty: ty.name.clone(), count, cap });
    }
    let ty = ty.clone();
    Ok((0..count).map(move |i| adt_nth(&ty, i)))
}

/// Multiplexer over abstract values; branches must share a type.
pub fn adt_ite(cond: bool, t: &AdtValue, e: &AdtValue) -> Result<AdtValue, AdtError> {
    if t.ty().name != e.ty().name {
        return Err(AdtError::Mismatch {
            expected: t.ty().name.clone(),
            got: e.ty().name.clone(),
        });
    }
    Ok(if cond { t.clone() } else { e.clone() })
}
